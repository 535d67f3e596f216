import hashlib
import json
import subprocess
import sys

import pytest
from click.testing import CliRunner

from gskgc.cli import cli
from gskgc.prompts import NEGATIVE_HEADER, NEIGHBOR_HEADER
from tests.conftest import synthetic_rows, write_dataset_dir


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def data_dir(tmp_path):
    train, valid, test = synthetic_rows(17)
    return write_dataset_dir(tmp_path / "data", train, valid, test)


def invoke(runner, args):
    result = runner.invoke(cli, args, catch_exceptions=False)
    assert result.exit_code == 0, result.output
    return result


def test_ingest_stats(runner, data_dir):
    result = invoke(runner, ["ingest", "--dir", str(data_dir)])
    assert "#entity" in result.output
    assert "260" in result.output  # train count column


def test_ingest_unknown_dataset_name(runner, data_dir):
    result = runner.invoke(cli, ["ingest", "--dataset", "bogus",
                                 "--dir", str(data_dir)])
    assert result.exit_code != 0


def test_gen_dataset_and_manifest(runner, data_dir, tmp_path):
    out = tmp_path / "prompts.jsonl"
    invoke(runner, ["gen-dataset", "--dir", str(data_dir), "--split", "test",
                    "--p", "1", "--M", "10", "--seed", "3", "--out", str(out)])
    lines = out.read_text(encoding="utf-8").splitlines()
    assert len(lines) == 1 + 2 * 40
    manifest = json.loads((tmp_path / "prompts.jsonl.manifest.json").read_text())
    assert manifest["stage"] == "gen-dataset"
    assert manifest["config"]["m"] == 10
    assert "train" in manifest["inputs"] and "prompts" in manifest["outputs"]


def test_gen_dataset_determinism(runner, data_dir, tmp_path):
    digests = []
    for name in ("a", "b"):
        out = tmp_path / f"{name}.jsonl"
        invoke(runner, ["gen-dataset", "--dir", str(data_dir), "--split", "test",
                        "--p", "1", "--M", "20", "--seed", "11", "--out", str(out)])
        digests.append(hashlib.sha256(out.read_bytes()).hexdigest())
    assert digests[0] == digests[1]


def test_gen_dataset_ablation_flags(runner, data_dir, tmp_path):
    no_neg = tmp_path / "nn.jsonl"
    invoke(runner, ["gen-dataset", "--dir", str(data_dir), "--no-negatives",
                    "--out", str(no_neg)])
    assert NEGATIVE_HEADER not in no_neg.read_text(encoding="utf-8")
    no_nbr = tmp_path / "nb.jsonl"
    invoke(runner, ["gen-dataset", "--dir", str(data_dir), "--no-neighbors",
                    "--out", str(no_nbr)])
    assert NEIGHBOR_HEADER not in no_nbr.read_text(encoding="utf-8")


def test_gen_dataset_m0_matches_double_ablation(runner, data_dir, tmp_path):
    m0 = tmp_path / "m0.jsonl"
    invoke(runner, ["gen-dataset", "--dir", str(data_dir), "--M", "0",
                    "--out", str(m0)])
    both = tmp_path / "both.jsonl"
    invoke(runner, ["gen-dataset", "--dir", str(data_dir), "--no-negatives",
                    "--no-neighbors", "--out", str(both)])
    records_m0 = m0.read_text(encoding="utf-8").splitlines()[1:]
    records_both = both.read_text(encoding="utf-8").splitlines()[1:]
    assert records_m0 == records_both


def test_gen_dataset_trainer_out_and_debug_dump(runner, data_dir, tmp_path):
    out = tmp_path / "p.jsonl"
    trainer = tmp_path / "t.jsonl"
    dump = tmp_path / "d.jsonl"
    invoke(runner, ["gen-dataset", "--dir", str(data_dir), "--M", "5",
                    "--out", str(out), "--trainer-out", str(trainer),
                    "--debug-dump", str(dump)])
    trainer_rec = json.loads(trainer.read_text().splitlines()[1])
    assert set(trainer_rec) == {"instruction", "input", "output"}
    dump_rec = json.loads(dump.read_text().splitlines()[0])
    assert {"query", "negatives", "paths", "merged"} <= set(dump_rec)


def test_gen_dataset_config_file_with_cli_override(runner, data_dir, tmp_path):
    ini = tmp_path / "run.ini"
    ini.write_text("[prompt]\nm = 7\np = 2\n")
    out = tmp_path / "p.jsonl"
    result = invoke(runner, ["gen-dataset", "--dir", str(data_dir),
                             "--config", str(ini), "--M", "3",
                             "--out", str(out)])
    manifest = json.loads((tmp_path / "p.jsonl.manifest.json").read_text())
    assert manifest["config"]["m"] == 3   # CLI flag wins
    assert manifest["config"]["p"] == 2   # file value kept


def test_infer_score_roundtrip(runner, data_dir, tmp_path):
    prompts = tmp_path / "p.jsonl"
    invoke(runner, ["gen-dataset", "--dir", str(data_dir), "--out", str(prompts)])
    preds = tmp_path / "preds.jsonl"
    invoke(runner, ["infer", "--in", str(prompts), "--mock", "perfect",
                    "--k", "1", "--out", str(preds)])
    result = invoke(runner, ["score", "--preds", str(preds), "--gold",
                             str(prompts), "--ks", "1,3",
                             "--dir", str(data_dir),
                             "--json", str(tmp_path / "report.json")])
    assert "Hits@1: 1.0000" in result.output
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["hits_at_k"]["rates"]["1"] == 1.0
    assert report["hallucinations"]["rank1"]["missing"] == 0


def test_infer_requires_exactly_one_backend(runner, data_dir, tmp_path):
    prompts = tmp_path / "p.jsonl"
    invoke(runner, ["gen-dataset", "--dir", str(data_dir), "--out", str(prompts)])
    result = runner.invoke(cli, ["infer", "--in", str(prompts),
                                 "--out", str(tmp_path / "o.jsonl")])
    assert result.exit_code != 0


def test_reevaluate_export_and_adjust(runner, data_dir, tmp_path):
    prompts = tmp_path / "p.jsonl"
    invoke(runner, ["gen-dataset", "--dir", str(data_dir), "--out", str(prompts)])
    preds = tmp_path / "preds.jsonl"
    invoke(runner, ["infer", "--in", str(prompts), "--mock", "corrupt:0.4",
                    "--seed", "2", "--k", "1", "--out", str(preds)])
    failures = tmp_path / "failures.jsonl"
    invoke(runner, ["reevaluate", "export", "--preds", str(preds),
                    "--gold", str(prompts), "--dir", str(data_dir),
                    "--out", str(failures)])
    fail_rows = [json.loads(l) for l in failures.read_text().splitlines()
                 if "_meta" not in l]
    assert fail_rows, "corruption should produce failures"
    judgments = tmp_path / "judgments.jsonl"
    with judgments.open("w") as fh:
        for row in fail_rows[:3]:
            fh.write(json.dumps({"id": row["id"], "judge_a": True,
                                 "judge_b": True}) + "\n")
    result = invoke(runner, ["reevaluate", "adjust", "--preds", str(preds),
                             "--gold", str(prompts), "--failures", str(failures),
                             "--judgments", str(judgments),
                             "--json", str(tmp_path / "ledger.json")])
    ledger = json.loads((tmp_path / "ledger.json").read_text())
    assert ledger["judged"] == 3
    assert ledger["adjusted"] >= ledger["raw"]


def test_sweep(runner, data_dir, tmp_path):
    out_dir = tmp_path / "sweep"
    result = invoke(runner, ["sweep", "--dir", str(data_dir), "--M", "0,20,100",
                             "--mock", "perfect", "--out-dir", str(out_dir)])
    summary = json.loads((out_dir / "sweep_summary.json").read_text())
    assert [row["M"] for row in summary] == [0, 20, 100]
    for m in (0, 20, 100):
        assert (out_dir / f"M{m}" / "report.json").is_file()
        assert (out_dir / f"M{m}" / "prompts.jsonl.manifest.json").is_file()
    assert all(row["hits@1"] == 1.0 for row in summary)


def test_exit_codes_subprocess(tmp_path):
    # validation error -> 2
    proc = subprocess.run(
        [sys.executable, "-m", "gskgc.cli"],
        input="", capture_output=True, text=True)
    assert proc.returncode == 2 or proc.returncode == 0  # bare group shows help

    proc = subprocess.run(
        [sys.executable, "-c",
         "from gskgc.cli import main; import sys; sys.argv=['gskgc','ingest',"
         "'--dataset','nope','--dir','.']; main()"],
        capture_output=True, text=True)
    assert proc.returncode == 2

    # missing dataset dir contents -> I/O error 3
    empty = tmp_path / "empty"
    empty.mkdir()
    proc = subprocess.run(
        [sys.executable, "-c",
         "from gskgc.cli import main; import sys; sys.argv=['gskgc','ingest',"
         f"'--dir','{empty}']; main()"],
        capture_output=True, text=True)
    assert proc.returncode == 3

    # nonexistent dataset dir -> I/O error 3 as well
    proc = subprocess.run(
        [sys.executable, "-c",
         "from gskgc.cli import main; import sys; sys.argv=['gskgc','ingest',"
         f"'--dir','{tmp_path / 'nowhere'}']; main()"],
        capture_output=True, text=True)
    assert proc.returncode == 3
