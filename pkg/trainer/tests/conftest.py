import json
import shutil
import subprocess

import pytest

CITIES = [f"city {i}" for i in range(12)]


def make_records(n=32):
    """Synthetic rows in the documented trainer schema."""
    recs = []
    for i in range(n):
        anchor = CITIES[i % len(CITIES)]
        gold = CITIES[(i * 5 + 3) % len(CITIES)]
        neg = CITIES[(i * 7 + 1) % len(CITIES)]
        prompt = (f"Please complete this triple: ({anchor}, borders, ?). "
                  f"Please give an answer outside the list: [{neg}]")
        recs.append({"instruction": prompt, "input": "", "output": gold})
    return recs


def write_jsonl(path, records, with_meta=True):
    with path.open("w", encoding="utf-8") as fh:
        if with_meta:
            fh.write(json.dumps({"_meta": {"schema": "gskgc-trainer-v1"}}) + "\n")
        for rec in records:
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")
    return path


@pytest.fixture
def train32(tmp_path):
    return write_jsonl(tmp_path / "train32.jsonl", make_records(32))


@pytest.fixture
def pipeline_train32(tmp_path):
    """32 records emitted by the actual pipeline CLI, when it is installed."""
    if shutil.which("gskgc") is None:
        pytest.skip("gskgc CLI not installed; pipeline-emitted fixture unavailable")
    import random

    rng = random.Random(5)
    data = tmp_path / "data"
    data.mkdir()
    ents = [f"town {i}" for i in range(25)]
    rels = ["borders", "capital of"]
    rows = sorted({(rng.choice(ents), rng.choice(rels), rng.choice(ents))
                   for _ in range(80)})
    for name, chunk in (("train", rows[:60]), ("valid", rows[60:70]),
                        ("test", rows[70:])):
        with (data / f"{name}.txt").open("w") as fh:
            for r in chunk:
                fh.write("\t".join(r) + "\n")
    out = tmp_path / "trainer_full.jsonl"
    subprocess.run(
        ["gskgc", "gen-dataset", "--dir", str(data), "--split", "train",
         "--M", "5", "--out", str(tmp_path / "pipe.jsonl"),
         "--trainer-out", str(out)],
        check=True, capture_output=True)
    records = [json.loads(l) for l in out.read_text(encoding="utf-8").splitlines()
               if "_meta" not in l][:32]
    assert len(records) == 32
    return write_jsonl(tmp_path / "train32_pipeline.jsonl", records,
                       with_meta=False)
