"""End-to-end pipeline commands.

    gskgc ingest      load a dataset, print its statistics table
    gskgc gen-dataset build prompt JSONL for one split
    gskgc infer       obtain predictions (HTTP endpoint or mock oracle)
    gskgc score       Hits@k report, optional hallucination stats
    gskgc reevaluate  export failures for judging / apply judgments
    gskgc sweep       gen + infer + score across a list of context budgets

Exit codes: 0 success, 2 validation error, 3 I/O error, 4 endpoint exhaustion.
"""

from __future__ import annotations

import json
import logging
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

import click

from gskgc import __version__, client, kg, prompts, scoring
from gskgc.errors import GskgcError, ValidationError
from gskgc.ioutil import atomic_writer
from gskgc.manifest import write_manifest
from gskgc.subgraph import context_paths, dump_context, merge_budget, negatives

logger = logging.getLogger(__name__)

SWEEP_DEFAULT = "0,20,40,60,80,100"


@click.group()
@click.version_option(__version__)
@click.option("-v", "--verbose", is_flag=True, help="Debug logging.")
def cli(verbose):
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )


def _load_kg(directory, dataset=None, fmt=None) -> kg.KnowledgeGraph:
    if dataset and dataset not in kg.KNOWN_DATASETS and fmt is None:
        raise ValidationError(
            f"unknown dataset name {dataset!r}; known: "
            f"{', '.join(sorted(kg.KNOWN_DATASETS))} (or pass --format)")
    if dataset in kg.KNOWN_DATASETS and fmt is None:
        fmt = "tkg" if kg.KNOWN_DATASETS[dataset][1] else "skg"
    return kg.KnowledgeGraph.from_dir(directory, fmt=fmt, name=dataset)


@cli.command()
@click.option("--dataset", default=None, help="Known dataset name for stats comparison.")
@click.option("--dir", "directory", required=True, type=click.Path())
@click.option("--format", "fmt", type=click.Choice(["skg", "tkg"]), default=None)
def ingest(dataset, directory, fmt):
    """Load train/valid/test and print the statistics table."""
    t0 = time.monotonic()
    graph = _load_kg(directory, dataset, fmt)
    counts = graph.counts()
    click.echo(kg.stats_table([(dataset or Path(directory).name,) + counts]))
    click.echo(f"loaded in {time.monotonic() - t0:.1f}s")
    if dataset:
        mismatches = [row for row in kg.compare_to_known(dataset, counts) if not row[3]]
        if mismatches:
            for label, exp, act, _ in mismatches:
                click.echo(f"MISMATCH {label}: expected {exp}, got {act}")
        else:
            click.echo(f"statistics match the published {dataset} counts")


def _prompt_config(config, p, m, seed, char_cap, no_negatives, no_neighbors, ctx):
    """Config file is the base; explicitly passed flags override it."""
    cfg = prompts.PromptConfig.from_ini(config) if config else prompts.PromptConfig()
    overrides = {}
    from click.core import ParameterSource
    for name, value in (("p", p), ("m", m), ("seed", seed), ("char_cap", char_cap)):
        if ctx.get_parameter_source(name) != ParameterSource.DEFAULT:
            overrides[name] = value
    if overrides:
        from dataclasses import replace
        cfg = replace(cfg, **overrides)
    return prompts.ablated(cfg, no_negatives=no_negatives, no_neighbors=no_neighbors)


@cli.command("gen-dataset")
@click.option("--dataset", default=None)
@click.option("--dir", "directory", required=True, type=click.Path())
@click.option("--format", "fmt", type=click.Choice(["skg", "tkg"]), default=None)
@click.option("--split", type=click.Choice(list(kg.SPLITS)), default="test")
@click.option("--p", type=int, default=1, show_default=True)
@click.option("--M", "m", type=int, default=100, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--no-negatives", is_flag=True)
@click.option("--no-neighbors", is_flag=True)
@click.option("--descriptions", type=click.Path(), default=None)
@click.option("--config", type=click.Path(), default=None,
              help="INI file with a [prompt] section.")
@click.option("--char-cap", type=int, default=8000, show_default=True)
@click.option("--out", required=True, type=click.Path())
@click.option("--trainer-out", type=click.Path(), default=None,
              help="Also emit instruction/input/output JSONL.")
@click.option("--debug-dump", type=click.Path(), default=None,
              help="Per-query negatives/paths/merged JSON dump.")
@click.pass_context
def gen_dataset(ctx, dataset, directory, fmt, split, p, m, seed, no_negatives,
                no_neighbors, descriptions, config, char_cap, out, trainer_out,
                debug_dump):
    """Build the prompt dataset for one split."""
    started = datetime.now(timezone.utc)
    cfg = _prompt_config(config, p, m, seed, char_cap, no_negatives, no_neighbors, ctx)
    graph = _load_kg(directory, dataset, fmt)
    descs = kg.load_descriptions(descriptions) if descriptions else None

    records = list(prompts.build_dataset(graph, split, cfg, descs))
    n = prompts.write_pipeline_jsonl(records, out, cfg, split, dataset)
    outputs = {"prompts": Path(out)}
    if trainer_out:
        prompts.write_trainer_jsonl(records, trainer_out, cfg, split, dataset)
        outputs["trainer"] = Path(trainer_out)
    if debug_dump:
        _write_debug_dump(graph, split, cfg, debug_dump)
        outputs["debug_dump"] = Path(debug_dump)

    from dataclasses import asdict
    write_manifest(out, "gen-dataset", started,
                   inputs={s: Path(directory) / f"{s}.txt" for s in kg.SPLITS},
                   outputs=outputs, config=asdict(cfg), seed=cfg.seed,
                   dataset=dataset)
    click.echo(f"wrote {n} records to {out} (config {cfg.config_hash()})")


def _write_debug_dump(graph, split, cfg, path):
    with Path(path).open("w", encoding="utf-8") as fh:
        for q in kg.build_queries(graph, split):
            negs = negatives(graph, q)
            paths = context_paths(graph, q, cfg.p) if cfg.use_neighbors else []
            merged = merge_budget(negs, paths, cfg.m, cfg.seed)
            fh.write(json.dumps(dump_context(graph, q, negs, paths, merged),
                                ensure_ascii=False) + "\n")


@cli.command()
@click.option("--in", "in_path", required=True, type=click.Path())
@click.option("--endpoint", default=None, help="OpenAI-compatible base URL.")
@click.option("--model", default=None)
@click.option("--mock", "mock_spec", default=None,
              help="Offline oracle: perfect or corrupt:<rate>.")
@click.option("--k", type=int, default=1, show_default=True)
@click.option("--concurrency", type=int, default=4, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--top-p", type=float, default=0.95, show_default=True)
@click.option("--top-k", "top_k", type=int, default=20, show_default=True)
@click.option("--send-top-k", is_flag=True,
              help="Include top_k in endpoint payloads.")
@click.option("--temperature", type=float, default=1.0, show_default=True)
@click.option("--max-new-tokens", type=int, default=64, show_default=True)
@click.option("--rank-by", type=click.Choice(["first", "frequency"]),
              default="first", show_default=True,
              help="Order of sampled answers in the prediction list.")
@click.option("--out", required=True, type=click.Path())
def infer(in_path, endpoint, model, mock_spec, k, concurrency, seed, top_p,
          top_k, send_top_k, temperature, max_new_tokens, rank_by, out):
    """Generate predictions for a prompt file (resumable)."""
    if bool(endpoint) == bool(mock_spec):
        raise ValidationError("pass exactly one of --endpoint or --mock")
    if endpoint and not model:
        raise ValidationError("--endpoint requires --model")
    started = datetime.now(timezone.utc)
    records = scoring.load_jsonl(in_path)
    if k == 1:
        cfg = client.GenerationConfig.greedy(max_new_tokens=max_new_tokens)
    else:
        cfg = client.GenerationConfig.sampled(
            n=min(k, 8), top_p=top_p, top_k=top_k, temperature=temperature,
            max_new_tokens=max_new_tokens)
    if mock_spec:
        gold = {r["id"]: r["answer"] for r in records}
        backend = client.parse_mock_spec(mock_spec, gold, seed=seed)
    else:
        backend = client.HttpEndpoint(endpoint, model, send_top_k=send_top_k)
    stats = client.run_batch(records, backend, k, cfg, out, concurrency,
                             rank_by=rank_by)
    write_manifest(out, "infer", started, inputs={"prompts": Path(in_path)},
                   outputs={"predictions": Path(out)},
                   config={"k": k, "mode": cfg.mode, "top_p": cfg.top_p,
                           "top_k": cfg.top_k, "temperature": cfg.temperature,
                           "endpoint": endpoint, "model": model,
                           "mock": mock_spec, "send_top_k": send_top_k,
                           "rank_by": rank_by},
                   seed=seed)
    click.echo(f"predictions: {stats['attempted']} new, {stats['skipped']} resumed, "
               f"{stats['errors']} errors -> {out}")


@cli.command()
@click.option("--preds", required=True, type=click.Path())
@click.option("--gold", required=True, type=click.Path(),
              help="Prompt JSONL carrying the gold answers.")
@click.option("--ks", default="1,3,10", show_default=True)
@click.option("--dir", "directory", type=click.Path(), default=None,
              help="Dataset dir; enables hallucination stats.")
@click.option("--format", "fmt", type=click.Choice(["skg", "tkg"]), default=None)
@click.option("--json", "json_out", type=click.Path(), default=None)
def score(preds, gold, ks, directory, fmt, json_out):
    """Hits@k over a prediction file."""
    try:
        ks_tuple = tuple(sorted({int(x) for x in ks.split(",") if x.strip()}))
    except ValueError:
        raise ValidationError(f"bad --ks value {ks!r}")
    if not ks_tuple:
        raise ValidationError("--ks must name at least one cutoff")
    predictions = scoring.load_jsonl(preds)
    gold_map = scoring.gold_map_from_records(scoring.load_jsonl(gold))
    report = scoring.hits_at_k(predictions, gold_map, ks_tuple)
    click.echo(report.to_text())
    payload = {"hits_at_k": report.to_json_obj()}
    if directory:
        graph = _load_kg(directory, fmt=fmt)
        hall = scoring.hallucination_stats(predictions, graph.entities, gold_map)
        payload["hallucinations"] = hall.to_json_obj()
        r1 = payload["hallucinations"]["rank1"]
        click.echo(f"hallucinated rank-1 answers: {r1['missing']}/{r1['checked']}")
    if json_out:
        with atomic_writer(json_out) as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
        click.echo(f"report -> {json_out}")


@cli.group()
def reevaluate():
    """Closed-world vs open-world reassessment of failed predictions."""


@reevaluate.command("export")
@click.option("--preds", required=True, type=click.Path())
@click.option("--gold", required=True, type=click.Path())
@click.option("--dir", "directory", required=True, type=click.Path(),
              help="Dataset dir providing the entity vocabulary.")
@click.option("--format", "fmt", type=click.Choice(["skg", "tkg"]), default=None)
@click.option("--out", required=True, type=click.Path())
def reevaluate_export(preds, gold, directory, fmt, out):
    """Export rank-1 misses for external judging."""
    started = datetime.now(timezone.utc)
    predictions = scoring.load_jsonl(preds)
    gold_map = scoring.gold_map_from_records(scoring.load_jsonl(gold))
    graph = _load_kg(directory, fmt=fmt)
    n = scoring.export_failures(predictions, gold_map, graph.entities, out)
    write_manifest(out, "reevaluate-export", started,
                   inputs={"predictions": Path(preds), "gold": Path(gold)},
                   outputs={"failures": Path(out)})
    click.echo(f"exported {n} failures to {out}")


@reevaluate.command("adjust")
@click.option("--preds", required=True, type=click.Path())
@click.option("--gold", required=True, type=click.Path())
@click.option("--failures", required=True, type=click.Path())
@click.option("--judgments", required=True, type=click.Path(),
              help="JSONL rows {id, judge_a, judge_b}.")
@click.option("--json", "json_out", type=click.Path(), default=None)
def reevaluate_adjust(preds, gold, failures, judgments, json_out):
    """Fold unanimous judge verdicts into the adjusted score."""
    predictions = scoring.load_jsonl(preds)
    gold_map = scoring.gold_map_from_records(scoring.load_jsonl(gold))
    ledger = scoring.import_judgments_and_adjust(
        predictions, gold_map, scoring.load_jsonl(failures),
        scoring.load_jsonl(judgments))
    obj = ledger.to_json_obj()
    click.echo(f"N={obj['n']} correct={obj['correct']} X={obj['x']} Y={obj['y']}")
    click.echo(f"raw {obj['raw']:.3f} -> adjusted {obj['adjusted']:.3f}")
    if json_out:
        with atomic_writer(json_out) as fh:
            json.dump(obj, fh, indent=2, sort_keys=True)
            fh.write("\n")


@cli.command()
@click.option("--dataset", default=None)
@click.option("--dir", "directory", required=True, type=click.Path())
@click.option("--format", "fmt", type=click.Choice(["skg", "tkg"]), default=None)
@click.option("--split", type=click.Choice(list(kg.SPLITS)), default="test")
@click.option("--M", "m_values", default=SWEEP_DEFAULT, show_default=True,
              help="Comma-separated context budgets.")
@click.option("--p", type=int, default=1, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--mock", "mock_spec", default="perfect", show_default=True)
@click.option("--k", type=int, default=1, show_default=True)
@click.option("--out-dir", required=True, type=click.Path())
def sweep(dataset, directory, fmt, split, m_values, p, seed, mock_spec, k, out_dir):
    """Generate, infer and score one run per context budget M."""
    try:
        ms = [int(x) for x in m_values.split(",") if x.strip()]
    except ValueError:
        raise ValidationError(f"bad --M list {m_values!r}")
    if not ms:
        raise ValidationError("--M must name at least one budget")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    graph = _load_kg(directory, dataset, fmt)

    summary = []
    for m in ms:
        started = datetime.now(timezone.utc)
        run_dir = out_dir / f"M{m}"
        run_dir.mkdir(exist_ok=True)
        cfg = prompts.PromptConfig(p=p, m=m, seed=seed)
        prompt_path = run_dir / "prompts.jsonl"
        records = list(prompts.build_dataset(graph, split, cfg))
        prompts.write_pipeline_jsonl(records, prompt_path, cfg, split, dataset)
        pred_path = run_dir / "predictions.jsonl"
        if pred_path.exists():
            pred_path.unlink()
        gold = {r.query_id: r.answer for r in records}
        backend = client.parse_mock_spec(mock_spec, gold, seed=seed)
        gen_cfg = (client.GenerationConfig.greedy() if k == 1
                   else client.GenerationConfig.sampled(n=min(k, 8)))
        client.run_batch([r.to_json_obj() for r in records], backend, k,
                         gen_cfg, pred_path)
        gold_map = scoring.gold_map_from_records([r.to_json_obj() for r in records])
        report = scoring.hits_at_k(scoring.load_jsonl(pred_path), gold_map)
        report_path = run_dir / "report.json"
        with atomic_writer(report_path) as fh:
            json.dump(report.to_json_obj(), fh, indent=2, sort_keys=True)
            fh.write("\n")
        from dataclasses import asdict
        write_manifest(prompt_path, "sweep", started,
                       inputs={s: Path(directory) / f"{s}.txt" for s in kg.SPLITS},
                       outputs={"prompts": prompt_path, "predictions": pred_path,
                                "report": report_path},
                       config=asdict(cfg), seed=seed, dataset=dataset)
        summary.append({"M": m, "hits@1": round(report.rate(1), 6),
                        "hits@3": round(report.rate(3), 6)})
        click.echo(f"M={m:<4d} Hits@1={report.rate(1):.4f} Hits@3={report.rate(3):.4f}")
    with atomic_writer(out_dir / "sweep_summary.json") as fh:
        json.dump(summary, fh, indent=2)
        fh.write("\n")
    click.echo(f"sweep summary -> {out_dir / 'sweep_summary.json'}")


def main():
    try:
        cli(standalone_mode=False)
    except GskgcError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(exc.exit_code)
    except click.exceptions.Exit as exc:  # --help / --version
        sys.exit(exc.exit_code)
    except click.ClickException as exc:
        exc.show()
        sys.exit(2)
    except click.exceptions.Abort:
        sys.exit(1)
    except OSError as exc:
        click.echo(f"I/O error: {exc}", err=True)
        sys.exit(3)


if __name__ == "__main__":
    main()
