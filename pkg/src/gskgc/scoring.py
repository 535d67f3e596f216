"""Scoring: Hits@k, hallucination accounting and the reevaluation ledger.

Matching is normalized-exact-string on entity surface forms. The reevaluation
ledger partitions rank-1 failures using two external judge verdicts: a failed
prediction joins X (plausible, inside the KG vocabulary) or Y (plausible,
outside it) only when both judges were positive. The adjusted score counts
correct plus X over all queries.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

from gskgc.errors import DataError, ValidationError
from gskgc.ioutil import atomic_writer

DEFAULT_KS = (1, 3, 10)


def normalize_answer(text: str) -> str:
    """Trim, collapse internal whitespace, casefold, strip trailing periods."""
    s = " ".join(text.split()).casefold()
    return s.rstrip(".").strip()


def load_jsonl(path) -> list[dict]:
    """Read a pipeline JSONL file, skipping metadata header records."""
    path = Path(path)
    if not path.is_file():
        raise DataError(f"file not found: {path}")
    rows = []
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}:{lineno}: invalid JSON ({exc})")
            if "_meta" not in obj:
                rows.append(obj)
    return rows


def gold_map_from_records(records: Iterable[dict]) -> dict[str, dict]:
    """id -> {answer, direction, prompt} from pipeline prompt records."""
    gold = {}
    for rec in records:
        gold[rec["id"]] = {
            "answer": rec["answer"],
            "direction": rec.get("direction", "forward"),
            "prompt": rec.get("prompt", ""),
        }
    return gold


@dataclass
class ScoreReport:
    ks: tuple[int, ...]
    total: int = 0
    errors: int = 0
    hits: dict = field(default_factory=dict)                 # k -> count
    per_direction: dict = field(default_factory=dict)        # dir -> {total, hits}

    def rate(self, k: int) -> float:
        return self.hits.get(k, 0) / self.total if self.total else 0.0

    def to_json_obj(self) -> dict:
        return {
            "total": self.total,
            "errors": self.errors,
            "hits": {str(k): self.hits.get(k, 0) for k in self.ks},
            "rates": {str(k): round(self.rate(k), 6) for k in self.ks},
            "per_direction": {
                d: {
                    "total": row["total"],
                    "hits": {str(k): row["hits"].get(k, 0) for k in self.ks},
                    "rates": {str(k): round(row["hits"].get(k, 0) / row["total"], 6)
                              if row["total"] else 0.0 for k in self.ks},
                }
                for d, row in sorted(self.per_direction.items())
            },
        }

    def to_text(self) -> str:
        lines = [f"queries scored: {self.total}   errors: {self.errors}"]
        for k in self.ks:
            lines.append(f"Hits@{k}: {self.rate(k):.4f} ({self.hits.get(k, 0)}/{self.total})")
        for d, row in sorted(self.per_direction.items()):
            rates = "  ".join(
                f"Hits@{k}={row['hits'].get(k, 0) / row['total'] if row['total'] else 0.0:.4f}"
                for k in self.ks)
            lines.append(f"  {d:<9} n={row['total']:<7} {rates}")
        return "\n".join(lines)


def hits_at_k(predictions: list[dict], gold: dict[str, dict],
              ks: tuple[int, ...] = DEFAULT_KS) -> ScoreReport:
    """A query hits at k iff the normalized gold is among the first k answers.

    Records carrying error markers count as misses. A prediction id without a
    gold entry means the run is corrupt and raises.
    """
    ks = tuple(sorted(ks))
    report = ScoreReport(ks=ks)
    for pred in predictions:
        qid = pred["id"]
        if qid not in gold:
            raise DataError(f"prediction id {qid!r} has no gold entry (corrupt run)")
        entry = gold[qid]
        direction = entry["direction"]
        drow = report.per_direction.setdefault(direction, {"total": 0, "hits": {}})
        report.total += 1
        drow["total"] += 1
        if pred.get("error") is not None:
            report.errors += 1
            continue
        target = normalize_answer(entry["answer"])
        answers = [normalize_answer(a) for a in pred.get("answers", [])]
        for k in ks:
            if target in answers[:k]:
                report.hits[k] = report.hits.get(k, 0) + 1
                drow["hits"][k] = drow["hits"].get(k, 0) + 1
    return report


@dataclass
class HallucinationReport:
    checked: int = 0
    per_direction: dict = field(default_factory=dict)  # dir -> {checked, missing}
    all_ranks_checked: int = 0
    all_ranks_missing: int = 0

    @property
    def missing(self) -> int:
        return sum(row["missing"] for row in self.per_direction.values())

    def to_json_obj(self) -> dict:
        return {
            "rank1": {
                "checked": self.checked,
                "missing": self.missing,
                "per_direction": {
                    d: {
                        "checked": row["checked"],
                        "missing": row["missing"],
                        "rate": round(row["missing"] / row["checked"], 6)
                        if row["checked"] else 0.0,
                    }
                    for d, row in sorted(self.per_direction.items())
                },
            },
            "all_ranks": {
                "checked": self.all_ranks_checked,
                "missing": self.all_ranks_missing,
            },
        }


def hallucination_stats(predictions: list[dict], vocabulary: Iterable[str],
                        gold: Optional[dict[str, dict]] = None) -> HallucinationReport:
    """Count generated answers whose normalized form matches no vocabulary entity.

    The headline numbers use rank-1 answers only; all-ranks counts are also
    reported.
    """
    vocab_norm = {normalize_answer(s) for s in vocabulary}
    report = HallucinationReport()
    for pred in predictions:
        if pred.get("error") is not None:
            continue
        answers = [normalize_answer(a) for a in pred.get("answers", [])]
        direction = "all"
        if gold and pred["id"] in gold:
            direction = gold[pred["id"]]["direction"]
        drow = report.per_direction.setdefault(direction, {"checked": 0, "missing": 0})
        if answers:
            report.checked += 1
            drow["checked"] += 1
            if answers[0] not in vocab_norm:
                drow["missing"] += 1
        for ans in answers:
            report.all_ranks_checked += 1
            if ans not in vocab_norm:
                report.all_ranks_missing += 1
    return report


def export_failures(predictions: list[dict], gold: dict[str, dict],
                    vocabulary: Iterable[str], out_path) -> int:
    """Write the judging file: one row per rank-1 miss."""
    vocab_norm = {normalize_answer(s) for s in vocabulary}
    out_path = Path(out_path)
    count = 0
    with atomic_writer(out_path) as fh:
        fh.write(json.dumps({"_meta": {"schema": "gskgc-failures-v1"}}) + "\n")
        for pred in predictions:
            qid = pred["id"]
            if qid not in gold:
                raise DataError(f"prediction id {qid!r} has no gold entry")
            entry = gold[qid]
            target = normalize_answer(entry["answer"])
            answers = [normalize_answer(a) for a in pred.get("answers", [])]
            if pred.get("error") is None and answers and answers[0] == target:
                continue
            predicted = answers[0] if answers else None
            row = {
                "id": qid,
                "prompt": entry["prompt"],
                "predicted": predicted,
                "gold": entry["answer"],
                "predicted_in_kg": predicted in vocab_norm if predicted else False,
            }
            fh.write(json.dumps(row, ensure_ascii=False) + "\n")
            count += 1
    return count


@dataclass
class ReevaluationLedger:
    """Partition of a scored run into correct / X / Y / false predictions."""

    n: int
    correct: set[str]
    failures: set[str]
    x: set[str]          # judged plausible, predicted entity inside the KG
    y: set[str]          # judged plausible, predicted entity outside the KG
    judged: set[str]

    @property
    def raw(self) -> float:
        return len(self.correct) / self.n if self.n else 0.0

    @property
    def adjusted(self) -> float:
        return (len(self.correct) + len(self.x)) / self.n if self.n else 0.0

    def to_json_obj(self) -> dict:
        return {
            "n": self.n,
            "correct": len(self.correct),
            "failures": len(self.failures),
            "judged": len(self.judged),
            "x": len(self.x),
            "y": len(self.y),
            "raw": round(self.raw, 6),
            "adjusted": round(self.adjusted, 6),
        }


def import_judgments_and_adjust(predictions: list[dict], gold: dict[str, dict],
                                failures: list[dict],
                                judgments: list[dict]) -> ReevaluationLedger:
    """Apply two-judge verdicts to exported failures.

    A failure joins X or Y only on unanimity (both verdicts positive); the
    in/out-of-KG split follows the exported predicted_in_kg flag. Judgment ids
    that are not exported failures reject the whole file.
    """
    correct = set()
    for pred in predictions:
        qid = pred["id"]
        if qid not in gold:
            raise DataError(f"prediction id {qid!r} has no gold entry (corrupt run)")
        answers = [normalize_answer(a) for a in pred.get("answers", [])]
        if (pred.get("error") is None and answers
                and answers[0] == normalize_answer(gold[qid]["answer"])):
            correct.add(qid)
    failure_rows = {row["id"]: row for row in failures}
    failure_ids = set(failure_rows)

    x, y, judged = set(), set(), set()
    for row in judgments:
        qid = row.get("id")
        if qid not in failure_ids:
            raise ValidationError(
                f"judgment id {qid!r} is not among the exported failures; "
                f"rejecting judgment file")
        if "judge_a" not in row or "judge_b" not in row:
            raise ValidationError(f"judgment for {qid!r} missing judge_a/judge_b")
        judged.add(qid)
        if bool(row["judge_a"]) and bool(row["judge_b"]):
            if failure_rows[qid].get("predicted_in_kg"):
                x.add(qid)
            else:
                y.add(qid)
    return ReevaluationLedger(n=len(predictions), correct=correct,
                              failures=failure_ids, x=x, y=y, judged=judged)
