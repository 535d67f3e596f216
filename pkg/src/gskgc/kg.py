"""Knowledge graph loading, vocabularies, adjacency indexes and query derivation.

Datasets are tab-separated triple files (head, relation, tail, optional
timestamp), one split per file. Vocabularies are interned over all splits so
test-only entities stay nameable as gold answers, but every adjacency index is
built from the train split only: context handed to downstream stages can never
reference a valid/test fact.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from datetime import date
from pathlib import Path
from typing import Iterable, NamedTuple, Optional

import numpy as np

from gskgc import kernels
from gskgc.errors import DataError, ValidationError

logger = logging.getLogger(__name__)

FORWARD = "forward"
BACKWARD = "backward"

SPLITS = ("train", "valid", "test")

# Published per-dataset counts: (#entity, #relation, #train, #valid, #test).
KNOWN_DATASETS = {
    "WN18RR": ((40943, 11, 86835, 3034, 3134), False),
    "FB15k-237": ((14541, 237, 272115, 17535, 20466), False),
    "FB15k-237N": ((13104, 93, 87282, 1827, 1828), False),
    "ICEWS14": ((6869, 230, 74845, 8514, 7371), True),
    "ICEWS05-15": ((10094, 251, 368868, 46302, 46159), True),
}


class Vocab:
    """Dense string-interning table; id -> string -> id is the identity."""

    def __init__(self):
        self._ids: dict[str, int] = {}
        self._strings: list[str] = []

    def intern(self, s: str) -> int:
        i = self._ids.get(s)
        if i is None:
            i = len(self._strings)
            self._ids[s] = i
            self._strings.append(s)
        return i

    def id(self, s: str) -> Optional[int]:
        return self._ids.get(s)

    def surface(self, i: int) -> str:
        return self._strings[i]

    def __len__(self) -> int:
        return len(self._strings)

    def __contains__(self, s: str) -> bool:
        return s in self._ids

    def __iter__(self):
        return iter(self._strings)


class Triple(NamedTuple):
    head: int
    relation: int
    tail: int
    ts: Optional[str] = None


@dataclass(frozen=True)
class Query:
    """One directed prediction task derived from a split triple."""

    id: str
    anchor: int
    relation: int
    direction: str  # FORWARD or BACKWARD
    gold: int
    split: str
    timestamp: Optional[str] = None

    @property
    def sort_key(self):
        split, idx, d = self.id.split(":")
        return (split, int(idx), d)


def normalize_timestamp(raw: str) -> str:
    """Normalize to YYYY-MM-DD when the value parses as one; else pass through."""
    raw = raw.strip()
    try:
        return date.fromisoformat(raw).isoformat()
    except ValueError:
        return raw


def load_split(path, fmt: str, entities: Vocab, relations: Vocab) -> list[Triple]:
    """Parse one TSV split file, interning names into the given vocabularies.

    fmt is "skg" (head/relation/tail) or "tkg" (…/timestamp). Rows with the
    wrong column count raise DataError with their line numbers; exact duplicate
    rows are dropped with a warning.
    """
    if fmt not in ("skg", "tkg"):
        raise ValidationError(f"unknown split format {fmt!r}; expected skg or tkg")
    path = Path(path)
    if not path.is_file():
        raise DataError(f"split file not found: {path}")
    want_cols = 4 if fmt == "tkg" else 3

    triples: list[Triple] = []
    seen: set[tuple] = set()
    bad_lines: list[int] = []
    dup_lines: list[int] = []
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n").rstrip("\r")
            if not line.strip():
                continue
            cols = line.split("\t")
            if len(cols) != want_cols:
                bad_lines.append(lineno)
                continue
            h = entities.intern(cols[0].strip())
            r = relations.intern(cols[1].strip())
            t = entities.intern(cols[2].strip())
            ts = normalize_timestamp(cols[3]) if fmt == "tkg" else None
            key = (h, r, t, ts)
            if key in seen:
                dup_lines.append(lineno)
                continue
            seen.add(key)
            triples.append(Triple(h, r, t, ts))
    if bad_lines:
        shown = ", ".join(str(x) for x in bad_lines[:10])
        more = f" (+{len(bad_lines) - 10} more)" if len(bad_lines) > 10 else ""
        raise DataError(
            f"{path}: {len(bad_lines)} rows with wrong column count "
            f"(expected {want_cols}) at lines {shown}{more}"
        )
    if dup_lines:
        shown = ", ".join(str(x) for x in dup_lines[:5])
        logger.warning(
            "%s: dropped %d duplicate triples (first at lines %s)",
            path, len(dup_lines), shown,
        )
    return triples


def sniff_format(path) -> str:
    """Guess skg/tkg from the first non-empty row's column count."""
    with Path(path).open(encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n").rstrip("\r")
            if not line.strip():
                continue
            ncols = len(line.split("\t"))
            if ncols == 3:
                return "skg"
            if ncols == 4:
                return "tkg"
            raise DataError(f"{path}: cannot infer format from a {ncols}-column row")
    return "skg"  # empty file: treat as static


class KnowledgeGraph:
    """Interned vocabularies plus train-only adjacency over the split triples.

    The incident-edge index is CSR-shaped: entity u owns slots
    [indptr[u], indptr[u+1]), each slot holding the other endpoint, the
    relation, the train triple index and whether u is the head. Slots are
    ordered by (triple index, out-before-in), which fixes every downstream
    enumeration order. The structure is immutable once built and safe for
    concurrent readers.
    """

    def __init__(self, entities: Vocab, relations: Vocab,
                 splits: dict[str, list[Triple]], temporal: bool,
                 name: Optional[str] = None):
        self.entities = entities
        self.relations = relations
        self.splits = splits
        self.temporal = temporal
        self.name = name
        self.train = splits.get("train", [])
        self._build_index()

    @classmethod
    def from_dir(cls, directory, fmt: Optional[str] = None,
                 name: Optional[str] = None) -> "KnowledgeGraph":
        """Load train/valid/test TSV files from a dataset directory."""
        directory = Path(directory)
        if not directory.is_dir():
            raise DataError(f"dataset directory not found: {directory}")
        paths = {}
        for split in SPLITS:
            for candidate in (f"{split}.txt", f"{split}.tsv"):
                p = directory / candidate
                if p.is_file():
                    paths[split] = p
                    break
            else:
                raise DataError(f"missing {split} file under {directory}")
        if fmt is None:
            fmt = sniff_format(paths["train"])
        entities, relations = Vocab(), Vocab()
        splits = {s: load_split(paths[s], fmt, entities, relations) for s in SPLITS}
        return cls(entities, relations, splits, temporal=(fmt == "tkg"), name=name)

    @classmethod
    def from_raw(cls, splits: dict[str, list[tuple]],
                 temporal: bool = False) -> "KnowledgeGraph":
        """Build from in-memory (head, relation, tail[, ts]) string tuples."""
        entities, relations = Vocab(), Vocab()
        interned: dict[str, list[Triple]] = {s: [] for s in SPLITS}
        for split in SPLITS:
            for row in splits.get(split, []):
                ts = normalize_timestamp(row[3]) if temporal else None
                interned[split].append(Triple(
                    entities.intern(row[0]), relations.intern(row[1]),
                    entities.intern(row[2]), ts,
                ))
        return cls(entities, relations, interned, temporal=temporal)

    def _build_index(self):
        n = len(self.entities)
        m = len(self.train)
        heads = np.fromiter((t.head for t in self.train), dtype=np.int32, count=m)
        rels = np.fromiter((t.relation for t in self.train), dtype=np.int32, count=m)
        tails = np.fromiter((t.tail for t in self.train), dtype=np.int32, count=m)
        self._train_heads = heads
        self._train_rels = rels
        self._train_tails = tails

        owner = np.concatenate([heads, tails])
        other = np.concatenate([tails, heads])
        rel2 = np.concatenate([rels, rels])
        tidx = np.concatenate([np.arange(m, dtype=np.int32)] * 2) if m else np.empty(0, np.int32)
        is_out = np.concatenate([np.ones(m, np.uint8), np.zeros(m, np.uint8)])
        # slot order per entity: by train triple index, out-edge before in-edge
        order = np.lexsort((1 - is_out, tidx, owner))
        self.slot_nbr = np.ascontiguousarray(other[order])
        self.slot_rel = np.ascontiguousarray(rel2[order])
        self.slot_tidx = np.ascontiguousarray(tidx[order])
        self.slot_is_out = np.ascontiguousarray(is_out[order])
        counts = np.bincount(owner, minlength=n) if m else np.zeros(n, np.int64)
        self.indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(counts, out=self.indptr[1:])

    # -- index views ---------------------------------------------------------

    def incident_slots(self, e: int) -> range:
        self._check_entity(e)
        return range(int(self.indptr[e]), int(self.indptr[e + 1]))

    def out_edges(self, e: int) -> list[tuple[int, int, Optional[str]]]:
        """(relation, tail, ts) for train triples with e as head."""
        return [
            (int(self.slot_rel[s]), int(self.slot_nbr[s]), self.train[self.slot_tidx[s]].ts)
            for s in self.incident_slots(e) if self.slot_is_out[s]
        ]

    def in_edges(self, e: int) -> list[tuple[int, int, Optional[str]]]:
        """(relation, head, ts) for train triples with e as tail."""
        return [
            (int(self.slot_rel[s]), int(self.slot_nbr[s]), self.train[self.slot_tidx[s]].ts)
            for s in self.incident_slots(e) if not self.slot_is_out[s]
        ]

    def _check_entity(self, e: int):
        if not 0 <= e < len(self.entities):
            raise ValidationError(f"unknown entity id {e}")

    # -- operations ----------------------------------------------------------

    def distance(self, frm: int, to: int, cap: int = 5) -> Optional[int]:
        """Undirected BFS hop distance over train edges; None beyond cap."""
        self._check_entity(frm)
        self._check_entity(to)
        if cap < 0:
            raise ValidationError(f"distance cap must be >= 0, got {cap}")
        d = kernels.bfs_distance(self.indptr, self.slot_nbr, frm, to, cap)
        return None if d < 0 else int(d)

    def distances_within(self, src: int, radius: int) -> np.ndarray:
        self._check_entity(src)
        return kernels.bfs_distances(self.indptr, self.slot_nbr, src, radius)

    def triple_surface(self, t: Triple) -> tuple:
        parts = (self.entities.surface(t.head), self.relations.surface(t.relation),
                 self.entities.surface(t.tail))
        return parts + (t.ts,) if self.temporal else parts

    def counts(self) -> tuple[int, int, int, int, int]:
        return (len(self.entities), len(self.relations),
                len(self.splits["train"]), len(self.splits["valid"]),
                len(self.splits["test"]))


def build_queries(kg: KnowledgeGraph, split: str) -> list[Query]:
    """Two directed queries per triple: forward (h,r,?) and backward (?,r,t)."""
    if split not in kg.splits:
        raise ValidationError(f"unknown split {split!r}")
    queries: list[Query] = []
    for i, t in enumerate(kg.splits[split]):
        queries.append(Query(f"{split}:{i}:f", t.head, t.relation, FORWARD,
                             t.tail, split, t.ts))
        queries.append(Query(f"{split}:{i}:b", t.tail, t.relation, BACKWARD,
                             t.head, split, t.ts))
    return queries


def shortest_path_distance(kg: KnowledgeGraph, frm: int, to: int,
                           cap: int = 5) -> Optional[int]:
    return kg.distance(frm, to, cap)


def load_descriptions(path) -> dict[str, str]:
    """Entity description file: `entity \\t description` per line, verbatim."""
    path = Path(path)
    if not path.is_file():
        raise DataError(f"description file not found: {path}")
    descs: dict[str, str] = {}
    with path.open(encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line.strip():
                continue
            parts = line.split("\t", 1)
            if len(parts) == 2:
                descs[parts[0].strip()] = parts[1].strip()
    return descs


def stats_table(rows: Iterable[tuple]) -> str:
    """Plain-text dataset statistics table, one row per (name, 5 counts)."""
    header = ("Dataset", "#entity", "#relation", "#train", "#value", "#test")
    all_rows = [header] + [tuple(str(c) for c in row) for row in rows]
    widths = [max(len(r[i]) for r in all_rows) for i in range(len(header))]
    lines = []
    for r in all_rows:
        lines.append("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip())
    lines.insert(1, "-" * len(lines[0]))
    return "\n".join(lines)


def compare_to_known(name: str, counts: tuple) -> list[tuple[str, int, int, bool]]:
    """Per-field (label, expected, actual, matches) against the published stats."""
    if name not in KNOWN_DATASETS:
        raise ValidationError(f"unknown dataset name {name!r}; "
                              f"known: {', '.join(sorted(KNOWN_DATASETS))}")
    expected = KNOWN_DATASETS[name][0]
    labels = ("#entity", "#relation", "#train", "#value", "#test")
    return [(lbl, exp, act, exp == act)
            for lbl, exp, act in zip(labels, expected, counts)]
