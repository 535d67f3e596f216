"""Per-query subgraph extraction: negatives, neighbor context and budgeted merge.

All operations are pure reads over an immutable KnowledgeGraph, so they can run
per-query in parallel. Sampling uses a counter-based PRNG keyed by
(global seed, query id): a query's merged context never depends on how many
other queries were processed before it.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from gskgc import kernels
from gskgc.errors import ValidationError
from gskgc.kg import FORWARD, KnowledgeGraph, Query, Triple

MAX_DEPTH = 5
PATH_CAP = 10_000  # per-query enumeration cap before sampling; bounds hub blowup
DEFAULT_RADIUS = 5


class Hop(NamedTuple):
    relation: int
    entity: int      # node arrived at
    is_out: bool     # True when traversed head -> tail
    tidx: int        # train triple index
    ts: Optional[str]


@dataclass(frozen=True)
class ContextPath:
    """Simple path out of a query anchor; hops are train edges."""

    anchor: int
    hops: tuple[Hop, ...]

    def __len__(self):
        return len(self.hops)

    def surface(self, kg: KnowledgeGraph) -> str:
        """Linear rendering: (e, r1, e1, r2, e2), timestamps inline for TKG.

        Hops that traverse an edge tail-to-head are marked `inverse <r>` so the
        rendered chain never asserts a fact the graph does not contain.
        """
        parts = [kg.entities.surface(self.anchor)]
        for hop in self.hops:
            rel = kg.relations.surface(hop.relation)
            parts.append(rel if hop.is_out else f"inverse {rel}")
            parts.append(kg.entities.surface(hop.entity))
            if hop.ts is not None:
                parts.append(hop.ts)
        return "(" + ", ".join(parts) + ")"


@dataclass(frozen=True)
class NegativeSet:
    """Known train answers to the query's (anchor, relation), gold excluded."""

    query_id: str
    entities: tuple[int, ...]

    def __len__(self):
        return len(self.entities)


@dataclass(frozen=True)
class EgoGraph:
    center: int
    triple_indexes: tuple[int, ...]

    def triples(self, kg: KnowledgeGraph) -> list[Triple]:
        return [kg.train[i] for i in self.triple_indexes]

    def incident(self, kg: KnowledgeGraph) -> list[Triple]:
        """Only the triples that contain the center itself."""
        return [kg.train[i] for i in self.triple_indexes
                if kg.train[i].head == self.center or kg.train[i].tail == self.center]


@dataclass(frozen=True)
class MergedContext:
    negatives: tuple[int, ...]
    neighbors: tuple[ContextPath, ...]
    budget: int

    def size(self):
        return len(self.negatives) + len(self.neighbors)


def query_rng(seed: int, query_id: str) -> np.random.Generator:
    """Philox generator keyed by (seed, query id); independent of visit order."""
    digest = hashlib.blake2b(f"{seed}:{query_id}".encode(), digest_size=16).digest()
    key = np.frombuffer(digest, dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def ego_graph(kg: KnowledgeGraph, e: int, radius: int = DEFAULT_RADIUS) -> EgoGraph:
    """All train triples with an endpoint within `radius` hops of e."""
    if radius < 0:
        raise ValidationError(f"radius must be >= 0, got {radius}")
    dist = kg.distances_within(e, radius)
    if len(kg.train) == 0:
        return EgoGraph(e, ())
    keep = (dist[kg._train_heads] >= 0) | (dist[kg._train_tails] >= 0)
    return EgoGraph(e, tuple(int(i) for i in np.nonzero(keep)[0]))


def _matches_query(q: Query, rel: int, is_out: bool) -> bool:
    """True when an incident edge slot answers the query's (anchor, relation)."""
    if rel != q.relation:
        return False
    return is_out if q.direction == FORWARD else not is_out


def _triple_matches_query(q: Query, t: Triple) -> bool:
    """Triple-level form of the same test; differs only on self-loops."""
    if t.relation != q.relation:
        return False
    return t.head == q.anchor if q.direction == FORWARD else t.tail == q.anchor


def negatives(kg: KnowledgeGraph, q: Query) -> NegativeSet:
    """Train answers to (anchor, relation) in the query direction, minus gold.

    Temporal graphs match across all timestamps. Order is first occurrence in
    the train file, deduplicated.
    """
    seen: set[int] = set()
    out: list[int] = []
    for s in kg.incident_slots(q.anchor):
        if _matches_query(q, int(kg.slot_rel[s]), bool(kg.slot_is_out[s])):
            ent = int(kg.slot_nbr[s])
            if ent != q.gold and ent not in seen:
                seen.add(ent)
                out.append(ent)
    return NegativeSet(q.id, tuple(out))


def neighbor_triples(kg: KnowledgeGraph, q: Query) -> list[Triple]:
    """Train triples incident to the anchor minus the (anchor, relation) edges.

    The subtraction removes exactly the gold edge (when it is a train fact) and
    every negative edge, so negatives and neighbors are disjoint.
    """
    seen: set[int] = set()
    out: list[Triple] = []
    for s in kg.incident_slots(q.anchor):
        ti = int(kg.slot_tidx[s])
        if ti in seen:  # self-loops occupy two slots
            continue
        seen.add(ti)
        t = kg.train[ti]
        if not _triple_matches_query(q, t):
            out.append(t)
    return out


def _first_hop_mask(kg: KnowledgeGraph, q: Query) -> np.ndarray:
    slots = kg.incident_slots(q.anchor)
    mask = np.ones(len(slots), dtype=np.uint8)
    for i, s in enumerate(slots):
        if _matches_query(q, int(kg.slot_rel[s]), bool(kg.slot_is_out[s])):
            mask[i] = 0
    return mask


def context_paths(kg: KnowledgeGraph, q: Query, p: int,
                  cap: int = PATH_CAP) -> list[ContextPath]:
    """Simple paths from the anchor up to p hops, in DFS preorder.

    The first hop must be a neighbor triple (query-matching edges are
    excluded); no entity repeats within a path. p=0 yields no context.
    """
    if not 0 <= p <= MAX_DEPTH:
        raise ValidationError(f"path depth p must be in [0, {MAX_DEPTH}], got {p}")
    kg._check_entity(q.anchor)
    if p == 0:
        return []
    mask = _first_hop_mask(kg, q)
    flat, offsets = kernels.enum_paths(kg.indptr, kg.slot_nbr, q.anchor, p, mask, cap)
    paths = []
    for i in range(len(offsets) - 1):
        hops = tuple(
            Hop(int(kg.slot_rel[s]), int(kg.slot_nbr[s]),
                bool(kg.slot_is_out[s]), int(kg.slot_tidx[s]),
                kg.train[kg.slot_tidx[s]].ts)
            for s in flat[offsets[i]:offsets[i + 1]]
        )
        paths.append(ContextPath(q.anchor, hops))
    return paths


def merge_budget(negs: NegativeSet, paths: list[ContextPath], m: int,
                 seed: int) -> MergedContext:
    """Budgeted merge, negatives first.

    With at least M negatives available, M of them are sampled and no paths are
    used; otherwise all negatives are kept and paths fill the remaining budget.
    Sampled subsets keep their original order.
    """
    if m < 0:
        raise ValidationError(f"budget M must be >= 0, got {m}")
    if m == 0:
        return MergedContext((), (), m)
    rng = query_rng(seed, negs.query_id)
    if len(negs) >= m:
        idx = sorted(rng.choice(len(negs), size=m, replace=False).tolist())
        return MergedContext(tuple(negs.entities[i] for i in idx), (), m)
    room = m - len(negs)
    if len(paths) > room:
        idx = sorted(rng.choice(len(paths), size=room, replace=False).tolist())
        chosen = tuple(paths[i] for i in idx)
    else:
        chosen = tuple(paths)
    return MergedContext(negs.entities, chosen, m)


def query_context(kg: KnowledgeGraph, q: Query, p: int, m: int,
                  seed: int) -> tuple[NegativeSet, list[ContextPath], MergedContext]:
    """Full per-query bundle: negatives, candidate paths, budgeted merge."""
    negs = negatives(kg, q)
    # with the budget already covered by negatives the paths are never used
    paths = context_paths(kg, q, p) if len(negs) < m else []
    return negs, paths, merge_budget(negs, paths, m, seed)


def dump_context(kg: KnowledgeGraph, q: Query, negs: NegativeSet,
                 paths: list[ContextPath], merged: MergedContext) -> dict:
    """JSON-able per-query record for debug dumps and golden-file tests."""
    def path_obj(path: ContextPath):
        return {
            "surface": path.surface(kg),
            "triples": [int(h.tidx) for h in path.hops],
        }

    return {
        "query": q.id,
        "negatives": [kg.entities.surface(e) for e in negs.entities],
        "paths": [path_obj(p_) for p_ in paths],
        "merged": {
            "negatives": [kg.entities.surface(e) for e in merged.negatives],
            "neighbors": [path_obj(p_) for p_ in merged.neighbors],
            "budget": merged.budget,
        },
    }
