#!/usr/bin/env python3
"""Benchmark the compiled traversal kernels against the pure-Python fallback.

Builds a random knowledge graph, then times BFS distance queries, radius
expansions and per-query path enumeration on both backends.

    python benchmarks/bench_kernels.py --entities 20000 --triples 120000
"""

import argparse
import random
import time

import numpy as np

from gskgc.kernels import _pytraversal

try:
    from gskgc.kernels import _cytraversal
except ImportError:
    _cytraversal = None

from gskgc.kg import KnowledgeGraph


def build_graph(rng, n_entities, n_triples, n_relations=50):
    ents = [f"e{i}" for i in range(n_entities)]
    rels = [f"r{i}" for i in range(n_relations)]
    rows = {(rng.choice(ents), rng.choice(rels), rng.choice(ents))
            for _ in range(n_triples)}
    return KnowledgeGraph.from_raw({"train": sorted(rows), "valid": [], "test": []})


def bench(label, fn, repeats=3):
    best = min(timeit_once(fn) for _ in range(repeats))
    print(f"  {label:<24} {best * 1000:10.1f} ms")
    return best


def timeit_once(fn):
    t0 = time.perf_counter()
    fn()
    return time.perf_counter() - t0


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--entities", type=int, default=20_000)
    ap.add_argument("--triples", type=int, default=120_000)
    ap.add_argument("--queries", type=int, default=300)
    ap.add_argument("--hops", type=int, default=2)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = random.Random(args.seed)
    kg = build_graph(rng, args.entities, args.triples)
    n = len(kg.entities)
    indptr, nbr = kg.indptr, kg.slot_nbr
    sources = [rng.randrange(n) for _ in range(args.queries)]
    pairs = [(rng.randrange(n), rng.randrange(n)) for _ in range(args.queries)]

    backends = [("fallback", _pytraversal)]
    if _cytraversal is not None:
        backends.insert(0, ("native", _cytraversal))
    else:
        print("compiled kernels not built; benchmarking fallback only")

    print(f"graph: {n} entities, {len(kg.train)} train triples, "
          f"{args.queries} queries, paths up to {args.hops} hops\n")

    results = {}
    for name, impl in backends:
        print(f"[{name}]")
        results[name] = {
            "bfs_distance": bench("bfs_distance (cap 5)", lambda: [
                impl.bfs_distance(indptr, nbr, a, b, 5) for a, b in pairs]),
            "bfs_distances": bench("bfs_distances (radius 3)", lambda: [
                impl.bfs_distances(indptr, nbr, s, 3) for s in sources[:60]]),
            "enum_paths": bench(f"enum_paths (p={args.hops})", lambda: [
                impl.enum_paths(
                    indptr, nbr, s, args.hops,
                    np.ones(int(indptr[s + 1] - indptr[s]), dtype=np.uint8),
                    10_000)
                for s in sources]),
        }
        print()

    if len(results) == 2:
        print("speedup (fallback / native):")
        for key in results["native"]:
            ratio = results["fallback"][key] / results["native"][key]
            print(f"  {key:<24} {ratio:8.1f}x")


if __name__ == "__main__":
    main()
