import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gskgc.errors import ValidationError
from gskgc.kg import BACKWARD, FORWARD, KnowledgeGraph, build_queries
from gskgc.subgraph import (ContextPath, Hop, NegativeSet, context_paths,
                            dump_context, ego_graph, merge_budget, negatives,
                            neighbor_triples, query_context, query_rng)
from tests.conftest import random_kg
from tests.oracles import (brute_ego_triples, brute_negatives,
                           brute_neighbor_triples, brute_paths, path_signature)


def surfaces(kg, ids):
    return [kg.entities.surface(e) for e in ids]


def fwd_query(kg, split, i=0):
    return build_queries(kg, split)[2 * i]


def bwd_query(kg, split, i=0):
    return build_queries(kg, split)[2 * i + 1]


# -- fixture-derived cases ----------------------------------------------------

def test_ego_graph_radius1_incident(toy_kg):
    a = toy_kg.entities.id("A")
    eg = ego_graph(toy_kg, a, radius=1)
    incident = {toy_kg.triple_surface(t) for t in eg.incident(toy_kg)}
    assert incident == {("A", "r1", "B"), ("A", "r1", "C"), ("A", "r2", "D")}


def test_ego_graph_radius5_all(toy_kg):
    a = toy_kg.entities.id("A")
    assert len(ego_graph(toy_kg, a, radius=5).triple_indexes) == 5


def test_ego_graph_isolated_entity():
    kg = KnowledgeGraph.from_raw(
        {"train": [("a", "r", "b")], "valid": [], "test": [("z", "r", "a")]})
    z = kg.entities.id("z")
    assert ego_graph(kg, z).triple_indexes == ()


def test_negatives_train_query(toy_kg):
    # (A, r1, ?) with gold B: the other train answer is C
    q = fwd_query(toy_kg, "train", 0)
    assert surfaces(toy_kg, negatives(toy_kg, q).entities) == ["C"]


def test_negatives_test_query_gold_removal_noop(toy_kg):
    q = fwd_query(toy_kg, "test", 0)  # (A, r1, ?) gold E, unseen in train
    assert surfaces(toy_kg, negatives(toy_kg, q).entities) == ["B", "C"]


def test_negatives_single_answer_relation(toy_kg):
    # (A, r2, ?) gold D while training on that very fact: nothing left
    q = fwd_query(toy_kg, "train", 2)
    assert negatives(toy_kg, q).entities == ()


def test_neighbor_triples_forward(toy_kg):
    q = fwd_query(toy_kg, "test", 0)
    out = {toy_kg.triple_surface(t) for t in neighbor_triples(toy_kg, q)}
    assert out == {("A", "r2", "D")}


def test_neighbor_triples_full_subtraction():
    kg = KnowledgeGraph.from_raw(
        {"train": [("a", "r", "b"), ("a", "r", "c")], "valid": [],
         "test": [("a", "r", "d")]})
    q = fwd_query(kg, "test", 0)
    assert neighbor_triples(kg, q) == []


def test_neighbor_triples_backward(toy_kg):
    # (?, r3, E): all of E's incident edges carry r3, so nothing remains
    q = bwd_query(toy_kg, "train", 3)
    assert q.direction == BACKWARD
    assert toy_kg.entities.surface(q.anchor) == "E"
    assert neighbor_triples(toy_kg, q) == []


def test_context_paths_depths(toy_kg):
    q = fwd_query(toy_kg, "test", 0)
    assert context_paths(toy_kg, q, 0) == []
    assert [p.surface(toy_kg) for p in context_paths(toy_kg, q, 1)] == ["(A, r2, D)"]
    assert ([p.surface(toy_kg) for p in context_paths(toy_kg, q, 2)]
            == ["(A, r2, D)", "(A, r2, D, r3, E)"])


def test_context_paths_depth_bounds(toy_kg):
    q = fwd_query(toy_kg, "test", 0)
    with pytest.raises(ValidationError):
        context_paths(toy_kg, q, 6)
    with pytest.raises(ValidationError):
        context_paths(toy_kg, q, -1)


def test_merge_budget_negatives_cover_budget(toy_kg):
    q = fwd_query(toy_kg, "train", 0)
    negs = negatives(toy_kg, q)  # {C}
    paths = context_paths(toy_kg, q, 1)
    merged = merge_budget(negs, paths, 1, seed=0)
    assert surfaces(toy_kg, merged.negatives) == ["C"]
    assert merged.neighbors == ()


def test_merge_budget_surplus_keeps_everything(toy_kg):
    q = fwd_query(toy_kg, "test", 0)
    negs = negatives(toy_kg, q)  # {B, C}
    paths = context_paths(toy_kg, q, 1)  # [(A, r2, D)]
    merged = merge_budget(negs, paths, 100, seed=0)
    assert surfaces(toy_kg, merged.negatives) == ["B", "C"]
    assert [p.surface(toy_kg) for p in merged.neighbors] == ["(A, r2, D)"]
    assert merged.size() == 3


def test_merge_budget_zero(toy_kg):
    q = fwd_query(toy_kg, "test", 0)
    merged = merge_budget(negatives(toy_kg, q), context_paths(toy_kg, q, 1), 0, 0)
    assert merged.negatives == () and merged.neighbors == ()


# -- properties and oracle equivalence ----------------------------------------

def _random_cases(n_graphs, seed0, **kg_kwargs):
    for seed in range(seed0, seed0 + n_graphs):
        rng = random.Random(seed)
        kg = random_kg(rng, **kg_kwargs)
        queries = build_queries(kg, "train") + build_queries(kg, "test")
        rng.shuffle(queries)
        yield kg, queries


def test_oracle_equivalence_small():
    checked = 0
    for kg, queries in _random_cases(6, 40, n_entities=40, n_triples=200):
        for q in queries[:40]:
            assert list(negatives(kg, q).entities) == brute_negatives(kg, q)
            assert neighbor_triples(kg, q) == brute_neighbor_triples(kg, q)
            for p in (0, 1, 2):
                mine = context_paths(kg, q, p)
                assert len(mine) < 10_000  # cap not hit, sets comparable
                sigs = [path_signature(cp) for cp in mine]
                assert len(set(sigs)) == len(sigs)
                assert set(sigs) == brute_paths(kg, q, p)
            checked += 1
    assert checked >= 200


def test_negatives_never_contain_gold():
    for kg, queries in _random_cases(4, 80, n_entities=50, n_triples=260):
        for q in queries:
            assert q.gold not in negatives(kg, q).entities


def test_negative_edges_never_start_context_paths():
    for kg, queries in _random_cases(4, 120, n_entities=50, n_triples=260):
        for q in queries[:60]:
            neg_edges = set()
            for t in kg.train:
                if (t.relation == q.relation
                        and (t.head == q.anchor if q.direction == FORWARD
                             else t.tail == q.anchor)):
                    neg_edges.add(t)
            for path in context_paths(kg, q, 2):
                first = kg.train[path.hops[0].tidx]
                assert first not in neg_edges


def test_no_leakage_from_test_queries():
    for kg, queries in _random_cases(3, 160, n_entities=40, n_triples=200):
        train_set = set(kg.train)
        for q in queries:
            if q.split == "train":
                continue
            negs, paths, merged = query_context(kg, q, p=2, m=30, seed=1)
            for ent in negs.entities:
                edge = ((q.anchor, q.relation, ent) if q.direction == FORWARD
                        else (ent, q.relation, q.anchor))
                assert any((t.head, t.relation, t.tail) == edge for t in kg.train)
            for path in paths:
                for hop in path.hops:
                    assert kg.train[hop.tidx] in train_set
            for path in merged.neighbors:
                for hop in path.hops:
                    assert kg.train[hop.tidx] in train_set


def test_merged_context_size_and_priority():
    for kg, queries in _random_cases(3, 200, n_entities=50, n_triples=300):
        for q in queries[:30]:
            for m in (0, 1, 3, 10, 100):
                negs, paths, merged = query_context(kg, q, p=1, m=m, seed=7)
                all_paths = context_paths(kg, q, 1)
                assert merged.size() <= m
                assert merged.size() == min(m, len(negs) + len(all_paths))
                if merged.neighbors:
                    assert len(negs) < m


def test_determinism_across_runs_and_order(toy_kg):
    for kg, queries in _random_cases(2, 300, n_entities=40, n_triples=220):
        picked = queries[:20]
        first = [query_context(kg, q, 2, 10, seed=42)[2] for q in picked]
        second = [query_context(kg, q, 2, 10, seed=42)[2]
                  for q in reversed(picked)][::-1]
        assert first == second


def test_query_rng_keyed_by_seed_and_id():
    a = query_rng(1, "test:0:f").integers(0, 1 << 30, 8).tolist()
    assert a == query_rng(1, "test:0:f").integers(0, 1 << 30, 8).tolist()
    assert a != query_rng(2, "test:0:f").integers(0, 1 << 30, 8).tolist()
    assert a != query_rng(1, "test:1:f").integers(0, 1 << 30, 8).tolist()


def test_ego_graph_matches_oracle():
    for kg, _ in _random_cases(3, 400, n_entities=30, n_triples=90):
        rng = random.Random(0)
        for _ in range(10):
            center = rng.randrange(len(kg.entities))
            radius = rng.choice([0, 1, 2])
            mine = list(ego_graph(kg, center, radius).triple_indexes)
            assert mine == brute_ego_triples(kg, center, radius)


def test_temporal_negatives_match_across_timestamps():
    kg = KnowledgeGraph.from_raw(
        {"train": [("a", "r", "b", "2014-01-01"), ("a", "r", "b", "2014-02-01"),
                   ("a", "r", "c", "2014-03-01")],
         "valid": [], "test": [("a", "r", "d", "2014-06-01")]},
        temporal=True)
    q = fwd_query(kg, "test", 0)
    assert surfaces(kg, negatives(kg, q).entities) == ["b", "c"]  # deduped


def test_temporal_paths_carry_timestamps():
    kg = KnowledgeGraph.from_raw(
        {"train": [("a", "r1", "b", "2014-01-01"), ("b", "r2", "c", "2014-02-01")],
         "valid": [], "test": [("a", "r3", "c", "2014-06-01")]},
        temporal=True)
    q = fwd_query(kg, "test", 0)
    paths = context_paths(kg, q, 2)
    assert [p.surface(kg) for p in paths] == [
        "(a, r1, b, 2014-01-01)",
        "(a, r1, b, 2014-01-01, r2, c, 2014-02-01)",
    ]


def test_self_loop_with_query_relation_is_not_a_neighbor():
    kg = KnowledgeGraph.from_raw(
        {"train": [("a", "r", "a"), ("a", "s", "b")], "valid": [],
         "test": [("a", "r", "b")]})
    q = fwd_query(kg, "test", 0)
    assert surfaces(kg, negatives(kg, q).entities) == ["a"]
    out = {kg.triple_surface(t) for t in neighbor_triples(kg, q)}
    assert out == {("a", "s", "b")}


def test_inverse_hops_render_with_marker():
    # (b, r, a) is a neighbor of forward query (a, r, ?): same relation, but an
    # in-edge. Rendering must not display it as the fact (a, r, b).
    kg = KnowledgeGraph.from_raw(
        {"train": [("b", "r", "a"), ("b", "s", "c")], "valid": [],
         "test": [("a", "r", "z")]})
    q = fwd_query(kg, "test", 0)
    assert negatives(kg, q).entities == ()
    rendered = [p.surface(kg) for p in context_paths(kg, q, 2)]
    assert rendered == ["(a, inverse r, b)", "(a, inverse r, b, s, c)"]
    assert "(a, r, b" not in " ".join(rendered)


def test_dump_context_shape(toy_kg):
    q = fwd_query(toy_kg, "test", 0)
    negs, paths, merged = query_context(toy_kg, q, 2, 10, seed=0)
    obj = dump_context(toy_kg, q, negs, paths, merged)
    assert obj["query"] == q.id
    assert obj["negatives"] == ["B", "C"]
    assert {"negatives", "neighbors", "budget"} <= set(obj["merged"])


# -- hypothesis properties over merge_budget ----------------------------------

@st.composite
def merge_inputs(draw):
    negs = tuple(draw(st.lists(st.integers(0, 500), unique=True, max_size=30)))
    n_paths = draw(st.integers(0, 30))
    paths = [ContextPath(0, (Hop(0, i + 1000, True, i, None),))
             for i in range(n_paths)]
    m = draw(st.integers(0, 40))
    seed = draw(st.integers(0, 2**32 - 1))
    return NegativeSet("q:0:f", negs), paths, m, seed


@settings(max_examples=200, deadline=None)
@given(merge_inputs())
def test_merge_budget_properties(inputs):
    negs, paths, m, seed = inputs
    merged = merge_budget(negs, paths, m, seed)
    assert merged.size() <= m
    assert merged.size() == min(m, len(negs) + len(paths))
    assert set(merged.negatives) <= set(negs.entities)
    if merged.neighbors:
        assert len(negs) < m
    if len(negs) >= m:
        assert merged.neighbors == ()
    # deterministic under the same key
    again = merge_budget(negs, paths, m, seed)
    assert merged == again
