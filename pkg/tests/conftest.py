import random
from pathlib import Path

import pytest

from gskgc.kg import KnowledgeGraph

# train/test fixture used throughout; expected values below were derived by
# hand (BFS / exhaustive scans over these five facts)
TOY_TRAIN = [
    ("A", "r1", "B"),
    ("A", "r1", "C"),
    ("A", "r2", "D"),
    ("D", "r3", "E"),
    ("B", "r3", "E"),
]
TOY_TEST = [("A", "r1", "E")]


@pytest.fixture
def toy_kg() -> KnowledgeGraph:
    return KnowledgeGraph.from_raw({"train": TOY_TRAIN, "valid": [], "test": TOY_TEST})


def random_kg(rng: random.Random, n_entities: int, n_triples: int,
              n_relations: int = 8, temporal: bool = False,
              test_frac: float = 0.2) -> KnowledgeGraph:
    """Random multigraph-free KG; triples are unique (h, r, t[, ts])."""
    ents = [f"e{i}" for i in range(n_entities)]
    rels = [f"r{i}" for i in range(n_relations)]
    rows = set()
    attempts = 0
    while len(rows) < n_triples and attempts < n_triples * 20:
        attempts += 1
        row = (rng.choice(ents), rng.choice(rels), rng.choice(ents))
        if temporal:
            row += (f"2014-01-{rng.randint(1, 28):02d}",)
        rows.add(row)
    rows = sorted(rows)
    rng.shuffle(rows)
    n_test = max(1, int(len(rows) * test_frac))
    return KnowledgeGraph.from_raw(
        {"train": rows[n_test:], "valid": [], "test": rows[:n_test]},
        temporal=temporal,
    )


def write_dataset_dir(path: Path, train, valid, test) -> Path:
    path.mkdir(parents=True, exist_ok=True)
    for name, triples in (("train", train), ("valid", valid), ("test", test)):
        with (path / f"{name}.txt").open("w", encoding="utf-8") as fh:
            for row in triples:
                fh.write("\t".join(row) + "\n")
    return path


@pytest.fixture
def toy_dataset_dir(tmp_path) -> Path:
    return write_dataset_dir(tmp_path / "toy", TOY_TRAIN, [], TOY_TEST)


def synthetic_rows(seed: int, n_entities: int = 60, n_train: int = 260,
                   n_test: int = 40, n_relations: int = 8):
    """Synthetic dataset rows for CLI-level tests."""
    rng = random.Random(seed)
    ents = [f"ent {i}" for i in range(n_entities)]
    rels = [f"rel{i}" for i in range(n_relations)]
    rows = set()
    while len(rows) < n_train + n_test:
        rows.add((rng.choice(ents), rng.choice(rels), rng.choice(ents)))
    rows = sorted(rows)
    rng.shuffle(rows)
    return rows[:n_train], [], rows[n_train:n_train + n_test]
