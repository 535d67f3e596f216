"""QA prompt composition and instruction-dataset emission.

A prompt is the concatenation of up to three parts, in fixed order and with
empty parts omitted:

    basic      "Please complete this triple: (h, r, ?)."   (+ description)
    negative   "Please give an answer outside the list: [...]"
    neighbors  "The neighbors of e are as follows: ..."

Records stream out sorted by query id through a single writer, so identical
config + seed always produce byte-identical JSONL.
"""

from __future__ import annotations

import configparser
import hashlib
import json
from dataclasses import asdict, dataclass, replace
from pathlib import Path
from typing import Iterable, Iterator, Optional

from gskgc.errors import DataError, ValidationError
from gskgc.kg import FORWARD, KnowledgeGraph, Query, build_queries
from gskgc.subgraph import (ContextPath, MergedContext, NegativeSet,
                            context_paths, merge_budget, negatives)

NEGATIVE_HEADER = "Please give an answer outside the list:"
NEIGHBOR_HEADER = "The neighbors of"

DEFAULT_FORWARD_TEMPLATE = "Please complete this triple: ({anchor}, {relation}, ?){time}."
DEFAULT_BACKWARD_TEMPLATE = "Please complete this triple: (?, {relation}, {anchor}){time}."


@dataclass(frozen=True)
class PromptConfig:
    """Knobs for one dataset build; hashed into every emitted file."""

    use_negatives: bool = True
    use_neighbors: bool = True
    use_descriptions: bool = True
    p: int = 1          # context path depth
    m: int = 100        # negatives + neighbors budget
    seed: int = 0
    char_cap: int = 8000
    forward_template: str = DEFAULT_FORWARD_TEMPLATE
    backward_template: str = DEFAULT_BACKWARD_TEMPLATE

    def __post_init__(self):
        if not 0 <= self.p <= 5:
            raise ValidationError(f"p must be in [0, 5], got {self.p}")
        if self.m < 0:
            raise ValidationError(f"M must be >= 0, got {self.m}")
        if self.char_cap <= 0:
            raise ValidationError(f"char cap must be positive, got {self.char_cap}")

    def config_hash(self) -> str:
        blob = json.dumps(asdict(self), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:12]

    @classmethod
    def from_ini(cls, path) -> "PromptConfig":
        """Read a [prompt] section of key=value pairs mirroring the fields."""
        path = Path(path)
        if not path.is_file():
            raise DataError(f"config file not found: {path}")
        parser = configparser.ConfigParser()
        parser.read(path, encoding="utf-8")
        if "prompt" not in parser:
            raise ValidationError(f"{path}: missing [prompt] section")
        section = parser["prompt"]
        kwargs = {}
        for name, f_ in cls.__dataclass_fields__.items():
            if name not in section:
                continue
            if f_.type == "bool":
                kwargs[name] = section.getboolean(name)
            elif f_.type == "int":
                kwargs[name] = section.getint(name)
            else:
                kwargs[name] = section.get(name)
        unknown = set(section) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValidationError(f"{path}: unknown keys {sorted(unknown)}")
        return cls(**kwargs)


@dataclass(frozen=True)
class PromptRecord:
    query_id: str
    split: str
    direction: str
    prompt: str
    answer: str
    parts: dict
    config_hash: str
    truncated: bool = False
    sort_key: tuple = ()

    def to_json_obj(self) -> dict:
        obj = {
            "id": self.query_id,
            "split": self.split,
            "direction": self.direction,
            "prompt": self.prompt,
            "answer": self.answer,
        }
        if self.truncated:
            obj["truncated"] = True
        return obj


def render_basic(kg: KnowledgeGraph, q: Query, desc: Optional[str] = None,
                 cfg: PromptConfig = PromptConfig()) -> str:
    """Eq-8-style question for one query; directional template + description."""
    template = cfg.forward_template if q.direction == FORWARD else cfg.backward_template
    time_part = f" at {q.timestamp}" if q.timestamp else ""
    anchor = kg.entities.surface(q.anchor)
    text = template.format(anchor=anchor,
                           relation=kg.relations.surface(q.relation),
                           time=time_part)
    if desc:
        text += f" {anchor} means {desc}"
    return text


def render_negatives(kg: KnowledgeGraph, entities: Iterable[int]) -> str:
    names = [kg.entities.surface(e) for e in entities]
    if not names:
        return ""
    return f"{NEGATIVE_HEADER} [{', '.join(names)}]"


def render_neighbors(kg: KnowledgeGraph, anchor: int,
                     paths: Iterable[ContextPath]) -> str:
    rendered = [p.surface(kg) for p in paths]
    if not rendered:
        return ""
    return (f"{NEIGHBOR_HEADER} {kg.entities.surface(anchor)} "
            f"are as follows: {', '.join(rendered)}")


def compose(parts: dict[str, str]) -> str:
    """basic + negative + neighbors, skipping empty parts."""
    return " ".join(p for p in (parts.get("basic", ""), parts.get("negative", ""),
                                parts.get("neighbors", "")) if p)


def _merged_for_query(kg: KnowledgeGraph, q: Query,
                      cfg: PromptConfig) -> tuple[NegativeSet, MergedContext]:
    negs = negatives(kg, q) if cfg.use_negatives else NegativeSet(q.id, ())
    if cfg.use_neighbors and len(negs) < cfg.m:
        paths = context_paths(kg, q, cfg.p)
    else:
        paths = []
    return negs, merge_budget(negs, paths, cfg.m, cfg.seed)


def build_record(kg: KnowledgeGraph, q: Query, cfg: PromptConfig,
                 descriptions: Optional[dict[str, str]] = None,
                 cfg_hash: Optional[str] = None) -> PromptRecord:
    desc = None
    if cfg.use_descriptions and descriptions:
        desc = descriptions.get(kg.entities.surface(q.anchor))
    parts = {"basic": render_basic(kg, q, desc, cfg)}
    _, merged = _merged_for_query(kg, q, cfg)
    parts["negative"] = render_negatives(kg, merged.negatives)
    kept_paths = list(merged.neighbors)
    parts["neighbors"] = render_neighbors(kg, q.anchor, kept_paths)
    prompt = compose(parts)

    # oversize prompts lose neighbor paths from the end, never negatives
    truncated = False
    while len(prompt) > cfg.char_cap and kept_paths:
        kept_paths.pop()
        parts["neighbors"] = render_neighbors(kg, q.anchor, kept_paths)
        prompt = compose(parts)
        truncated = True
    if len(prompt) > cfg.char_cap:
        truncated = True

    d, idx, letter = q.id.split(":")
    return PromptRecord(
        query_id=q.id,
        split=q.split,
        direction=q.direction,
        prompt=prompt,
        answer=kg.entities.surface(q.gold),
        parts={k: v for k, v in parts.items() if v},
        config_hash=cfg_hash or cfg.config_hash(),
        truncated=truncated,
        sort_key=(d, int(idx), 0 if letter == "f" else 1),
    )


def build_dataset(kg: KnowledgeGraph, split: str, cfg: PromptConfig,
                  descriptions: Optional[dict[str, str]] = None
                  ) -> Iterator[PromptRecord]:
    """One record per query (two per triple), in stable id order."""
    cfg_hash = cfg.config_hash()
    for q in build_queries(kg, split):
        yield build_record(kg, q, cfg, descriptions, cfg_hash)


def _meta_line(schema: str, cfg: PromptConfig, split: str,
               dataset: Optional[str]) -> str:
    meta = {
        "_meta": {
            "schema": schema,
            "dataset": dataset,
            "split": split,
            "config_hash": cfg.config_hash(),
        }
    }
    return json.dumps(meta, ensure_ascii=False, sort_keys=True)


def write_pipeline_jsonl(records: Iterable[PromptRecord], path, cfg: PromptConfig,
                         split: str, dataset: Optional[str] = None) -> int:
    """Stream records (already id-sorted) to the pipeline JSONL file."""
    path = Path(path)
    count = 0
    with path.open("w", encoding="utf-8") as fh:
        fh.write(_meta_line("gskgc-prompts-v1", cfg, split, dataset) + "\n")
        for rec in records:
            fh.write(json.dumps(rec.to_json_obj(), ensure_ascii=False) + "\n")
            count += 1
    return count


def write_trainer_jsonl(records: Iterable[PromptRecord], path, cfg: PromptConfig,
                        split: str, dataset: Optional[str] = None) -> int:
    """Instruction-tuning schema: {"instruction", "input", "output"}."""
    path = Path(path)
    count = 0
    with path.open("w", encoding="utf-8") as fh:
        fh.write(_meta_line("gskgc-trainer-v1", cfg, split, dataset) + "\n")
        for rec in records:
            obj = {"instruction": rec.prompt, "input": "", "output": rec.answer}
            fh.write(json.dumps(obj, ensure_ascii=False) + "\n")
            count += 1
    return count


def ablated(cfg: PromptConfig, no_negatives: bool = False,
            no_neighbors: bool = False) -> PromptConfig:
    return replace(cfg,
                   use_negatives=cfg.use_negatives and not no_negatives,
                   use_neighbors=cfg.use_neighbors and not no_neighbors)
