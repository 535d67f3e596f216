"""Generation backends and batch inference.

Two backends share one interface: an OpenAI-compatible chat-completions
endpoint (bounded retries, exponential backoff) and a deterministic mock
oracle for offline runs and tests. Batch runs are resumable: ids already
present in the output file are skipped, and results are written in input
order through a single sink so reruns are byte-stable under the mock.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import requests

from gskgc.errors import EndpointError, ValidationError
from gskgc.scoring import normalize_answer
from gskgc.subgraph import query_rng

logger = logging.getLogger(__name__)

GREEDY = "greedy"
SAMPLED = "sampled"

TOKEN_ENV_VARS = ("GSKGC_API_TOKEN", "OPENAI_API_KEY")


@dataclass(frozen=True)
class GenerationConfig:
    mode: str = GREEDY
    top_p: float = 0.95
    top_k: int = 20
    num_return_sequences: int = 1
    max_new_tokens: int = 64
    temperature: float = 1.0

    def __post_init__(self):
        if self.mode not in (GREEDY, SAMPLED):
            raise ValidationError(f"mode must be greedy or sampled, got {self.mode!r}")
        if self.mode == GREEDY and self.num_return_sequences != 1:
            raise ValidationError("greedy decoding returns exactly one sequence")
        if self.num_return_sequences < 1:
            raise ValidationError("num_return_sequences must be >= 1")

    @classmethod
    def greedy(cls, max_new_tokens: int = 64) -> "GenerationConfig":
        return cls(mode=GREEDY, num_return_sequences=1, max_new_tokens=max_new_tokens)

    @classmethod
    def sampled(cls, n: int, top_p: float = 0.95, top_k: int = 20,
                temperature: float = 1.0, max_new_tokens: int = 64) -> "GenerationConfig":
        return cls(mode=SAMPLED, top_p=top_p, top_k=top_k, num_return_sequences=n,
                   max_new_tokens=max_new_tokens, temperature=temperature)


@dataclass
class Prediction:
    query_id: str
    answers: list[str] = field(default_factory=list)
    raw_generations: list[str] = field(default_factory=list)
    error: Optional[str] = None
    short: bool = False
    latency: float = 0.0
    endpoint_meta: dict = field(default_factory=dict)

    def to_json_obj(self) -> dict:
        obj = {"id": self.query_id, "answers": self.answers}
        if self.error is not None:
            obj["error"] = self.error
        if self.short:
            obj["short"] = True
        return obj


def extract_answer(text: str) -> str:
    """First non-empty line, stripped of surrounding quotes and punctuation."""
    for line in text.splitlines():
        line = line.strip()
        if line:
            return line.strip("\"'“”‘’").strip(".,;:!?").strip()
    return ""


class MockOracle:
    """Deterministic offline backend keyed by query id.

    With corruption 0.0 the first generation is always the gold answer. With
    corruption c, a fixed pseudo-random c-fraction of query ids (keyed by the
    seed, independent of batch order) yields an out-of-vocabulary wrong answer
    instead. Extra sampled sequences are distinct synthetic strings.
    """

    def __init__(self, gold: dict[str, str], corruption: float = 0.0, seed: int = 0):
        if not 0.0 <= corruption <= 1.0:
            raise ValidationError(f"corruption must be in [0, 1], got {corruption}")
        self.gold = gold
        self.corruption = corruption
        self.seed = seed

    def is_corrupted(self, record_id: str) -> bool:
        if self.corruption <= 0.0:
            return False
        rng = query_rng(self.seed, f"mock:{record_id}")
        return bool(rng.random() < self.corruption)

    def complete(self, record_id: str, prompt: str, cfg: GenerationConfig) -> list[str]:
        gold = self.gold.get(record_id)
        if gold is None:
            raise EndpointError(f"mock oracle has no answer for id {record_id!r}")
        tag = hashlib.blake2b(record_id.encode(), digest_size=4).hexdigest()
        first = f"hallucinated entity {tag}" if self.is_corrupted(record_id) else gold
        out = [first]
        for i in range(1, cfg.num_return_sequences):
            out.append(f"alternative {i} {tag}")
        return out


class HttpEndpoint:
    """OpenAI-compatible chat-completions client with bounded retries."""

    def __init__(self, base_url: str, model: str, max_retries: int = 3,
                 backoff: float = 0.5, timeout: float = 120.0,
                 send_top_k: bool = False, session: Optional[requests.Session] = None):
        self.base_url = base_url.rstrip("/")
        self.model = model
        self.max_retries = max_retries
        self.backoff = backoff
        self.timeout = timeout
        self.send_top_k = send_top_k
        self.session = session or requests.Session()
        token = next((os.environ[v] for v in TOKEN_ENV_VARS if os.environ.get(v)), None)
        self.headers = {"Content-Type": "application/json"}
        if token:
            self.headers["Authorization"] = f"Bearer {token}"

    def payload(self, prompt: str, cfg: GenerationConfig) -> dict:
        body = {
            "model": self.model,
            "messages": [{"role": "user", "content": prompt}],
            "max_tokens": cfg.max_new_tokens,
            "n": cfg.num_return_sequences,
        }
        if cfg.mode == GREEDY:
            body["temperature"] = 0.0
        else:
            body["temperature"] = cfg.temperature
            body["top_p"] = cfg.top_p
            if self.send_top_k:  # not part of every chat-completions API
                body["top_k"] = cfg.top_k
        return body

    def complete(self, record_id: str, prompt: str, cfg: GenerationConfig) -> list[str]:
        url = f"{self.base_url}/chat/completions"
        body = self.payload(prompt, cfg)
        last_err = None
        for attempt in range(self.max_retries + 1):
            if attempt:
                time.sleep(self.backoff * (2 ** (attempt - 1)))
            try:
                resp = self.session.post(url, json=body, headers=self.headers,
                                         timeout=self.timeout)
            except requests.RequestException as exc:
                last_err = f"request failed: {exc}"
                logger.warning("%s (attempt %d/%d)", last_err, attempt + 1,
                               self.max_retries + 1)
                continue
            if resp.status_code in (429,) or resp.status_code >= 500:
                last_err = f"HTTP {resp.status_code}"
                logger.warning("%s (attempt %d/%d)", last_err, attempt + 1,
                               self.max_retries + 1)
                continue
            if resp.status_code != 200:
                raise EndpointError(f"HTTP {resp.status_code}: {resp.text[:200]}")
            try:
                data = resp.json()
                return [c["message"]["content"] for c in data["choices"]]
            except (ValueError, KeyError, TypeError) as exc:
                raise EndpointError(f"malformed endpoint reply: {exc}")
        raise EndpointError(f"retries exhausted: {last_err}")


RANK_FIRST = "first"
RANK_FREQUENCY = "frequency"


def predict_top_k(backend, record_id: str, prompt: str, k: int,
                  cfg: GenerationConfig, rank_by: str = RANK_FIRST) -> Prediction:
    """Collect up to k distinct normalized answers.

    k=1 decodes greedily. k>1 repeatedly samples batches of
    num_return_sequences until k distinct answers are seen or 3*k generations
    were spent. Default ranking is first occurrence across samples;
    ``rank_by="frequency"`` reorders by occurrence count (ties by first
    occurrence).
    """
    if k < 1:
        raise ValidationError(f"k must be >= 1, got {k}")
    if rank_by not in (RANK_FIRST, RANK_FREQUENCY):
        raise ValidationError(f"rank_by must be first or frequency, got {rank_by!r}")
    pred = Prediction(query_id=record_id)
    started = time.monotonic()
    if k == 1:
        run_cfg = replace(cfg, mode=GREEDY, num_return_sequences=1)
    elif cfg.mode == GREEDY:
        run_cfg = GenerationConfig.sampled(n=min(k, 8), max_new_tokens=cfg.max_new_tokens)
    else:
        run_cfg = cfg
    attempt_cap = 3 * k
    spent = 0
    counts: dict[str, int] = {}
    try:
        while len(pred.answers) < k and spent < attempt_cap:
            texts = backend.complete(record_id, prompt, run_cfg)
            spent += max(len(texts), 1)
            for text in texts:
                pred.raw_generations.append(text)
                ans = normalize_answer(extract_answer(text))
                if not ans:
                    continue
                if ans not in counts:
                    pred.answers.append(ans)
                counts[ans] = counts.get(ans, 0) + 1
            if k == 1:
                break
    except EndpointError as exc:
        pred.error = str(exc)
    if rank_by == RANK_FREQUENCY:
        order = {ans: i for i, ans in enumerate(pred.answers)}
        pred.answers.sort(key=lambda a: (-counts[a], order[a]))
    pred.answers = pred.answers[:k]
    pred.short = pred.error is None and len(pred.answers) < k
    pred.latency = time.monotonic() - started
    return pred


def read_prediction_ids(path) -> set[str]:
    done = set()
    path = Path(path)
    if not path.is_file():
        return done
    with path.open(encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            if "_meta" not in obj:
                done.add(obj["id"])
    return done


def run_batch(records: list[dict], backend, k: int, cfg: GenerationConfig,
              out_path, concurrency: int = 1, rank_by: str = RANK_FIRST) -> dict:
    """One prediction per record, appended to a resumable JSONL file.

    Records already present in the output are skipped. Failures become
    per-record error markers; the batch never aborts. Raises EndpointError
    only when every attempted record failed.
    """
    if concurrency < 1:
        raise ValidationError(f"concurrency must be >= 1, got {concurrency}")
    out_path = Path(out_path)
    done = read_prediction_ids(out_path)
    pending = [r for r in records if r["id"] not in done]
    new_file = not out_path.is_file()

    errors = 0
    with out_path.open("a", encoding="utf-8") as fh:
        if new_file:
            meta = {"_meta": {"schema": "gskgc-predictions-v1", "k": k,
                              "mode": cfg.mode}}
            fh.write(json.dumps(meta, sort_keys=True) + "\n")
        def work(rec):
            return predict_top_k(backend, rec["id"], rec["prompt"], k, cfg,
                                 rank_by=rank_by)

        with ThreadPoolExecutor(max_workers=concurrency) as pool:
            for pred in pool.map(work, pending):
                if pred.error is not None:
                    errors += 1
                fh.write(json.dumps(pred.to_json_obj(), ensure_ascii=False) + "\n")
                fh.flush()
    if pending and errors == len(pending):
        raise EndpointError(f"all {errors} attempted records failed; "
                            f"see error markers in {out_path}")
    return {"total": len(records), "skipped": len(records) - len(pending),
            "attempted": len(pending), "errors": errors}


def parse_mock_spec(spec: str, gold: dict[str, str], seed: int = 0) -> MockOracle:
    """Mock spec grammar: `perfect` or `corrupt:<rate>`."""
    if spec == "perfect":
        return MockOracle(gold)
    if spec.startswith("corrupt:"):
        try:
            rate = float(spec.split(":", 1)[1])
        except ValueError:
            raise ValidationError(f"bad corruption rate in mock spec {spec!r}")
        return MockOracle(gold, corruption=rate, seed=seed)
    raise ValidationError(f"unknown mock spec {spec!r}; use perfect or corrupt:<rate>")
