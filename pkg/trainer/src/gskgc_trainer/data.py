"""Trainer JSONL loading and byte-level tokenization.

The byte tokenizer keeps the driver self-contained: ids 0..255 are raw UTF-8
bytes, followed by BOS/EOS/PAD specials. Any producer of the documented JSONL
schema can feed it.
"""

import json
import logging
from pathlib import Path

from gskgc_trainer import TrainerError

logger = logging.getLogger(__name__)

REQUIRED_KEYS = ("instruction", "input", "output")


def load_records(path) -> list[dict]:
    """Read {"instruction","input","output"} rows; metadata header lines are skipped."""
    path = Path(path)
    if not path.is_file():
        raise TrainerError(f"training file not found: {path}")
    records = []
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise TrainerError(f"{path}:{lineno}: invalid JSON ({exc})")
            if "_meta" in obj:
                continue
            missing = [k for k in REQUIRED_KEYS if k not in obj]
            if missing:
                raise TrainerError(
                    f"{path}:{lineno}: schema mismatch, missing keys {missing}")
            records.append(obj)
    if not records:
        raise TrainerError(f"{path}: no training records")
    return records


class ByteTokenizer:
    """UTF-8 bytes plus BOS/EOS/PAD; vocab size 259."""

    bos_id = 256
    eos_id = 257
    pad_id = 258
    vocab_size = 259

    def encode(self, text: str) -> list[int]:
        return list(text.encode("utf-8"))

    def decode(self, ids) -> str:
        data = bytes(i for i in ids if 0 <= i < 256)
        return data.decode("utf-8", errors="replace")


def encode_example(tokenizer, prompt: str, answer: str, max_len: int):
    """Token ids plus labels with the prompt span masked out.

    The supervised span is the answer (with its separating space) plus EOS;
    everything before it carries the ignore label. Overlong prompts lose
    tokens from their tail so the answer always survives.
    """
    prompt_ids = [tokenizer.bos_id] + tokenizer.encode(prompt)
    answer_ids = tokenizer.encode(" " + answer) + [tokenizer.eos_id]
    if len(answer_ids) + 1 >= max_len:
        raise TrainerError(
            f"answer alone exceeds max sequence length {max_len}")
    truncated = False
    room = max_len - len(answer_ids)
    if len(prompt_ids) > room:
        prompt_ids = prompt_ids[:room]
        truncated = True
    ids = prompt_ids + answer_ids
    labels = [-100] * len(prompt_ids) + answer_ids
    return ids, labels, truncated


def encode_dataset(tokenizer, records: list[dict], max_len: int):
    examples = []
    n_truncated = 0
    for rec in records:
        prompt = rec["instruction"]
        if rec.get("input"):
            prompt = f"{prompt}\n{rec['input']}"
        ids, labels, truncated = encode_example(tokenizer, prompt,
                                                rec["output"], max_len)
        n_truncated += truncated
        examples.append((ids, labels))
    if n_truncated:
        logger.warning("truncated %d/%d overlong sequences to %d tokens",
                       n_truncated, len(records), max_len)
    return examples
