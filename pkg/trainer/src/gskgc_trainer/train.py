"""Fine-tuning loop: frozen base, trainable adapters, answer-token loss."""

import csv
import json
import logging
import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import torch

from gskgc_trainer import TrainerError
from gskgc_trainer.data import encode_dataset, load_records
from gskgc_trainer.lora import attach_adapters, save_adapter
from gskgc_trainer.model import BUILTIN_TINY, build_model_and_tokenizer

logger = logging.getLogger(__name__)


@dataclass
class TrainerConfig:
    rank: int = 8
    alpha: float = 16.0
    dropout: float = 0.05
    learning_rate: float = 1e-4
    epochs: float = 1.0
    base_model: str = BUILTIN_TINY
    max_seq_len: int = 512
    batch_size: int = 1
    seed: int = 0
    device: str = "cpu"
    target_modules: tuple = ("q_proj", "v_proj")

    def __post_init__(self):
        if self.rank < 1:
            raise TrainerError(f"rank must be >= 1, got {self.rank}")
        if self.epochs <= 0:
            raise TrainerError(f"epochs must be > 0, got {self.epochs}")
        if self.batch_size < 1:
            raise TrainerError(f"batch size must be >= 1, got {self.batch_size}")

    def to_json_obj(self) -> dict:
        obj = asdict(self)
        obj["target_modules"] = list(self.target_modules)
        return obj


@dataclass
class TrainResult:
    losses: list = field(default_factory=list)
    n_records: int = 0
    n_steps: int = 0
    trainable_params: int = 0
    seconds: float = 0.0
    adapter_dir: str = ""


def _batches(examples, batch_size, pad_id):
    for start in range(0, len(examples), batch_size):
        chunk = examples[start:start + batch_size]
        width = max(len(ids) for ids, _ in chunk)
        input_ids, labels, attention = [], [], []
        for ids, labs in chunk:
            pad = width - len(ids)
            input_ids.append(ids + [pad_id] * pad)
            labels.append(labs + [-100] * pad)
            attention.append([1] * len(ids) + [0] * pad)
        yield (torch.tensor(input_ids), torch.tensor(labels),
               torch.tensor(attention))


def _resolve_device(name: str) -> torch.device:
    if name == "auto":
        return torch.device("cuda" if torch.cuda.is_available() else "cpu")
    return torch.device(name)


def finetune(data_path, cfg: TrainerConfig, out_dir) -> TrainResult:
    """Train adapters on the trainer JSONL; save weights and a loss CSV.

    Supervision is masked to the answer span of every example, so the loss
    never rewards reproducing the prompt.
    """
    records = load_records(data_path)
    device = _resolve_device(cfg.device)
    model, tokenizer = build_model_and_tokenizer(cfg.base_model,
                                                 cfg.max_seq_len, cfg.seed)
    examples = encode_dataset(tokenizer, records, cfg.max_seq_len)
    wrapped = attach_adapters(model, cfg.rank, cfg.alpha, cfg.dropout,
                              tuple(cfg.target_modules))
    model.to(device)
    trainable = [p for p in model.parameters() if p.requires_grad]
    n_trainable = sum(p.numel() for p in trainable)
    logger.info("adapters on %d modules, %d trainable / %d total params",
                wrapped, n_trainable,
                sum(p.numel() for p in model.parameters()))

    # fractional epochs: proportionally many leading examples on the last pass
    torch.manual_seed(cfg.seed + 1)
    total_steps_examples = int(round(cfg.epochs * len(examples)))
    if total_steps_examples == 0:
        raise TrainerError("epochs * records rounds to zero training examples")
    schedule = []
    while len(schedule) < total_steps_examples:
        schedule.extend(examples[:total_steps_examples - len(schedule)])

    optimizer = torch.optim.AdamW(trainable, lr=cfg.learning_rate)
    losses = []
    started = time.monotonic()
    model.train()
    for input_ids, labels, attention in _batches(schedule, cfg.batch_size,
                                                 tokenizer.pad_id):
        out = model(input_ids=input_ids.to(device),
                    attention_mask=attention.to(device),
                    labels=labels.to(device))
        out.loss.backward()
        optimizer.step()
        optimizer.zero_grad()
        losses.append(float(out.loss.detach()))
    seconds = time.monotonic() - started

    out_dir = Path(out_dir)
    save_adapter(model, out_dir, {
        "base_model": cfg.base_model,
        "rank": cfg.rank,
        "alpha": cfg.alpha,
        "dropout": cfg.dropout,
        "target_modules": list(cfg.target_modules),
        "trainable_params": n_trainable,
    })
    with (out_dir / "loss_log.csv").open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step", "epoch", "loss"])
        steps_per_epoch = math.ceil(len(examples) / cfg.batch_size)
        for i, loss in enumerate(losses):
            writer.writerow([i, round(i / steps_per_epoch, 4), f"{loss:.6f}"])
    with (out_dir / "train_config.json").open("w", encoding="utf-8") as fh:
        json.dump(cfg.to_json_obj(), fh, indent=2, sort_keys=True)
        fh.write("\n")

    logger.info("trained %d steps in %.1fs; loss %.4f -> %.4f",
                len(losses), seconds, losses[0], losses[-1])
    return TrainResult(losses=losses, n_records=len(records),
                       n_steps=len(losses), trainable_params=n_trainable,
                       seconds=seconds, adapter_dir=str(out_dir))
