"""Rank-r adapter layers: W' x = W x + (alpha / r) * B A x, with A Gaussian
and B zero at init so training starts from the base model's function."""

import json
from pathlib import Path

import torch
from torch import nn

from gskgc_trainer import TrainerError


class LoraLinear(nn.Module):
    def __init__(self, base: nn.Linear, rank: int, alpha: float, dropout: float):
        super().__init__()
        if rank >= min(base.in_features, base.out_features):
            raise TrainerError(
                f"adapter rank {rank} must be well below the adapted matrix "
                f"size {base.in_features}x{base.out_features}")
        self.base = base
        self.lora_a = nn.Parameter(torch.empty(rank, base.in_features))
        self.lora_b = nn.Parameter(torch.zeros(base.out_features, rank))
        nn.init.normal_(self.lora_a, std=0.02)
        self.scaling = alpha / rank
        self.dropout = nn.Dropout(dropout)

    def forward(self, x):
        delta = self.dropout(x) @ self.lora_a.T @ self.lora_b.T
        return self.base(x) + self.scaling * delta


def attach_adapters(model: nn.Module, rank: int, alpha: float, dropout: float,
                    target_modules: tuple[str, ...]) -> int:
    """Freeze the whole model, then wrap every targeted nn.Linear."""
    for p in model.parameters():
        p.requires_grad_(False)
    wrapped = 0
    for module in model.modules():
        for child_name, child in list(module.named_children()):
            if child_name in target_modules and isinstance(child, nn.Linear):
                setattr(module, child_name,
                        LoraLinear(child, rank, alpha, dropout))
                wrapped += 1
    if wrapped == 0:
        raise TrainerError(
            f"no modules named {target_modules} found on the base model")
    return wrapped


def adapter_state(model: nn.Module) -> dict:
    return {name: p.detach().cpu() for name, p in model.named_parameters()
            if "lora_" in name}


def save_adapter(model: nn.Module, out_dir, config: dict) -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    torch.save(adapter_state(model), out_dir / "adapter_weights.pt")
    with (out_dir / "adapter_config.json").open("w", encoding="utf-8") as fh:
        json.dump(config, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return out_dir


def load_adapter(model: nn.Module, adapter_dir) -> int:
    state = torch.load(Path(adapter_dir) / "adapter_weights.pt",
                       weights_only=True)
    missing, unexpected = model.load_state_dict(state, strict=False)
    if unexpected:
        raise TrainerError(f"adapter weights do not match the model: {unexpected}")
    return len(state)
