"""Command line driver.

    gskgc-trainer finetune --data train.jsonl --out adapters/run1
    gskgc-trainer dump-config
"""

import argparse
import json
import logging
import sys

from gskgc_trainer import TrainerError
from gskgc_trainer.train import TrainerConfig, finetune


def build_parser():
    parser = argparse.ArgumentParser(prog="gskgc-trainer", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    ft = sub.add_parser("finetune", help="Train adapters on a trainer JSONL file.")
    ft.add_argument("--data", required=True, help="Trainer JSONL input")
    ft.add_argument("--out", required=True, help="Adapter output directory")
    _add_config_args(ft)

    dc = sub.add_parser("dump-config", help="Print the resolved config as JSON.")
    _add_config_args(dc)
    return parser


def _add_config_args(p):
    defaults = TrainerConfig()
    p.add_argument("--rank", type=int, default=defaults.rank)
    p.add_argument("--alpha", type=float, default=defaults.alpha)
    p.add_argument("--dropout", type=float, default=defaults.dropout)
    p.add_argument("--lr", type=float, default=defaults.learning_rate)
    p.add_argument("--epochs", type=float, default=defaults.epochs)
    p.add_argument("--base-model", default=defaults.base_model)
    p.add_argument("--max-seq-len", type=int, default=defaults.max_seq_len)
    p.add_argument("--batch-size", type=int, default=defaults.batch_size)
    p.add_argument("--seed", type=int, default=defaults.seed)
    p.add_argument("--device", default=defaults.device)
    p.add_argument("--target-modules", default=",".join(defaults.target_modules))


def config_from_args(args) -> TrainerConfig:
    return TrainerConfig(
        rank=args.rank,
        alpha=args.alpha,
        dropout=args.dropout,
        learning_rate=args.lr,
        epochs=args.epochs,
        base_model=args.base_model,
        max_seq_len=args.max_seq_len,
        batch_size=args.batch_size,
        seed=args.seed,
        device=args.device,
        target_modules=tuple(m for m in args.target_modules.split(",") if m),
    )


def main(argv=None):
    logging.basicConfig(level=logging.INFO,
                        format="%(asctime)s %(levelname)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
        if args.command == "dump-config":
            print(json.dumps(cfg.to_json_obj(), indent=2, sort_keys=True))
            return 0
        result = finetune(args.data, cfg, args.out)
        print(f"records: {result.n_records}  steps: {result.n_steps}  "
              f"trainable params: {result.trainable_params}")
        print(f"loss: {result.losses[0]:.4f} -> {result.losses[-1]:.4f} "
              f"in {result.seconds:.1f}s")
        print(f"adapter saved to {result.adapter_dir}")
        return 0
    except TrainerError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
