"""Command line: `detector-trainer train ...` / `detector-trainer predict ...`."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .data import FormatError
from .predict import predict_file
from .train import TrainConfig, TrainerError, train


def _cmd_train(args: argparse.Namespace) -> int:
    cfg = TrainConfig(
        base_model_id=args.base_model,
        learning_rate=args.lr,
        batch_size=args.batch_size,
        epochs=args.epochs,
        dropout=args.dropout,
        seed=args.seed,
    )
    out_dir = train(args.train, args.dev, cfg, args.out)
    print((Path(out_dir) / "training.log").read_text(encoding="utf-8"), end="")
    return 0


def _cmd_predict(args: argparse.Namespace) -> int:
    n = predict_file(args.model, args.corpus, args.out)
    print(f"wrote {n} labels to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="detector-trainer",
        description="Binary needs-normalization token labeler.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", metavar="command", required=True)

    p_train = sub.add_parser("train", help="fine-tune the labeler")
    p_train.add_argument("train", help="training corpus (raw<TAB>norm)")
    p_train.add_argument("dev", help="development corpus for checkpoint selection")
    p_train.add_argument("--out", required=True, help="model output directory")
    p_train.add_argument("--base-model", default=TrainConfig.base_model_id)
    p_train.add_argument("--lr", type=float, default=TrainConfig.learning_rate)
    p_train.add_argument("--batch-size", type=int, default=TrainConfig.batch_size)
    p_train.add_argument("--epochs", type=int, default=TrainConfig.epochs)
    p_train.add_argument("--dropout", type=float, default=TrainConfig.dropout)
    p_train.add_argument("--seed", type=int, default=TrainConfig.seed)
    p_train.set_defaults(func=_cmd_train)

    p_pred = sub.add_parser("predict", help="emit a label file for a corpus")
    p_pred.add_argument("model", help="model directory from `train`")
    p_pred.add_argument("corpus", help="corpus to label")
    p_pred.add_argument("--out", required=True, help="label file path")
    p_pred.set_defaults(func=_cmd_predict)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (FormatError, TrainerError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
