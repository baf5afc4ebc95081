"""Command line entry points: finetune a model, serve it over HTTP."""

from __future__ import annotations

import argparse
import sys

from .finetune import DEFAULT_BATCH, DEFAULT_LR, finetune
from .server import ServeConfig, serve


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hf-backend",
        description="Fine-tune a causal LM on a wrapped-record corpus and "
                    "serve it over the generation wire protocol.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    ft = sub.add_parser("finetune", help="train a model on a corpus")
    ft.add_argument("--corpus", required=True,
                    help="training corpus, one record per line")
    ft.add_argument("--base", default="gpt2",
                    help="pretrained checkpoint name/path, or 'tiny' for a "
                         "small from-scratch model (default: gpt2)")
    ft.add_argument("--epochs", type=int, required=True,
                    help="training epochs (must be >= 1)")
    ft.add_argument("--out", required=True, help="output model directory")
    ft.add_argument("--lr", type=float, default=DEFAULT_LR,
                    help=f"AdamW learning rate (default: {DEFAULT_LR})")
    ft.add_argument("--batch-size", type=int, default=DEFAULT_BATCH,
                    help=f"minibatch size (default: {DEFAULT_BATCH})")
    ft.add_argument("--seed", type=int, default=0,
                    help="seed for init, shuffling and dropout (default: 0)")
    ft.add_argument("--device", default="cpu",
                    help="torch device (default: cpu)")

    sv = sub.add_parser("serve", help="serve a model directory over HTTP")
    sv.add_argument("--model-dir", required=True,
                    help="directory written by finetune")
    sv.add_argument("--port", type=int, required=True,
                    help="listening port (1024..65535)")
    sv.add_argument("--host", default="127.0.0.1",
                    help="bind address (default: 127.0.0.1)")
    sv.add_argument("--max-concurrent", type=int, default=4,
                    help="generate requests sampling at once (default: 4)")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "finetune":
        try:
            log = finetune(args.corpus, args.base, args.epochs, args.out,
                           learning_rate=args.lr, batch_size=args.batch_size,
                           seed=args.seed, device=args.device, progress=print)
        except (ValueError, FileNotFoundError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1
        print(f"saved {log['model_name']} to {args.out} "
              f"(final loss {log['losses'][-1]:.4f})")
        return 0
    if args.command == "serve":
        try:
            config = ServeConfig(model_dir=args.model_dir, port=args.port,
                                 max_concurrent=args.max_concurrent,
                                 host=args.host)
        except ValueError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1
        serve(config)
        return 0
    raise AssertionError(f"unhandled command {args.command!r}")


if __name__ == "__main__":
    sys.exit(main())
