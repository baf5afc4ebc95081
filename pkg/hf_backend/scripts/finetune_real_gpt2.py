"""Fine-tune a real pretrained GPT-2 on a wrapped-record corpus.

Optional, long-running, and deliberately not part of the test suite: it
needs the pretrained checkpoint (downloaded from the model hub on first
use) and realistically a GPU. The tiny from-scratch base covers every
automated check; this script exists to reproduce the full-scale result
that the toolkit's wrapper-error metric was designed around:

* a small corpus after one epoch leaves a measurable parse error,
* a 50k-line corpus after six epochs drives it to 0.00%.

Typical run, followed by measurement with the polling CLI:

    python3 scripts/finetune_real_gpt2.py --corpus train50k.txt \
        --out gpt2-ft --epochs 6 --device cuda
    hf-backend serve --model-dir gpt2-ft --port 8731 &
    lmpoll generate --backend remote:http://127.0.0.1:8731 \
        --prompt "review:" --n 10000 --seed 1 --temperature 1.0 \
        --out samples.txt
    lmpoll parse --format review-stars --in samples.txt
"""

import argparse
import sys

from hf_backend.finetune import finetune


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--corpus", required=True)
    parser.add_argument("--out", required=True)
    parser.add_argument("--base", default="gpt2",
                        help="pretrained checkpoint (default: gpt2)")
    parser.add_argument("--epochs", type=int, default=6)
    parser.add_argument("--lr", type=float, default=5e-5)
    parser.add_argument("--batch-size", type=int, default=8)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--device", default="cuda",
                        help="torch device (default: cuda)")
    args = parser.parse_args(argv)
    log = finetune(args.corpus, args.base, args.epochs, args.out,
                   learning_rate=args.lr, batch_size=args.batch_size,
                   seed=args.seed, device=args.device, progress=print)
    print(f"saved {log['model_name']} to {args.out}")
    print("serve it with: hf-backend serve --model-dir "
          f"{args.out} --port 8731")
    return 0


if __name__ == "__main__":
    sys.exit(main())
