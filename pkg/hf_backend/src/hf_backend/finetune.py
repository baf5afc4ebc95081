"""Fine-tune a causal LM on a wrapped-record corpus.

One training example per corpus line, framed as BOS + line + EOS with a
shared boundary token, so the server can condition every generation on
BOS + prompt and stop at EOS. Two kinds of base model are accepted:

* ``tiny`` builds a small GPT-2-shaped model from scratch with a
  word-level vocabulary drawn from the corpus itself. It trains in
  seconds on a CPU and exists so the serving path and the wire protocol
  can be exercised without downloading weights.
* anything else is treated as a pretrained checkpoint (a local directory
  or a model-hub name such as ``gpt2``) and fine-tuned with its own
  subword tokenizer. Hardware or download failures from that path are
  deliberately not caught: they surface verbatim.

The training loop is a plain epoch/minibatch loop with AdamW at the
ecosystem-default learning rate; every hyperparameter that affects the
result is recorded in ``training_log.json`` next to the weights, along
with the mean per-token loss of each epoch.
"""

from __future__ import annotations

import json
import random
from pathlib import Path

import torch
from transformers import GPT2Config, GPT2LMHeadModel
from transformers.utils import logging as hf_logging

from .rng import child_seed
from .tokenizer import WordTokenizer

# checkpoint saves and loads are sub-second here; their progress bars and
# loss-plumbing notices are pure noise in training logs and server output
hf_logging.disable_progress_bar()
hf_logging.set_verbosity_error()

LOG_FILE = "training_log.json"

TINY_EMBED = 64
TINY_LAYERS = 2
TINY_HEADS = 4
TINY_POSITIONS = 512

DEFAULT_LR = 5e-5
DEFAULT_BATCH = 8


def load_corpus_lines(corpus_path: str | Path) -> list[str]:
    """Read a one-record-per-line corpus, skipping blank lines."""
    path = Path(corpus_path)
    if not path.is_file():
        raise FileNotFoundError(f"corpus not found: {path}")
    with open(path, encoding="utf-8") as fh:
        lines = [line.rstrip("\n") for line in fh]
    lines = [line for line in lines if line.strip()]
    if not lines:
        raise ValueError(f"corpus is empty: {path}")
    return lines


def _build_tiny(lines: list[str]) -> tuple[GPT2LMHeadModel, WordTokenizer]:
    tokenizer = WordTokenizer.train(lines)
    config = GPT2Config(
        vocab_size=len(tokenizer),
        n_positions=TINY_POSITIONS,
        n_embd=TINY_EMBED,
        n_layer=TINY_LAYERS,
        n_head=TINY_HEADS,
        bos_token_id=tokenizer.eol_id,
        eos_token_id=tokenizer.eol_id,
    )
    return GPT2LMHeadModel(config), tokenizer


def _load_pretrained(base: str):
    from transformers import AutoModelForCausalLM, AutoTokenizer

    model = AutoModelForCausalLM.from_pretrained(base)
    tokenizer = AutoTokenizer.from_pretrained(base)
    return model, tokenizer


def _encode_lines(lines: list[str], tokenizer, boundary_id: int,
                  max_positions: int) -> list[list[int]]:
    examples = []
    budget = max_positions - 2
    for line in lines:
        ids = tokenizer.encode(line)[:budget]
        examples.append([boundary_id] + ids + [boundary_id])
    return examples


def _batch_tensors(batch: list[list[int]], pad_id: int, device: str):
    width = max(len(ids) for ids in batch)
    input_ids = torch.full((len(batch), width), pad_id, dtype=torch.long)
    attention = torch.zeros((len(batch), width), dtype=torch.long)
    labels = torch.full((len(batch), width), -100, dtype=torch.long)
    for row, ids in enumerate(batch):
        span = len(ids)
        input_ids[row, :span] = torch.tensor(ids, dtype=torch.long)
        attention[row, :span] = 1
        labels[row, :span] = input_ids[row, :span]
    return (input_ids.to(device), attention.to(device), labels.to(device))


def finetune(corpus_path: str | Path, base: str, epochs: int,
             output_dir: str | Path, *, learning_rate: float = DEFAULT_LR,
             batch_size: int = DEFAULT_BATCH, seed: int = 0,
             device: str = "cpu", progress=None) -> dict:
    """Train `base` on the corpus and write a servable model directory.

    Returns the training log (also saved as training_log.json). `progress`,
    if given, is called with one line of text per epoch.
    """
    if epochs < 1:
        raise ValueError("no training performed")
    if batch_size < 1:
        raise ValueError(f"batch size must be >= 1, got {batch_size}")
    lines = load_corpus_lines(corpus_path)

    torch.manual_seed(child_seed(seed, 0))
    if base == "tiny":
        model, tokenizer = _build_tiny(lines)
    else:
        model, tokenizer = _load_pretrained(base)
    model = model.to(device)

    boundary_id = model.config.eos_token_id
    max_positions = getattr(model.config, "n_positions", 1024)
    examples = _encode_lines(lines, tokenizer, boundary_id, max_positions)

    optimizer = torch.optim.AdamW(model.parameters(), lr=learning_rate)
    model.train()
    losses = []
    order = list(range(len(examples)))
    for epoch in range(epochs):
        random.Random(child_seed(seed, 1 + epoch)).shuffle(order)
        loss_sum = 0.0
        target_count = 0
        for start in range(0, len(order), batch_size):
            batch = [examples[i] for i in order[start:start + batch_size]]
            input_ids, attention, labels = _batch_tensors(
                batch, boundary_id, device)
            out = model(input_ids=input_ids, attention_mask=attention,
                        labels=labels)
            optimizer.zero_grad()
            out.loss.backward()
            optimizer.step()
            # the model averages over predicted positions (one fewer than
            # the unpadded length), so weight by that count to aggregate
            targets = sum(len(ids) - 1 for ids in batch)
            loss_sum += float(out.loss.detach()) * targets
            target_count += targets
        losses.append(loss_sum / target_count)
        if progress is not None:
            progress(f"epoch {epoch + 1}/{epochs}  loss {losses[-1]:.4f}")

    out_dir = Path(output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    model.save_pretrained(out_dir)
    if isinstance(tokenizer, WordTokenizer):
        tokenizer.save(out_dir)
    else:
        tokenizer.save_pretrained(out_dir)

    log = {
        "model_name": f"{base}-ft-{epochs}ep",
        "base": base,
        "corpus": Path(corpus_path).name,
        "lines": len(lines),
        "epochs": epochs,
        "learning_rate": learning_rate,
        "batch_size": batch_size,
        "seed": seed,
        "device": device,
        "vocab_size": int(model.config.vocab_size),
        "losses": losses,
    }
    with open(out_dir / LOG_FILE, "w", encoding="utf-8") as fh:
        json.dump(log, fh, indent=2)
        fh.write("\n")
    return log


def load_model(model_dir: str | Path):
    """Load a directory written by finetune: (model, tokenizer, name)."""
    from transformers import AutoModelForCausalLM

    path = Path(model_dir)
    if not path.is_dir():
        raise FileNotFoundError(f"model directory not found: {path}")
    model = AutoModelForCausalLM.from_pretrained(path).eval()
    if WordTokenizer.exists(path):
        tokenizer = WordTokenizer.load(path)
    else:
        from transformers import AutoTokenizer

        tokenizer = AutoTokenizer.from_pretrained(path)
    name = path.name
    log_path = path / LOG_FILE
    if log_path.is_file():
        with open(log_path, encoding="utf-8") as fh:
            name = json.load(fh).get("model_name", name)
    return model, tokenizer, name
