"""Whitespace word-level tokenizer for models trained from scratch.

The record grammars keep their structural markers ("review:", "stars:",
"--") as whole whitespace-delimited words, so a word-level vocabulary is
the natural unit for a small from-scratch model: the wrapper tokens stay
atomic and the model only has to learn their order. Vocabulary files are
plain JSON so a model directory stays inspectable.

Pretrained checkpoints bring their own subword tokenizer and never touch
this class; the server picks whichever the model directory contains.
"""

from __future__ import annotations

import json
from pathlib import Path

VOCAB_FILE = "word_vocab.json"

UNK = "<unk>"
EOL = "<eol>"


class WordTokenizer:
    """Closed whitespace vocabulary with unknown and end-of-line markers."""

    def __init__(self, words: list[str]):
        if words[:2] != [UNK, EOL]:
            raise ValueError("vocabulary must start with the reserved markers")
        if len(set(words)) != len(words):
            raise ValueError("vocabulary contains duplicate words")
        self.words = list(words)
        self.ids = {w: i for i, w in enumerate(self.words)}
        self.unk_id = self.ids[UNK]
        self.eol_id = self.ids[EOL]

    def __len__(self) -> int:
        return len(self.words)

    @classmethod
    def train(cls, lines: list[str]) -> "WordTokenizer":
        """Build the vocabulary from corpus lines, first-seen order."""
        words = [UNK, EOL]
        seen = set(words)
        for line in lines:
            for token in line.split():
                if token not in seen:
                    seen.add(token)
                    words.append(token)
        return cls(words)

    def encode(self, text: str) -> list[int]:
        return [self.ids.get(t, self.unk_id) for t in text.split()]

    def decode(self, ids: list[int]) -> str:
        return " ".join(self.words[i] for i in ids if i != self.eol_id)

    def save(self, model_dir: str | Path) -> None:
        path = Path(model_dir) / VOCAB_FILE
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.words, fh, ensure_ascii=False)
            fh.write("\n")

    @classmethod
    def load(cls, model_dir: str | Path) -> "WordTokenizer":
        path = Path(model_dir) / VOCAB_FILE
        with open(path, encoding="utf-8") as fh:
            return cls(json.load(fh))

    @staticmethod
    def exists(model_dir: str | Path) -> bool:
        return (Path(model_dir) / VOCAB_FILE).is_file()
