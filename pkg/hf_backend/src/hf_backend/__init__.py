"""Transformer fine-tuning and serving for the generation wire protocol.

The package has two halves: `finetune` trains a causal LM on a
one-record-per-line corpus and writes a model directory, and `server`
exposes such a directory over HTTP as POST /generate and GET /health.
A polling client talks to the result exactly as it talks to any other
generation backend; nothing here is imported by the client and nothing
of the client is imported here.
"""

from .finetune import finetune, load_model
from .server import ModelState, ServeConfig, create_app, sample_completion, serve
from .tokenizer import WordTokenizer

__version__ = "0.1.0"

__all__ = [
    "ModelState",
    "ServeConfig",
    "WordTokenizer",
    "create_app",
    "finetune",
    "load_model",
    "sample_completion",
    "serve",
    "__version__",
]
