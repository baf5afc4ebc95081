"""HTTP serving of a fine-tuned model over the generation wire protocol.

Two endpoints, shared verbatim with the polling client:

* ``GET /health`` -> 200 ``{"status": "ok", "model": <name>}``
* ``POST /generate`` with ``{"prompt", "n", "max_tokens", "temperature",
  "seed"}`` -> 200 ``{"model": <name>, "texts": [<n completion strings>]}``

Both answer 503 ``{"error": ...}`` until the model has finished loading
and /generate answers 400 ``{"error": ...}`` for any invalid body, so a
client can tell "come back later" from "fix your request".

Completion i of a request draws from a torch generator seeded with the
i-th child stream of the request seed; nothing else about the server is
stochastic and the weights are immutable while serving, so identical
request bodies produce identical responses on the same model. Decoding
is pure temperature sampling (temperature 0 meaning argmax); there is
deliberately no nucleus or top-k filtering, keeping the sampling model
identical to the in-process backends a poll may be compared against.

At most ``max_concurrent`` requests sample at once; later arrivals
queue on a semaphore. Completions are the characters to append to the
prompt: the server decodes prompt + continuation and slices the decoded
prompt off the front, which keeps whitespace conventions tokenizer-
agnostic.
"""

from __future__ import annotations

import json
import math
import threading
from dataclasses import dataclass
from pathlib import Path

import torch
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from starlette.concurrency import run_in_threadpool

from .finetune import load_model
from .rng import MASK64, child_seed

MAX_SEED = MASK64


@dataclass
class ServeConfig:
    """Where the model lives and how the server listens."""

    model_dir: str
    port: int
    max_concurrent: int = 4
    host: str = "127.0.0.1"

    def __post_init__(self):
        if not (1024 <= self.port <= 65535):
            raise ValueError(f"port must be in 1024..65535, got {self.port}")
        if self.max_concurrent < 1:
            raise ValueError(
                f"max_concurrent must be >= 1, got {self.max_concurrent}"
            )


class ModelState:
    """Mutable holder for the served model; starts empty (503 territory)."""

    def __init__(self):
        self.model = None
        self.tokenizer = None
        self.name = None
        self.error = None

    @property
    def loaded(self) -> bool:
        return self.model is not None

    def load(self, model_dir: str | Path) -> None:
        model, tokenizer, name = load_model(model_dir)
        self.model = model
        self.tokenizer = tokenizer
        self.name = name


@torch.no_grad()
def sample_completion(model, tokenizer, prompt: str, max_tokens: int,
                      temperature: float, seed: int) -> str:
    """One seeded completion of `prompt`; the returned text excludes it."""
    eos_id = model.config.eos_token_id
    max_positions = getattr(model.config, "n_positions", 1024)
    prompt_ids = tokenizer.encode(prompt)
    # every training example was framed as BOS + line + EOS, so condition
    # on BOS + prompt to stay on the training distribution
    context = [eos_id] + prompt_ids
    context = context[-max_positions:]
    generator = torch.Generator().manual_seed(seed)

    new_ids: list[int] = []
    length = len(context)
    step_input = torch.tensor([context], dtype=torch.long)
    past = None
    for _ in range(max_tokens):
        if length >= max_positions:
            break  # truncated record; the parser will reject it
        out = model(input_ids=step_input, past_key_values=past, use_cache=True)
        past = out.past_key_values
        logits = out.logits[0, -1, :].float()
        if temperature == 0.0:
            next_id = int(torch.argmax(logits))
        else:
            probs = torch.softmax(logits / temperature, dim=-1)
            next_id = int(torch.multinomial(probs, 1, generator=generator))
        if next_id == eos_id:
            break
        new_ids.append(next_id)
        length += 1
        step_input = torch.tensor([[next_id]], dtype=torch.long)

    full = tokenizer.decode(prompt_ids + new_ids)
    head = tokenizer.decode(prompt_ids)
    return full[len(head):]


class _BadRequest(ValueError):
    pass


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise _BadRequest(message)


def _validate_body(body) -> tuple[str, int, int, float, int]:
    _require(isinstance(body, dict), "body must be a JSON object")
    for field in ("prompt", "n", "max_tokens", "temperature", "seed"):
        _require(field in body, f"missing field {field!r}")
    prompt = body["prompt"]
    _require(isinstance(prompt, str), "prompt must be a string")
    _require("\n" not in prompt and "\r" not in prompt,
             "prompt must be a single line")
    n = body["n"]
    _require(isinstance(n, int) and not isinstance(n, bool) and n >= 1,
             "n must be a positive integer")
    max_tokens = body["max_tokens"]
    _require(isinstance(max_tokens, int) and not isinstance(max_tokens, bool)
             and max_tokens >= 1, "max_tokens must be a positive integer")
    temperature = body["temperature"]
    _require(isinstance(temperature, (int, float))
             and not isinstance(temperature, bool)
             and math.isfinite(temperature) and temperature >= 0,
             "temperature must be a finite number >= 0")
    seed = body["seed"]
    _require(isinstance(seed, int) and not isinstance(seed, bool)
             and 0 <= seed <= MAX_SEED, "seed must be an integer in [0, 2**64)")
    return prompt, n, max_tokens, float(temperature), seed


def create_app(state: ModelState, max_concurrent: int = 4) -> FastAPI:
    """Wire-protocol app around `state`; loading may finish after startup."""
    app = FastAPI()
    gate = threading.Semaphore(max_concurrent)

    def _unloaded() -> JSONResponse:
        message = "no model loaded"
        if state.error:
            message = f"model failed to load: {state.error}"
        return JSONResponse({"error": message}, status_code=503)

    @app.get("/health")
    def health():
        if not state.loaded:
            return _unloaded()
        return {"status": "ok", "model": state.name}

    def _generate_texts(prompt, n, max_tokens, temperature, seed):
        with gate:
            return [
                sample_completion(state.model, state.tokenizer, prompt,
                                  max_tokens, temperature,
                                  child_seed(seed, i))
                for i in range(n)
            ]

    @app.post("/generate")
    async def generate(request: Request):
        if not state.loaded:
            return _unloaded()
        try:
            body = await request.json()
        except (json.JSONDecodeError, UnicodeDecodeError):
            return JSONResponse({"error": "body must be valid JSON"},
                                status_code=400)
        try:
            prompt, n, max_tokens, temperature, seed = _validate_body(body)
        except _BadRequest as exc:
            return JSONResponse({"error": str(exc)}, status_code=400)
        texts = await run_in_threadpool(
            _generate_texts, prompt, n, max_tokens, temperature, seed)
        return {"model": state.name, "texts": texts}

    return app


def serve(config: ServeConfig) -> None:
    """Run the server; the model loads in the background (503 until done)."""
    import uvicorn

    state = ModelState()
    app = create_app(state, max_concurrent=config.max_concurrent)

    def _load():
        try:
            state.load(config.model_dir)
        except Exception as exc:  # surfaced through 503 bodies
            state.error = f"{type(exc).__name__}: {exc}"

    threading.Thread(target=_load, daemon=True).start()
    uvicorn.run(app, host=config.host, port=config.port, log_level="warning")
