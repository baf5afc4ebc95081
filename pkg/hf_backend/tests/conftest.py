"""Shared fixtures: a tiny trained model and a live server around it."""

import itertools
import threading
import time

import pytest
import uvicorn

from hf_backend import ModelState, create_app, finetune

ADJECTIVES = ["good", "bad", "great", "slow", "fresh", "cold", "warm", "stale"]
NOUNS = ["soup", "bread", "service", "coffee", "pizza", "staff"]


def toy_corpus_lines() -> list[str]:
    lines = []
    for i, (adj, noun) in enumerate(itertools.product(ADJECTIVES, NOUNS)):
        stars = (i % 5) + 1
        lines.append(f"review: {adj} {noun} here, stars: {stars}.0 --")
    return lines * 5


@pytest.fixture(scope="session")
def corpus_path(tmp_path_factory):
    path = tmp_path_factory.mktemp("corpus") / "train.txt"
    path.write_text("\n".join(toy_corpus_lines()) + "\n", encoding="utf-8")
    return path


@pytest.fixture(scope="session")
def model_dir(tmp_path_factory, corpus_path):
    out = tmp_path_factory.mktemp("model") / "tiny"
    finetune(corpus_path, "tiny", 4, out, learning_rate=1e-3, seed=5)
    return out


@pytest.fixture(scope="session")
def loaded_state(model_dir):
    state = ModelState()
    state.load(model_dir)
    return state


class LiveServer:
    """uvicorn on an ephemeral port in a daemon thread."""

    def __init__(self, app):
        config = uvicorn.Config(app, host="127.0.0.1", port=0,
                                log_level="warning")
        self.server = uvicorn.Server(config)
        self.thread = threading.Thread(target=self.server.run, daemon=True)

    def __enter__(self) -> str:
        self.thread.start()
        deadline = time.monotonic() + 10.0
        while not self.server.started:
            if time.monotonic() > deadline:
                raise RuntimeError("server did not start within 10s")
            time.sleep(0.02)
        port = self.server.servers[0].sockets[0].getsockname()[1]
        return f"http://127.0.0.1:{port}"

    def __exit__(self, *exc):
        self.server.should_exit = True
        self.thread.join(timeout=10.0)


@pytest.fixture(scope="session")
def live_server_cls():
    return LiveServer


@pytest.fixture(scope="session")
def server_url(loaded_state):
    app = create_app(loaded_state, max_concurrent=2)
    with LiveServer(app) as url:
        yield url
