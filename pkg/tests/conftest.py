"""Shared fixtures: synthesized populations at several scales.

Session-scoped because synthesis is deterministic and the large
populations take seconds to build; every test sees identical data.
"""

import pytest

import lmpoll as L

from populations import synth_population


@pytest.fixture(scope="session")
def pop200k() -> L.ReviewSet:
    return synth_population(200000, 20260819)


@pytest.fixture(scope="session")
def pop50k() -> L.ReviewSet:
    return synth_population(50000, 31415926)


@pytest.fixture(scope="session")
def pop2k() -> L.ReviewSet:
    return synth_population(2000, 777)


@pytest.fixture(scope="session")
def classifier() -> L.LexiconClassifier:
    return L.LexiconClassifier.builtin()
