"""Shared builders for randomized test inputs."""

import numpy as np
import pytest

from fliess.algebra import Alphabet, Polynomial, SeriesSpec
from fliess.signals import ContinuousInput, PiecewiseConstantChannel


@pytest.fixture
def rng():
    return np.random.default_rng(20260816)


def random_pc_input(rng, m=2, T=1.0, max_pieces=4, scale=1.0) -> ContinuousInput:
    """A piecewise-constant input with random interior breakpoints."""
    channels = []
    for _ in range(m):
        k = int(rng.integers(0, max_pieces))
        breaks = np.sort(rng.uniform(0.0, T, size=k))
        # keep breakpoints strictly increasing
        breaks = np.unique(breaks)
        values = rng.uniform(-scale, scale, size=len(breaks) + 1)
        channels.append(PiecewiseConstantChannel(breaks.tolist(), values.tolist()))
    return ContinuousInput(channels, T)


def random_polynomial_series(rng, m=2, max_len=3, n_terms=6) -> SeriesSpec:
    alphabet = Alphabet(m)
    terms = {}
    terms[()] = float(rng.uniform(-1, 1))
    for _ in range(n_terms):
        length = int(rng.integers(1, max_len + 1))
        word = tuple(int(l) for l in rng.integers(0, m + 1, size=length))
        terms[word] = float(rng.uniform(-1, 1))
    return SeriesSpec(alphabet, polynomial=Polynomial(terms))
