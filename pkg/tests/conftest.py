"""Shared builders and brute-force oracles for the test suite."""

from __future__ import annotations

import itertools
import math

import numpy as np

from appauth.encode import Observation, Vocabulary
from appauth.models.edit_distance import INDEL_COST, substitution_cost
from appauth.models.hmm import HmmParams
from appauth.models.core import random_simplex


def app(app_id: str, tz: int = 0, day: int = 0) -> Observation:
    return Observation("app", app_id=app_id, tz=tz, day=day)


def unk(tz: int = 0, day: int = 0) -> Observation:
    return Observation("unk", tz=tz, day=day)


PSI = Observation("psi")
DELTA = Observation("delta")


def random_hmm(rng: np.random.Generator, n_states: int, n_symbols: int) -> HmmParams:
    """A random fully-stochastic parameter set."""
    return HmmParams(
        pi=random_simplex(rng, (n_states,)),
        trans=random_simplex(rng, (n_states, n_states)),
        emit=random_simplex(rng, (n_states, n_symbols)),
    )


def enumerate_forward(params: HmmParams, window) -> float:
    """Log-likelihood by explicit summation over all K**n state paths."""
    window = list(window)
    states = range(params.n_states)
    total = 0.0
    for path in itertools.product(states, repeat=len(window)):
        p = params.pi[path[0]] * params.emit[path[0], window[0]]
        for t in range(1, len(window)):
            p *= params.trans[path[t - 1], path[t]]
            p *= params.emit[path[t], window[t]]
        total += p
    return math.log(total)


def pairwise_distance(pattern: list[Observation], text: list[Observation]) -> int:
    """Classic global weighted edit distance between two short sequences."""
    rows = len(pattern) + 1
    cols = len(text) + 1
    dp = [[0] * cols for _ in range(rows)]
    for i in range(1, rows):
        dp[i][0] = i * INDEL_COST
    for j in range(1, cols):
        dp[0][j] = j * INDEL_COST
    for i in range(1, rows):
        for j in range(1, cols):
            dp[i][j] = min(
                dp[i - 1][j - 1] + substitution_cost(pattern[i - 1], text[j - 1]),
                dp[i - 1][j] + INDEL_COST,
                dp[i][j - 1] + INDEL_COST,
            )
    return dp[-1][-1]


def brute_med_distance(pattern: list[Observation], text: list[Observation]) -> int:
    """Exhaustive minimum of the global distance over all substrings of text."""
    best = len(pattern) * INDEL_COST  # align against the empty substring
    for i in range(len(text) + 1):
        for j in range(i + 1, len(text) + 1):
            best = min(best, pairwise_distance(pattern, text[i:j]))
    return best


def random_observation(rng: np.random.Generator, apps: list[str]) -> Observation:
    """Any symbol the alphabet allows, markers included."""
    kind = rng.integers(0, 10)
    if kind == 0:
        return PSI
    if kind == 1:
        return DELTA
    if kind == 2:
        return unk(int(rng.integers(0, 3)), int(rng.integers(0, 2)))
    return app(
        apps[int(rng.integers(0, len(apps)))],
        int(rng.integers(0, 3)),
        int(rng.integers(0, 2)),
    )


def small_vocab() -> Vocabulary:
    return Vocabulary(["chat", "mail", "maps"])
