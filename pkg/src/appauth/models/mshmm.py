"""HMM with marginal smoothing: unseen observations fall back to context
marginals instead of a flat floor.

The base HMM is trained without emission smoothing. At scoring time a
symbol observed during training emits with its learned probability; a
symbol never observed emits, from every state, the product of the app's
time-of-day and weekday marginals (each floored), which lets the model
distinguish a known app showing up in an odd context from a wholly unknown
app — the latter bottoms out at the squared floor.
"""

from __future__ import annotations

import numpy as np

from ..encode import CONTEXTS_PER_APP, N_DAY, N_TZ, Vocabulary
from .core import SmoothingConfig, as_index_array, check_indices
from .hmm import (
    HmmParams,
    TrainingTrace,
    batched_forward_over_arrays,
    baum_welch,
    forward_over_arrays,
)


class MarginalTables:
    """Joint frequencies of (app, time-of-day block) and (app, weekday flag)
    over the app symbols of one training sequence."""

    def __init__(self, vocab: Vocabulary, p_app_tz: np.ndarray, p_app_day: np.ndarray):
        if p_app_tz.shape != (vocab.n_apps, N_TZ) or p_app_day.shape != (vocab.n_apps, N_DAY):
            raise ValueError("marginal table shapes do not match vocabulary")
        self.vocab = vocab
        self.p_app_tz = np.asarray(p_app_tz, dtype=np.float64)
        self.p_app_day = np.asarray(p_app_day, dtype=np.float64)

    @classmethod
    def fit(cls, train_indices, vocab: Vocabulary) -> "MarginalTables":
        seq = as_index_array(train_indices)
        check_indices(seq, vocab.size)
        apps = seq[seq < vocab.unknown_base]
        if apps.size == 0:
            raise ValueError("training sequence contains no app symbols")
        ranks = apps // CONTEXTS_PER_APP
        ctx = apps % CONTEXTS_PER_APP
        tz_counts = np.zeros((vocab.n_apps, N_TZ))
        day_counts = np.zeros((vocab.n_apps, N_DAY))
        np.add.at(tz_counts, (ranks, ctx // N_DAY), 1.0)
        np.add.at(day_counts, (ranks, ctx % N_DAY), 1.0)
        return cls(vocab, tz_counts / apps.size, day_counts / apps.size)

    def app_tz_probability(self, app_id: str, tz: int) -> float:
        """P(app, tz-block); 0 for an app outside the vocabulary."""
        if app_id not in self.vocab:
            return 0.0
        return float(self.p_app_tz[self.vocab.apps.index(app_id), tz])

    def app_day_probability(self, app_id: str, day: int) -> float:
        if app_id not in self.vocab:
            return 0.0
        return float(self.p_app_day[self.vocab.apps.index(app_id), day])


def extended_emissions(
    emit: np.ndarray,
    seen: np.ndarray,
    marginals: MarginalTables,
    delta: float,
) -> np.ndarray:
    """Emission table covering the whole vocabulary.

    Seen symbols keep their learned column. An unseen app symbol gets the
    state-independent product max(delta, P(app, tz)) * max(delta, P(app, day));
    unseen unknown-app symbols and markers get delta squared.
    """
    vocab = marginals.vocab
    size = vocab.size
    if emit.shape[1] != size or seen.shape != (size,):
        raise ValueError("emission/seen shapes do not match vocabulary")

    floor = delta * delta
    fallback = np.full(size, floor)
    app_idx = np.arange(vocab.unknown_base)
    ranks = app_idx // CONTEXTS_PER_APP
    ctx = app_idx % CONTEXTS_PER_APP
    fallback[app_idx] = np.maximum(delta, marginals.p_app_tz[ranks, ctx // N_DAY]) * np.maximum(
        delta, marginals.p_app_day[ranks, ctx % N_DAY]
    )
    # Long EM runs underflow some learned emissions to exact zero; floor seen
    # columns at delta so the lookup stays a total, strictly positive function.
    # A seen symbol misses at most one factor, so it gets the single-factor
    # floor; the two-factor floor (delta**2) is reserved for unknown symbols.
    learned = np.maximum(emit, delta)
    return np.where(seen[None, :], learned, fallback[None, :])


class MsHmmModel:
    """Marginally smoothed HMM verifier."""

    method = "mshmm"

    def __init__(
        self,
        vocab: Vocabulary,
        base: HmmParams,
        marginals: MarginalTables,
        seen: np.ndarray,
        delta: float,
        trace: TrainingTrace | None = None,
    ):
        if base.n_symbols != vocab.size:
            raise ValueError("emission width does not match vocabulary size")
        self.vocab = vocab
        self.base = base
        self.marginals = marginals
        self.seen = seen.astype(np.bool_)
        self.delta = float(delta)
        self.trace = trace if trace is not None else TrainingTrace(seed=-1, iterations=0)
        self.emit_ext = extended_emissions(base.emit, self.seen, marginals, self.delta)

    @classmethod
    def fit(
        cls,
        train_indices,
        vocab: Vocabulary,
        smoothing: SmoothingConfig | None = None,
        n_states: int = 20,
        max_iter: int = 50,
        tol: float = 1e-6,
        seed: int = 0,
        base: tuple[HmmParams, TrainingTrace] | None = None,
    ) -> "MsHmmModel":
        """Train the unsmoothed base HMM (or reuse one) and attach the
        marginal fallback tables."""
        seq = as_index_array(train_indices)
        check_indices(seq, vocab.size)
        if base is None:
            base = baum_welch(seq, vocab.size, n_states, max_iter, tol, seed)
        params, trace = base
        marginals = MarginalTables.fit(seq, vocab)
        seen = np.zeros(vocab.size, dtype=np.bool_)
        seen[seq] = True
        return cls(vocab, params, marginals, seen, (smoothing or SmoothingConfig()).delta, trace)

    def emission(self, state: int, symbol_index: int) -> float:
        """Effective emission probability for one (state, symbol) pair."""
        return float(self.emit_ext[state, symbol_index])

    def score_window(self, window) -> float:
        return forward_over_arrays(self.base.pi, self.base.trans, self.emit_ext, window)

    def score_windows(self, windows) -> np.ndarray:
        return batched_forward_over_arrays(self.base.pi, self.base.trans, self.emit_ext, windows)
