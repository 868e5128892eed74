"""First-order Markov chain over the observation alphabet, with additive
smoothing so that every state and transition keeps a small positive floor."""

from __future__ import annotations

import numpy as np

from ..encode import Vocabulary
from .core import SmoothingConfig, as_index_array, as_window_matrix, check_indices


class MarkovChainModel:
    """Smoothed unigram prior + transition matrix; scores are window
    log-likelihoods under the chain."""

    method = "mc"

    def __init__(self, vocab: Vocabulary, prior: np.ndarray, transition: np.ndarray, delta: float):
        size = vocab.size
        if prior.shape != (size,) or transition.shape != (size, size):
            raise ValueError("parameter shapes do not match vocabulary size")
        self.vocab = vocab
        self.prior = np.asarray(prior, dtype=np.float64)
        self.transition = np.asarray(transition, dtype=np.float64)
        self.delta = float(delta)
        self._log_prior = np.log(self.prior)
        self._log_transition = np.log(self.transition)

    @classmethod
    def fit(
        cls, train_indices, vocab: Vocabulary, smoothing: SmoothingConfig | None = None
    ) -> "MarkovChainModel":
        """Estimate smoothed prior and transition rows from one sequence.

        prior_i = (count_i + d) / (T + d*S); row_ij = (c_ij + d) / (c_i + d*S)
        with c_i the outgoing-transition count of state i, so never-visited
        states get a uniform row.
        """
        seq = as_index_array(train_indices)
        size = vocab.size
        check_indices(seq, size)
        d = (smoothing or SmoothingConfig()).delta

        occ = np.bincount(seq, minlength=size).astype(np.float64)
        prior = (occ + d) / (seq.size + d * size)

        pair_counts = np.zeros((size, size), dtype=np.float64)
        if seq.size > 1:
            np.add.at(pair_counts, (seq[:-1], seq[1:]), 1.0)
        out_counts = pair_counts.sum(axis=1, keepdims=True)
        transition = (pair_counts + d) / (out_counts + d * size)
        return cls(vocab, prior, transition, d)

    def score_window(self, window) -> float:
        arr = as_index_array(window)
        check_indices(arr, self.vocab.size)
        total = self._log_prior[arr[0]]
        if arr.size > 1:
            total = total + self._log_transition[arr[:-1], arr[1:]].sum()
        return float(total)

    def score_windows(self, windows) -> np.ndarray:
        mat = as_window_matrix(windows)
        check_indices(mat, self.vocab.size)
        scores = self._log_prior[mat[:, 0]]
        if mat.shape[1] > 1:
            scores = scores + self._log_transition[mat[:, :-1], mat[:, 1:]].sum(axis=1)
        return scores
