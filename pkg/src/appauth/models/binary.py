"""The two all-or-nothing rules: unknown-app and unforeseen-observation.

Both give a window score of 1.0 or 0.0. The unknown-app rule rejects a
window containing any app outside the training app set; the unforeseen rule
is stricter and rejects any contextualized symbol that never occurred in
training. Session and day markers carry no user information and are skipped
by both.
"""

from __future__ import annotations

import numpy as np

from ..encode import Vocabulary
from .core import as_index_array, as_window_matrix, check_indices


class BinaryUnknownModel:
    """Scores 0.0 iff the window contains an app absent from the training
    app set (an unknown symbol after projection), else 1.0."""

    method = "bin-unk"

    def __init__(self, vocab: Vocabulary):
        self.vocab = vocab

    def score_window(self, window) -> float:
        arr = as_index_array(window)
        check_indices(arr, self.vocab.size)
        lo, hi = self.vocab.unknown_base, self.vocab.session_start_index
        return 0.0 if bool(np.any((arr >= lo) & (arr < hi))) else 1.0

    def score_windows(self, windows) -> np.ndarray:
        mat = as_window_matrix(windows)
        check_indices(mat, self.vocab.size)
        lo, hi = self.vocab.unknown_base, self.vocab.session_start_index
        bad = ((mat >= lo) & (mat < hi)).any(axis=1)
        return np.where(bad, 0.0, 1.0)


class BinaryUnforeseenModel:
    """Scores 0.0 iff the window contains any non-marker symbol that never
    occurred in the projected training sequence, else 1.0.

    An unknown-app symbol is always unforeseen, since the vocabulary is
    built from the training apps.
    """

    method = "bin-unfore"

    def __init__(self, vocab: Vocabulary, seen: np.ndarray):
        if seen.shape != (vocab.size,) or seen.dtype != np.bool_:
            raise ValueError("seen must be a boolean mask over the vocabulary")
        self.vocab = vocab
        self.seen = seen.copy()
        # markers are structural, not behavioral: never treated as unforeseen
        self.seen[vocab.session_start_index] = True
        self.seen[vocab.day_change_index] = True

    @classmethod
    def fit(cls, train_indices, vocab: Vocabulary) -> "BinaryUnforeseenModel":
        arr = as_index_array(train_indices)
        check_indices(arr, vocab.size)
        seen = np.zeros(vocab.size, dtype=np.bool_)
        seen[arr] = True
        return cls(vocab, seen)

    def score_window(self, window) -> float:
        arr = as_index_array(window)
        check_indices(arr, self.vocab.size)
        return 0.0 if bool(np.any(~self.seen[arr])) else 1.0

    def score_windows(self, windows) -> np.ndarray:
        mat = as_window_matrix(windows)
        check_indices(mat, self.vocab.size)
        bad = (~self.seen[mat]).any(axis=1)
        return np.where(bad, 0.0, 1.0)
