"""Weighted edit-distance matching of a test window against usage history.

The model keeps the owner's whole training symbol sequence as the text and
aligns each test window against its best-matching substring (semi-global
alignment: leading and trailing text are free). Substitutions are graded by
how much of the symbol matches — same app in a shifted context is cheaper
than a different app — and insertions/deletions cost as much as a full
mismatch. The negated distance is the verification score.
"""

from __future__ import annotations

import numpy as np

from ..encode import (
    CONTEXTS_PER_APP,
    KIND_APP,
    KIND_UNKNOWN,
    N_DAY,
    Observation,
    Vocabulary,
)
from .core import as_index_array, as_window_matrix, check_indices

INDEL_COST = 3
MISMATCH_COST = 3

# sentinel "app values" so that symbol families compare with plain ==
_APP_UNKNOWN = -2
_APP_SESSION_START = -3
_APP_DAY_CHANGE = -4


def substitution_cost(u: Observation, v: Observation) -> int:
    """Cost of substituting one observation for another, in {0, 1, 2, 3}.

    Zero for identical symbols. When both symbols refer to the same app
    (the unknown-app placeholder counts as one shared app), each mismatched
    context attribute — time-of-day block, weekday flag — adds one. Anything
    else, including marker-vs-other, is a full mismatch at 3.
    """
    if u == v:
        return 0
    contextual = (KIND_APP, KIND_UNKNOWN)
    if u.kind in contextual and v.kind in contextual and (u.kind, u.app_id) == (v.kind, v.app_id):
        return int(u.tz != v.tz) + int(u.day != v.day)
    return MISMATCH_COST


def symbol_attributes(indices: np.ndarray, vocab: Vocabulary) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-index (app value, tz, day) arrays for vectorized cost evaluation.

    App value is the app rank for app symbols and a distinct negative
    sentinel per non-app family; markers get tz = day = -1 so equal markers
    compare as full matches.
    """
    arr = np.asarray(indices, dtype=np.int64)
    check_indices(arr.ravel(), vocab.size)
    ub = vocab.unknown_base
    psi = vocab.session_start_index
    is_app = arr < ub
    is_unk = (arr >= ub) & (arr < psi)
    appv = np.where(
        is_app,
        arr // CONTEXTS_PER_APP,
        np.where(is_unk, _APP_UNKNOWN, np.where(arr == psi, _APP_SESSION_START, _APP_DAY_CHANGE)),
    )
    ctx = np.where(is_app, arr % CONTEXTS_PER_APP, np.where(is_unk, arr - ub, -1))
    tz = np.where(ctx >= 0, ctx // N_DAY, -1)
    day = np.where(ctx >= 0, ctx % N_DAY, -1)
    return appv, tz, day


class MedModel:
    """Edit-distance matcher over a stored training sequence."""

    method = "med"

    def __init__(self, vocab: Vocabulary, train_indices: np.ndarray):
        arr = as_index_array(train_indices)
        check_indices(arr, vocab.size)
        self.vocab = vocab
        self.train_indices = arr.copy()
        self._text_attrs = symbol_attributes(self.train_indices, vocab)

    @classmethod
    def fit(cls, train_indices, vocab: Vocabulary) -> "MedModel":
        return cls(vocab, np.asarray(train_indices, dtype=np.int64))

    def distance(self, window) -> int:
        return int(self.distances(as_index_array(window)[None, :])[0])

    def distances(self, windows) -> np.ndarray:
        """Semi-global alignment distance of each window to the text.

        Dynamic program over (window position, text position); within-row
        minimization over the cost-3 gap chain is done with a running-minimum
        transform so each row is a handful of whole-array operations.
        """
        mat = as_window_matrix(windows)
        n_win, n = mat.shape
        text_len = self.train_indices.size
        if n > text_len:
            raise ValueError(f"window length {n} exceeds training sequence length {text_len}")
        t_app, t_tz, t_day = self._text_attrs
        w_app, w_tz, w_day = symbol_attributes(mat, self.vocab)

        ramp = INDEL_COST * np.arange(text_len + 1, dtype=np.int64)
        prev = np.zeros((n_win, text_len + 1), dtype=np.int64)  # leading text is free
        cand = np.empty_like(prev)
        for i in range(n):
            same = w_app[:, i, None] == t_app[None, :]
            sub = np.where(
                same,
                (w_tz[:, i, None] != t_tz[None, :]).astype(np.int64)
                + (w_day[:, i, None] != t_day[None, :]),
                MISMATCH_COST,
            )
            cand[:, 0] = INDEL_COST * (i + 1)
            np.minimum(prev[:, :-1] + sub, prev[:, 1:] + INDEL_COST, out=cand[:, 1:])
            cand -= ramp
            np.minimum.accumulate(cand, axis=1, out=cand)
            cand += ramp
            prev, cand = cand, prev
        return prev.min(axis=1)  # trailing text is free

    def score_window(self, window) -> float:
        return -float(self.distance(window))

    def score_windows(self, windows) -> np.ndarray:
        return -self.distances(windows).astype(np.float64)
