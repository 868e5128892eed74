"""Verification protocol and reporting.

Every user's model scores every user's test windows (genuine pairs on the
diagonal, impostor pairs off it); the resulting score records feed the
confusion metrics, ROC/EER estimation, and the dataset-statistics reports.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence, TextIO

import numpy as np

from .encode import KIND_APP, Observation, Vocabulary, encode_sessions, sliding_windows
from .ingest import Session, resample_sessions, sessionize, split_sessions
from .models import TrainConfig, UserModel, baum_welch, train_user_model
from .models.hmm import HmmParams, TrainingTrace

log = logging.getLogger(__name__)

HMM_METHODS = ("hmm-lap", "mshmm")


def format_number(x: float) -> str:
    """Numeric CSV formatting: six significant digits."""
    return format(float(x), ".6g")


@dataclass(frozen=True, slots=True)
class ScoreRecord:
    """One scored window: which model judged whose window, and the score."""

    model_owner: str
    window_owner: str
    window_end_index: int
    score: float

    @property
    def genuine(self) -> bool:
        return self.model_owner == self.window_owner


@dataclass(frozen=True, slots=True)
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int

    def __post_init__(self) -> None:
        if min(self.tp, self.fp, self.tn, self.fn) < 0:
            raise ValueError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


@dataclass(frozen=True, slots=True)
class RocCurve:
    """Threshold sweep: (threshold, false-accept %, false-reject %) rows,
    sorted by threshold ascending."""

    points: tuple[tuple[float, float, float], ...]


@dataclass(frozen=True, slots=True)
class BoxplotSummary:
    mean: float
    minimum: float
    q1: float
    median: float
    q3: float
    maximum: float

    @classmethod
    def of(cls, values: Sequence[float]) -> "BoxplotSummary":
        arr = np.asarray(values, dtype=np.float64)
        if arr.size == 0:
            raise ValueError("cannot summarize an empty sample")
        q1, med, q3 = np.percentile(arr, [25.0, 50.0, 75.0])
        return cls(float(arr.mean()), float(arr.min()), float(q1), float(med), float(q3), float(arr.max()))


@dataclass(frozen=True, slots=True)
class UnknownAppStats:
    """Per-pair unknown-app percentages plus genuine/impostor summaries."""

    pairs: tuple[tuple[str, str, float], ...]  # (model_owner, test_user, pct)
    genuine: BoxplotSummary
    impostor: BoxplotSummary


@dataclass(frozen=True, slots=True)
class TopAppRow:
    rank: int
    app_id: str
    user_count: int
    per_user_usage: float
    overall_usage: float


@dataclass(frozen=True, slots=True)
class EerGrid:
    """EER (percent) per (window length, sampling period) cell."""

    n_values: tuple[int, ...]
    periods: tuple[int, ...]
    values: np.ndarray  # shape (len(n_values), len(periods))


# ---------------------------------------------------------------------------
# scoring protocol


def _window_scores(model: UserModel, indices: np.ndarray, n: int, stride: int):
    mat = sliding_windows(indices, n)[::stride]
    ends = np.arange(n - 1, indices.size, stride, dtype=np.int64)
    return ends, model.score_windows(mat)


def generate_score_records(
    models: Mapping[str, UserModel],
    test_observations: Mapping[str, Sequence[Observation]],
    n: int,
    stride: int = 1,
) -> list[ScoreRecord]:
    """Score every user's test windows against every user's model.

    Each test sequence is projected into the scoring model's vocabulary, so
    unknown-ness is always relative to the verifier. Windows end at indices
    n-1, n-1+stride, ...; owners with fewer than n test symbols are skipped
    with a warning.
    """
    if n < 1:
        raise ValueError("window length must be >= 1")
    if stride < 1:
        raise ValueError("stride must be >= 1")
    records: list[ScoreRecord] = []
    too_short: set[str] = set()
    for model_owner in sorted(models):
        model = models[model_owner]
        for window_owner in sorted(test_observations):
            obs = test_observations[window_owner]
            if len(obs) < n:
                if window_owner not in too_short:
                    log.warning(
                        "skipping %s: %d test symbols < window length %d",
                        window_owner,
                        len(obs),
                        n,
                    )
                    too_short.add(window_owner)
                continue
            indices = model.vocab.project(obs)
            ends, scores = _window_scores(model, indices, n, stride)
            records.extend(
                ScoreRecord(model_owner, window_owner, int(e), float(s))
                for e, s in zip(ends, scores)
            )
    return records


def sort_records(records: Iterable[ScoreRecord]) -> list[ScoreRecord]:
    return sorted(records, key=lambda r: (r.model_owner, r.window_owner, r.window_end_index))


def confusion_counts(records: Iterable[ScoreRecord], threshold: float) -> ConfusionCounts:
    """Accept iff score >= threshold; genuine iff owner matches."""
    tp = fp = tn = fn = 0
    for rec in records:
        accept = rec.score >= threshold
        if rec.genuine:
            tp += accept
            fn += not accept
        else:
            fp += accept
            tn += not accept
    return ConfusionCounts(tp, fp, tn, fn)


def _ratio(name: str, num: float, den: float) -> float:
    if den == 0:
        raise ValueError(f"{name} undefined: zero denominator")
    return 100.0 * num / den


def sensitivity(cc: ConfusionCounts) -> float:
    """True-positive rate as a percentage."""
    return _ratio("sensitivity", cc.tp, cc.tp + cc.fn)


def specificity(cc: ConfusionCounts) -> float:
    """True-negative rate as a percentage."""
    return _ratio("specificity", cc.tn, cc.tn + cc.fp)


def accuracy(cc: ConfusionCounts) -> float:
    return _ratio("accuracy", cc.tp + cc.tn, cc.total)


def f1(cc: ConfusionCounts) -> float:
    return _ratio("f1", 2 * cc.tp, 2 * cc.tp + cc.fp + cc.fn)


# ---------------------------------------------------------------------------
# ROC / EER


def _split_scores(records: Iterable[ScoreRecord]) -> tuple[np.ndarray, np.ndarray]:
    genuine = []
    impostor = []
    for rec in records:
        (genuine if rec.genuine else impostor).append(rec.score)
    if not genuine or not impostor:
        raise ValueError("need at least one genuine and one impostor record")
    return np.sort(np.asarray(genuine)), np.sort(np.asarray(impostor))


def _sweep(genuine: np.ndarray, impostor: np.ndarray):
    """FAR/FRR (fractions) at every distinct score plus a top sentinel."""
    thresholds = np.unique(np.concatenate([genuine, impostor]))
    thresholds = np.append(thresholds, thresholds[-1] + 1.0)
    far = (impostor.size - np.searchsorted(impostor, thresholds, side="left")) / impostor.size
    frr = np.searchsorted(genuine, thresholds, side="left") / genuine.size
    return thresholds, far, frr


def roc_curve(records: Iterable[ScoreRecord]) -> RocCurve:
    genuine, impostor = _split_scores(records)
    thresholds, far, frr = _sweep(genuine, impostor)
    return RocCurve(
        tuple((float(t), 100.0 * f, 100.0 * r) for t, f, r in zip(thresholds, far, frr))
    )


def eer_from_scores(genuine: np.ndarray, impostor: np.ndarray) -> float:
    """EER percentage: FAR at the FAR/FRR crossing, linearly interpolated
    between adjacent thresholds when they cross between grid points."""
    genuine = np.sort(np.asarray(genuine, dtype=np.float64))
    impostor = np.sort(np.asarray(impostor, dtype=np.float64))
    if genuine.size == 0 or impostor.size == 0:
        raise ValueError("need at least one genuine and one impostor score")
    _, far, frr = _sweep(genuine, impostor)
    diff = frr - far
    above = int(np.argmax(diff > 0.0))  # first strictly positive; exists via sentinel
    k = above - 1
    lam = -diff[k] / (diff[above] - diff[k]) if diff[above] != diff[k] else 0.0
    return float(100.0 * (far[k] + lam * (far[above] - far[k])))


def equal_error_rate(records: Iterable[ScoreRecord]) -> float:
    genuine, impostor = _split_scores(records)
    return eer_from_scores(genuine, impostor)


def eer_threshold(records: Iterable[ScoreRecord]) -> tuple[float, float]:
    """(EER %, operating threshold): the swept threshold nearest the
    FAR/FRR crossing."""
    genuine, impostor = _split_scores(records)
    thresholds, far, frr = _sweep(genuine, impostor)
    diff = frr - far
    above = int(np.argmax(diff > 0.0))
    k = above - 1
    pick = k if abs(diff[k]) <= abs(diff[above]) else above
    return eer_from_scores(genuine, impostor), float(thresholds[pick])


# ---------------------------------------------------------------------------
# dataset statistics


def _as_app_set(value) -> set[str]:
    if isinstance(value, Vocabulary):
        return set(value.apps)
    return set(value)


def overlap_matrix(sets: Mapping[str, Iterable]) -> tuple[list[str], np.ndarray]:
    """Row-normalized percentage overlap: entry (i, j) = 100 |Si ∩ Sj| / |Si|.

    Asymmetric by construction; diagonal is 100.
    """
    users = sorted(sets)
    if len(users) < 2:
        raise ValueError("need at least 2 users")
    materialized = {u: set(sets[u]) for u in users}
    for u, s in materialized.items():
        if not s:
            raise ValueError(f"user {u} has an empty set")
    matrix = np.empty((len(users), len(users)))
    for i, ui in enumerate(users):
        si = materialized[ui]
        for j, uj in enumerate(users):
            matrix[i, j] = 100.0 * len(si & materialized[uj]) / len(si)
    return users, matrix


def app_similarity_matrix(vocabs: Mapping[str, "Vocabulary | Iterable[str]"]):
    """Pairwise app-set overlap between users' training vocabularies."""
    return overlap_matrix({u: _as_app_set(v) for u, v in vocabs.items()})


def observation_similarity_matrix(symbol_sets: Mapping[str, Iterable[Observation]]):
    """Pairwise overlap of contextualized training observations (markers
    excluded — they are shared structure, not behavior)."""
    return overlap_matrix(
        {
            u: {o.to_text() for o in obs_set if o.kind == KIND_APP}
            for u, obs_set in symbol_sets.items()
        }
    )


def unknown_app_stats(
    vocabs: Mapping[str, "Vocabulary | Iterable[str]"],
    test_apps: Mapping[str, Sequence[str]],
) -> UnknownAppStats:
    """Percentage of each user's test app samples outside each model owner's
    app set, summarized separately for genuine and impostor pairs."""
    app_sets = {u: _as_app_set(v) for u, v in vocabs.items()}
    pairs: list[tuple[str, str, float]] = []
    genuine: list[float] = []
    impostor: list[float] = []
    for model_owner in sorted(app_sets):
        known = app_sets[model_owner]
        for test_user in sorted(test_apps):
            apps = test_apps[test_user]
            if len(apps) == 0:
                continue
            unknown = sum(1 for a in apps if a not in known)
            pct = 100.0 * unknown / len(apps)
            pairs.append((model_owner, test_user, pct))
            (genuine if model_owner == test_user else impostor).append(pct)
    return UnknownAppStats(
        tuple(pairs), BoxplotSummary.of(genuine), BoxplotSummary.of(impostor)
    )


def top_apps_report(samples_by_user: Mapping[str, Sequence[str]], k: int = 20) -> list[TopAppRow]:
    """Most-used apps across the cohort.

    per_user_usage divides an app's total sample count by the number of
    users who used it; overall_usage divides by the cohort size, so
    overall = per_user * user_count / total_users.
    """
    n_users = len(samples_by_user)
    if n_users == 0:
        return []
    totals: dict[str, int] = {}
    user_counts: dict[str, int] = {}
    for user in samples_by_user:
        seen_here: set[str] = set()
        for app in samples_by_user[user]:
            totals[app] = totals.get(app, 0) + 1
            seen_here.add(app)
        for app in seen_here:
            user_counts[app] = user_counts.get(app, 0) + 1
    ranked = sorted(totals, key=lambda a: (-totals[a], a))[:k]
    return [
        TopAppRow(
            rank=i + 1,
            app_id=app,
            user_count=user_counts[app],
            per_user_usage=totals[app] / user_counts[app],
            overall_usage=totals[app] / n_users,
        )
        for i, app in enumerate(ranked)
    ]


# ---------------------------------------------------------------------------
# cohort preparation and grid evaluation


@dataclass(slots=True)
class PreparedUser:
    """One user's data after resampling, splitting and encoding."""

    user_id: str
    vocab: Vocabulary
    train_indices: np.ndarray
    train_observations: list[Observation]
    test_observations: list[Observation]

    @property
    def train_apps(self) -> tuple[str, ...]:
        return self.vocab.apps


def prepare_user(
    sessions: Sequence[Session],
    period: int,
    train_fraction: float,
) -> PreparedUser:
    """Resample, split chronologically, encode, and build the vocabulary
    from the training half."""
    resampled = resample_sessions(sessions, period)
    split = split_sessions(resampled, train_fraction)
    train_obs = [obs for _, obs in encode_sessions(split.train)]
    test_obs = [obs for _, obs in encode_sessions(split.test)]
    if not any(o.kind == KIND_APP for o in train_obs):
        raise ValueError("training split contains no app observations")
    vocab = Vocabulary.from_observations(train_obs)
    user_id = sessions[0].user_id if sessions else ""
    return PreparedUser(user_id, vocab, vocab.project(train_obs), train_obs, test_obs)


def prepare_cohort(
    events_by_user: Mapping[str, Sequence],
    period: int,
    train_fraction: float = 0.7,
    idle_gap: float = 300.0,
    min_train: int = 500,
    min_test: int = 200,
) -> dict[str, PreparedUser]:
    """Full per-user pipeline from raw events; drops ineligible users."""
    prepared: dict[str, PreparedUser] = {}
    for user in sorted(events_by_user):
        sessions = sessionize(events_by_user[user], idle_gap=idle_gap)
        if not sessions:
            log.warning("user %s has no sessions; dropped", user)
            continue
        p = prepare_user(sessions, period, train_fraction)
        n_train_apps = int(np.sum(p.train_indices < p.vocab.unknown_base))
        n_test_apps = sum(1 for o in p.test_observations if o.kind == KIND_APP)
        if n_train_apps < min_train or n_test_apps < min_test:
            log.warning(
                "user %s ineligible: %d train / %d test app samples",
                user,
                n_train_apps,
                n_test_apps,
            )
            continue
        prepared[user] = p
    return prepared


def train_cohort_models(
    method: str,
    prepared: Mapping[str, PreparedUser],
    config: TrainConfig = TrainConfig(),
    bases: Mapping[str, tuple[HmmParams, TrainingTrace]] | None = None,
) -> dict[str, UserModel]:
    return {
        user: train_user_model(
            method,
            p.train_indices,
            p.vocab,
            config,
            base=bases.get(user) if bases else None,
        )
        for user, p in prepared.items()
    }


def train_hmm_bases(
    prepared: Mapping[str, PreparedUser], config: TrainConfig
) -> dict[str, tuple[HmmParams, TrainingTrace]]:
    """One Baum-Welch run per user, shared by both HMM variants."""
    return {
        user: baum_welch(
            p.train_indices, p.vocab.size, config.n_states, config.max_iter, config.tol, config.seed
        )
        for user, p in prepared.items()
    }


def evaluate_methods(
    methods: Sequence[str],
    prepared: Mapping[str, PreparedUser],
    n_values: Sequence[int],
    config: TrainConfig = TrainConfig(),
    stride: int = 1,
) -> dict[tuple[str, int], list[ScoreRecord]]:
    """Score records for every (method, window length) combination.

    Projections of each test sequence into each model owner's vocabulary
    are computed once, and the two HMM variants share one Baum-Welch run
    per user.
    """
    users = sorted(prepared)
    projections = {
        (mo, wo): prepared[mo].vocab.project(prepared[wo].test_observations)
        for mo in users
        for wo in users
    }
    bases = (
        train_hmm_bases(prepared, config)
        if any(m in HMM_METHODS for m in methods)
        else None
    )
    out: dict[tuple[str, int], list[ScoreRecord]] = {}
    for method in methods:
        models = train_cohort_models(method, prepared, config, bases)
        for n in n_values:
            records: list[ScoreRecord] = []
            for mo in users:
                model = models[mo]
                for wo in users:
                    indices = projections[(mo, wo)]
                    if indices.size < n:
                        log.warning(
                            "skipping %s vs %s: %d symbols < n=%d", mo, wo, indices.size, n
                        )
                        continue
                    ends, scores = _window_scores(model, indices, n, stride)
                    records.extend(
                        ScoreRecord(mo, wo, int(e), float(s)) for e, s in zip(ends, scores)
                    )
            out[(method, n)] = records
    return out


def evaluate_method(
    method: str,
    events_by_user: Mapping[str, Sequence],
    n_values: Sequence[int] = (20, 30, 40, 50, 60),
    periods: Sequence[int] = (5, 10, 15, 20, 25, 30),
    config: TrainConfig = TrainConfig(),
    train_fraction: float = 0.7,
    stride: int = 1,
    min_train: int = 500,
    min_test: int = 200,
) -> EerGrid:
    """EER grid over (window length, sampling period), re-ingesting the
    cohort at each period."""
    values = np.full((len(n_values), len(periods)), np.nan)
    for j, period in enumerate(periods):
        prepared = prepare_cohort(
            events_by_user,
            period,
            train_fraction=train_fraction,
            min_train=min_train,
            min_test=min_test,
        )
        if len(prepared) < 2:
            log.warning("period %ds: fewer than 2 eligible users; grid column empty", period)
            continue
        by_key = evaluate_methods([method], prepared, n_values, config, stride)
        for i, n in enumerate(n_values):
            records = by_key[(method, n)]
            if records:
                values[i, j] = equal_error_rate(records)
    return EerGrid(tuple(n_values), tuple(periods), values)


# ---------------------------------------------------------------------------
# report files


def _open_out(dest: str | Path | TextIO, write_fn) -> None:
    if isinstance(dest, (str, Path)):
        with open(dest, "w", encoding="utf-8", newline="") as fh:
            write_fn(fh)
    else:
        write_fn(dest)


def write_scores_csv(records: Iterable[ScoreRecord], dest: str | Path | TextIO) -> None:
    def _write(fh: TextIO) -> None:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["model_owner", "window_owner", "end_index", "score"])
        for rec in sort_records(records):
            w.writerow(
                [rec.model_owner, rec.window_owner, rec.window_end_index, format_number(rec.score)]
            )

    _open_out(dest, _write)


def read_scores_csv(source: str | Path) -> list[ScoreRecord]:
    with open(source, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != ["model_owner", "window_owner", "end_index", "score"]:
            raise ValueError(f"bad scores header {header!r}")
        return [ScoreRecord(mo, wo, int(e), float(s)) for mo, wo, e, s in reader]


def write_eer_grid_csv(grid: EerGrid, dest: str | Path | TextIO) -> None:
    def _write(fh: TextIO) -> None:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["n"] + [f"period_{p}" for p in grid.periods])
        for i, n in enumerate(grid.n_values):
            row: list[str] = [str(n)]
            for j in range(len(grid.periods)):
                v = grid.values[i, j]
                row.append("" if np.isnan(v) else format_number(v))
            w.writerow(row)

    _open_out(dest, _write)


def write_roc_csv(curve: RocCurve, dest: str | Path | TextIO) -> None:
    def _write(fh: TextIO) -> None:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["threshold", "far", "frr"])
        for t, far, frr in curve.points:
            w.writerow([format_number(t), format_number(far), format_number(frr)])

    _open_out(dest, _write)


def write_similarity_csv(
    users: Sequence[str], matrix: np.ndarray, dest: str | Path | TextIO
) -> None:
    def _write(fh: TextIO) -> None:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["user"] + list(users))
        for i, user in enumerate(users):
            w.writerow([user] + [format_number(x) for x in matrix[i]])

    _open_out(dest, _write)


def write_unknown_stats_csv(stats: UnknownAppStats, dest: str | Path | TextIO) -> None:
    def _write(fh: TextIO) -> None:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["model_owner", "test_user", "kind", "unknown_pct"])
        for mo, tu, pct in stats.pairs:
            kind = "genuine" if mo == tu else "impostor"
            w.writerow([mo, tu, kind, format_number(pct)])
        w.writerow([])
        w.writerow(["summary", "mean", "min", "q1", "median", "q3", "max"])
        for name, s in (("genuine", stats.genuine), ("impostor", stats.impostor)):
            w.writerow(
                [name]
                + [format_number(x) for x in (s.mean, s.minimum, s.q1, s.median, s.q3, s.maximum)]
            )

    _open_out(dest, _write)


def write_top_apps_csv(rows: Sequence[TopAppRow], dest: str | Path | TextIO) -> None:
    def _write(fh: TextIO) -> None:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["rank", "app_id", "user_count", "per_user_usage", "overall_usage"])
        for r in rows:
            w.writerow(
                [
                    r.rank,
                    r.app_id,
                    r.user_count,
                    format_number(r.per_user_usage),
                    format_number(r.overall_usage),
                ]
            )

    _open_out(dest, _write)
