"""Synthetic cohorts with controllable separability, and intrusion replay.

No real usage data ships with this package, so experiments run on generated
cohorts: each user gets an app pool (partially shared across the cohort,
per the overlap knob) and context-conditioned app preferences, then a
Poisson session process writes an ordinary event log. The intrusion
experiment splices an impostor's observations onto a genuine stream and
measures how quickly windowed scores fall below threshold.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence, TextIO

import numpy as np

from .encode import Observation, day_flag_of, timezone_of
from .evaluation import ScoreRecord, format_number
from .ingest import RawEvent
from .models import UserModel

log = logging.getLogger(__name__)

DEFAULT_SEGMENT = 200


@dataclass(slots=True)
class UserProfile:
    """Behavioral profile driving one synthetic user's event log."""

    user_id: str
    app_pool: list[str]
    preference: np.ndarray  # (3 time blocks, 2 day flags, len(app_pool)), rows stochastic
    session_rate: float = 8.0  # mean sessions per day
    session_length: float = 420.0  # mean seconds per session
    dwell: float = 75.0  # mean seconds on an app before switching
    seed: int = 0

    def __post_init__(self) -> None:
        self.preference = np.asarray(self.preference, dtype=np.float64)
        if self.preference.shape != (3, 2, len(self.app_pool)):
            raise ValueError(f"preference shape {self.preference.shape} does not match pool")
        sums = self.preference.sum(axis=-1)
        if not np.allclose(sums, 1.0, atol=1e-9):
            raise ValueError("preference vectors must sum to 1")
        if min(self.session_rate, self.session_length, self.dwell) <= 0:
            raise ValueError("rates must be positive")


@dataclass(frozen=True, slots=True)
class CohortSpec:
    """Reproducible recipe for a whole synthetic cohort."""

    n_users: int = 10
    days: int = 30
    overlap: float = 0.5
    apps_per_user: int = 30
    session_rate: float = 8.0
    session_length: float = 420.0
    dwell: float = 75.0
    concentration: float = 0.3  # Dirichlet concentration of the base preference
    context_spread: float = 1.0  # lognormal sigma of per-context preference tilts
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_users < 1 or self.days < 0 or self.apps_per_user < 1:
            raise ValueError("bad cohort dimensions")
        if not 0.0 <= self.overlap <= 1.0:
            raise ValueError("overlap must be in [0, 1]")

    def to_json(self) -> dict:
        return {
            "n_users": self.n_users,
            "days": self.days,
            "overlap": self.overlap,
            "apps_per_user": self.apps_per_user,
            "session_rate": self.session_rate,
            "session_length": self.session_length,
            "dwell": self.dwell,
            "concentration": self.concentration,
            "context_spread": self.context_spread,
            "seed": self.seed,
        }

    @classmethod
    def from_json(cls, payload: Mapping) -> "CohortSpec":
        return cls(**{k: payload[k] for k in cls.__dataclass_fields__ if k in payload})


def generate_synthetic_user(profile: UserProfile, days: int) -> list[RawEvent]:
    """Event log for one user over the given horizon.

    Sessions arrive as a Poisson process at the profile's daily rate, last
    an exponential time, and contain unlock / app-switch / lock events; the
    app at each switch is drawn from the preference vector of the current
    (time block, day flag) context. Deterministic given the profile seed.
    """
    if days == 0:
        return []
    rng = np.random.default_rng(profile.seed)
    horizon = days * 86400.0
    mean_gap = 86400.0 / profile.session_rate
    pool_size = len(profile.app_pool)

    events: list[RawEvent] = []
    t = rng.exponential(mean_gap)
    while t < horizon:
        start = int(round(t))
        duration = max(30.0, rng.exponential(profile.session_length))
        end = min(t + duration, horizon)
        events.append(RawEvent(profile.user_id, start, "unlock"))
        app_t = float(start)
        last_ts = start
        while app_t < end:
            ts = int(round(app_t))
            ctx = profile.preference[timezone_of(ts), day_flag_of(ts)]
            app = profile.app_pool[int(rng.choice(pool_size, p=ctx))]
            events.append(RawEvent(profile.user_id, ts, "app", app))
            last_ts = ts
            app_t += max(1.0, rng.exponential(profile.dwell))
        events.append(RawEvent(profile.user_id, max(int(round(end)), last_ts), "lock"))
        t = max(end + 60.0, t + rng.exponential(mean_gap))
    return events


def make_cohort(spec: CohortSpec) -> dict[str, list[RawEvent]]:
    """Event logs for a whole cohort, keyed by user id.

    A fraction `overlap` of each user's app pool comes from a cohort-wide
    shared list; the rest is private, so overlap 0 gives disjoint
    vocabularies and overlap 1 identical ones. Each user draws one base
    preference over their pool, then tilts it per (time block, day flag)
    context — contexts favor different apps, but an app's reachability is
    shared across contexts the way real usage is.
    """
    n_shared = int(round(spec.overlap * spec.apps_per_user))
    shared = [f"app.shared.{i:03d}" for i in range(n_shared)]
    seeds = np.random.SeedSequence(spec.seed).spawn(spec.n_users)

    cohort: dict[str, list[RawEvent]] = {}
    for u in range(spec.n_users):
        user_id = f"user{u:02d}"
        private = [
            f"app.{user_id}.{i:03d}" for i in range(spec.apps_per_user - n_shared)
        ]
        pool = sorted(shared + private)
        rng = np.random.default_rng(seeds[u])
        base = rng.dirichlet(np.full(len(pool), spec.concentration))
        tilts = rng.lognormal(0.0, spec.context_spread, size=(3, 2, len(pool)))
        preference = base[None, None, :] * tilts
        preference /= preference.sum(axis=-1, keepdims=True)
        profile = UserProfile(
            user_id=user_id,
            app_pool=pool,
            preference=preference,
            session_rate=spec.session_rate,
            session_length=spec.session_length,
            dwell=spec.dwell,
            seed=int(rng.integers(2**63)),
        )
        cohort[user_id] = generate_synthetic_user(profile, spec.days)
    return cohort


# ---------------------------------------------------------------------------
# intrusion experiment


@dataclass(slots=True)
class IntrusionTrace:
    """Scores of every window across one genuine+intruder spliced stream."""

    genuine_segment: list[Observation]
    intruder_segment: list[Observation]
    scores: list[float]
    n: int

    @property
    def splice_index(self) -> int:
        return len(self.genuine_segment)

    def window_end_indices(self) -> range:
        total = len(self.genuine_segment) + len(self.intruder_segment)
        return range(self.n - 1, total)


def inject_intrusion(
    genuine_test: Sequence[Observation],
    intruder_test: Sequence[Observation],
    seed,
    segment: int = DEFAULT_SEGMENT,
) -> list[Observation]:
    """Concatenate a random genuine slice with a random intruder slice.

    Both slices are `segment` consecutive observations starting at a seeded
    random index; genuine material comes first.
    """
    if len(genuine_test) < segment or len(intruder_test) < segment:
        raise ValueError(
            f"both sequences need >= {segment} observations "
            f"(got {len(genuine_test)} and {len(intruder_test)})"
        )
    rng = np.random.default_rng(seed)
    gi = int(rng.integers(0, len(genuine_test) - segment + 1))
    ii = int(rng.integers(0, len(intruder_test) - segment + 1))
    return list(genuine_test[gi : gi + segment]) + list(intruder_test[ii : ii + segment])


def intrusion_experiment(
    model: UserModel,
    spliced: Sequence[Observation],
    n: int,
    segment: int = DEFAULT_SEGMENT,
) -> IntrusionTrace:
    """Score the trailing-n window at every position of a spliced stream."""
    if len(spliced) != 2 * segment:
        raise ValueError(f"expected {2 * segment} observations, got {len(spliced)}")
    if n > len(spliced):
        raise ValueError(f"window length {n} exceeds stream length {len(spliced)}")
    indices = model.vocab.project(spliced)
    windows = np.lib.stride_tricks.sliding_window_view(indices, n)
    scores = model.score_windows(windows)
    return IntrusionTrace(
        genuine_segment=list(spliced[:segment]),
        intruder_segment=list(spliced[segment:]),
        scores=[float(s) for s in scores],
        n=n,
    )


def detection_latency(trace: IntrusionTrace, threshold: float) -> int | None:
    """Windows needed after the splice before the score drops below
    threshold; None when no post-splice window ever does."""
    splice = trace.splice_index
    for end, score in zip(trace.window_end_indices(), trace.scores):
        if end >= splice and score < threshold:
            return end - splice + 1
    return None


def genuine_score_thresholds(
    records: Iterable[ScoreRecord], percentile: float = 5.0
) -> dict[str, float]:
    """Per-user decision threshold: a low percentile of the user's own
    genuine window scores."""
    by_user: dict[str, list[float]] = {}
    for rec in records:
        if rec.genuine:
            by_user.setdefault(rec.model_owner, []).append(rec.score)
    return {
        user: float(np.percentile(np.asarray(scores), percentile))
        for user, scores in by_user.items()
    }


@dataclass(slots=True)
class LatencyRow:
    model_owner: str
    intruder: str
    n: int
    latency: int | None

    @property
    def detected(self) -> bool:
        return self.latency is not None


@dataclass(slots=True)
class IntrusionStudy:
    """All (genuine, intruder) pairings at one window length."""

    n: int
    segment: int
    mean_scores: np.ndarray  # mean score per window end index
    rows: list[LatencyRow] = field(default_factory=list)

    def detection_rate(self, within: int) -> float:
        if not self.rows:
            raise ValueError("no intrusion pairs were run")
        hits = sum(1 for r in self.rows if r.latency is not None and r.latency <= within)
        return hits / len(self.rows)


def intrusion_study(
    models: Mapping[str, UserModel],
    test_observations: Mapping[str, Sequence[Observation]],
    n: int,
    thresholds: Mapping[str, float],
    seed: int = 0,
    segment: int = DEFAULT_SEGMENT,
) -> IntrusionStudy:
    """Run the splice experiment for every ordered (genuine, intruder) pair.

    Pairs whose test sequences are shorter than the segment are skipped
    with a warning. Slice positions are derived deterministically from the
    study seed and the pair of user ids.
    """
    users = sorted(u for u in models if u in test_observations)
    score_sum = np.zeros(2 * segment - n + 1)
    rows: list[LatencyRow] = []
    n_traces = 0
    for g_pos, genuine_user in enumerate(users):
        if len(test_observations[genuine_user]) < segment:
            log.warning("skipping %s as genuine: test sequence too short", genuine_user)
            continue
        for i_pos, intruder in enumerate(users):
            if intruder == genuine_user:
                continue
            if len(test_observations[intruder]) < segment:
                continue
            pair_seed = np.random.SeedSequence(entropy=(seed, g_pos, i_pos))
            spliced = inject_intrusion(
                test_observations[genuine_user], test_observations[intruder], pair_seed, segment
            )
            trace = intrusion_experiment(models[genuine_user], spliced, n, segment)
            score_sum += np.asarray(trace.scores)
            n_traces += 1
            rows.append(
                LatencyRow(
                    genuine_user,
                    intruder,
                    n,
                    detection_latency(trace, thresholds[genuine_user]),
                )
            )
    if n_traces == 0:
        raise ValueError("no (genuine, intruder) pair had enough test data")
    return IntrusionStudy(n, segment, score_sum / n_traces, rows)


def write_intrusion_curve_csv(
    studies: Sequence[IntrusionStudy], dest: str | Path | TextIO
) -> None:
    def _write(fh: TextIO) -> None:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["n", "window_index", "mean_score"])
        for study in studies:
            for offset, score in enumerate(study.mean_scores):
                w.writerow([study.n, study.n - 1 + offset, format_number(score)])

    _open_out(dest, _write)


def write_latency_csv(studies: Sequence[IntrusionStudy], dest: str | Path | TextIO) -> None:
    def _write(fh: TextIO) -> None:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["model_owner", "intruder", "n", "latency_windows", "detected"])
        for study in studies:
            for r in study.rows:
                w.writerow(
                    [
                        r.model_owner,
                        r.intruder,
                        r.n,
                        "" if r.latency is None else r.latency,
                        int(r.detected),
                    ]
                )

    _open_out(dest, _write)


def _open_out(dest: str | Path | TextIO, write_fn) -> None:
    if isinstance(dest, (str, Path)):
        with open(dest, "w", encoding="utf-8", newline="") as fh:
            write_fn(fh)
    else:
        write_fn(dest)
