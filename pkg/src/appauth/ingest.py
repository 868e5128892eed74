"""Event-log parsing, session reconstruction, resampling and chronological splits.

The raw material is a stream of time-stamped foreground-app / screen-lock
events per user. Everything downstream (alphabet encoding, model training)
works on usage sessions resampled at a fixed period.
"""

from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence, TextIO

log = logging.getLogger(__name__)

EVENT_LOG_HEADER = ["user_id", "local_timestamp", "kind", "app_id"]
EVENT_KINDS = ("app", "unlock", "lock")

DEFAULT_IDLE_GAP = 300.0
DEFAULT_MIN_TRAIN = 500
DEFAULT_MIN_TEST = 200


class FormatError(ValueError):
    """Input file does not match the documented schema."""


@dataclass(frozen=True, slots=True)
class RawEvent:
    """One log record: a foreground-app change or a screen lock/unlock.

    ``local_timestamp`` is integer seconds since epoch in device-local time;
    clock-of-day and weekday are derived from it directly, without timezone
    conversion.
    """

    user_id: str
    local_timestamp: int
    kind: str  # one of EVENT_KINDS
    app_id: str = ""

    def __post_init__(self) -> None:
        if self.local_timestamp < 0:
            raise ValueError(f"negative timestamp {self.local_timestamp}")
        if self.kind not in EVENT_KINDS:
            raise ValueError(f"unknown event kind {self.kind!r}")
        if self.kind == "app" and not self.app_id:
            raise ValueError("app event without app_id")


@dataclass(slots=True)
class Session:
    """One unlock-to-lock usage session with its app samples.

    ``samples`` are ordered ``(timestamp, app_id)`` pairs, all within
    ``[start, end]``.
    """

    user_id: str
    start: int
    end: int
    samples: list[tuple[int, str]] = field(default_factory=list)

    def __post_init__(self) -> None:
        if self.end < self.start:
            raise ValueError("session end precedes start")

    @property
    def duration(self) -> int:
        return self.end - self.start


@dataclass(slots=True)
class RowError:
    line: int
    message: str


@dataclass(slots=True)
class ParseReport:
    """Outcome of parsing one event-log file; malformed rows are dropped but
    never silently: each one lands here."""

    rows_total: int = 0
    rows_ok: int = 0
    errors: list[RowError] = field(default_factory=list)

    def add_error(self, line: int, message: str) -> None:
        self.errors.append(RowError(line, message))


@dataclass(slots=True)
class SplitDataset:
    """Chronological train/test division of one user's data.

    ``train`` and ``test`` hold either flat ``(timestamp, app_id)`` samples or
    ``Session`` objects, depending on which splitter produced them.
    """

    train: list
    test: list
    train_fraction: float

    def __post_init__(self) -> None:
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError("train_fraction must be in (0, 1)")


def _count_samples(side: Sequence) -> int:
    if side and isinstance(side[0], Session):
        return sum(len(s.samples) for s in side)
    return len(side)


def parse_event_log(source: str | Path | TextIO) -> tuple[list[RawEvent], ParseReport]:
    """Parse an event-log CSV into events, in file order.

    The schema is ``user_id,local_timestamp,kind,app_id`` with kind in
    {app, unlock, lock} and an empty app_id on unlock/lock rows. Malformed
    rows are dropped and recorded in the returned report.

    Raises FormatError if the header row is missing or wrong.
    """
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8", newline="") as fh:
            return parse_event_log(fh)

    reader = csv.reader(source)
    try:
        header = next(reader)
    except StopIteration:
        raise FormatError("empty file: missing header row") from None
    if [h.strip() for h in header] != EVENT_LOG_HEADER:
        raise FormatError(f"bad header {header!r}, expected {EVENT_LOG_HEADER}")

    events: list[RawEvent] = []
    report = ParseReport()
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        report.rows_total += 1
        if len(row) != 4:
            report.add_error(lineno, f"expected 4 fields, got {len(row)}")
            continue
        user_id, ts_text, kind, app_id = (f.strip() for f in row)
        if not user_id:
            report.add_error(lineno, "empty user_id")
            continue
        try:
            ts = int(ts_text)
        except ValueError:
            report.add_error(lineno, f"bad timestamp {ts_text!r}")
            continue
        if ts < 0:
            report.add_error(lineno, f"negative timestamp {ts}")
            continue
        if kind not in EVENT_KINDS:
            report.add_error(lineno, f"unknown kind {kind!r}")
            continue
        if kind == "app" and not app_id:
            report.add_error(lineno, "app event with empty app_id")
            continue
        if kind != "app" and app_id:
            report.add_error(lineno, f"{kind} event carries app_id {app_id!r}")
            continue
        events.append(RawEvent(user_id, ts, kind, app_id))
        report.rows_ok += 1
    return events, report


def write_event_log(events: Iterable[RawEvent], dest: str | Path | TextIO) -> None:
    """Write events as an event-log CSV (inverse of parse_event_log)."""
    if isinstance(dest, (str, Path)):
        with open(dest, "w", encoding="utf-8", newline="\n") as fh:
            write_event_log(events, fh)
        return
    dest.write(",".join(EVENT_LOG_HEADER) + "\n")
    for ev in events:
        if "," in ev.app_id:
            raise ValueError(f"app_id {ev.app_id!r} contains a comma")
        dest.write(f"{ev.user_id},{ev.local_timestamp},{ev.kind},{ev.app_id}\n")


def group_by_user(events: Iterable[RawEvent]) -> dict[str, list[RawEvent]]:
    """Split a mixed event stream into per-user streams, preserving order."""
    out: dict[str, list[RawEvent]] = {}
    for ev in events:
        out.setdefault(ev.user_id, []).append(ev)
    return out


def sessionize(events: Sequence[RawEvent], idle_gap: float = DEFAULT_IDLE_GAP) -> list[Session]:
    """Reconstruct usage sessions for a single user's event stream.

    Sessions are bounded by unlock/lock pairs where those events exist.
    App events outside any unlock/lock bracket open an implicit session,
    which is split whenever the gap between consecutive app events exceeds
    ``idle_gap`` seconds. Sessions containing no app samples are dropped, so
    the app events partition exactly over the returned sessions.
    """
    users = {ev.user_id for ev in events}
    if len(users) > 1:
        raise ValueError(f"sessionize expects one user, got {sorted(users)}")
    ordered = sorted(events, key=lambda ev: ev.local_timestamp)  # stable tie-break

    sessions: list[Session] = []
    cur: Session | None = None
    explicit = False  # cur was opened by an unlock event

    def close(end: int | None = None) -> None:
        nonlocal cur
        if cur is None:
            return
        if cur.samples:
            last = cur.samples[-1][0]
            cur.end = max(last, end if end is not None else last)
            if end is not None and end < last:
                cur.end = last
            sessions.append(cur)
        cur = None

    for ev in ordered:
        if ev.kind == "unlock":
            close()
            cur = Session(ev.user_id, ev.local_timestamp, ev.local_timestamp)
            explicit = True
        elif ev.kind == "lock":
            if cur is None:
                log.warning("lock at t=%d with no open session; ignored", ev.local_timestamp)
                continue
            close(end=ev.local_timestamp)
        else:  # app
            if cur is None:
                cur = Session(ev.user_id, ev.local_timestamp, ev.local_timestamp)
                explicit = False
            elif not explicit and cur.samples and ev.local_timestamp - cur.samples[-1][0] > idle_gap:
                close()
                cur = Session(ev.user_id, ev.local_timestamp, ev.local_timestamp)
                explicit = False
            cur.samples.append((ev.local_timestamp, ev.app_id))
            if ev.local_timestamp > cur.end:
                cur.end = ev.local_timestamp
    close()
    return sessions


def resample_sessions(sessions: Sequence[Session], period: int) -> list[Session]:
    """Resample each session's foreground app on a fixed grid.

    Within a session, samples are emitted at the first app event and then
    every ``period`` seconds up to the session end; each sample carries the
    app of the most recent app event at or before that instant. For sessions
    derived from app activity the anchor coincides with the session start.
    """
    if period <= 0:
        raise ValueError("period must be positive")
    out: list[Session] = []
    for sess in sessions:
        if not sess.samples:
            continue
        anchor = sess.samples[0][0]
        resampled: list[tuple[int, str]] = []
        i = 0
        t = anchor
        while t <= sess.end:
            while i + 1 < len(sess.samples) and sess.samples[i + 1][0] <= t:
                i += 1
            resampled.append((t, sess.samples[i][1]))
            t += period
        out.append(Session(sess.user_id, sess.start, sess.end, resampled))
    return out


def sample_foreground(sessions: Sequence[Session], period: int) -> list[tuple[int, str]]:
    """Flat fixed-period sample stream across all sessions, in time order."""
    flat: list[tuple[int, str]] = []
    for sess in resample_sessions(sessions, period):
        flat.extend(sess.samples)
    return flat


def chronological_split(samples: Sequence, train_fraction: float) -> SplitDataset:
    """Split a time-sorted flat sample list: earliest floor(fraction * total)
    samples go to train, the remainder to test."""
    if not 0.0 < train_fraction < 1.0:
        raise ValueError("train_fraction must be in (0, 1)")
    if len(samples) < 2:
        raise ValueError(f"need at least 2 samples to split, got {len(samples)}")
    n_train = math.floor(train_fraction * len(samples))
    n_train = min(max(n_train, 1), len(samples) - 1)
    return SplitDataset(list(samples[:n_train]), list(samples[n_train:]), train_fraction)


def split_sessions(sessions: Sequence[Session], train_fraction: float) -> SplitDataset:
    """Session-aware chronological split at the sample level.

    The cut lands on the same sample index as chronological_split of the
    flattened stream; a session straddling the boundary is divided into a
    train fragment and a test fragment so no sample is lost.
    """
    if not 0.0 < train_fraction < 1.0:
        raise ValueError("train_fraction must be in (0, 1)")
    total = sum(len(s.samples) for s in sessions)
    if total < 2:
        raise ValueError(f"need at least 2 samples to split, got {total}")
    n_train = math.floor(train_fraction * total)
    n_train = min(max(n_train, 1), total - 1)

    train: list[Session] = []
    test: list[Session] = []
    remaining = n_train
    for sess in sessions:
        if not sess.samples:
            continue
        k = len(sess.samples)
        if remaining >= k:
            train.append(sess)
            remaining -= k
        elif remaining <= 0:
            test.append(sess)
        else:
            head = sess.samples[:remaining]
            tail = sess.samples[remaining:]
            train.append(Session(sess.user_id, sess.start, head[-1][0], head))
            test.append(Session(sess.user_id, tail[0][0], sess.end, tail))
            remaining = 0
    return SplitDataset(train, test, train_fraction)


def filter_eligible_users(
    splits: Mapping[str, SplitDataset],
    min_train: int = DEFAULT_MIN_TRAIN,
    min_test: int = DEFAULT_MIN_TEST,
) -> list[str]:
    """Users whose splits meet both sample-count thresholds, sorted by id.

    Only app samples count; session markers added later by the encoder do
    not contribute.
    """
    eligible = [
        uid
        for uid, split in splits.items()
        if _count_samples(split.train) >= min_train and _count_samples(split.test) >= min_test
    ]
    return sorted(eligible)


def read_event_log_text(text: str) -> tuple[list[RawEvent], ParseReport]:
    """Convenience wrapper parsing an in-memory CSV string."""
    return parse_event_log(io.StringIO(text))
