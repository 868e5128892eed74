"""
From raw screen events to a model-ready symbol stream
=====================================================

Walks one hand-written event log through every ingestion stage: unlock/lock
sessionization, fixed-period foreground sampling, contextual symbol encoding
with session-start and day-change markers, and projection into a closed
vocabulary that folds never-seen apps into unknown symbols.
"""

from appauth.encode import Observation, Vocabulary, encode_sessions
from appauth.ingest import RawEvent, resample_sessions, sessionize

DAY = 86_400
MONDAY = 4 * DAY  # epoch day 0 is a Thursday, so day 4 is the first Monday
SATURDAY = 9 * DAY

# One user's morning: a short mail/chat session, then a late-night map check
# that runs past midnight, then a Saturday afternoon session.
events = [
    RawEvent("alice", MONDAY + 9_000, "unlock"),
    RawEvent("alice", MONDAY + 9_005, "app", "mail"),
    RawEvent("alice", MONDAY + 9_400, "app", "chat"),
    RawEvent("alice", MONDAY + 9_650, "lock"),
    RawEvent("alice", MONDAY + 86_280, "unlock"),
    RawEvent("alice", MONDAY + 86_290, "app", "maps"),
    RawEvent("alice", MONDAY + DAY + 300, "lock"),
    RawEvent("alice", SATURDAY + 40_000, "unlock"),
    RawEvent("alice", SATURDAY + 40_010, "app", "chat"),
    RawEvent("alice", SATURDAY + 40_200, "app", "game"),
    RawEvent("alice", SATURDAY + 40_500, "lock"),
]

sessions = sessionize(events)
print(f"{len(events)} raw events -> {len(sessions)} sessions")
for s in sessions:
    print(f"  {s.start:>7} .. {s.end:>7}  {len(s.samples)} foreground samples")

# Resample each session on a fixed 60 s grid; the foreground app carries
# forward between samples, so long dwells repeat their symbol.
sampled = resample_sessions(sessions, period=60)
print("\nafter 60 s resampling:")
for s in sampled:
    apps = [a for _, a in s.samples]
    print(f"  session @{s.start}: {apps}")

# Encoding tags every sample with its time block (three 8-hour thirds of the
# day) and weekday/weekend flag, inserts a session-start marker per session,
# and a day-change marker where a session crosses midnight.
stream = encode_sessions(sampled)
print("\nencoded stream:")
for ts, obs in stream:
    print(f"  {ts:>7}  {obs.to_text()}")

# A vocabulary is closed over the apps seen in training. Projection maps each
# observation to an integer symbol; apps outside the vocabulary fold into the
# unknown symbol for their context instead of failing.
vocab = Vocabulary(["mail", "chat", "maps"])
print(f"\n{vocab}: apps {vocab.apps}")
print(f"unknown block starts at {vocab.unknown_base}, "
      f"session-start index {vocab.session_start_index}, "
      f"day-change index {vocab.day_change_index}")

indices = vocab.project([obs for _, obs in stream])
print("\nprojected symbols ('game' was never trained on, so it folds to unknown):")
for (_, obs), idx in zip(stream, indices):
    note = "  <- unknown-app symbol" if idx >= vocab.unknown_base and obs.kind == "app" else ""
    print(f"  {obs.to_text():<18} -> {int(idx):>3}{note}")
