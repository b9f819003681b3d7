"""Visit derivation and sessionization of per-user check-in streams.

A check-in only records an arrival; the departure of visit i is
recovered as ``arrival_{i+1} - travel_time(poi_i, poi_{i+1})``, clamped
so stays cannot go negative. The last visit of a user has no successor
and gets the user's median observed stay (30 minutes when nothing was
observed).
"""

from __future__ import annotations

import math
import statistics
from collections import defaultdict
from typing import Iterable, Sequence

from ..geo import WALK_SPEED_KMH, haversine_km
from .types import CheckinRecord, Poi, Session, Visit

SESSION_WINDOW_SECONDS = 8 * 3600
FALLBACK_STAY_SECONDS = 30 * 60
DEFAULT_MIN_CHECKINS = 25


class TravelTimeModel:
    """Travel time between POIs, seconds.

    ``deterministic`` (default) assumes walking speed over the
    great-circle distance, which keeps every downstream artifact
    reproducible. ``lognormal`` fits ln(seconds-per-km) on observed
    consecutive check-in gaps and predicts with the distribution median.
    """

    def __init__(self, mode: str = "deterministic", speed_kmh: float = WALK_SPEED_KMH):
        if mode not in ("deterministic", "lognormal"):
            raise ValueError(f"unknown travel time mode {mode!r}")
        self.mode = mode
        self.speed_kmh = speed_kmh
        self.log_mu: float | None = None
        self.log_sigma: float | None = None

    def fit(self, records: Sequence[CheckinRecord]) -> "TravelTimeModel":
        """Fit the lognormal mode on consecutive same-user check-in gaps."""
        samples = []
        by_user: dict[str, list[CheckinRecord]] = defaultdict(list)
        for r in records:
            by_user[r.user_id].append(r)
        for user_records in by_user.values():
            user_records.sort(key=lambda r: r.timestamp)
            for a, b in zip(user_records, user_records[1:]):
                dist = haversine_km(a.lat, a.lon, b.lat, b.lon)
                gap = b.timestamp - a.timestamp
                if dist > 0.05 and gap > 0:
                    samples.append(math.log(gap / dist))
        if samples:
            self.log_mu = statistics.fmean(samples)
            self.log_sigma = statistics.pstdev(samples) if len(samples) > 1 else 0.0
        return self

    def seconds(self, a: Poi, b: Poi) -> float:
        dist = haversine_km(a.lat, a.lon, b.lat, b.lon)
        if self.mode == "deterministic" or self.log_mu is None:
            return dist / self.speed_kmh * 3600.0
        return dist * math.exp(self.log_mu)


def derive_visits(
    records: Sequence[CheckinRecord],
    travel_time: TravelTimeModel | None = None,
) -> list[Visit]:
    """Turn one user's timestamp-sorted check-ins into visits with stays."""
    if not records:
        return []
    if any(b.timestamp < a.timestamp for a, b in zip(records, records[1:])):
        raise ValueError("records must be sorted by timestamp")
    if len({r.user_id for r in records}) > 1:
        raise ValueError("derive_visits expects records of a single user")
    travel_time = travel_time or TravelTimeModel()

    pois = [Poi(r.poi_id, r.lat, r.lon, r.category) for r in records]
    visits = []
    for i in range(len(records) - 1):
        tt = travel_time.seconds(pois[i], pois[i + 1])
        departure = records[i + 1].timestamp - int(round(tt))
        departure = max(departure, records[i].timestamp)
        visits.append(Visit(pois[i], records[i].timestamp, departure))

    stays = [v.stay for v in visits]
    median_stay = int(statistics.median(stays)) if stays else FALLBACK_STAY_SECONDS
    last = records[-1]
    visits.append(Visit(pois[-1], last.timestamp, last.timestamp + median_stay))
    return visits


def sessionize(
    visits: Sequence[Visit],
    user_id: str,
    window_seconds: int = SESSION_WINDOW_SECONDS,
) -> list[Session]:
    """Greedy split: a new session starts when the next arrival falls
    outside ``window_seconds`` of the current session's start."""
    sessions = []
    current: list[Visit] = []
    start = None
    for visit in visits:
        if start is None or visit.arrival > start + window_seconds:
            if current:
                sessions.append(Session(user_id, tuple(current)))
            current = [visit]
            start = visit.arrival
        else:
            current.append(visit)
    if current:
        sessions.append(Session(user_id, tuple(current)))
    return sessions


def filter_users(sessions: Iterable[Session], min_checkins: int = DEFAULT_MIN_CHECKINS) -> list[Session]:
    """Drop every session of users with fewer than ``min_checkins`` visits."""
    if min_checkins < 0:
        raise ValueError("min_checkins must be >= 0")
    sessions = list(sessions)
    counts: dict[str, int] = defaultdict(int)
    for s in sessions:
        counts[s.user_id] += len(s)
    return [s for s in sessions if counts[s.user_id] >= min_checkins]


def build_sessions(
    records: Sequence[CheckinRecord],
    travel_time: TravelTimeModel | None = None,
    min_checkins: int = 0,
    window_seconds: int = SESSION_WINDOW_SECONDS,
) -> list[Session]:
    """records -> visits -> sessions for every user, optionally filtered.

    Users are processed in sorted order so the output ordering is a pure
    function of the input bytes.
    """
    by_user: dict[str, list[CheckinRecord]] = defaultdict(list)
    for r in records:
        by_user[r.user_id].append(r)
    sessions: list[Session] = []
    for user_id in sorted(by_user):
        user_records = sorted(by_user[user_id], key=lambda r: r.timestamp)
        # duplicate timestamps cannot form strictly increasing arrivals
        deduped = []
        for r in user_records:
            if deduped and r.timestamp <= deduped[-1].timestamp:
                continue
            deduped.append(r)
        visits = derive_visits(deduped, travel_time)
        sessions.extend(sessionize(visits, user_id, window_seconds))
    if min_checkins:
        sessions = filter_users(sessions, min_checkins)
    return sessions


def training_sessions(sessions: Iterable[Session]) -> list[Session]:
    """Sessions usable as model training units (length >= 2)."""
    return [s for s in sessions if len(s) >= 2]
