"""Apriori-style trip construction under distance and time constraints.

Starting from a seed POI, candidate trips grow level by level from the
POIs within the distance threshold of the last stop; any extension that
repeats a POI, breaks the threshold, or pushes cumulative travel + stay
time past the budget is pruned. A greedy beam keeps the search
tractable; beam width ``None`` enumerates exhaustively (used as the
test oracle mode). Trips are ranked by summed constraint-discounted
preference score, lower total travel time breaking ties.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..generation import GenRequest, GeneratedSequence
from ..geo import WALK_SPEED_KMH
from ..features import HOURS, FeatureTables
from ..models.base import SequenceRecommender

DEFAULT_EPSILON_KM = 2.0
DEFAULT_BUDGET_HOURS = 8.0
DEFAULT_BEAM_WIDTH = 100


@dataclass
class _Trip:
    pois: tuple
    hours: tuple
    elapsed: float  # travel + stay seconds so far
    travel: float   # travel seconds only (final tie-break)
    score: float


def apriori_generate(
    tables: FeatureTables,
    user: int | None,
    start: int,
    start_hour: float,
    length: int,
    epsilon_km: float = DEFAULT_EPSILON_KM,
    budget_hours: float = DEFAULT_BUDGET_HOURS,
    k: int = 10,
    beam_width: int | None = DEFAULT_BEAM_WIDTH,
) -> list:
    """Top-k trips from ``start``; every returned trip respects the
    distance threshold between consecutive stops and the time budget."""
    if epsilon_km <= 0:
        raise ValueError("epsilon_km must be > 0")
    budget = budget_hours * 3600.0
    n_pois = tables.n_pois

    def extensions(trip: _Trip) -> list:
        last = trip.pois[-1]
        hour = trip.hours[-1]
        out = []
        for nxt in range(n_pois):
            if nxt in trip.pois:
                continue
            dist = tables.distance_km(last, nxt)
            if dist > epsilon_km:
                continue
            travel = dist / WALK_SPEED_KMH * 3600.0
            elapsed = trip.elapsed + travel + tables.stay.mean(nxt)
            if elapsed > budget:
                continue
            new_hour = (hour + (tables.stay.mean(last) + travel) / 3600.0) % HOURS
            gain = tables.consolidated(user, nxt, int(new_hour), last)
            out.append(
                _Trip(
                    pois=trip.pois + (nxt,),
                    hours=trip.hours + (new_hour,),
                    elapsed=elapsed,
                    travel=trip.travel + travel,
                    score=trip.score + gain,
                )
            )
        return out

    seed_trip = _Trip(
        pois=(start,),
        hours=(float(start_hour) % HOURS,),
        elapsed=tables.stay.mean(start),
        travel=0.0,
        score=tables.preference(user, start, int(start_hour)),
    )
    level = [seed_trip]
    completed: list[_Trip] = []
    while level and len(level[0].pois) < length:
        nxt_level: list[_Trip] = []
        for trip in level:
            grown = extensions(trip)
            if not grown:
                completed.append(trip)  # dead end, kept as fallback
            nxt_level.extend(grown)
        nxt_level.sort(key=lambda t: (-t.score, t.travel, t.pois))
        if beam_width is not None:
            nxt_level = nxt_level[:beam_width]
        level = nxt_level
    full = level if level else []
    pool = full or completed or [seed_trip]
    pool = sorted(pool, key=lambda t: (-t.score, t.travel, t.pois))[:k]
    return [
        GeneratedSequence(
            pois=list(t.pois), step_probs=[], score=t.score, hours=list(t.hours)
        )
        for t in pool
    ]


class AprioriRecommender(SequenceRecommender):
    requires_tables = True

    def __init__(
        self,
        epsilon_km: float = DEFAULT_EPSILON_KM,
        budget_hours: float = DEFAULT_BUDGET_HOURS,
        beam_width: int | None = DEFAULT_BEAM_WIDTH,
    ):
        self.epsilon_km = epsilon_km
        self.budget_hours = budget_hours
        self.beam_width = beam_width

    def fit(self, sessions, tables=None):
        if tables is None:
            raise ValueError("AprioriRecommender.fit requires feature tables")
        self.tables_ = tables
        return self

    def generate(self, request: GenRequest, seed: int = 0):
        self._check_fitted("tables_")
        return apriori_generate(
            self.tables_,
            request.user,
            request.start_poi,
            request.start_hour,
            request.length,
            epsilon_km=self.epsilon_km,
            budget_hours=self.budget_hours,
            k=request.k,
            beam_width=self.beam_width,
        )
