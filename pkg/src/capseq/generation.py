"""Free-running sequence generation from a trained recurrent model.

Each candidate rollout samples the next POI from the model's
multinomial output, feeds it back as the next input, advances the clock
by the POI's expected stay plus travel time, and recomputes the
attribute vector. Candidates are then ranked by the summed preference
score of their POIs and the top k are returned. Every candidate owns an
RNG stream derived from (seed, candidate index), so rollouts are
independent and reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .features import FeatureTables, HOURS
from .geo import WALK_SPEED_KMH


@dataclass
class GenRequest:
    user: int | None          # encoded user index (None -> generalized scores)
    start_poi: int            # encoded POI index
    start_hour: float
    length: int = 25
    candidates: int = 10
    k: int = 10
    no_repeat: bool = False
    consolidated: bool = False  # rank with constraint-discounted scores

    def __post_init__(self):
        if self.length < 1:
            raise ValueError("length must be >= 1")
        if self.k < 1 or self.candidates < self.k:
            raise ValueError("need candidates >= k >= 1")


@dataclass
class GeneratedSequence:
    pois: list
    step_probs: list
    score: float
    hours: list = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.pois)


def sample_next(probs: np.ndarray, rng: np.random.Generator) -> int:
    """Draw one POI index from a categorical distribution."""
    probs = np.asarray(probs, dtype=np.float64).reshape(-1)
    total = probs.sum()
    if not np.isfinite(total) or total <= 0:
        raise ValueError("probabilities must be positive and finite")
    return int(rng.choice(len(probs), p=probs / total))


def _rollout(net, request: GenRequest, tables: FeatureTables, rng) -> GeneratedSequence:
    pois = [request.start_poi]
    hours = [float(request.start_hour) % HOURS]
    step_probs: list[float] = []
    state = net.init_state(1)
    feat = (
        tables.expected_feature(
            request.user, request.start_poi, int(request.start_hour)
        )
        / tables.feature_scale
    )
    current = request.start_poi
    hour = float(request.start_hour)
    prev: int | None = None
    for _ in range(request.length - 1):
        attr = (
            tables.attribute_vector(current, int(hour) % HOURS, prev)
            / tables.attribute_scale
        )
        state, _, probs = net.forward_step(
            state, np.array([current]), attr[None, :], feat[None, :]
        )
        p = probs[0]
        if request.no_repeat:
            p = p.copy()
            p[np.asarray(pois, dtype=np.int64)] = 0.0
            if p.sum() <= 0:
                p = probs[0]  # everything visited: fall back to repeats
        nxt = sample_next(p, rng)
        step_probs.append(float(probs[0][nxt]))
        advance = (
            tables.stay.mean(current)
            + tables.distance_km(current, nxt) / WALK_SPEED_KMH * 3600.0
        )
        hour = (hour + advance / 3600.0) % HOURS
        prev = current
        current = nxt
        pois.append(nxt)
        hours.append(hour)
    return GeneratedSequence(pois=pois, step_probs=step_probs, score=0.0, hours=hours)


def advance_hours(tables: FeatureTables, pois, start_hour: float) -> list:
    """Hour-of-day at each POI of a sequence, advancing by expected stay
    plus travel time between consecutive stops."""
    hours = [float(start_hour) % HOURS]
    hour = float(start_hour)
    for a, b in zip(pois, pois[1:]):
        advance = (
            tables.stay.mean(a) / 3600.0
            + tables.distance_km(a, b) / WALK_SPEED_KMH
        )
        hour = (hour + advance) % HOURS
        hours.append(hour)
    return hours


def score_sequence(
    seq: GeneratedSequence,
    user: int | None,
    tables: FeatureTables,
    consolidated: bool = False,
) -> float:
    """Sum of per-POI preference scores at the hour each POI is reached;
    optionally the constraint-discounted variant."""
    total = 0.0
    prev = None
    for poi, hour in zip(seq.pois, seq.hours):
        if consolidated and prev is not None:
            total += tables.consolidated(user, poi, int(hour), prev)
        else:
            total += tables.preference(user, poi, int(hour))
        prev = poi
    return total


def generate(
    net,
    request: GenRequest,
    tables: FeatureTables,
    seed: int = 0,
) -> list:
    """Top-k generated sequences, best score first; ties keep the
    earlier candidate."""
    scored = []
    for cand in range(request.candidates):
        rng = np.random.default_rng([seed, cand])
        seq = _rollout(net, request, tables, rng)
        seq.score = score_sequence(seq, request.user, tables, request.consolidated)
        scored.append(seq)
    order = sorted(range(len(scored)), key=lambda i: (-scored[i].score, i))
    return [scored[i] for i in order[: request.k]]
