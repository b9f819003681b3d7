"""Core domain types: check-ins, visits, sessions, encodings, friendship graph."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping


class DataError(ValueError):
    """Raised when input data violates a structural requirement."""


@dataclass(frozen=True)
class CheckinRecord:
    """A single timestamped, geolocated, categorized check-in.

    ``category`` is hierarchical, ':'-separated (e.g. "Food:Coffee Shop").
    ``timestamp`` is UTC seconds since the epoch.
    """

    user_id: str
    poi_id: str
    timestamp: int
    lat: float
    lon: float
    category: str
    city: str | None = None

    def __post_init__(self):
        if not self.user_id or not self.poi_id or not self.category:
            raise DataError("user_id, poi_id and category must be non-empty")
        if self.timestamp <= 0:
            raise DataError(f"timestamp must be positive, got {self.timestamp}")
        if not -90.0 <= self.lat <= 90.0:
            raise DataError(f"latitude out of range: {self.lat}")
        if not -180.0 <= self.lon <= 180.0:
            raise DataError(f"longitude out of range: {self.lon}")


@dataclass(frozen=True)
class Poi:
    """Identity and static attributes of a point of interest."""

    poi_id: str
    lat: float
    lon: float
    category: str


@dataclass(frozen=True)
class Visit:
    """A stay at a POI with derived arrival/departure bounds."""

    poi: Poi
    arrival: int
    departure: int

    def __post_init__(self):
        if self.departure < self.arrival:
            raise DataError(
                f"departure {self.departure} precedes arrival {self.arrival}"
            )

    @property
    def stay(self) -> int:
        """Stay duration in seconds."""
        return self.departure - self.arrival

    @property
    def hour(self) -> int:
        """Arrival hour of day, UTC, 0..23."""
        return (self.arrival // 3600) % 24


@dataclass(frozen=True)
class Session:
    """One user's consecutive visits within the session window.

    Training sessions require length >= 2; singletons are kept for
    feature statistics only.
    """

    user_id: str
    visits: tuple[Visit, ...]

    def __post_init__(self):
        if not self.visits:
            raise DataError("session must contain at least one visit")
        arrivals = [v.arrival for v in self.visits]
        if any(b <= a for a, b in zip(arrivals, arrivals[1:])):
            raise DataError("visit arrivals must be strictly increasing")

    @property
    def start(self) -> int:
        return self.visits[0].arrival

    @property
    def end(self) -> int:
        return self.visits[-1].arrival

    @property
    def singleton(self) -> bool:
        return len(self.visits) == 1

    def __len__(self) -> int:
        return len(self.visits)


class Encodings:
    """Bijective label encodings for POIs, categories and users.

    Dense indices run 0..n-1 in first-seen order of the fit input, so a
    round trip through ``save``/``load`` is stable.
    """

    def __init__(self, poi_to_ix: dict, cat_to_ix: dict, user_to_ix: dict):
        self.poi_to_ix = dict(poi_to_ix)
        self.cat_to_ix = dict(cat_to_ix)
        self.user_to_ix = dict(user_to_ix)
        self.ix_to_poi = {v: k for k, v in self.poi_to_ix.items()}
        self.ix_to_cat = {v: k for k, v in self.cat_to_ix.items()}
        self.ix_to_user = {v: k for k, v in self.user_to_ix.items()}
        if len(self.ix_to_poi) != len(self.poi_to_ix):
            raise DataError("poi encoding is not bijective")
        if len(self.ix_to_cat) != len(self.cat_to_ix):
            raise DataError("category encoding is not bijective")
        if len(self.ix_to_user) != len(self.user_to_ix):
            raise DataError("user encoding is not bijective")

    @classmethod
    def fit(cls, sessions: Iterable[Session]) -> "Encodings":
        pois: dict = {}
        cats: dict = {}
        users: dict = {}
        for session in sessions:
            users.setdefault(session.user_id, len(users))
            for visit in session.visits:
                pois.setdefault(visit.poi.poi_id, len(pois))
                cats.setdefault(visit.poi.category, len(cats))
        return cls(pois, cats, users)

    @property
    def n_pois(self) -> int:
        return len(self.poi_to_ix)

    @property
    def n_categories(self) -> int:
        return len(self.cat_to_ix)

    @property
    def n_users(self) -> int:
        return len(self.user_to_ix)

    def poi(self, poi_id: str) -> int:
        try:
            return self.poi_to_ix[poi_id]
        except KeyError:
            raise KeyError(f"unknown POI id {poi_id!r}: encodings are closed-world")

    def category(self, cat: str) -> int:
        try:
            return self.cat_to_ix[cat]
        except KeyError:
            raise KeyError(f"unknown category {cat!r}: encodings are closed-world")

    def user(self, user_id: str) -> int:
        try:
            return self.user_to_ix[user_id]
        except KeyError:
            raise KeyError(f"unknown user id {user_id!r}: encodings are closed-world")

    def to_dict(self) -> dict:
        return {
            "pois": self.poi_to_ix,
            "categories": self.cat_to_ix,
            "users": self.user_to_ix,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "Encodings":
        return cls(d["pois"], d["categories"], d["users"])

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Encodings)
            and self.poi_to_ix == other.poi_to_ix
            and self.cat_to_ix == other.cat_to_ix
            and self.user_to_ix == other.user_to_ix
        )


class SocialGraph:
    """Undirected friendship graph; edges are symmetric, no self-loops."""

    def __init__(self, edges: Iterable[tuple[str, str]] = ()):
        adj: dict[str, set] = {}
        for a, b in edges:
            if a == b:
                continue
            adj.setdefault(a, set()).add(b)
            adj.setdefault(b, set()).add(a)
        self._adj = {u: frozenset(v) for u, v in adj.items()}

    def friends(self, user_id: str) -> frozenset:
        return self._adj.get(user_id, frozenset())

    @property
    def users(self) -> frozenset:
        return frozenset(self._adj)

    def n_edges(self) -> int:
        return sum(len(v) for v in self._adj.values()) // 2

    def to_dict(self) -> dict:
        return {u: sorted(v) for u, v in sorted(self._adj.items())}

    @classmethod
    def from_dict(cls, d: Mapping) -> "SocialGraph":
        edges = [(u, f) for u, fs in d.items() for f in fs]
        return cls(edges)
