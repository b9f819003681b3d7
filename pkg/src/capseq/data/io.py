"""Serialization of the canonical dataset.

An ingested dataset directory contains:

* ``sessions.jsonl`` — one JSON object per session with encoded ids:
  ``{"user": int, "pois": [int...], "arrivals": [s...], "departures": [s...]}``
* ``encodings.json`` — the label encoding maps
* ``pois.json`` — per encoded POI: id, lat, lon, category
* ``graph.json`` — adjacency lists of the friendship graph (optional)

Everything is written with sorted keys and no timestamps so identical
inputs produce identical bytes.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Iterable, Sequence

from .types import CheckinRecord, Encodings, Poi, Session, SocialGraph, Visit

SESSIONS_FILE = "sessions.jsonl"
ENCODINGS_FILE = "encodings.json"
POIS_FILE = "pois.json"
GRAPH_FILE = "graph.json"


def _dump_json(obj, path: Path) -> None:
    path.write_text(json.dumps(obj, sort_keys=True, indent=1) + "\n", encoding="utf-8")


def save_dataset(
    out_dir,
    sessions: Sequence[Session],
    encodings: Encodings,
    graph: SocialGraph | None = None,
) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    poi_table: dict[int, dict] = {}
    lines = []
    for session in sessions:
        pois, arrivals, departures = [], [], []
        for visit in session.visits:
            ix = encodings.poi(visit.poi.poi_id)
            if ix not in poi_table:
                poi_table[ix] = {
                    "id": visit.poi.poi_id,
                    "lat": visit.poi.lat,
                    "lon": visit.poi.lon,
                    "category": visit.poi.category,
                }
            pois.append(ix)
            arrivals.append(visit.arrival)
            departures.append(visit.departure)
        lines.append(
            json.dumps(
                {
                    "user": encodings.user(session.user_id),
                    "pois": pois,
                    "arrivals": arrivals,
                    "departures": departures,
                },
                sort_keys=True,
            )
        )
    (out / SESSIONS_FILE).write_text("\n".join(lines) + "\n", encoding="utf-8")
    _dump_json(encodings.to_dict(), out / ENCODINGS_FILE)
    _dump_json({str(k): v for k, v in sorted(poi_table.items())}, out / POIS_FILE)
    if graph is not None:
        _dump_json(graph.to_dict(), out / GRAPH_FILE)


def load_dataset(data_dir) -> tuple[list[Session], Encodings, SocialGraph]:
    data = Path(data_dir)
    encodings = Encodings.from_dict(
        json.loads((data / ENCODINGS_FILE).read_text(encoding="utf-8"))
    )
    poi_table = json.loads((data / POIS_FILE).read_text(encoding="utf-8"))
    pois = {
        int(ix): Poi(rec["id"], rec["lat"], rec["lon"], rec["category"])
        for ix, rec in poi_table.items()
    }
    sessions = []
    with open(data / SESSIONS_FILE, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            visits = tuple(
                Visit(pois[p], a, d)
                for p, a, d in zip(obj["pois"], obj["arrivals"], obj["departures"])
            )
            sessions.append(Session(encodings.ix_to_user[obj["user"]], visits))
    graph_path = data / GRAPH_FILE
    graph = (
        SocialGraph.from_dict(json.loads(graph_path.read_text(encoding="utf-8")))
        if graph_path.exists()
        else SocialGraph()
    )
    return sessions, encodings, graph


def write_checkins_csv(path, records: Iterable[CheckinRecord]) -> None:
    """Write records in the canonical CSV schema."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["userid", "placeid", "datetime", "lat", "lon", "city", "category"])
        for r in records:
            writer.writerow(
                [r.user_id, r.poi_id, r.timestamp, f"{r.lat:.6f}", f"{r.lon:.6f}",
                 r.city or "", r.category]
            )


def write_friendships_csv(path, graph: SocialGraph) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["userid1", "userid2"])
        for u, friends in sorted(graph.to_dict().items()):
            for f in friends:
                if u < f:
                    writer.writerow([u, f])


def poi_index(sessions: Iterable[Session]) -> dict[str, Poi]:
    """poi_id -> Poi over everything observed in the sessions."""
    out: dict[str, Poi] = {}
    for session in sessions:
        for visit in session.visits:
            out.setdefault(visit.poi.poi_id, visit.poi)
    return out
