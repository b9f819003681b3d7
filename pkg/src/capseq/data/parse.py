"""Check-in log parsing into the canonical record form.

The canonical CSV schema is the Weeplaces convention::

    userid,placeid,datetime,lat,lon,city,category

Gowalla-style dumps use different column names; ``FORMATS`` maps both
onto the canonical fields. Rows with missing or garbled mandatory
fields are dropped and counted; more than 50% drops is treated as a
broken input file.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from datetime import datetime, timezone

from .types import CheckinRecord, DataError, SocialGraph

# canonical field -> acceptable source column names, in priority order
FORMATS = {
    "weeplaces": {
        "user": ["userid"],
        "poi": ["placeid"],
        "time": ["datetime"],
        "lat": ["lat"],
        "lon": ["lon"],
        "city": ["city"],
        "category": ["category"],
    },
    "gowalla": {
        "user": ["userid", "user"],
        "poi": ["placeid", "spotid"],
        "time": ["datetime", "checkin_time"],
        "lat": ["lat", "latitude"],
        "lon": ["lng", "lon", "longitude"],
        "city": ["city"],
        "category": ["category", "spot_categories"],
    },
}


@dataclass
class ParseResult:
    records: list
    dropped: int


def _parse_timestamp(raw: str) -> int:
    raw = raw.strip()
    if raw.isdigit():
        return int(raw)
    # ISO-8601, with or without trailing Z
    if raw.endswith("Z"):
        raw = raw[:-1] + "+00:00"
    dt = datetime.fromisoformat(raw)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return int(dt.timestamp())


def parse_checkins(path, fmt: str = "weeplaces") -> ParseResult:
    """Parse a check-in CSV into records sorted by (user, timestamp)."""
    if fmt not in FORMATS:
        raise ValueError(f"unknown format {fmt!r}; expected one of {sorted(FORMATS)}")
    columns = FORMATS[fmt]
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read check-in file {path}: {exc}") from exc

    records = []
    dropped = 0
    total = 0
    with fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise DataError(f"{path}: empty file, header row required")
        header = {name.strip().lower() for name in reader.fieldnames}
        mapping = {}
        for field, candidates in columns.items():
            found = next((c for c in candidates if c in header), None)
            if found is None and field not in ("city",):
                raise DataError(
                    f"{path}: missing required column for {field!r} "
                    f"(expected one of {candidates})"
                )
            mapping[field] = found
        for row in reader:
            total += 1
            row = {k.strip().lower(): (v or "").strip() for k, v in row.items() if k}
            try:
                city = row.get(mapping["city"]) if mapping["city"] else None
                record = CheckinRecord(
                    user_id=row[mapping["user"]],
                    poi_id=row[mapping["poi"]],
                    timestamp=_parse_timestamp(row[mapping["time"]]),
                    lat=float(row[mapping["lat"]]),
                    lon=float(row[mapping["lon"]]),
                    category=row[mapping["category"]],
                    city=city or None,
                )
            except (KeyError, ValueError, DataError):
                dropped += 1
                continue
            records.append(record)

    if total > 0 and dropped > total / 2:
        raise DataError(
            f"{path}: {dropped} of {total} rows dropped; "
            "input does not look like a valid check-in log"
        )
    records.sort(key=lambda r: (r.user_id, r.timestamp))
    return ParseResult(records=records, dropped=dropped)


def parse_friendships(path) -> SocialGraph:
    """Parse a friendship edge list CSV ``userid1,userid2`` (header row)."""
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read friendship file {path}: {exc}") from exc
    edges = []
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            return SocialGraph()
        for row in reader:
            if len(row) < 2:
                continue
            a, b = row[0].strip(), row[1].strip()
            if a and b:
                edges.append((a, b))
    return SocialGraph(edges)
