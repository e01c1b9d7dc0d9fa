"""Parsing, validation, outlier cleaning and map matching of raw inputs.

Pings are held as a pandas DataFrame with one row per observation; the
:class:`VehiclePing` dataclass is the record-level view used by callers who
iterate.
"""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Optional

import numpy as np
import pandas as pd

from .corridor import CorridorMap, DIRECTIONS

log = logging.getLogger(__name__)

PING_HEADER = ["vehicle_id", "timestamp", "lat", "lon", "speed_kmh", "accel_ms2"]
CRASH_HEADER = ["timestamp", "lat", "lon", "direction"]
WEATHER_HEADER = ["station_id", "hour_start", "temp_f", "precip_mm"]
ACCEL_CAP = 13.0


class IngestError(ValueError):
    """Input file cannot be used (missing, wrong header, mostly garbage)."""


@dataclass(frozen=True)
class VehiclePing:
    vehicle_id: str
    timestamp: float
    latitude: float
    longitude: float
    speed: float
    reported_accel: Optional[float] = None


@dataclass
class ParseReport:
    n_rows: int = 0
    n_parsed: int = 0
    malformed: int = 0
    duplicates: int = 0
    examples: list = field(default_factory=list)  # (line number, reason), first few

    def _bad(self, line, reason):
        self.malformed += 1
        if len(self.examples) < 20:
            self.examples.append((line, reason))


@dataclass
class CleanReport:
    n_in: int
    n_retained: int
    rejected_speed: int
    rejected_accel: int


@dataclass(frozen=True)
class SpeedBounds:
    lower: float
    upper: float


def _float(text):
    v = float(text)
    if not math.isfinite(v):
        raise ValueError("non-finite value")
    return v


def _read_rows(path, header):
    path = Path(path)
    if not path.is_file():
        raise IngestError(f"missing file: {path}")
    fh = path.open(newline="", encoding="utf-8")
    reader = csv.reader(fh)
    try:
        got = next(reader)
    except StopIteration:
        fh.close()
        raise IngestError(f"{path}: empty file") from None
    if [h.strip() for h in got] != header:
        fh.close()
        raise IngestError(f"{path}: header {got} does not match {header}")
    return fh, reader


def _check_malformed(report, path, max_fraction):
    if report.n_rows and report.malformed / report.n_rows > max_fraction:
        raise IngestError(
            f"{path}: {report.malformed} of {report.n_rows} rows malformed; "
            f"first problems: {report.examples[:5]}")


def parse_pings(path, max_malformed_fraction=0.5):
    """Read a ping CSV into a DataFrame, skipping and counting bad rows.

    Columns: vehicle_id (str), timestamp, lat, lon, speed, accel (NaN when
    not reported).  Output order is input order; repeated (vehicle,
    timestamp) pairs keep the first occurrence.
    """
    fh, reader = _read_rows(path, PING_HEADER)
    rep = ParseReport()
    vid, ts, lat, lon, spd, acc = [], [], [], [], [], []
    seen = set()
    with fh:
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            rep.n_rows += 1
            if len(row) != 6:
                rep._bad(lineno, "field count")
                continue
            try:
                v = row[0].strip()
                if not v:
                    raise ValueError("empty vehicle id")
                t = _float(row[1])
                la = _float(row[2])
                lo = _float(row[3])
                s = _float(row[4])
                a = _float(row[5]) if row[5].strip() else math.nan
                if not (-90 <= la <= 90 and -180 <= lo <= 180):
                    raise ValueError("coordinates out of range")
                if s < 0:
                    raise ValueError("negative speed")
            except ValueError as exc:
                rep._bad(lineno, str(exc))
                continue
            key = (v, t)
            if key in seen:
                rep.duplicates += 1
                continue
            seen.add(key)
            vid.append(v)
            ts.append(t)
            lat.append(la)
            lon.append(lo)
            spd.append(s)
            acc.append(a)
    _check_malformed(rep, path, max_malformed_fraction)
    rep.n_parsed = len(vid)
    df = pd.DataFrame({
        "vehicle_id": pd.Series(vid, dtype=object),
        "timestamp": np.asarray(ts, dtype=float),
        "lat": np.asarray(lat, dtype=float),
        "lon": np.asarray(lon, dtype=float),
        "speed": np.asarray(spd, dtype=float),
        "accel": np.asarray(acc, dtype=float),
    })
    if rep.malformed or rep.duplicates:
        log.info("%s: %d malformed, %d duplicate rows skipped", path,
                 rep.malformed, rep.duplicates)
    return df, rep


def iter_pings(df) -> Iterator[VehiclePing]:
    for r in df.itertuples(index=False):
        a = None if math.isnan(r.accel) else float(r.accel)
        yield VehiclePing(r.vehicle_id, float(r.timestamp), float(r.lat),
                          float(r.lon), float(r.speed), a)


def parse_crashes(path, max_malformed_fraction=0.5):
    """Read a crash CSV; ``direction`` may be empty (any carriageway)."""
    fh, reader = _read_rows(path, CRASH_HEADER)
    rep = ParseReport()
    rows = []
    with fh:
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            rep.n_rows += 1
            try:
                if len(row) != 4:
                    raise ValueError("field count")
                t, la, lo = _float(row[0]), _float(row[1]), _float(row[2])
                d = row[3].strip() or None
                if d is not None and d not in DIRECTIONS:
                    raise ValueError(f"direction {d!r}")
            except ValueError as exc:
                rep._bad(lineno, str(exc))
                continue
            rows.append((t, la, lo, d))
    _check_malformed(rep, path, max_malformed_fraction)
    rep.n_parsed = len(rows)
    df = pd.DataFrame(rows, columns=["timestamp", "lat", "lon", "direction"])
    df = df.astype({"timestamp": float, "lat": float, "lon": float})
    return df, rep


def parse_weather(path, max_malformed_fraction=0.5):
    """Read hourly weather; one record per (station, hour), first one wins."""
    fh, reader = _read_rows(path, WEATHER_HEADER)
    rep = ParseReport()
    rows = []
    seen = set()
    with fh:
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            rep.n_rows += 1
            try:
                if len(row) != 4:
                    raise ValueError("field count")
                sid = row[0].strip()
                if not sid:
                    raise ValueError("empty station id")
                h = _float(row[1])
                if h != int(h) or int(h) % 3600:
                    raise ValueError("hour_start not aligned to an hour")
                temp, precip = _float(row[2]), _float(row[3])
                if precip < 0:
                    raise ValueError("negative precipitation")
            except ValueError as exc:
                rep._bad(lineno, str(exc))
                continue
            if (sid, int(h)) in seen:
                rep.duplicates += 1
                continue
            seen.add((sid, int(h)))
            rows.append((sid, int(h), temp, precip))
    _check_malformed(rep, path, max_malformed_fraction)
    rep.n_parsed = len(rows)
    df = pd.DataFrame(rows, columns=["station_id", "hour_start", "temp_f", "precip_mm"])
    return df.astype({"hour_start": np.int64, "temp_f": float, "precip_mm": float}), rep


# -- cleaning ---------------------------------------------------------------

def compute_speed_bounds(speeds, iqr_k=1.5) -> SpeedBounds:
    """Lower bound 0, upper bound Q3 + k * (Q3 - Q1) with linear quantiles."""
    speeds = np.asarray(speeds, dtype=float)
    if speeds.size == 0:
        raise ValueError("cannot compute speed bounds of an empty collection")
    q1, q3 = np.quantile(speeds, [0.25, 0.75], method="linear")
    return SpeedBounds(0.0, float(q3 + iqr_k * (q3 - q1)))


def clean_pings(df, bounds: SpeedBounds, accel_cap=ACCEL_CAP):
    """Drop pings outside the speed bounds or with |reported accel| > cap.

    Missing accelerations pass the acceleration rule.  With fixed bounds the
    operation is idempotent.
    """
    speed = df["speed"].to_numpy()
    accel = df["accel"].to_numpy()
    bad_speed = (speed < bounds.lower) | (speed > bounds.upper)
    bad_accel = ~bad_speed & (np.abs(accel) > accel_cap)
    keep = ~(bad_speed | bad_accel)
    rep = CleanReport(len(df), int(keep.sum()), int(bad_speed.sum()), int(bad_accel.sum()))
    return df.loc[keep].reset_index(drop=True), rep


# -- matching ---------------------------------------------------------------

def match_to_segment(ping: VehiclePing, corridor: CorridorMap):
    """``(segment_id, offset_miles)`` of the nearest segment, or None."""
    return corridor.match_one(ping.latitude, ping.longitude)


def match_pings(df, corridor: CorridorMap):
    """Attach ``segment`` (map index) and ``offset_miles``; drop unmatched.

    Returns the matched frame and the number of pings beyond tolerance.
    """
    res = corridor.match(df["lat"].to_numpy(), df["lon"].to_numpy())
    ok = res.matched
    out = df.loc[ok].copy()
    out["segment"] = res.segment_index[ok]
    out["offset_miles"] = res.offset_miles[ok]
    return out.reset_index(drop=True), int((~ok).sum())


def match_crashes(df, corridor: CorridorMap):
    """Match crashes honouring their direction; unmatched ones are skipped
    with a warning."""
    seg = np.full(len(df), -1, dtype=np.int64)
    dirs = df["direction"].to_numpy(dtype=object)
    for d in (None, *DIRECTIONS):
        sel = np.array([x == d for x in dirs], dtype=bool)
        if sel.any():
            res = corridor.match(df["lat"].to_numpy()[sel], df["lon"].to_numpy()[sel],
                                 direction=d)
            seg[sel] = res.segment_index
    bad = seg < 0
    for r in df.loc[bad].itertuples(index=False):
        log.warning("crash at t=%s (%.5f, %.5f) is outside the corridor tolerance; skipped",
                    r.timestamp, r.lat, r.lon)
    out = df.loc[~bad].copy()
    out["segment"] = seg[~bad]
    return out.reset_index(drop=True), int(bad.sum())


@dataclass
class IngestResult:
    pings: pd.DataFrame
    crashes: pd.DataFrame
    weather: pd.DataFrame
    bounds: SpeedBounds
    summary: dict


def ingest(pings_path, crashes_path, weather_path, corridor: CorridorMap,
           accel_cap=ACCEL_CAP, iqr_k=1.5):
    """Parse, clean and map-match all inputs."""
    pings, prep = parse_pings(pings_path)
    if pings.empty:
        raise IngestError(f"{pings_path}: no usable pings")
    bounds = compute_speed_bounds(pings["speed"].to_numpy(), iqr_k)
    pings, crep = clean_pings(pings, bounds, accel_cap)
    pings, n_off = match_pings(pings, corridor)
    crashes, krep = parse_crashes(crashes_path)
    crashes, n_crash_off = match_crashes(crashes, corridor)
    weather, wrep = parse_weather(weather_path)
    summary = {
        "pings_rows": prep.n_rows, "pings_malformed": prep.malformed,
        "pings_duplicates": prep.duplicates,
        "speed_upper_kmh": bounds.upper,
        "rejected_speed": crep.rejected_speed, "rejected_accel": crep.rejected_accel,
        "pings_off_corridor": n_off, "pings_retained": len(pings),
        "crash_rows": krep.n_rows, "crash_malformed": krep.malformed,
        "crashes_off_corridor": n_crash_off, "crashes_matched": len(crashes),
        "weather_rows": wrep.n_rows, "weather_malformed": wrep.malformed,
        "weather_duplicates": wrep.duplicates,
    }
    return IngestResult(pings, crashes, weather, bounds, summary)
