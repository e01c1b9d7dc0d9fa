"""Directional corridor geometry: segmentation, JSON I/O and map matching.

Distances are computed in a local equirectangular projection centred on the
corridor, which is accurate to well under a percent over a few hundred
kilometres of mostly east-west interstate.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.spatial import cKDTree

EARTH_RADIUS_M = 6371008.8
METERS_PER_MILE = 1609.344
DIRECTIONS = ("EB", "WB")
CORRIDOR_FORMAT = "crashrisk-corridor"
CORRIDOR_VERSION = 1


class CorridorError(ValueError):
    """Raised for an inconsistent corridor definition."""


def haversine_m(lat1, lon1, lat2, lon2):
    """Great-circle distance in meters (vectorised)."""
    lat1, lon1, lat2, lon2 = (np.radians(np.asarray(a, dtype=float))
                              for a in (lat1, lon1, lat2, lon2))
    a = (np.sin((lat2 - lat1) / 2) ** 2
         + np.cos(lat1) * np.cos(lat2) * np.sin((lon2 - lon1) / 2) ** 2)
    return 2 * EARTH_RADIUS_M * np.arcsin(np.sqrt(np.clip(a, 0.0, 1.0)))


@dataclass(frozen=True)
class LocalProjection:
    lat0: float
    lon0: float

    @property
    def _kx(self):
        return EARTH_RADIUS_M * np.cos(np.radians(self.lat0)) * np.pi / 180.0

    @property
    def _ky(self):
        return EARTH_RADIUS_M * np.pi / 180.0

    def to_xy(self, lat, lon):
        lat = np.asarray(lat, dtype=float)
        lon = np.asarray(lon, dtype=float)
        return np.stack([(lon - self.lon0) * self._kx,
                         (lat - self.lat0) * self._ky], axis=-1)

    def to_latlon(self, xy):
        xy = np.asarray(xy, dtype=float)
        lat = xy[..., 1] / self._ky + self.lat0
        lon = xy[..., 0] / self._kx + self.lon0
        return lat, lon


@dataclass
class Segment:
    segment_id: str
    direction: str
    polyline: np.ndarray  # (k, 2) lat, lon in travel order
    length_miles: float


@dataclass(frozen=True)
class WeatherStation:
    station_id: str
    lat: float
    lon: float


@dataclass
class MatchResult:
    """Vectorised map-matching output; ``segment_index == -1`` is no-match."""
    segment_index: np.ndarray
    offset_miles: np.ndarray
    distance_m: np.ndarray

    @property
    def matched(self):
        return self.segment_index >= 0


@dataclass
class CorridorMap:
    """Ordered directional segments of one corridor.

    Segments of one direction are listed in travel order, so the upstream
    neighbour of a segment is the previous one of the same direction and the
    downstream neighbour the next one.
    """
    segments: list[Segment]
    match_tolerance_m: float = 100.0
    weather_stations: list[WeatherStation] = field(default_factory=list)

    def __post_init__(self):
        self._validate()
        self._build_index()

    # -- structure -------------------------------------------------------
    def _validate(self):
        if not self.segments:
            raise CorridorError("corridor has no segments")
        if self.match_tolerance_m <= 0:
            raise CorridorError("match tolerance must be positive")
        ids = [s.segment_id for s in self.segments]
        if len(set(ids)) != len(ids):
            raise CorridorError("segment ids must be unique")
        for s in self.segments:
            if s.direction not in DIRECTIONS:
                raise CorridorError(f"{s.segment_id}: bad direction {s.direction!r}")
            if not s.length_miles > 0:
                raise CorridorError(f"{s.segment_id}: length must be positive")
            if len(s.polyline) < 2:
                raise CorridorError(f"{s.segment_id}: polyline needs 2+ points")
        proj = self._make_projection()
        for d in DIRECTIONS:
            segs = [s for s in self.segments if s.direction == d]
            for a, b in zip(segs, segs[1:]):
                gap = np.linalg.norm(proj.to_xy(*a.polyline[-1]) - proj.to_xy(*b.polyline[0]))
                if gap > 1.0:
                    raise CorridorError(
                        f"{a.segment_id} and {b.segment_id} do not share an endpoint "
                        f"(gap {gap:.1f} m)")

    def _make_projection(self):
        pts = np.concatenate([s.polyline for s in self.segments])
        return LocalProjection(float(pts[:, 0].mean()), float(pts[:, 1].mean()))

    def _build_index(self):
        self.projection = self._make_projection()
        self.segment_ids = [s.segment_id for s in self.segments]
        self.index_of = {sid: i for i, sid in enumerate(self.segment_ids)}
        n = len(self.segments)
        self.upstream = np.full(n, -1, dtype=np.int64)
        self.downstream = np.full(n, -1, dtype=np.int64)
        for d in DIRECTIONS:
            idx = [i for i, s in enumerate(self.segments) if s.direction == d]
            for a, b in zip(idx, idx[1:]):
                self.downstream[a] = b
                self.upstream[b] = a

        a_pts, b_pts, seg_of, cum, last = [], [], [], [], []
        for i, s in enumerate(self.segments):
            xy = self.projection.to_xy(s.polyline[:, 0], s.polyline[:, 1])
            lens = np.linalg.norm(np.diff(xy, axis=0), axis=1)
            starts = np.concatenate([[0.0], np.cumsum(lens)[:-1]])
            a_pts.append(xy[:-1])
            b_pts.append(xy[1:])
            seg_of.append(np.full(len(lens), i))
            cum.append(starts)
            flag = np.zeros(len(lens), dtype=bool)
            flag[-1] = True
            last.append(flag)
        self._a = np.concatenate(a_pts)
        self._b = np.concatenate(b_pts)
        self._piece_seg = np.concatenate(seg_of)
        self._piece_start = np.concatenate(cum)
        self._piece_last = np.concatenate(last)
        self._piece_len = np.linalg.norm(self._b - self._a, axis=1)
        self._trees = {}

    def lengths_miles(self):
        return np.array([s.length_miles for s in self.segments])

    def directions(self):
        return np.array([s.direction for s in self.segments])

    def midpoints(self):
        """(lat, lon) of the point halfway along each segment."""
        out = []
        for s in self.segments:
            xy = self.projection.to_xy(s.polyline[:, 0], s.polyline[:, 1])
            out.append(self.projection.to_latlon(point_at_distance(xy, 0.5 * _length(xy))))
        return np.array(out)

    # -- matching --------------------------------------------------------
    def _tree_for(self, direction):
        if direction not in self._trees:
            if direction is None:
                pieces = np.arange(len(self._a))
            else:
                pieces = np.flatnonzero(self.directions()[self._piece_seg] == direction)
            mids = 0.5 * (self._a[pieces] + self._b[pieces])
            half = 0.5 * self._piece_len[pieces].max()
            self._trees[direction] = (cKDTree(mids), pieces, half)
        return self._trees[direction]

    def _piece_distance(self, xy, pieces):
        # distance from points (n, 2) to pieces (n, k) -> dist (n, k), t (n, k)
        a = self._a[pieces]
        ab = self._b[pieces] - a
        ap = xy[:, None, :] - a
        denom = np.einsum("nkd,nkd->nk", ab, ab)
        with np.errstate(invalid="ignore", divide="ignore"):
            t = np.where(denom > 0, np.einsum("nkd,nkd->nk", ap, ab) / denom, 0.0)
        t = np.clip(t, 0.0, 1.0)
        proj = a + t[..., None] * ab
        return np.linalg.norm(xy[:, None, :] - proj, axis=-1), t

    def _select(self, dist, t, pieces):
        # lexicographic (distance, at-far-end-of-segment, piece order): a point
        # on a shared boundary belongs to the segment that starts there
        at_end = (t >= 1.0) & self._piece_last[pieces]
        key_order = np.lexsort((pieces, at_end, dist), axis=-1)
        best = key_order[:, 0]
        rows = np.arange(len(dist))
        return pieces[rows, best], dist[rows, best], t[rows, best]

    def match(self, lat, lon, direction=None, tolerance_m=None) -> MatchResult:
        """Nearest segment within tolerance for each point.

        ``direction`` restricts candidates to one carriageway.  The search is
        exact: k-d tree candidates on piece midpoints are widened until no
        unexamined piece can be closer than the best one found.
        """
        tol = self.match_tolerance_m if tolerance_m is None else float(tolerance_m)
        xy = self.projection.to_xy(np.atleast_1d(lat), np.atleast_1d(lon)).reshape(-1, 2)
        n = len(xy)
        seg = np.full(n, -1, dtype=np.int64)
        off = np.full(n, np.nan)
        dist_out = np.full(n, np.inf)
        if n == 0:
            return MatchResult(seg, off, dist_out)
        tree, pieces_all, half = self._tree_for(direction)
        k = min(16, len(pieces_all))
        dk, ik = tree.query(xy, k=k)
        dk = dk.reshape(n, k)
        ik = ik.reshape(n, k)
        cand = pieces_all[ik]
        dist, t = self._piece_distance(xy, cand)
        piece, d_best, t_best = self._select(dist, t, cand)
        exact = (k == len(pieces_all)) | (np.minimum(d_best, tol) < dk[:, -1] - half)
        for i in np.flatnonzero(~exact):
            near = tree.query_ball_point(xy[i], min(d_best[i], tol) + half + 1e-9)
            c = pieces_all[np.sort(np.asarray(near, dtype=np.int64))][None, :]
            d_i, t_i = self._piece_distance(xy[i:i + 1], c)
            p_i, db_i, tb_i = self._select(d_i, t_i, c)
            piece[i], d_best[i], t_best[i] = p_i[0], db_i[0], tb_i[0]
        ok = d_best <= tol
        seg[ok] = self._piece_seg[piece[ok]]
        off[ok] = (self._piece_start[piece[ok]]
                   + t_best[ok] * self._piece_len[piece[ok]]) / METERS_PER_MILE
        dist_out[:] = d_best
        return MatchResult(seg, off, dist_out)

    def match_one(self, lat, lon, direction=None):
        """Single-point matching; returns ``(segment_id, offset_miles)`` or None."""
        res = self.match([lat], [lon], direction=direction)
        if res.segment_index[0] < 0:
            return None
        return self.segment_ids[res.segment_index[0]], float(res.offset_miles[0])

    # -- serialisation ---------------------------------------------------
    def to_dict(self):
        return {
            "format": CORRIDOR_FORMAT,
            "version": CORRIDOR_VERSION,
            "match_tolerance_m": self.match_tolerance_m,
            "segments": [
                {"segment_id": s.segment_id, "direction": s.direction,
                 "length_miles": s.length_miles,
                 "polyline": [[float(a), float(b)] for a, b in s.polyline]}
                for s in self.segments
            ],
            "weather_stations": [
                {"station_id": w.station_id, "lat": w.lat, "lon": w.lon}
                for w in self.weather_stations
            ],
        }

    @classmethod
    def from_dict(cls, data):
        if data.get("format") != CORRIDOR_FORMAT:
            raise CorridorError("not a corridor file")
        if data.get("version") != CORRIDOR_VERSION:
            raise CorridorError(f"unsupported corridor version {data.get('version')}")
        segs = []
        for s in data["segments"]:
            poly = np.asarray(s["polyline"], dtype=float)
            length = s.get("length_miles")
            if length is None:
                length = polyline_length_miles(poly)
            segs.append(Segment(str(s["segment_id"]), s["direction"], poly, float(length)))
        stations = [WeatherStation(str(w["station_id"]), float(w["lat"]), float(w["lon"]))
                    for w in data.get("weather_stations", [])]
        return cls(segs, float(data.get("match_tolerance_m", 100.0)), stations)

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict(), indent=1) + "\n")

    @classmethod
    def load(cls, path):
        return cls.from_dict(json.loads(Path(path).read_text()))


def _length(xy):
    return float(np.linalg.norm(np.diff(xy, axis=0), axis=1).sum())


def point_at_distance(xy, s):
    """Point at arc length ``s`` along a projected polyline (clamped)."""
    lens = np.linalg.norm(np.diff(xy, axis=0), axis=1)
    cum = np.concatenate([[0.0], np.cumsum(lens)])
    s = np.clip(s, 0.0, cum[-1])
    i = np.clip(np.searchsorted(cum, s, side="right") - 1, 0, len(lens) - 1)
    frac = np.where(lens[i] > 0, (s - cum[i]) / np.where(lens[i] > 0, lens[i], 1.0), 0.0)
    return xy[i] + frac[..., None] * (xy[i + 1] - xy[i]) if np.ndim(s) else \
        xy[i] + frac * (xy[i + 1] - xy[i])


def polyline_length_miles(latlon, projection=None):
    latlon = np.asarray(latlon, dtype=float)
    proj = projection or LocalProjection(float(latlon[:, 0].mean()), float(latlon[:, 1].mean()))
    return _length(proj.to_xy(latlon[:, 0], latlon[:, 1])) / METERS_PER_MILE


def _cut(xy, cuts):
    """Split a projected polyline at increasing arc lengths ``cuts``."""
    lens = np.linalg.norm(np.diff(xy, axis=0), axis=1)
    cum = np.concatenate([[0.0], np.cumsum(lens)])
    pieces = []
    bounds = np.concatenate([[0.0], cuts, [cum[-1]]])
    for s0, s1 in zip(bounds[:-1], bounds[1:]):
        inner = xy[(cum > s0) & (cum < s1)]
        p0 = point_at_distance(xy, s0)
        p1 = point_at_distance(xy, s1)
        pieces.append(np.vstack([p0, inner, p1]))
    return pieces


def slice_polyline(xy, target_length_m, method="arc"):
    """Cut a projected polyline into consecutive pieces.

    ``method="arc"`` gives ``round(L / target)`` pieces of equal arc length.
    ``method="coordinate"`` cuts at equally spaced values of the dominant
    coordinate (longitude for an east-west road), so piece lengths follow the
    road's curvature.
    """
    total = _length(xy)
    n = max(1, int(round(total / target_length_m)))
    if method == "arc":
        cuts = total * np.arange(1, n) / n
    elif method == "coordinate":
        axis = int(np.argmax(np.ptp(xy, axis=0)))
        c = xy[:, axis]
        sign = 1.0 if c[-1] >= c[0] else -1.0
        levels = c[0] + sign * np.abs(c[-1] - c[0]) * np.arange(1, n) / n
        lens = np.linalg.norm(np.diff(xy, axis=0), axis=1)
        cum = np.concatenate([[0.0], np.cumsum(lens)])
        cuts = []
        for lev in levels:
            j = np.flatnonzero(sign * (c[1:] - lev) >= 0)[0]
            denom = c[j + 1] - c[j]
            frac = (lev - c[j]) / denom if denom != 0 else 0.0
            cuts.append(cum[j] + frac * lens[j])
        cuts = np.array(cuts)
    else:
        raise ValueError(f"unknown slicing method {method!r}")
    return _cut(xy, cuts)


def offset_polyline(xy, offset_m):
    """Shift a polyline sideways; positive offsets go right of travel."""
    d = np.diff(xy, axis=0)
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    right = np.stack([d[:, 1], -d[:, 0]], axis=1)
    normals = np.empty_like(xy)
    normals[0] = right[0]
    normals[-1] = right[-1]
    if len(xy) > 2:
        avg = right[:-1] + right[1:]
        normals[1:-1] = avg / np.linalg.norm(avg, axis=1, keepdims=True)
    return xy + offset_m * normals


def build_corridor(centerline, target_length_miles=2.25, carriageway_offset_m=25.0,
                   method="arc", match_tolerance_m=100.0, weather_stations=()):
    """Two-carriageway corridor from a west-to-east centerline.

    Eastbound segments run along the centerline direction, westbound ones
    along the reversed line; each carriageway sits ``carriageway_offset_m``
    to the right of its travel direction.
    """
    centerline = np.asarray(centerline, dtype=float)
    proj = LocalProjection(float(centerline[:, 0].mean()), float(centerline[:, 1].mean()))
    xy = proj.to_xy(centerline[:, 0], centerline[:, 1])
    target = target_length_miles * METERS_PER_MILE
    segments = []
    for direction, line in (("EB", xy), ("WB", xy[::-1])):
        lane = offset_polyline(line, carriageway_offset_m)
        for i, piece in enumerate(slice_polyline(lane, target, method)):
            lat, lon = proj.to_latlon(piece)
            poly = np.stack([lat, lon], axis=1)
            segments.append(Segment(f"{direction}-{i:03d}", direction, poly,
                                    _length(piece) / METERS_PER_MILE))
    return CorridorMap(segments, match_tolerance_m, list(weather_stations))
