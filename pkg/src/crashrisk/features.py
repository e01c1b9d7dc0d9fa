"""Segment-bin aggregation of cleaned pings into the model feature table.

Every (segment, 5-minute bin) with at least one ping becomes one record.
Records carry the core traffic block, context columns, the same core block
for the upstream segment (``u1_``), the downstream segment (``d1_``) and the
three preceding bins of the same segment (``t1_``..``t3_``), hourly weather
and the crash label.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import pandas as pd

from .corridor import CorridorMap, haversine_m
from .dataset import LabeledDataset

log = logging.getLogger(__name__)

CORE_FEATURES = ["mean_speed", "max_speed", "ss", "veh_cnt", "speed_cnt_thres",
                 "acc_cal", "dcc_cal", "max_acc", "max_dcc", "acc_cnt_thres",
                 "dcc_cnt_thres"]
CONTEXT_FEATURES = ["timeofday", "dist_seg", "up_time_diff", "temperature", "precipitation"]
BLOCKS = ["u1", "d1", "t1", "t2", "t3"]
PAPER_PRUNED = {"acc_cnt_thres", "dcc_cnt_thres", "temperature", "cvs"}
KMH_TO_MS = 1.0 / 3.6


@dataclass(frozen=True)
class FeatureConfig:
    bin_seconds: int = 300
    speed_threshold_kmh: float = 160.9
    accel_threshold: float = 3.4
    lags: tuple = (1, 2, 3)
    utc_offset_hours: float = 0.0
    include_cvs: bool = False
    exclusion_bins: int = 0

    def core_names(self):
        return CORE_FEATURES + (["cvs"] if self.include_cvs else [])

    def block_names(self):
        return ["u1", "d1"] + [f"t{k}" for k in self.lags]


def bin_start_of(timestamps, bin_seconds=300):
    ts = np.asarray(timestamps, dtype=float)
    return (np.floor(ts / bin_seconds) * bin_seconds).astype(np.int64)


def bin_pings(pings, bin_seconds=300):
    """Group matched pings by (segment, bin_start).

    ``pings`` needs ``segment`` and ``timestamp`` columns.  Returns a dict
    mapping ``(segment, bin_start)`` to the row positions of its pings; empty
    bins never appear.
    """
    b = bin_start_of(pings["timestamp"].to_numpy(), bin_seconds)
    seg = pings["segment"].to_numpy()
    groups = pd.DataFrame({"s": seg, "b": b}).groupby(["s", "b"], sort=True).indices
    return {(int(k[0]), int(k[1])): v for k, v in groups.items()}


def per_vehicle_accels(timestamps, speeds_kmh):
    """Accelerations (m/s^2) between consecutive pings of one vehicle.

    Speeds are converted to m/s before differencing; pairs with no time
    elapsed are skipped.
    """
    t = np.asarray(timestamps, dtype=float)
    v = np.asarray(speeds_kmh, dtype=float) * KMH_TO_MS
    order = np.argsort(t, kind="stable")
    t, v = t[order], v[order]
    dt = np.diff(t)
    ok = dt > 0
    return (v[1:][ok] - v[:-1][ok]) / dt[ok]


def aggregate_core(pings, config: FeatureConfig = FeatureConfig(), bin_starts=None):
    """Core traffic features for every non-empty (segment, bin).

    ``pings`` needs columns vehicle_id, timestamp, speed, segment.  Returns a
    DataFrame sorted by (segment, bin_start) with the core features plus
    ``n_pings`` and ``last_ts`` (latest ping time in the bin).
    """
    bs = config.bin_seconds
    seg = pings["segment"].to_numpy(dtype=np.int64)
    ts = pings["timestamp"].to_numpy(dtype=float)
    spd = pings["speed"].to_numpy(dtype=float)
    veh = pd.factorize(pings["vehicle_id"], sort=True)[0]
    b = bin_start_of(ts, bs) if bin_starts is None else np.asarray(bin_starts, np.int64)
    order = np.lexsort((ts, veh, b, seg))
    seg, ts, spd, veh, b = seg[order], ts[order], spd[order], veh[order], b[order]

    n = len(seg)
    new_bin = np.ones(n, dtype=bool)
    new_bin[1:] = (seg[1:] != seg[:-1]) | (b[1:] != b[:-1])
    gid = np.cumsum(new_bin) - 1
    n_groups = int(gid[-1]) + 1 if n else 0
    starts = np.flatnonzero(new_bin)
    new_veh = new_bin.copy()
    new_veh[1:] |= veh[1:] != veh[:-1]

    cnt = np.bincount(gid, minlength=n_groups).astype(float)
    mean = np.bincount(gid, spd, n_groups) / cnt
    dev = spd - mean[gid]
    ss = np.sqrt(np.bincount(gid, dev * dev, n_groups) / cnt)
    vmax = np.maximum.reduceat(spd, starts) if n else np.zeros(0)
    last_ts = np.maximum.reduceat(ts, starts) if n else np.zeros(0)
    veh_cnt = np.bincount(gid, new_veh.astype(float), n_groups)
    fast = np.bincount(gid, (spd > config.speed_threshold_kmh).astype(float), n_groups)

    # consecutive pings of the same vehicle within the same bin
    pair = ~new_veh[1:]
    dt = ts[1:] - ts[:-1]
    pair &= dt > 0
    i1 = np.flatnonzero(pair) + 1
    a = (spd[i1] * KMH_TO_MS - spd[i1 - 1] * KMH_TO_MS) / dt[i1 - 1]
    ag = gid[i1]
    pos = a > 0
    neg = a < 0
    n_pos = np.bincount(ag[pos], minlength=n_groups)
    n_neg = np.bincount(ag[neg], minlength=n_groups)
    with np.errstate(invalid="ignore", divide="ignore"):
        acc_cal = np.where(n_pos > 0, np.bincount(ag[pos], a[pos], n_groups) / n_pos, 0.0)
        dcc_cal = np.where(n_neg > 0, np.bincount(ag[neg], a[neg], n_groups) / n_neg, 0.0)
    max_acc = np.zeros(n_groups)
    np.maximum.at(max_acc, ag[pos], a[pos])
    max_dcc = np.zeros(n_groups)
    np.maximum.at(max_dcc, ag[neg], -a[neg])
    # vehicles exceeding the threshold, counted once per bin and side
    vkey = (np.cumsum(new_veh) - 1)[i1]
    hard_acc = np.unique(vkey[a > config.accel_threshold])
    hard_dcc = np.unique(vkey[a < -config.accel_threshold])
    veh_gid = gid[new_veh]
    acc_cnt = np.bincount(veh_gid[hard_acc], minlength=n_groups).astype(float)
    dcc_cnt = np.bincount(veh_gid[hard_dcc], minlength=n_groups).astype(float)

    out = pd.DataFrame({
        "segment": seg[starts], "bin_start": b[starts],
        "mean_speed": mean, "max_speed": vmax, "ss": ss, "veh_cnt": veh_cnt,
        "speed_cnt_thres": fast, "acc_cal": acc_cal, "dcc_cal": dcc_cal,
        "max_acc": max_acc, "max_dcc": max_dcc,
        "acc_cnt_thres": acc_cnt, "dcc_cnt_thres": dcc_cnt,
    })
    if config.include_cvs:
        with np.errstate(invalid="ignore", divide="ignore"):
            out["cvs"] = np.where(mean > 0, ss / np.where(mean > 0, mean, 1.0), 0.0)
    out["n_pings"] = cnt.astype(np.int64)
    out["last_ts"] = last_ts
    return out


def compute_core_features(group, config: FeatureConfig = FeatureConfig()):
    """Core features of a single ping group as a dict."""
    if len(group) == 0:
        raise ValueError("empty ping group")
    g = group.assign(segment=0)
    row = aggregate_core(g, config, bin_starts=np.zeros(len(g), dtype=np.int64))
    return {k: float(row[k].iloc[0]) for k in config.core_names()}


class _KeyIndex:
    """Lookup of (segment, bin index) pairs into record positions."""

    def __init__(self, seg, bidx):
        self.keys = seg.astype(np.int64) * (1 << 32) + bidx
        self.order = np.argsort(self.keys, kind="stable")
        self.sorted = self.keys[self.order]

    def find(self, seg, bidx):
        q = np.where(seg >= 0, seg.astype(np.int64) * (1 << 32) + bidx, -1)
        pos = np.searchsorted(self.sorted, q)
        pos = np.minimum(pos, len(self.sorted) - 1)
        hit = (self.sorted[pos] == q) & (seg >= 0)
        return np.where(hit, self.order[pos], -1)


def join_context(core, corridor: CorridorMap, config: FeatureConfig = FeatureConfig()):
    """Add context columns and neighbour/lag blocks to ``aggregate_core`` output."""
    bs = config.bin_seconds
    names = config.core_names()
    seg = core["segment"].to_numpy()
    bidx = core["bin_start"].to_numpy() // bs
    idx = _KeyIndex(seg, bidx)
    vals = core[names].to_numpy()
    out = core.copy()
    hours = (core["bin_start"].to_numpy() + config.utc_offset_hours * 3600.0) // 3600
    out["timeofday"] = (hours % 24).astype(float)
    out["dist_seg"] = corridor.lengths_miles()[seg]

    lookups = {"u1": idx.find(corridor.upstream[seg], bidx),
               "d1": idx.find(corridor.downstream[seg], bidx)}
    for k in config.lags:
        lookups[f"t{k}"] = idx.find(seg, bidx - k)
    up = lookups["u1"]
    last = core["last_ts"].to_numpy()
    out["up_time_diff"] = np.where(up >= 0, core["bin_start"].to_numpy() - last[up], 0.0)
    blocks = {}
    for name, pos in lookups.items():
        block = np.where(pos[:, None] >= 0, vals[np.maximum(pos, 0)], 0.0)
        for j, f in enumerate(names):
            blocks[f"{name}_{f}"] = block[:, j]
        blocks[f"{name}_missing"] = (pos < 0).astype(float)
    return pd.concat([out, pd.DataFrame(blocks, index=out.index)], axis=1)


def station_for_segments(corridor: CorridorMap, station_ids):
    """Nearest weather station (great circle) to every segment midpoint."""
    station_ids = list(station_ids)
    if not station_ids:
        raise ValueError("no weather stations")
    known = {w.station_id: w for w in corridor.weather_stations}
    if len(station_ids) == 1 and station_ids[0] not in known:
        return np.zeros(len(corridor.segments), dtype=np.int64)
    missing = [s for s in station_ids if s not in known]
    if missing:
        raise ValueError(f"no coordinates for weather stations {missing}")
    mid = corridor.midpoints()
    lat = np.array([known[s].lat for s in station_ids])
    lon = np.array([known[s].lon for s in station_ids])
    d = haversine_m(mid[:, None, 0], mid[:, None, 1], lat[None, :], lon[None, :])
    return np.argmin(d, axis=1)


def join_weather(records, weather, corridor: CorridorMap):
    """Temperature and precipitation of the nearest station for the hour
    containing each bin.  A missing hour takes the latest earlier record of
    that station, or else the earliest later one."""
    stations = sorted(weather["station_id"].unique())
    which = station_for_segments(corridor, stations)
    st = which[records["segment"].to_numpy()]
    hour = (records["bin_start"].to_numpy() // 3600) * 3600
    temp = np.zeros(len(records))
    prec = np.zeros(len(records))
    for k, sid in enumerate(stations):
        w = weather[weather["station_id"] == sid].sort_values("hour_start")
        h = w["hour_start"].to_numpy()
        sel = st == k
        if not sel.any():
            continue
        pos = np.searchsorted(h, hour[sel], side="right") - 1
        pos = np.where(pos < 0, 0, pos)
        temp[sel] = w["temp_f"].to_numpy()[pos]
        prec[sel] = w["precip_mm"].to_numpy()[pos]
    out = records.copy()
    out["temperature"] = temp
    out["precipitation"] = prec
    return out


def join_labels(records, crashes, config: FeatureConfig = FeatureConfig()):
    """``crash_check`` = 1 iff a matched crash falls in the (segment, bin).

    Crash bins with no pings cannot become records; they are counted and
    logged.  With ``exclusion_bins`` > 0, non-crash bins of the same segment
    right after a crash are dropped.
    """
    bs = config.bin_seconds
    seg = records["segment"].to_numpy()
    bidx = records["bin_start"].to_numpy() // bs
    idx = _KeyIndex(seg, bidx)
    cseg = crashes["segment"].to_numpy(dtype=np.int64)
    cb = bin_start_of(crashes["timestamp"].to_numpy(), bs) // bs
    pos = idx.find(cseg, cb)
    y = np.zeros(len(records), dtype=np.int64)
    y[pos[pos >= 0]] = 1
    n_unobserved = int((pos < 0).sum())
    if n_unobserved:
        log.warning("%d crashes fall in bins without pings and cannot be labelled",
                    n_unobserved)
    out = records.copy()
    out["crash_check"] = y
    if config.exclusion_bins > 0:
        drop = np.zeros(len(records), dtype=bool)
        for j in range(1, config.exclusion_bins + 1):
            p = idx.find(cseg, cb + j)
            drop[p[p >= 0]] = True
        out = out.loc[~drop | (y == 1)].reset_index(drop=True)
    return out, n_unobserved


def feature_names(config: FeatureConfig = FeatureConfig()):
    names = config.core_names() + CONTEXT_FEATURES
    for blk in config.block_names():
        names += [f"{blk}_{f}" for f in config.core_names()]
    names += [f"{blk}_missing" for blk in config.block_names()]
    return names


def build_feature_table(pings, crashes, weather, corridor: CorridorMap,
                        config: FeatureConfig = FeatureConfig()):
    """Full labelled dataset from matched, cleaned inputs."""
    core = aggregate_core(pings, config)
    rec = join_context(core, corridor, config)
    rec = join_weather(rec, weather, corridor)
    rec, _ = join_labels(rec, crashes, config)
    names = feature_names(config)
    ids = np.array(corridor.segment_ids, dtype=object)[rec["segment"].to_numpy()]
    return LabeledDataset(names, rec[names].to_numpy(dtype=float),
                          rec["crash_check"].to_numpy(), ids,
                          rec["bin_start"].to_numpy())


def _base_name(col):
    head, _, rest = col.partition("_")
    return rest if head in BLOCKS else col


def prune_features(dataset: LabeledDataset, mode="paper", *, seed=0, n_trees=50,
                   n_repeats=5, metric="recall", importance_out=None):
    """Remove features.

    ``paper`` drops the hard-acceleration counts, temperature and the speed
    coefficient of variation in every block.  ``auto`` fits a random forest
    on a stratified 70% split and drops every feature whose permutation
    importance on the held-out 30% is not positive.
    """
    if mode == "paper":
        return dataset.drop_columns([f for f in dataset.feature_names
                                     if _base_name(f) in PAPER_PRUNED])
    if mode == "auto":
        from .balance import stratified_split
        from .explain import permutation_importance
        from .models import RFConfig, train_rf

        train, test = stratified_split(dataset, 0.7, seed)
        model = train_rf(train, RFConfig(n_trees=n_trees, seed=seed))
        rep = permutation_importance(model, test, metric=metric,
                                     n_repeats=n_repeats, seed=seed)
        if importance_out is not None:
            importance_out.append(rep)
        keep = [f for f, s in zip(rep.feature_names, rep.scores) if s > 0]
        if not keep:
            raise ValueError("automatic pruning would remove every feature")
        return dataset.select_columns(keep)
    raise ValueError(f"unknown prune mode {mode!r}")
