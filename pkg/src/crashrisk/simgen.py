"""Synthetic evacuation traffic on a two-carriageway corridor.

Vehicles enter at segment boundaries, drive a number of segments and report
pings every few seconds.  Speeds follow an Ornstein-Uhlenbeck process around
a target made of a free-flow level, a per-segment offset and two regime
tables on a one-minute grid:

* an oscillation amplitude, switched on in the minutes before every crash on
  the crash segment and the one upstream of it, and in stop-and-go waves at
  capacity that are unrelated to crashes;
* a speed shift holding recurring daytime congestion on spatially smooth
  stretches of road, the slower speed inside stop-and-go waves, a departure
  of the crash segment's traffic from its neighbours (faster or slower)
  before every crash, and a slowdown that ramps in after every crash and
  then recovers.

Each crash has a dedicated reporting vehicle that approaches from upstream,
drives into the crash segment shortly before the crash time and stops
reporting at the crash, so every crash bin holds at least one ping.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd

from .corridor import (METERS_PER_MILE, CorridorMap, WeatherStation, build_corridor,
                       point_at_distance)


@dataclass(frozen=True)
class ScenarioConfig:
    n_segments: int = 124
    target_segment_length_miles: float = 2.25
    duration_hours: float = 72.0
    start_time: int = 1630108800  # 2021-08-28 00:00 UTC
    vehicles_per_hour: float = 900.0
    penetration_rate: float = 0.02
    ping_interval_s: float = 5.0
    ping_jitter_s: float = 2.0
    mean_trip_segments: float = 20.0
    free_flow_kmh: float = 125.0
    speed_noise_kmh: float = 7.0
    speed_relax_s: float = 20.0
    group_effect_sigma_kmh: float = 6.0
    n_crashes: int = 180
    precursor_amplitude_kmh: float = 45.0
    precursor_fast_kmh: float = 22.0
    precursor_slow_kmh: float = 45.0
    precursor_lead_min: float = 15.0
    oscillation_period_s: float = 120.0
    slowdown_kmh: float = 45.0
    slowdown_ramp_min: float = 10.0
    slowdown_hold_min: float = 20.0
    slowdown_recovery_min: float = 30.0
    upstream_factor: float = 0.7
    congestion_kmh: float = 60.0
    background_waves: int = 360
    background_wave_min: float = 15.0
    background_wave_amplitude_kmh: float = 35.0
    background_wave_shift_kmh: float = 35.0
    max_accel_ms2: float = 4.0
    speed_cap_kmh: float = 200.0
    gps_noise_m: float = 4.0
    carriageway_offset_m: float = 25.0
    n_weather_stations: int = 3
    accel_missing_rate: float = 0.05
    outlier_rate: float = 0.0
    seed: int = 0

    def __post_init__(self):
        pos = ["n_segments", "target_segment_length_miles", "duration_hours",
               "vehicles_per_hour", "ping_interval_s", "mean_trip_segments",
               "free_flow_kmh", "oscillation_period_s", "max_accel_ms2", "speed_cap_kmh",
               "speed_relax_s", "n_weather_stations"]
        for name in pos:
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not 0 < self.penetration_rate <= 1:
            raise ValueError("penetration_rate must lie in (0, 1]")
        if self.n_segments % 2:
            raise ValueError("n_segments counts both directions and must be even")
        if self.ping_interval_s + self.ping_jitter_s > 30 or \
                self.ping_interval_s - self.ping_jitter_s < 1:
            raise ValueError("ping intervals must stay within [1, 30] s")
        for name in ("n_crashes", "background_waves", "congestion_kmh", "group_effect_sigma_kmh",
                     "speed_noise_kmh", "precursor_amplitude_kmh", "slowdown_kmh",
                     "precursor_fast_kmh", "precursor_slow_kmh",
                     "background_wave_amplitude_kmh", "background_wave_shift_kmh",
                     "gps_noise_m", "outlier_rate", "accel_missing_rate"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.max_accel_ms2 >= 13.0:
            raise ValueError("max_accel_ms2 must stay below the cleaning cap of 13 m/s^2")


@dataclass
class Corpus:
    corridor: CorridorMap
    pings: pd.DataFrame
    crashes: pd.DataFrame
    weather: pd.DataFrame
    ground_truth: pd.DataFrame
    crash_info: pd.DataFrame  # crash index, direction, local segment, time


def _centerline(n_dir, seg_len_m, rng):
    """Gently curving west-to-east line of the requested arc length."""
    lat0, lon0 = 30.35, -92.2
    total = n_dir * seg_len_m
    step = 400.0
    n = int(math.ceil(total / step)) + 1
    heading = 0.15 * np.sin(np.linspace(0, 5 * np.pi, n) + rng.uniform(0, np.pi))
    dx = step * np.cos(heading)
    dy = step * np.sin(heading)
    xy = np.concatenate([[[0.0, 0.0]], np.stack([np.cumsum(dx), np.cumsum(dy)], 1)])
    lens = np.linalg.norm(np.diff(xy, axis=0), axis=1)
    cum = np.concatenate([[0.0], np.cumsum(lens)])
    keep = cum <= total
    xy = np.vstack([xy[keep], point_at_distance(xy, total)])
    kx = 6371008.8 * np.cos(np.radians(lat0)) * np.pi / 180
    ky = 6371008.8 * np.pi / 180
    return np.stack([lat0 + xy[:, 1] / ky, lon0 + xy[:, 0] / kx], axis=1)


def _diurnal(hour_of_day):
    """Relative traffic volume: daytime evacuation peak, quiet nights."""
    return 0.15 + 0.85 * np.exp(-0.5 * ((hour_of_day - 13.0) / 4.0) ** 2)


def _schedule_crashes(cfg, n_dir, rng):
    minutes = int(cfg.duration_hours * 60)
    lead = int(math.ceil(cfg.precursor_lead_min))
    lo = lead + 20
    hi = minutes - 60
    if cfg.n_crashes and hi <= lo:
        raise ValueError("scenario too short for the crash precursor window")
    w = _diurnal(((np.arange(minutes) / 60.0) + 0.0) % 24)
    w[:lo] = 0
    w[hi:] = 0
    usable_bins = 2 * n_dir * max(hi - lo, 0) // 180
    if cfg.n_crashes > usable_bins:
        raise ValueError(f"infeasible scenario: {cfg.n_crashes} crashes but only "
                         f"{usable_bins} separable segment slots")
    w = w / w.sum() if w.sum() > 0 else w
    taken = {}
    out = []
    attempts = 0
    while len(out) < cfg.n_crashes:
        attempts += 1
        if attempts > 200 * max(1, cfg.n_crashes):
            raise ValueError("infeasible scenario: cannot place the requested crashes")
        d = int(rng.integers(0, 2))
        s = int(rng.integers(1, n_dir))  # keep an upstream neighbour
        m = int(rng.choice(minutes, p=w))
        sec = int(rng.integers(0, 60))
        t = m * 60 + sec
        # the reporting vehicle needs time inside the crash bin before the crash
        if t % 300 < 90:
            t += 90
        key = (d, s)
        if any(abs(t - u) < 3 * 3600 for u in taken.get(key, [])):
            continue
        taken.setdefault(key, []).append(t)
        out.append((d, s, t))
    out.sort(key=lambda r: (r[2], r[0], r[1]))
    return out


def _regimes(cfg, n_dir, crashes, rng):
    """Oscillation amplitude and speed shift on a (direction, segment, minute)
    grid, plus per-segment baseline offsets."""
    minutes = int(cfg.duration_hours * 60) + 120
    amp = np.zeros((2, n_dir, minutes))
    shift = np.zeros((2, n_dir, minutes))
    lead = cfg.precursor_lead_min
    ramp, hold, rec = cfg.slowdown_ramp_min, cfg.slowdown_hold_min, cfg.slowdown_recovery_min
    grid = np.arange(minutes) + 0.5
    modes = rng.random(len(crashes)) < 0.5
    for (d, s, t), fast in zip(crashes, modes):
        tm = t / 60.0
        pre = (grid >= tm - lead) & (grid < tm)
        after = grid - tm
        prof = np.where(after < 0, 0.0,
               np.where(after < ramp, after / ramp,
               np.where(after < ramp + hold, 1.0,
               np.where(after < ramp + hold + rec, 1.0 - (after - ramp - hold) / rec, 0.0))))
        for seg, f in ((s, 1.0), (s - 1, cfg.upstream_factor)):
            amp[d, seg, pre] = np.maximum(amp[d, seg, pre], f * cfg.precursor_amplitude_kmh)
            shift[d, seg] = np.minimum(shift[d, seg], -f * cfg.slowdown_kmh * prof)
        # the crash segment's traffic departs from its neighbours' speed in
        # either direction before the crash
        shift[d, s, pre] += cfg.precursor_fast_kmh if fast else -cfg.precursor_slow_kmh
    total_min = int(cfg.duration_hours * 60)
    # stop-and-go waves at capacity: strong oscillation at intermediate speed
    # over a few adjacent segments, unrelated to crashes
    for _ in range(cfg.background_waves):
        d = int(rng.integers(0, 2))
        s = int(rng.integers(0, n_dir))
        span = slice(max(s - 1, 0), min(s + 2, n_dir))
        m0 = rng.uniform(0, total_min)
        dur = cfg.background_wave_min * rng.uniform(0.5, 1.5)
        a = cfg.background_wave_amplitude_kmh * rng.uniform(0.6, 1.0)
        on = (grid >= m0) & (grid < m0 + dur)
        amp[d, span, on] = np.maximum(amp[d, span, on], a)
        shift[d, span, on] -= cfg.background_wave_shift_kmh
    # recurring daytime congestion on a random share of the segments
    hod = ((grid / 60.0) + (cfg.start_time % 86400) / 3600.0) % 24
    demand = np.clip((_diurnal(hod) - 0.5) / 0.5, 0.0, None)
    raw = rng.uniform(0.0, 1.0, size=(2, n_dir + 8))
    kernel = np.ones(9) / 9.0
    prone = np.stack([np.convolve(r, kernel, mode="valid") for r in raw])
    prone = (prone - prone.min()) / max(np.ptp(prone), 1e-12)
    shift += -cfg.congestion_kmh * prone[:, :, None] * demand[None, None, :]
    offsets = rng.normal(0.0, cfg.group_effect_sigma_kmh, size=(2, n_dir))
    return amp, shift, offsets


class _Kinematics:
    """Vectorised speed update shared by ordinary and crash vehicles."""

    def __init__(self, cfg, seg_len, n_dir, amp, shift, offsets):
        self.cfg = cfg
        self.seg_len = seg_len
        self.n_dir = n_dir
        self.amp = amp
        self.shift = shift
        self.offsets = offsets

    def target(self, d, s, t, phase):
        cfg = self.cfg
        seg = np.clip((s // self.seg_len).astype(np.int64), 0, self.n_dir - 1)
        minute = np.clip(((t - cfg.start_time) // 60).astype(np.int64), 0,
                         self.amp.shape[2] - 1)
        osc = self.amp[d, seg, minute] * np.sin(
            2 * np.pi * t / cfg.oscillation_period_s + phase)
        return cfg.free_flow_kmh + self.offsets[d, seg] + self.shift[d, seg, minute] + osc

    def step(self, d, s, t, v, phase, dt, noise, cap=None):
        cfg = self.cfg
        tgt = self.target(d, s, t + dt, phase)
        rho = np.exp(-dt / cfg.speed_relax_s)
        v_new = tgt + (v - tgt) * rho + cfg.speed_noise_kmh * np.sqrt(1 - rho * rho) * noise
        dv_max = cfg.max_accel_ms2 * 3.6 * dt
        v_new = np.clip(v_new, v - dv_max, v + dv_max)
        v_new = np.clip(v_new, 0.0, cfg.speed_cap_kmh if cap is None else cap)
        s_new = s + 0.5 * (v + v_new) / 3.6 * dt
        return s_new, v_new


def _simulate(cfg, kin, d, s0, t0, exit_s, stop_t, rng, cap=None):
    """Simulate vehicles of one direction; returns ping arrays.

    Vehicles report at their current state, then advance.  A vehicle stops
    once it passes ``exit_s`` or reaches ``stop_t`` (reporting at exactly
    ``stop_t`` if that falls before the exit).
    """
    n = len(s0)
    s = s0.astype(float).copy()
    t = t0.astype(np.int64).copy()
    phase = rng.uniform(0, 2 * np.pi, n)
    dvec = np.full(n, d)
    v = kin.target(dvec, s, t.astype(float), phase) + \
        cfg.speed_noise_kmh * rng.standard_normal(n)
    v = np.clip(v, 0.0, cfg.speed_cap_kmh if cap is None else cap)
    acc = np.full(n, np.nan)
    alive = np.ones(n, dtype=bool)
    out_i, out_t, out_s, out_v, out_a = [], [], [], [], []
    lo = int(round(cfg.ping_interval_s - cfg.ping_jitter_s))
    hi = int(round(cfg.ping_interval_s + cfg.ping_jitter_s))
    while alive.any():
        idx = np.flatnonzero(alive)
        out_i.append(idx)
        out_t.append(t[idx].copy())
        out_s.append(s[idx].copy())
        out_v.append(v[idx].copy())
        out_a.append(acc[idx].copy())
        dt = rng.integers(lo, hi + 1, len(idx))
        # the last report of a stopping vehicle lands exactly on its stop time
        remaining = stop_t[idx] - t[idx]
        dt = np.where((remaining > 0) & (remaining < dt), remaining, dt)
        noise = rng.standard_normal(len(idx))
        s_new, v_new = kin.step(dvec[idx], s[idx], t[idx].astype(float), v[idx],
                                phase[idx], dt.astype(float), noise, cap)
        acc[idx] = (v_new - v[idx]) / 3.6 / dt
        s[idx], v[idx], t[idx] = s_new, v_new, t[idx] + dt
        alive[idx] = (s_new < exit_s[idx]) & (t[idx] <= stop_t[idx]) & \
            (t[idx] < cfg.start_time + cfg.duration_hours * 3600)
    cat = np.concatenate
    return cat(out_i), cat(out_t), cat(out_s), cat(out_v), cat(out_a)


def generate(config: ScenarioConfig = ScenarioConfig()) -> Corpus:
    """Build corridor, pings, crashes, weather and ground truth in memory."""
    cfg = config
    ss = np.random.SeedSequence(cfg.seed)
    rng_geo, rng_crash, rng_reg, rng_pop, rng_dyn, rng_obs, rng_wx = \
        (np.random.default_rng(s) for s in ss.spawn(7))
    n_dir = cfg.n_segments // 2
    seg_len_target = cfg.target_segment_length_miles * METERS_PER_MILE

    center = _centerline(n_dir, seg_len_target, rng_geo)
    stations = []
    for k in range(cfg.n_weather_stations):
        p = center[int(round((k + 0.5) / cfg.n_weather_stations * (len(center) - 1)))]
        stations.append(WeatherStation(f"KST{k}", round(float(p[0]) + 0.07, 6),
                                       round(float(p[1]), 6)))
    corridor = build_corridor(center, cfg.target_segment_length_miles,
                              cfg.carriageway_offset_m, "arc", 100.0, stations)
    if sum(s.direction == "EB" for s in corridor.segments) != n_dir:
        raise ValueError("corridor construction produced an unexpected segment count")
    proj = corridor.projection
    lanes, seg_len = [], []
    for dname in ("EB", "WB"):
        segs = [s for s in corridor.segments if s.direction == dname]
        pts = [proj.to_xy(s.polyline[:, 0], s.polyline[:, 1]) for s in segs]
        lanes.append(np.vstack([pts[0]] + [p[1:] for p in pts[1:]]))
        seg_len.append(np.mean([np.linalg.norm(np.diff(p, axis=0), axis=1).sum()
                                for p in pts]))
    seg_len = float(np.mean(seg_len))
    lane_len = n_dir * seg_len

    crashes = _schedule_crashes(cfg, n_dir, rng_crash)
    amp, shift, offsets = _regimes(cfg, n_dir, crashes, rng_reg)
    kin = _Kinematics(cfg, seg_len, n_dir, amp, shift, offsets)

    # full vehicle population; connected vehicles are a thinning by u
    hours = int(math.ceil(cfg.duration_hours))
    per_hour = rng_pop.poisson(cfg.vehicles_per_hour * _diurnal(np.arange(hours) % 24),
                               size=(2, hours))
    frames = []
    end_time = cfg.start_time + int(cfg.duration_hours * 3600)
    for d in (0, 1):
        n_all = int(per_hour[d].sum())
        hour_of = np.repeat(np.arange(hours), per_hour[d])
        entry = cfg.start_time + hour_of * 3600 + rng_pop.integers(0, 3600, n_all)
        first = rng_pop.integers(0, n_dir, n_all)
        trip = 1 + rng_pop.geometric(1.0 / cfg.mean_trip_segments, n_all)
        u = rng_pop.random(n_all)
        keep = (u < cfg.penetration_rate) & (entry < end_time)
        idx = np.flatnonzero(keep)
        s0 = first[idx] * seg_len + 1.0
        exit_s = np.minimum(first[idx] + trip[idx], n_dir) * seg_len - 1.0
        never = np.full(len(idx), np.iinfo(np.int64).max)
        vi, vt, vs, vv, va = _simulate(cfg, kin, d, s0, entry[idx], exit_s, never, rng_dyn)
        frames.append(pd.DataFrame({
            "vehicle_id": np.array([f"V{'EW'[d]}{i:07d}" for i in idx])[vi],
            "d": d, "timestamp": vt, "s": vs, "speed": vv, "accel": va}))

    # crash reporting vehicles: enter the crash segment 30-90 s before the crash
    crash_rows = []
    for d in (0, 1):
        sel = [(i, c) for i, c in enumerate(crashes) if c[0] == d]
        if not sel:
            continue
        ids = np.array([i for i, _ in sel])
        seg = np.array([c[1] for _, c in sel])
        tc = np.array([cfg.start_time + c[2] for _, c in sel], dtype=np.int64)
        t_in = tc - rng_crash.integers(30, 91, len(sel))
        s0 = seg * seg_len + 50.0
        exit_s = (seg + 1) * seg_len - 1.0
        # their speed stays near the free-flow mode so that outlier cleaning
        # does not remove the only observation of a crash bin
        vi, vt, vs, vv, va = _simulate(cfg, kin, d, s0, t_in, exit_s, tc, rng_dyn,
                                       cap=cfg.free_flow_kmh + cfg.precursor_fast_kmh)
        frames.append(pd.DataFrame({
            "vehicle_id": np.array([f"C{i:05d}" for i in ids])[vi],
            "d": d, "timestamp": vt, "s": vs, "speed": vv, "accel": va}))
        # like any trip, the reporting vehicle arrives from upstream segments
        k_up = np.minimum(seg, rng_crash.geometric(0.4, len(sel)))
        t_up = t_in - np.round(k_up * seg_len / (cfg.free_flow_kmh / 3.6)).astype(np.int64)
        ok = np.flatnonzero((k_up > 0) & (t_up >= cfg.start_time))
        if len(ok):
            ai, at, as_, av, aa = _simulate(cfg, kin, d, (seg[ok] - k_up[ok]) * seg_len + 1.0,
                                            t_up[ok], seg[ok] * seg_len + 49.0, t_in[ok] - 1,
                                            rng_dyn, cap=cfg.free_flow_kmh + cfg.precursor_fast_kmh)
            keep = at < t_in[ok][ai]
            frames.append(pd.DataFrame({
                "vehicle_id": np.array([f"C{i:05d}" for i in ids[ok]])[ai[keep]],
                "d": d, "timestamp": at[keep], "s": as_[keep], "speed": av[keep],
                "accel": aa[keep]}))
        last = pd.DataFrame({"k": vi, "t": vt, "s": vs}).groupby("k").last()
        for k in range(len(sel)):
            crash_rows.append((int(ids[k]), d, int(seg[k]), int(tc[k]),
                               float(last.loc[k, "s"]) if k in last.index else float(s0[k])))
    pings = pd.concat(frames, ignore_index=True)

    # positions with GPS noise
    lat = np.empty(len(pings))
    lon = np.empty(len(pings))
    for d in (0, 1):
        m = pings["d"].to_numpy() == d
        xy = point_at_distance(lanes[d], np.clip(pings.loc[m, "s"].to_numpy(), 0, lane_len))
        xy = xy + rng_obs.normal(0, cfg.gps_noise_m, xy.shape)
        lat[m], lon[m] = proj.to_latlon(xy)
    pings["lat"] = np.round(lat, 6)
    pings["lon"] = np.round(lon, 6)
    pings["speed"] = np.round(pings["speed"].to_numpy(), 2)
    acc = pings["accel"].to_numpy()
    acc = acc + rng_obs.normal(0, 0.1, len(acc))
    acc = np.clip(acc, -cfg.max_accel_ms2, cfg.max_accel_ms2)
    acc[rng_obs.random(len(acc)) < cfg.accel_missing_rate] = np.nan
    pings["accel"] = np.round(acc, 3)
    if cfg.outlier_rate > 0:
        bad = rng_obs.random(len(pings)) < cfg.outlier_rate
        kind = rng_obs.random(len(pings)) < 0.5
        sp = pings["speed"].to_numpy().copy()
        ac = pings["accel"].to_numpy().copy()
        sp[bad & kind] = np.round(rng_obs.uniform(320, 400, int((bad & kind).sum())), 2)
        ac[bad & ~kind] = np.round(rng_obs.uniform(14, 30, int((bad & ~kind).sum())), 3)
        pings["speed"] = sp
        pings["accel"] = ac
    pings = pings.sort_values(["timestamp", "vehicle_id"], kind="mergesort")
    pings = pings[["vehicle_id", "timestamp", "lat", "lon", "speed", "accel"]]
    pings = pings.reset_index(drop=True)

    # crash records at the reporting vehicle's final position
    crash_rows.sort()
    seg_ids = {d: [s.segment_id for s in corridor.segments if s.direction == name]
               for d, name in ((0, "EB"), (1, "WB"))}
    cr, gt, info = [], [], []
    for i, d, seg, tc, s_end in crash_rows:
        xy = point_at_distance(lanes[d], np.array([s_end]))[0]
        la, lo_ = proj.to_latlon(xy)
        cr.append((tc, round(float(la), 6), round(float(lo_), 6), ("EB", "WB")[d]))
        gt.append((seg_ids[d][seg], tc // 300 * 300, 1))
        info.append((i, ("EB", "WB")[d], seg, tc))
    crashes_df = pd.DataFrame(cr, columns=["timestamp", "lat", "lon", "direction"])
    crashes_df = crashes_df.sort_values("timestamp", kind="mergesort").reset_index(drop=True)
    gt_df = pd.DataFrame(gt, columns=["segment_id", "bin_start", "crash_check"])
    gt_df = gt_df.drop_duplicates().sort_values(["segment_id", "bin_start"]).reset_index(drop=True)
    info_df = pd.DataFrame(info, columns=["crash", "direction", "segment", "timestamp"])

    weather = _weather(cfg, stations, rng_wx)
    return Corpus(corridor, pings, crashes_df, weather, gt_df, info_df)


def _weather(cfg, stations, rng):
    hours = int(math.ceil(cfg.duration_hours)) + 1
    h = cfg.start_time // 3600 * 3600 + 3600 * np.arange(hours)
    rows = []
    for k, st in enumerate(stations):
        hod = (h // 3600) % 24
        temp = 80.0 + 6.0 * np.sin(2 * np.pi * (hod - 9) / 24) + rng.normal(0, 0.8, hours) \
            + 1.5 * k
        rain = rng.random(hours) < 0.12
        precip = np.where(rain, rng.exponential(2.5, hours), 0.0)
        for j in range(hours):
            rows.append((st.station_id, int(h[j]), round(float(temp[j]), 1),
                         round(float(precip[j]), 2)))
    return pd.DataFrame(rows, columns=["station_id", "hour_start", "temp_f", "precip_mm"])


def _fmt_float(v, digits):
    return "" if v != v else f"{v:.{digits}f}"


def write_corpus(corpus: Corpus, outdir):
    """Write the CSV/JSON files consumed by ingest; returns their paths."""
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"pings": out / "pings.csv", "crashes": out / "crashes.csv",
             "weather": out / "weather.csv", "corridor": out / "corridor.json",
             "ground_truth": out / "ground_truth.csv"}
    p = corpus.pings
    with open(paths["pings"], "w") as fh:
        fh.write("vehicle_id,timestamp,lat,lon,speed_kmh,accel_ms2\n")
        for vid, t, la, lo, sp, ac in zip(p["vehicle_id"], p["timestamp"], p["lat"],
                                          p["lon"], p["speed"], p["accel"]):
            fh.write(f"{vid},{int(t)},{la:.6f},{lo:.6f},{sp:.2f},{_fmt_float(ac, 3)}\n")
    with open(paths["crashes"], "w") as fh:
        fh.write("timestamp,lat,lon,direction\n")
        for r in corpus.crashes.itertuples(index=False):
            fh.write(f"{int(r.timestamp)},{r.lat:.6f},{r.lon:.6f},{r.direction}\n")
    with open(paths["weather"], "w") as fh:
        fh.write("station_id,hour_start,temp_f,precip_mm\n")
        for r in corpus.weather.itertuples(index=False):
            fh.write(f"{r.station_id},{int(r.hour_start)},{r.temp_f:.1f},{r.precip_mm:.2f}\n")
    with open(paths["ground_truth"], "w") as fh:
        fh.write("segment_id,bin_start,crash_check\n")
        for r in corpus.ground_truth.itertuples(index=False):
            fh.write(f"{r.segment_id},{int(r.bin_start)},{int(r.crash_check)}\n")
    corpus.corridor.save(paths["corridor"])
    return paths


def scenario_from_dict(d):
    known = {f.name for f in dataclasses.fields(ScenarioConfig)}
    unknown = set(d) - known
    if unknown:
        raise ValueError(f"unknown scenario fields {sorted(unknown)}")
    return ScenarioConfig(**d)
