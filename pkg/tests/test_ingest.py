import math

import numpy as np
import pandas as pd
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crashrisk.corridor import build_corridor
from crashrisk.ingest import (ACCEL_CAP, IngestError, SpeedBounds, clean_pings,
                              compute_speed_bounds, ingest, iter_pings, match_crashes,
                              match_to_segment, parse_crashes, parse_pings, parse_weather)
from test_corridor import straight_line


def write(path, text):
    path.write_text(text)
    return path


def test_parse_pings_skips_bad_rows(tmp_path):
    p = write(tmp_path / "p.csv",
              "vehicle_id,timestamp,lat,lon,speed_kmh,accel_ms2\n"
              "a,10,30.4,-92.0,100.5,0.3\n"
              "a,10,30.4,-92.0,99.0,0.1\n"       # duplicate (vehicle, timestamp)
              "b,11,30.4,-92.0,80,\n"            # accel not reported
              "c,12,95,-92.0,80,0\n"             # latitude out of range
              "d,13,30.4,-92.0,-1,0\n"           # negative speed
              "e,xx,30.4,-92.0,50,0\n"           # unparsable timestamp
              "f,14,30.4,-92.0,50\n"             # missing field
              ",15,30.4,-92.0,50,0\n"            # empty id
              "g,16,30.4,-92.0,nan,0\n")         # non-finite
    df, rep = parse_pings(p, max_malformed_fraction=1.0)
    assert list(df["vehicle_id"]) == ["a", "b"]
    assert df["speed"].tolist() == [100.5, 80.0]
    assert math.isnan(df["accel"].iloc[1])
    assert rep.n_rows == 9 and rep.duplicates == 1 and rep.malformed == 6
    assert rep.n_parsed == 2


def test_parse_pings_rejects_wrong_header(tmp_path):
    p = write(tmp_path / "p.csv", "id,t,lat,lon,speed\n")
    with pytest.raises(IngestError, match="header"):
        parse_pings(p)


def test_parse_pings_missing_and_empty(tmp_path):
    with pytest.raises(IngestError, match="missing"):
        parse_pings(tmp_path / "nope.csv")
    with pytest.raises(IngestError, match="empty"):
        parse_pings(write(tmp_path / "e.csv", ""))


def test_parse_pings_too_many_malformed(tmp_path):
    p = write(tmp_path / "p.csv", "vehicle_id,timestamp,lat,lon,speed_kmh,accel_ms2\n"
              "a,1,30,-92,10,0\nb,x,30,-92,10,0\nc,y,30,-92,10,0\n")
    with pytest.raises(IngestError, match="malformed"):
        parse_pings(p)


def test_iter_pings(tmp_path):
    p = write(tmp_path / "p.csv", "vehicle_id,timestamp,lat,lon,speed_kmh,accel_ms2\n"
              "a,1,30.4,-92.0,10,\n")
    df, _ = parse_pings(p)
    ping = next(iter_pings(df))
    assert ping.vehicle_id == "a" and ping.reported_accel is None


def test_parse_crashes(tmp_path):
    p = write(tmp_path / "c.csv", "timestamp,lat,lon,direction\n"
              "100,30.4,-92,EB\n200,30.4,-92,\n300,30.4,-92,NB\n")
    df, rep = parse_crashes(p)
    assert len(df) == 2 and rep.malformed == 1
    assert df["direction"].iloc[1] is None


def test_parse_weather(tmp_path):
    p = write(tmp_path / "w.csv", "station_id,hour_start,temp_f,precip_mm\n"
              "S1,3600,80.5,0.0\nS1,3600,70,0\nS1,3700,70,0\nS1,7200,71,-1\nS2,0,60,1.5\n")
    df, rep = parse_weather(p)
    assert list(df["station_id"]) == ["S1", "S2"]
    assert rep.duplicates == 1 and rep.malformed == 2


def test_speed_bounds_match_numpy_percentiles(rng):
    s = rng.gamma(3.0, 30.0, 999)
    q1, q3 = np.percentile(s, [25, 75])
    b = compute_speed_bounds(s)
    assert b.lower == 0.0 and b.upper == pytest.approx(q3 + 1.5 * (q3 - q1), rel=1e-12)
    assert compute_speed_bounds([5.0]).upper == 5.0
    with pytest.raises(ValueError):
        compute_speed_bounds([])


def test_clean_counts_each_rule_once():
    df = pd.DataFrame({"speed": [50, 50, 500, 500, 60],
                       "accel": [0, 14, 0, 20, np.nan]})
    kept, rep = clean_pings(df, SpeedBounds(0.0, 100.0))
    assert kept["speed"].tolist() == [50, 60]
    assert (rep.n_in, rep.n_retained, rep.rejected_speed, rep.rejected_accel) == (5, 2, 2, 1)


def test_accel_cap_is_inclusive():
    df = pd.DataFrame({"speed": [1.0, 1.0], "accel": [ACCEL_CAP, -ACCEL_CAP]})
    kept, _ = clean_pings(df, SpeedBounds(0.0, 10.0))
    assert len(kept) == 2


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0, 300), min_size=1, max_size=100))
def test_bounds_contain_the_middle_half(speeds):
    s = np.array(speeds)
    b = compute_speed_bounds(s)
    q1, q3 = np.quantile(s, [0.25, 0.75])
    inner = s[(s >= q1) & (s <= q3)]
    assert np.all(inner <= b.upper + 1e-9)


@pytest.fixture(scope="module")
def corridor():
    return build_corridor(straight_line(9.0))


def test_match_crashes_honours_direction(corridor, caplog):
    seg = corridor.segments[5]  # a westbound segment
    lat, lon = seg.polyline[1]
    df = pd.DataFrame({"timestamp": [1.0, 2.0, 3.0], "lat": [lat, lat, 31.0],
                       "lon": [lon, lon, -92.0], "direction": ["EB", "WB", None]})
    out, n_bad = match_crashes(df, corridor)
    assert n_bad == 1
    ids = [corridor.segment_ids[i] for i in out["segment"]]
    assert ids[0].startswith("EB") and ids[1] == seg.segment_id
    assert "outside the corridor" in caplog.text


def test_match_to_segment(corridor):
    from crashrisk.ingest import VehiclePing
    lat, lon = corridor.segments[2].polyline[1]
    assert match_to_segment(VehiclePing("v", 0.0, lat, lon, 50.0, None), corridor)[0] == "EB-002"


def test_ingest_end_to_end(tmp_path, corridor):
    lat, lon = corridor.segments[0].polyline[1]
    rows = ["vehicle_id,timestamp,lat,lon,speed_kmh,accel_ms2"]
    speeds = [100, 102, 98, 101, 99, 103, 97, 100, 400]
    for i, s in enumerate(speeds):
        rows.append(f"v{i},{i},{lat},{lon},{s},0")
    rows.append(f"z,50,{lat},{lon},100,15")
    rows.append("far,60,31.5,-92,100,0")
    p = write(tmp_path / "p.csv", "\n".join(rows) + "\n")
    c = write(tmp_path / "c.csv", f"timestamp,lat,lon,direction\n5,{lat},{lon},EB\n")
    w = write(tmp_path / "w.csv", "station_id,hour_start,temp_f,precip_mm\nS,0,70,0\n")
    res = ingest(p, c, w, corridor)
    s = res.summary
    assert s["rejected_speed"] == 1 and s["rejected_accel"] == 1
    assert s["pings_off_corridor"] == 1 and s["pings_retained"] == 8
    assert s["crashes_matched"] == 1
    assert (res.pings["segment"] == 0).all()


def test_ingest_no_pings(tmp_path, corridor):
    p = write(tmp_path / "p.csv", "vehicle_id,timestamp,lat,lon,speed_kmh,accel_ms2\n")
    c = write(tmp_path / "c.csv", "timestamp,lat,lon,direction\n")
    w = write(tmp_path / "w.csv", "station_id,hour_start,temp_f,precip_mm\n")
    with pytest.raises(IngestError, match="no usable"):
        ingest(p, c, w, corridor)
