import numpy as np
import pandas as pd
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import make_pings
from crashrisk.corridor import WeatherStation, build_corridor
from crashrisk.features import (CORE_FEATURES, FeatureConfig, aggregate_core, bin_pings,
                                bin_start_of, build_feature_table, compute_core_features,
                                feature_names, join_context, join_labels, join_weather,
                                per_vehicle_accels, prune_features, station_for_segments)
from test_corridor import straight_line


def test_bin_start_floor():
    assert bin_start_of([0, 299.9, 300, 601, -1]).tolist() == [0, 0, 300, 600, -300]
    assert bin_start_of([59], 60).tolist() == [0]


def test_bin_pings_groups_non_empty_bins():
    df = make_pings([("a", 10, 50, 0), ("b", 310, 50, 0), ("c", 20, 50, 1), ("d", 30, 50, 0)])
    groups = bin_pings(df)
    assert set(groups) == {(0, 0), (0, 300), (1, 0)}
    assert sorted(groups[(0, 0)].tolist()) == [0, 3]


def test_accels_skip_zero_dt_and_convert_units():
    a = per_vehicle_accels([0, 10, 10, 20], [36, 72, 0, 36])
    # 36 -> 72 km/h over 10 s is 1 m/s^2; the repeated timestamp is skipped;
    # 0 -> 36 km/h over 10 s is 1 m/s^2
    assert a == pytest.approx([1.0, 1.0])
    assert len(per_vehicle_accels([5.0], [10.0])) == 0


def test_hand_computed_bin():
    rows = [("A", 0, 36, 0), ("A", 10, 72, 0),       # +1 m/s^2
            ("B", 0, 108, 0), ("B", 5, 72, 0),       # -2 m/s^2
            ("C", 100, 170, 0),                      # speeder, single ping
            ("D", 0, 0, 0), ("D", 2, 36, 0)]         # +5 m/s^2, a hard acceleration
    f = compute_core_features(make_pings(rows))
    speeds = np.array([36, 72, 108, 72, 170, 0, 36.0])
    assert f["mean_speed"] == pytest.approx(speeds.mean())
    assert f["ss"] == pytest.approx(speeds.std())
    assert f["max_speed"] == 170
    assert f["veh_cnt"] == 4 and f["speed_cnt_thres"] == 1
    assert f["acc_cal"] == pytest.approx(3.0) and f["max_acc"] == pytest.approx(5.0)
    assert f["dcc_cal"] == pytest.approx(-2.0) and f["max_dcc"] == pytest.approx(2.0)
    assert f["acc_cnt_thres"] == 1 and f["dcc_cnt_thres"] == 0


def test_bin_without_accelerations_is_zero():
    f = compute_core_features(make_pings([("A", 0, 50, 0), ("B", 1, 60, 0)]))
    for k in ("acc_cal", "dcc_cal", "max_acc", "max_dcc", "acc_cnt_thres", "dcc_cnt_thres"):
        assert f[k] == 0.0


def test_no_acceleration_across_bin_boundary():
    df = make_pings([("A", 290, 0, 0), ("A", 310, 100, 0)])
    out = aggregate_core(df)
    assert len(out) == 2 and (out["max_acc"] == 0).all()


def test_speed_threshold_is_strict():
    f = compute_core_features(make_pings([("A", 0, 160.9, 0), ("B", 0, 161.0, 0)]))
    assert f["speed_cnt_thres"] == 1


def test_cvs_optional():
    cfg = FeatureConfig(include_cvs=True)
    out = aggregate_core(make_pings([("A", 0, 40, 0), ("B", 1, 60, 0)]), cfg)
    assert out["cvs"].iloc[0] == pytest.approx(10 / 50)
    assert len(feature_names(cfg)) == len(feature_names()) + 6


def test_feature_count_and_paper_pruning():
    names = feature_names()
    assert len(names) == 76
    ds = _tiny_dataset(names)
    pruned = prune_features(ds, "paper")
    assert len(pruned.feature_names) == 63
    for gone in ("acc_cnt_thres", "u1_dcc_cnt_thres", "t3_acc_cnt_thres", "temperature"):
        assert gone not in pruned.feature_names
    assert "precipitation" in pruned.feature_names
    with pytest.raises(ValueError):
        prune_features(ds, "bogus")


def _tiny_dataset(names, n=4):
    from crashrisk.dataset import LabeledDataset
    return LabeledDataset(names, np.zeros((n, len(names))), np.array([0, 1] * (n // 2)),
                          np.array(["s"] * n, dtype=object), np.arange(n) * 300)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 5), st.integers(0, 900), st.floats(0, 200),
                          st.integers(0, 2)), min_size=1, max_size=60),
       st.randoms(use_true_random=False))
def test_core_invariants(rows, rnd):
    rows = list({(r[0], r[1]): r for r in rows}.values())  # one ping per vehicle and second
    df = make_pings([(f"v{v}", t, s, g) for v, t, s, g in rows])
    out = aggregate_core(df)
    shuffled = df.sample(frac=1.0, random_state=rnd.randint(0, 1000))
    pd.testing.assert_frame_equal(out, aggregate_core(shuffled))
    assert (out["veh_cnt"] <= out["n_pings"]).all()
    assert (out["max_speed"] >= out["mean_speed"] - 1e-9).all()
    assert (out["ss"] >= 0).all()
    assert (out["dcc_cal"] <= 0).all() and (out["acc_cal"] >= 0).all()
    assert (out["max_acc"] >= out["acc_cal"] - 1e-12).all()
    assert (out["max_dcc"] >= -out["dcc_cal"] - 1e-12).all()
    assert (out["acc_cnt_thres"] <= out["veh_cnt"]).all()
    assert out["n_pings"].sum() == len(df)


# -- context joins -------------------------------------------------------------------

@pytest.fixture(scope="module")
def corridor():
    stations = [WeatherStation("WEST", 30.4, -92.0), WeatherStation("EAST", 30.4, -91.85)]
    return build_corridor(straight_line(9.0), weather_stations=stations)


def test_neighbour_and_lag_blocks(corridor):
    # EB-000 is index 0, EB-001 index 1; WB segments have no pings
    df = make_pings([("a", 10, 100, 0), ("b", 250, 80, 0),     # EB-000, bin 0
                     ("c", 20, 90, 1),                         # EB-001, bin 0
                     ("d", 320, 70, 1),                        # EB-001, bin 300
                     ("e", 1000, 60, 1)])                      # EB-001, bin 900
    core = aggregate_core(df)
    rec = join_context(core, corridor).set_index(["segment", "bin_start"])
    r = rec.loc[(1, 0)]
    assert r["u1_mean_speed"] == 90 and r["u1_missing"] == 0
    assert r["up_time_diff"] == 0 - 250
    assert r["d1_missing"] == 1 and r["d1_mean_speed"] == 0
    assert r["t1_missing"] == 1
    r = rec.loc[(1, 300)]
    assert r["t1_mean_speed"] == 90 and r["t1_missing"] == 0
    assert r["u1_missing"] == 1 and r["up_time_diff"] == 0
    r = rec.loc[(1, 900)]
    assert r["t1_missing"] == 1 and r["t2_mean_speed"] == 70 and r["t3_mean_speed"] == 90
    r = rec.loc[(0, 0)]
    assert r["u1_missing"] == 1 and r["d1_mean_speed"] == 90
    assert r["dist_seg"] == pytest.approx(corridor.lengths_miles()[0])


def test_time_of_day_with_offset(corridor):
    core = aggregate_core(make_pings([("a", 7 * 3600 + 10, 50, 0)]))
    assert join_context(core, corridor)["timeofday"].iloc[0] == 7
    shifted = join_context(core, corridor, FeatureConfig(utc_offset_hours=-5))
    assert shifted["timeofday"].iloc[0] == 2


def test_nearest_station_assignment(corridor):
    which = station_for_segments(corridor, ["WEST", "EAST"])
    ids = corridor.segment_ids
    assert which[ids.index("EB-000")] == 0 and which[ids.index("EB-003")] == 1
    assert station_for_segments(corridor, ["anything"]).tolist() == [0] * len(ids)
    with pytest.raises(ValueError):
        station_for_segments(corridor, ["WEST", "NOPE"])


def test_weather_hour_and_fallback(corridor):
    weather = pd.DataFrame({"station_id": ["WEST", "WEST", "EAST"],
                            "hour_start": [3600, 7200, 7200],
                            "temp_f": [70.0, 75.0, 90.0], "precip_mm": [0.0, 1.0, 2.0]})
    rec = pd.DataFrame({"segment": [0, 0, 0, 3], "bin_start": [3700, 7300, 100, 100]})
    out = join_weather(rec, weather, corridor)
    assert out["temperature"].tolist() == [70.0, 75.0, 70.0, 90.0]
    assert out["precipitation"].tolist() == [0.0, 1.0, 0.0, 2.0]


def test_labels_and_exclusion(caplog):
    rec = pd.DataFrame({"segment": [0, 0, 0, 1], "bin_start": [0, 300, 600, 0]})
    crashes = pd.DataFrame({"timestamp": [10.0, 5000.0], "segment": [0, 0]})
    out, missing = join_labels(rec, crashes)
    assert out["crash_check"].tolist() == [1, 0, 0, 0] and missing == 1
    assert "cannot be labelled" in caplog.text
    out, _ = join_labels(rec, crashes, FeatureConfig(exclusion_bins=1))
    assert list(zip(out["segment"], out["bin_start"])) == [(0, 0), (0, 600), (1, 0)]


def test_build_feature_table(corridor):
    df = make_pings([("a", 10, 100, 0), ("a", 20, 90, 0), ("c", 20, 90, 1)])
    crashes = pd.DataFrame({"timestamp": [30.0], "segment": [1]})
    weather = pd.DataFrame({"station_id": ["WEST"], "hour_start": [0],
                            "temp_f": [70.0], "precip_mm": [0.0]})
    ds = build_feature_table(df, crashes, weather, corridor)
    assert ds.feature_names == feature_names()
    assert ds.group_ids.tolist() == ["EB-000", "EB-001"]
    assert ds.y.tolist() == [0, 1]
    assert ds.column("dcc_cal")[0] == pytest.approx(-10 / 3.6 / 10)


def test_auto_prune_keeps_informative_columns(rng):
    from crashrisk.dataset import LabeledDataset
    n = 600
    X = rng.normal(size=(n, 4))
    y = (X[:, 0] > 0.5).astype(int)
    ds = LabeledDataset(["signal", "n1", "n2", "n3"], X, y,
                        np.array(["s"] * n, dtype=object), np.zeros(n, dtype=np.int64))
    reports = []
    out = prune_features(ds, "auto", seed=1, n_trees=20, n_repeats=3, importance_out=reports)
    assert "signal" in out.feature_names
    assert len(reports) == 1 and reports[0].ranked()[0][0] == "signal"


def test_core_names_listed_once():
    assert len(set(CORE_FEATURES)) == 11
