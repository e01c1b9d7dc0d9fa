import numpy as np
import pandas as pd
import pytest

from acceptance_log import summary_lines


def pytest_terminal_summary(terminalreporter):
    lines = summary_lines()
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def make_pings(rows):
    """DataFrame of matched pings from (vehicle, t, speed, segment) tuples."""
    v, t, s, g = zip(*rows)
    return pd.DataFrame({"vehicle_id": list(v), "timestamp": np.asarray(t, dtype=float),
                         "speed": np.asarray(s, dtype=float),
                         "accel": np.full(len(v), np.nan),
                         "segment": np.asarray(g, dtype=np.int64)})
