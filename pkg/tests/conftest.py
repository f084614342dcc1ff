import sys
import time
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

from sapfsim.grid import bundled_scenario, load_config, run  # noqa: E402


@pytest.fixture(scope="session")
def reference_config():
    return load_config(bundled_scenario("reference"))


@pytest.fixture(scope="session")
def reference_run(reference_config):
    """One timed run of the bundled reference scenario, shared by every test."""
    t0 = time.perf_counter()
    trace = run(reference_config)
    return trace, time.perf_counter() - t0


@pytest.fixture(scope="session")
def bridge_oracle():
    """1 us brute-force bridge at 1 mH, started near its operating point; last 5 cycles."""
    from oracles import bridge_reference

    v_hat = 400.0 * 2 ** 0.5
    t, i, v_dc = bridge_reference(l_ac=1e-3, v_dc0=0.9 * v_hat, t_end=0.3, h=1e-6)
    tail = slice(-100_000, None)
    return {"h": 1e-6, "t": t[tail], "i": i[:, tail], "v_dc": v_dc[tail], "v_hat": v_hat, "v_dc0": 0.9 * v_hat}


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
