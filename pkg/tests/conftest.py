import math

import numpy as np
import pytest

from gbas_screen.config import load_config
from gbas_screen.constellation import SatelliteView
from gbas_screen.screening import build_epoch, screen_epoch
from gbas_screen.simulator import _almanac, prepare_epoch

# criterion id -> (passed, detail); filled by tests/test_acceptance.py
ACCEPTANCE: dict[str, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: (int(k.split()[0].rstrip("abc")), k)):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  criterion {key}: {detail}")


@pytest.fixture(scope="session")
def galeao():
    return load_config("galeao")


@pytest.fixture(scope="session")
def memphis():
    return load_config("memphis")


@pytest.fixture(scope="session")
def galeao_night(galeao):
    """A busy nighttime Galeão epoch (02:00 UT) with unsafe subsets."""
    return prepare_epoch(galeao, _almanac(galeao), 7200.0)


@pytest.fixture(scope="session")
def galeao_night_epochs(galeao):
    almanac = _almanac(galeao)
    return [prepare_epoch(galeao, almanac, t) for t in (0.0, 3600.0, 7200.0, 14400.0, 79200.0)]


def synthetic_views(n=5, seed=0):
    """Well-spread satellites for hand-built epochs."""
    rng = np.random.default_rng(seed)
    az = np.sort(rng.uniform(0, 2 * math.pi, n))
    el = rng.uniform(math.radians(15), math.radians(80), n)
    return [SatelliteView(i + 1, float(a), float(e)) for i, (a, e) in enumerate(zip(az, el))]


def synthetic_epoch(config, n=5, seed=0):
    epoch = build_epoch(config, synthetic_views(n, seed), 43200.0)
    return epoch, screen_epoch(epoch)
