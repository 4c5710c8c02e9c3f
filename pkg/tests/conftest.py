"""Shared fixtures and independent reference implementations (oracles)."""

import numpy as np
import pytest

from strandsim.market import SLOT_S, DEFAULT_EPOCH, SiteSeries


def make_series(lmp, power, missing=None, site_id="s1", epoch=DEFAULT_EPOCH):
    return SiteSeries(site_id, epoch, np.asarray(lmp, dtype=float),
                      np.asarray(power, dtype=float), missing)


def random_series(rng, n=None, site_id="rand", zero_power_p=0.05, missing_p=0.02):
    """Randomized but natural-texture series: episodic prices, smooth power."""
    if n is None:
        n = int(rng.integers(50, 10_001))
    lmp = rng.normal(25.0, 12.0, n)
    # Carve negative-price episodes of random length.
    for start in np.flatnonzero(rng.random(n) < 0.04):
        dur = int(rng.integers(1, 40))
        lmp[start:start + dur] = rng.normal(-4.0, 5.0, len(lmp[start:start + dur]))
    power = np.abs(rng.normal(100.0, 30.0, n)) + 0.1
    power[rng.random(n) < zero_power_p] = 0.0
    missing = rng.random(n) < missing_p
    return make_series(lmp, power, missing, site_id=site_id)


def lmp_runs_oracle(series, c):
    """Brute-force run-length scan; returns (start, end) slot index pairs."""
    runs = []
    start = None
    for i in range(len(series)):
        active = (not series.missing[i]) and series.power[i] > 0 and series.lmp[i] < c
        if active and start is None:
            start = i
        elif not active and start is not None:
            runs.append((start, i))
            start = None
    if start is not None:
        runs.append((start, len(series)))
    return runs


def netprice_greedy_oracle(series, c):
    """Independent pure-Python implementation of the greedy extension rule."""
    runs = []
    n = len(series)
    lmp, power, missing = series.lmp, series.power, series.missing
    i = 0
    while i < n:
        usable = (not missing[i]) and power[i] > 0
        if not (usable and lmp[i] < c):
            i += 1
            continue
        wsum = float(lmp[i]) * float(power[i])
        psum = float(power[i])
        j = i + 1
        while j < n and (not missing[j]) and power[j] > 0:
            w2 = wsum + float(lmp[j]) * float(power[j])
            p2 = psum + float(power[j])
            if w2 >= c * p2:
                break
            wsum, psum = w2, p2
            j += 1
        runs.append((i, j))
        i = j
    return runs


def interval_slot_bounds(series, intervals):
    """Convert SpIntervals to slot-index pairs."""
    return [((iv.start - series.epoch) // SLOT_S, (iv.end - series.epoch) // SLOT_S)
            for iv in intervals]


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20140101)
