"""Session fixtures: the expensive coefficient tables, built once.

The large performance table is cached on disk under the standard cache
directory so repeated test runs skip its multi-minute build.
"""

import os

import pytest

from hsgn import cache as cachemod
from hsgn.cli import _cache_name
from hsgn.calibration import load_calibration
from hsgn.coeffs import (
    FormSpec,
    cm_prime_table,
    delta_prime_table,
    delta_prime_table_float,
    satotate_sample,
)
from hsgn.multeval import evaluate_window, hecke_extend

PERF_LIMIT = 110_000_000


@pytest.fixture(scope="session")
def calib():
    return load_calibration()


@pytest.fixture(scope="session")
def delta_big():
    # Covers every window the acceptance runs need: [1, 1e6] scans to 2e6+.
    return delta_prime_table(2_100_000)


@pytest.fixture(scope="session")
def delta_spec(delta_big):
    return hecke_extend(delta_big)


@pytest.fixture(scope="session")
def delta_win_1e6(delta_spec):
    return evaluate_window(delta_spec, 1, 1_000_001)


@pytest.fixture(scope="session")
def cm_big():
    return cm_prime_table(1_000_000)


@pytest.fixture(scope="session")
def cm_spec(cm_big):
    return hecke_extend(cm_big)


@pytest.fixture(scope="session")
def st_table():
    return satotate_sample(7, 100_000)


@pytest.fixture(scope="session")
def perf_table():
    """Width 1.1e8 float table; built once, cached across sessions."""
    d = os.environ.get("HSGN_CACHE_DIR") or os.path.join(
        os.path.expanduser("~"), ".cache", "hsgn"
    )
    os.makedirs(d, exist_ok=True)
    form = FormSpec("Delta")
    path = os.path.join(d, _cache_name(form, PERF_LIMIT))
    if cachemod.probe(path, form, PERF_LIMIT):
        return cachemod.read_table(path)
    table = delta_prime_table_float(PERF_LIMIT)
    cachemod.write_table(path, table)
    return table
