import numpy as np
import pytest

from ebikecast import bundle
from ebikecast.ingest import read_annual, read_factors, read_trends
from ebikecast.prep import MergeInputs, disaggregate, merge_series


@pytest.fixture(scope="session")
def trends():
    return read_trends(bundle.path(bundle.TRENDS))


@pytest.fixture(scope="session")
def annual_sales():
    european = read_annual(bundle.path(bundle.EUROPEAN))
    known = read_annual(bundle.path(bundle.KNOWN_US))
    return merge_series(MergeInputs.from_sources(european, known, 2019), known)


@pytest.fixture(scope="session")
def monthly_sales(annual_sales, trends):
    return disaggregate(annual_sales, trends)


@pytest.fixture(scope="session")
def factors():
    return read_factors(bundle.path(bundle.FACTORS))


@pytest.fixture
def write(tmp_path):
    """Write text to a file in tmp_path and return its path."""

    def _write(name, text):
        path = tmp_path / name
        path.write_text(text, encoding="utf-8", newline="")
        return path

    return _write


def simulate_arma(phi, theta, n, seed, c=0.0, burn=200):
    """y_t = c + sum phi_i y_{t-i} + e_t + sum theta_j e_{t-j}, by explicit loop."""
    rng = np.random.default_rng(seed)
    e = rng.standard_normal(n + burn)
    y = np.zeros(n + burn)
    for t in range(n + burn):
        acc = c + e[t]
        for i, a in enumerate(phi, start=1):
            if t - i >= 0:
                acc += a * y[t - i]
        for j, b in enumerate(theta, start=1):
            if t - j >= 0:
                acc += b * e[t - j]
        y[t] = acc
    return y[burn:]
