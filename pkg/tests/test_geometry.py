import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from softrgg.geometry import PointConfiguration, Torus, sample_ppp, toroidal_distance

T10 = Torus(10.0)
coord = st.floats(min_value=0.0, max_value=10.0, exclude_max=True, allow_nan=False)


@pytest.mark.parametrize(
    "x, y, expected",
    [(0.5, 9.8, 0.7), (3.0, 3.0, 0.0), (0.0, 5.0, 5.0)],
)
def test_distance_examples(x, y, expected):
    assert toroidal_distance(x, y, T10) == pytest.approx(expected, abs=1e-12)


@pytest.mark.parametrize("x, y", [(-0.1, 1.0), (1.0, 10.0), (11.0, 0.0), (np.nan, 1.0)])
def test_distance_rejects_points_off_torus(x, y):
    with pytest.raises(ValueError):
        toroidal_distance(x, y, T10)


def test_torus_length_must_be_positive():
    with pytest.raises(ValueError):
        Torus(0.0)
    with pytest.raises(ValueError):
        Torus(-3.0)


@given(coord, coord)
def test_distance_symmetric_and_bounded(x, y):
    d = toroidal_distance(x, y, T10)
    assert d == toroidal_distance(y, x, T10)
    assert 0.0 <= d <= 5.0


@given(coord, coord, st.floats(min_value=-50, max_value=50, allow_nan=False))
def test_distance_translation_invariant(x, y, c):
    xs, ys = T10.wrap(x + c), T10.wrap(y + c)
    assert toroidal_distance(xs, ys, T10) == pytest.approx(toroidal_distance(x, y, T10), abs=1e-9)


def test_triangle_inequality_on_grid():
    g = np.linspace(0, 10, 61, endpoint=False)
    X, Y, Z = np.meshgrid(g, g, g, indexing="ij")
    lhs = toroidal_distance(X, Z, T10)
    rhs = toroidal_distance(X, Y, T10) + toroidal_distance(Y, Z, T10)
    assert np.all(lhs <= rhs + 1e-12)


def test_configuration_validates():
    with pytest.raises(ValueError):
        PointConfiguration(T10, np.array([2.0, 1.0]))
    with pytest.raises(ValueError):
        PointConfiguration(T10, np.array([1.0, 10.0]))
    assert PointConfiguration(T10, np.array([])).n == 0


def test_sample_is_sorted_in_range_and_reproducible():
    a = sample_ppp(Torus(50.0), np.random.default_rng(7))
    b = sample_ppp(Torus(50.0), np.random.default_rng(7))
    np.testing.assert_array_equal(a.positions, b.positions)
    assert np.all(np.diff(a.positions) >= 0)
    assert a.positions.min() >= 0 and a.positions.max() < 50.0


def test_sample_count_mean_and_variance():
    rng = np.random.default_rng(1)
    n = 100_000
    counts = np.array([sample_ppp(Torus(100.0), rng).n for _ in range(n)])
    # Poisson(100): sd of the mean sqrt(100/n); sd of the sample variance sqrt((lam + 2 lam^2)/n)
    assert abs(counts.mean() - 100) <= 3 * np.sqrt(100 / n)
    assert abs(counts.var(ddof=1) - 100) <= 3 * np.sqrt((100 + 2 * 100**2) / n)


def test_sample_count_goodness_of_fit():
    rng = np.random.default_rng(2)
    n = 100_000
    counts = np.array([sample_ppp(T10, rng).n for _ in range(n)])
    # bins 2..20 plus pooled tails so every expected count is large
    lo, hi = 2, 20
    obs = [np.sum(counts <= lo)] + [np.sum(counts == k) for k in range(lo + 1, hi)] + [np.sum(counts >= hi)]
    exp = [stats.poisson.cdf(lo, 10)] + [stats.poisson.pmf(k, 10) for k in range(lo + 1, hi)] + [stats.poisson.sf(hi - 1, 10)]
    _, pval = stats.chisquare(obs, np.array(exp) * n)
    assert pval > 1e-3


@settings(max_examples=30)
@given(st.floats(min_value=0.5, max_value=200), st.integers(0, 2**32))
def test_sample_positions_half_open(L, seed):
    c = sample_ppp(Torus(L), np.random.default_rng(seed))
    assert np.all((c.positions >= 0) & (c.positions < L))
