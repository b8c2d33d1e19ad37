import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from softrgg.connection import ConnectionFunction, check_assumptions, scaling_radius
from softrgg.theory import (
    CountDistribution,
    Poisson,
    b1_limit,
    b2_upper,
    b3_value,
    chen_stein_report,
    chen_stein_upper,
    coupling_gap,
    cross_integral,
    expected_isolated,
    norm_ratios,
    phi_integral,
    poisson_pmf,
    schwarz_lower,
    tv_distance,
)

RAY = ConnectionFunction.rayleigh()
MP_L1 = mp.quad(lambda x: mp.exp(-x * x), [0, mp.inf])


def mp_expected(L, upper_scaled):
    R = mp.log(L) / (2 * MP_L1)
    return L * mp.exp(-(mp.log(L) / MP_L1) * mp.quad(lambda x: mp.exp(-x * x), [0, upper_scaled(R)]))


# -- distributions ------------------------------------------------------------


def test_poisson_pmf_examples():
    assert poisson_pmf(1.0, 0) == pytest.approx(math.exp(-1), rel=1e-14)
    assert poisson_pmf(2.5, 3) == pytest.approx(math.exp(-2.5) * 2.5**3 / 6, rel=1e-13)
    assert poisson_pmf(1000.0, np.arange(3000)).sum() == pytest.approx(1.0, rel=1e-12)


def test_tv_point_mass_against_poisson():
    point = CountDistribution({0: 10}, 10)
    brute = 0.5 * (abs(1 - math.exp(-1)) + sum(math.exp(-1) / math.factorial(k) for k in range(1, 60)))
    assert tv_distance(point, Poisson(1.0)) == pytest.approx(brute, abs=1e-12)
    assert tv_distance(point, Poisson(1.0)) == pytest.approx(0.632121, abs=5e-7)


def test_tv_identical_and_disjoint():
    a = CountDistribution({0: 3, 2: 5}, 8)
    assert tv_distance(a, a) == 0.0
    assert tv_distance(Poisson(2.0), Poisson(2.0)) == pytest.approx(0.0, abs=1e-11)
    assert tv_distance(a, CountDistribution({1: 4, 5: 1}, 5)) == 1.0


dists = st.dictionaries(st.integers(0, 8), st.integers(1, 20), min_size=1).map(
    lambda d: CountDistribution(d, sum(d.values()))
)


@settings(max_examples=200)
@given(dists, dists, dists)
def test_tv_is_a_metric(a, b, c):
    ab = tv_distance(a, b)
    assert 0.0 <= ab <= 1.0
    assert ab == pytest.approx(tv_distance(b, a), abs=1e-15)
    assert tv_distance(a, c) <= ab + tv_distance(b, c) + 1e-12


def test_tv_bounded_by_coupling_mismatch():
    rng = np.random.default_rng(0)
    n = 50_000
    x = rng.poisson(2.0, n)
    flip = rng.random(n) < 0.05
    y = x + flip
    tv = tv_distance(CountDistribution.from_samples(x), CountDistribution.from_samples(y))
    p = flip.mean()
    assert tv <= p + 1e-12


def test_poisson_sequence_converges():
    tvs = [tv_distance(Poisson(1 + 1 / n), Poisson(1.0)) for n in (1, 2, 5, 10, 100, 1000)]
    assert all(b < a for a, b in zip(tvs, tvs[1:]))
    assert tvs[-1] < 1e-3


def test_count_distribution_merge_associative():
    a = CountDistribution.from_samples([0, 1, 1, 3])
    b = CountDistribution.from_samples([2, 2])
    c = CountDistribution.from_samples([0, 5])
    assert a.merge(b).merge(c) == a.merge(b.merge(c)) == c.merge(a).merge(b)
    assert a.merge(b).mean() == pytest.approx(9 / 6)


def test_count_distribution_rejects_inconsistent_total():
    with pytest.raises(ValueError):
        CountDistribution({0: 2}, 3)


# -- expectations ---------------------------------------------------------------


def test_expected_isolated_at_L100():
    reg = scaling_radius(1.0, 100.0, RAY)
    assert expected_isolated(reg, RAY) == pytest.approx(1.0, abs=5e-6)
    trunc = float(mp_expected(100, lambda R: R))
    assert expected_isolated(reg, RAY, truncated=True) == pytest.approx(trunc, rel=1e-10)
    assert expected_isolated(reg, RAY, truncated=True) == pytest.approx(1.0011, abs=5e-5)


def test_expected_isolated_tends_to_one_over_tau():
    reg = scaling_radius(2.0, 1e8, RAY)
    assert expected_isolated(reg, RAY) == pytest.approx(0.5, abs=1e-3)
    assert expected_isolated(reg, RAY, truncated=True) == pytest.approx(0.5, abs=1e-3)


def test_coupling_gap():
    reg = scaling_radius(1.0, 100.0, RAY)
    oracle = float(mp_expected(100, lambda R: R) - mp_expected(100, lambda R: 100 / (2 * R)))
    assert coupling_gap(reg, RAY) == pytest.approx(oracle, rel=1e-8)
    gaps = [coupling_gap(scaling_radius(1.0, L, RAY), RAY) for L in (1e2, 1e3, 1e4, 1e6)]
    assert all(g >= 0 for g in gaps)
    assert all(b < a for a, b in zip(gaps, gaps[1:]))
    assert gaps[-1] < 1e-3


@pytest.mark.parametrize("family", ["rayleigh", "exponential"])
def test_truncated_expectation_dominates(family):
    cf = ConnectionFunction.from_name(family)
    for L in (10.0, 1e3, 1e5):
        reg = scaling_radius(1.0, L, cf)
        assert expected_isolated(reg, cf, truncated=True) >= expected_isolated(reg, cf)


# -- phi ------------------------------------------------------------------------


def brute_cross(y, reg, step=1e-3):
    c, L = reg.truncation_cutoff, reg.L
    a = min(c, L / 2)
    t = np.arange(-a, a + step / 2, step)
    d = np.abs(t - y) % L
    d = np.minimum(d, L - d)
    h0 = np.exp(-(t / reg.R_L) ** 2) * (np.abs(t) <= c)
    hy = np.exp(-(d / reg.R_L) ** 2) * (d <= c)
    return np.trapezoid(h0 * hy, t)


@pytest.mark.parametrize("L", [10.0, 100.0])
def test_cross_integral_against_grid(L):
    reg = scaling_radius(1.0, L, RAY)
    for y in np.linspace(0, L / 2, 9):
        # fine grid: the truncation jump costs the trapezoid rule about step * H(R_L)
        assert cross_integral(y, reg, RAY) == pytest.approx(brute_cross(y, reg, step=1e-5), abs=2e-6)


def test_phi_integral_limits():
    reg = scaling_radius(1.0, 100.0, RAY)
    kappa = 2 * reg.R_L * RAY.integral(reg.truncation_cutoff / reg.R_L)
    assert phi_integral(0.0, reg, RAY) == pytest.approx(schwarz_lower(reg, RAY), rel=1e-10)
    assert phi_integral(3 * reg.truncation_cutoff, reg, RAY) == pytest.approx(2 * kappa, rel=1e-10)
    ys = np.linspace(0, 50, 501)
    phis = np.array([phi_integral(y, reg, RAY) for y in ys])
    assert np.all(phis >= schwarz_lower(reg, RAY) - 1e-9)
    # y -> cross(y) is Lipschitz with constant at most the total variation of htilde, 2
    assert np.max(np.abs(np.diff(phis))) <= 2 * (ys[1] - ys[0]) + 1e-9
    with pytest.raises(ValueError):
        phi_integral(60.0, reg, RAY)


def test_norm_ratios_tend_to_norms():
    reg = scaling_radius(1.0, 1e8, RAY)
    r1, r2 = norm_ratios(reg, RAY)
    assert r1 == pytest.approx(2 * RAY.l1_norm, rel=1e-6)
    assert r2 == pytest.approx(2 * RAY.l2sq_norm, rel=1e-6)


# -- Chen-Stein terms -----------------------------------------------------------


def test_b1_example_against_independent_oracle():
    L = mp.mpf(10) ** 4
    R = mp.log(L) / (2 * MP_L1)
    oracle = 6 * L * R**2 * mp.exp(-(2 * mp.log(L) / MP_L1) * mp.quad(lambda x: mp.exp(-x * x), [0, R]))
    got = b1_limit(scaling_radius(1.0, 1e4, RAY), RAY).b1
    assert got == pytest.approx(float(oracle), rel=1e-9)
    assert got == pytest.approx(0.0162, rel=1e-3)


def test_b1_decreases_and_kappa_tends_to_log():
    vals = [b1_limit(scaling_radius(1.0, L, RAY), RAY) for L in (1e4, 1e6, 1e8)]
    assert vals[0].b1 > vals[1].b1 > vals[2].b1
    assert vals[-1].kappa_limit == pytest.approx(math.log(1e8), rel=1e-3)
    assert vals[-1].p_limit * 1e8 == pytest.approx(1.0, rel=1e-3)
    assert all(v.b1_alt > v.b1 for v in vals)


def test_b2_against_grid_oracle():
    reg = scaling_radius(1.0, 1e4, RAY)
    c = reg.truncation_cutoff
    kappa = 2 * reg.R_L * RAY.integral(c / reg.R_L)
    ys = np.linspace(0, 3 * c, 811)
    cross = np.array([brute_cross(y, reg, step=2e-3) for y in ys])
    oracle = 2 * reg.L * np.exp(-2 * kappa) * np.trapezoid(np.exp(cross), ys)
    assert b2_upper(reg, RAY) == pytest.approx(oracle, rel=1e-3)


def test_b2_decreases_and_respects_envelope():
    delta = check_assumptions(RAY).margin
    vals = []
    for L in (1e4, 1e6, 1e8):
        reg = scaling_radius(1.0, L, RAY)
        b2 = b2_upper(reg, RAY)
        envelope = 6 * L * reg.truncation_cutoff * math.exp(-math.log(L) - 2 * delta * reg.R_L)
        assert b2 <= envelope
        vals.append(b2)
    assert vals[0] > vals[1] > vals[2]


def test_b3():
    reg = scaling_radius(1.0, 1e4, RAY)
    assert b3_value(reg, 1000) == b3_value(reg, 1).__class__(0.0, True)
    small = scaling_radius(1.0, 3.0, RAY)  # cutoff about 0.38
    assert not b3_value(small, 4).valid
    assert b3_value(small, 8).valid
    with pytest.raises(ValueError):
        b3_value(reg, 0)


def test_chen_stein_upper_clamps():
    assert chen_stein_upper(0.1, 0.2, 0.0, 0.5) == pytest.approx(0.3)
    assert chen_stein_upper(0.1, 0.2, 0.0, 4.0) == pytest.approx(0.075)
    assert chen_stein_upper(3.0, 2.0, 0.0, 0.5) == 1.0
    with pytest.raises(ValueError):
        chen_stein_upper(-0.1, 0.0, 0.0, 1.0)


def test_report_fields():
    r = chen_stein_report(scaling_radius(1.0, 1e4, RAY), RAY, m=500).to_dict()
    assert r["m"] == 500 and r["family"] == "rayleigh"
    assert r["expected_W"] == pytest.approx(1e4 * r["p_limit"])
    assert 0 <= r["tv_upper"] <= 1
    assert r["tv_upper"] == pytest.approx(min(1, 1 / r["expected_W"]) * (r["b1"] + r["b2_upper"]))
