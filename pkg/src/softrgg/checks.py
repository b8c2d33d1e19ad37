"""Acceptance checks, runnable at full scale (test suite) or desk scale (``softrgg verify``).

Each check returns a :class:`CheckResult`; none of them raise on failure.
Simulations are memoised in :class:`Runs` so checks that share a regime share
its trials.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import theory
from .connection import ConnectionFunction, evaluate_scaled, scaling_radius
from .discretize import collision_bound
from .geometry import PointConfiguration, Torus
from .graph import from_edges, is_connected, is_connected_bfs, sample_edges
from .montecarlo import ExperimentResult, ExperimentSpec, TrialBatch, collect, summarize
from .output import dumps_csv, dumps_json

SEED = 20200817


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name}: {self.detail}"


def _head(batch: TrialBatch, n: int) -> TrialBatch:
    return TrialBatch(
        start=batch.start,
        n_nodes=batch.n_nodes[:n],
        n_iso=batch.n_iso[:n],
        n_iso_truncated=batch.n_iso_truncated[:n],
        connected=batch.connected[:n],
        W=batch.W[:n],
        collision=batch.collision[:n],
        # per-trial violations are not itemised; a prefix can only have fewer
        violations=batch.violations,
    )


class Runs:
    """Memoised simulations keyed by spec.

    A request for fewer trials than an already-run spec is served from the
    first trials of that run: trial t depends only on (seed, t), so the
    prefix is exactly what a shorter run would have produced.
    """

    def __init__(self, workers: int = 1):
        self.workers = workers
        self._batches: dict[ExperimentSpec, TrialBatch] = {}
        self.results: list[ExperimentResult] = []

    def get(self, spec: ExperimentSpec) -> ExperimentResult:
        for done, batch in self._batches.items():
            if replace(done, trials=spec.trials) == spec and done.trials >= spec.trials:
                res = summarize(spec, _head(batch, spec.trials))
                break
        else:
            batch = collect(spec, self.workers)
            self._batches[spec] = batch
            res = summarize(spec, batch)
        self.results.append(res)
        return res


def rayleigh_spec(L, trials, **kw) -> ExperimentSpec:
    return ExperimentSpec(tau=1.0, L=float(L), family="rayleigh", trials=int(trials), seed=SEED, **kw)


# -- 1. mean law ---------------------------------------------------------------


def mean_law(runs: Runs, L=1000, trials=20000) -> CheckResult:
    res = runs.get(rayleigh_spec(L, trials))
    cf = ConnectionFunction.rayleigh()
    expected = theory.expected_isolated(scaling_radius(1.0, L, cf), cf)
    m = res.mean_n_iso
    z = abs(m.value - expected) / m.se
    return CheckResult(
        "mean law",
        z <= 3.0,
        f"L={L:g}, {trials} trials: mean N_iso={m.value:.4f} +- {m.se:.4f}, "
        f"closed form {expected:.5f}, |z|={z:.2f} (<= 3)",
    )


# -- 2. Poisson tail -----------------------------------------------------------


def poisson_tail(runs: Runs, L=10000, trials=10000, tol=0.02) -> CheckResult:
    res = runs.get(rayleigh_spec(L, trials))
    p = res.p_no_isolated.value
    target = math.exp(-1.0)
    return CheckResult(
        "Poisson tail",
        abs(p - target) <= tol,
        f"L={L:g}, {trials} trials: P(N_iso=0)={p:.4f}, e^-1={target:.4f}, "
        f"|diff|={abs(p - target):.4f} (<= {tol})",
    )


# -- 3. TV trend ---------------------------------------------------------------


def tv_trend(runs: Runs, L_values=(100, 1000, 10000), trials=20000, final_max=0.05) -> CheckResult:
    res = [runs.get(rayleigh_spec(L, trials)) for L in L_values]
    tv = [r.tv_poisson for r in res]
    noise = [r.tv_noise for r in res]
    steps_ok = all(
        tv[i + 1] <= tv[i] + 2 * math.hypot(noise[i], noise[i + 1]) for i in range(len(tv) - 1)
    )
    ok = steps_ok and tv[-1] <= final_max
    pairs = ", ".join(f"L={L:g}: {t:.4f}+-{s:.4f}" for L, t, s in zip(L_values, tv, noise))
    return CheckResult(
        "TV trend",
        ok,
        f"d_TV(N_iso, Po(1)) {pairs}; non-increasing within 2x noise: {steps_ok}; "
        f"final {tv[-1]:.4f} (<= {final_max})",
    )


# -- 4. connectivity corollary -------------------------------------------------


def connectivity(runs: Runs, specs=None) -> CheckResult:
    """Zero violations and p_connected <= p_no_isolated.

    Covers the runs for ``specs`` (fetched through the memo), or every run
    made so far when ``specs`` is None.
    """
    results = runs.results if specs is None else [runs.get(s) for s in specs]
    # a spec requested twice is one set of trials
    results = list({r.spec: r for r in results}.values())
    if not results:
        return CheckResult("connectivity corollary", False, "no simulations have been run")
    viol = sum(r.violations for r in results)
    ordered = all(r.p_connected.value <= r.p_no_isolated.value for r in results)
    trials = sum(r.trials for r in results)
    return CheckResult(
        "connectivity corollary",
        viol == 0 and ordered,
        f"{len(results)} runs, {trials} trials: violations={viol}, "
        f"p_connected <= p_no_isolated in all: {ordered}",
    )


# -- 5. Chen-Stein numerics ----------------------------------------------------


def chen_stein(L_values=(1e4, 1e6, 1e8), b1_target=0.0162, rel=1e-3, m_values=range(2, 65)) -> CheckResult:
    cf = ConnectionFunction.rayleigh()
    regimes = [scaling_radius(1.0, L, cf, 1.0) for L in L_values]
    b3_ok = all(theory.b3_value(r, m).valid and theory.b3_value(r, m).value == 0 for r in regimes for m in m_values)
    b1 = [theory.b1_limit(r, cf).b1 for r in regimes]
    b2 = [theory.b2_upper(r, cf) for r in regimes]
    dec = lambda xs: all(b < a for a, b in zip(xs, xs[1:]))  # noqa: E731
    b1_rel = abs(b1[0] - b1_target) / b1_target
    ok = b3_ok and dec(b1) and dec(b2) and b1_rel <= rel
    return CheckResult(
        "Chen-Stein numerics",
        ok,
        f"b3=0 valid for m>=2: {b3_ok}; b1={['%.4g' % v for v in b1]} decreasing: {dec(b1)}; "
        f"b2={['%.4g' % v for v in b2]} decreasing: {dec(b2)}; "
        f"b1(1e4)={b1[0]:.6f} vs {b1_target} rel {b1_rel:.1e} (<= {rel:g})",
    )


# -- 6. coupling gap -----------------------------------------------------------


def coupling(runs: Runs, L=100, trials=20000, L_grid=(100, 1000, 10000)) -> CheckResult:
    cf = ConnectionFunction.rayleigh()
    gaps = [theory.coupling_gap(scaling_radius(1.0, x, cf), cf) for x in L_grid]
    decreasing = all(b < a for a, b in zip(gaps, gaps[1:]))
    small = gaps[list(L_grid).index(10000)] <= 1e-3 if 10000 in L_grid else True
    near = abs(gaps[0] - 0.0011) <= 0.00005
    res = runs.get(rayleigh_spec(L, trials, coupled=True))
    g = res.mean_gap
    z = abs(g.value - res.coupling_gap) / g.se if g.se > 0 else (0.0 if g.value == res.coupling_gap else math.inf)
    monotone = bool(np.all(res.batch.n_iso_truncated >= res.batch.n_iso))
    ok = decreasing and small and near and z <= 3 and monotone and res.violations == 0
    return CheckResult(
        "coupling gap",
        ok,
        f"closed-form gaps {['%.3g' % v for v in gaps]} decreasing: {decreasing}; "
        f"gap(100)={gaps[0]:.6f} (~0.0011); MC mean gap={g.value:.5f} +- {g.se:.5f}, |z|={z:.2f}; "
        f"Ntilde >= N in every trial: {monotone}",
    )


# -- 7. discretization -----------------------------------------------------------


def discretization(runs: Runs, L=10, trials=100000, m_values=(1, 2, 4, 8, 16)) -> CheckResult:
    res = runs.get(rayleigh_spec(L, trials, truncated=True, m_values=tuple(m_values)))
    parts, bound_ok = [], True
    for d in res.discretization:
        p = d["p_mismatch"]["value"]
        sigma = math.sqrt(max(p * (1 - p), 1.0 / trials) / trials)
        bound = collision_bound(d["m"], L)
        bound_ok &= p <= bound + 3 * sigma
        parts.append(f"m={d['m']}: P(W!=N~)={p:.5f} (bound {bound:.4f}), d_TV={d['tv_w']:.5f}")
    tv = [d["tv_w"] for d in res.discretization]
    monotone = all(b <= a for a, b in zip(tv, tv[1:]))
    return CheckResult(
        "discretization",
        bound_ok and monotone and res.violations == 0,
        f"L={L}, {trials} trials; " + "; ".join(parts)
        + f"; bound respected: {bound_ok}; d_TV non-increasing in m: {monotone}",
    )


# -- 8. oracle equivalence -----------------------------------------------------


def random_graph(rng: np.random.Generator, n_max=50) -> "GraphSample":  # noqa: F821
    n = int(rng.integers(0, n_max + 1))
    pos = np.sort(rng.random(n) * 10.0)
    config = PointConfiguration(Torus(10.0), pos)
    p = rng.choice([0.02, 0.05, 0.1, 0.3])
    iu, ju = np.triu_indices(n, 1)
    keep = rng.random(iu.size) < p
    return from_edges(config, np.column_stack((iu[keep], ju[keep])))


def oracle_equivalence(graphs=500, resamples=100000, seed=SEED) -> CheckResult:
    rng = np.random.default_rng(seed)
    agree = sum(is_connected(g) == is_connected_bfs(g) for g in (random_graph(rng) for _ in range(graphs)))
    cf = ConnectionFunction.rayleigh()
    L = 100.0
    regime = scaling_radius(1.0, L, cf)
    R = regime.R_L
    worst = 0.0
    freq_ok = True
    for rho in (0.25 * R, 0.5 * R, R, 1.5 * R, 2.0 * R):
        config = PointConfiguration(Torus(L), np.array([10.0, 10.0 + rho]))
        p = evaluate_scaled(cf, regime, rho)
        hits = sum(sample_edges(config, cf, regime, rng).n_edges for _ in range(resamples))
        z = abs(hits / resamples - p) / math.sqrt(p * (1 - p) / resamples)
        worst = max(worst, z)
        freq_ok &= z <= 3
    return CheckResult(
        "oracle equivalence",
        agree == graphs and freq_ok,
        f"union-find vs BFS agree on {agree}/{graphs} graphs; "
        f"edge frequency vs h^L at 5 distances, {resamples} resamples: max |z|={worst:.2f} (<= 3)",
    )


# -- 9. determinism ------------------------------------------------------------


def determinism(L=200, trials=400, workers=(1, 4)) -> CheckResult:
    spec = rayleigh_spec(L, trials, coupled=True, m_values=(2, 4))
    outs = []
    for w in workers:
        res = summarize(spec, collect(spec, w))
        outs.append((dumps_json(res.to_dict()), dumps_csv(list(res.trial_rows()[0]), res.trial_rows())))
    same = all(o == outs[0] for o in outs[1:])
    return CheckResult(
        "determinism",
        same,
        f"L={L}, {trials} trials, workers {list(workers)}: JSON and CSV byte-identical: {same}",
    )


# -- 10. norm limits -----------------------------------------------------------


def norm_limits(L=1e8, rel=1e-3) -> CheckResult:
    cf = ConnectionFunction.rayleigh()
    regime = scaling_radius(1.0, L, cf)
    r1, r2 = theory.norm_ratios(regime, cf)
    e1 = abs(r1 - 2 * cf.l1_norm) / (2 * cf.l1_norm)
    e2 = abs(r2 - 2 * cf.l2sq_norm) / (2 * cf.l2sq_norm)
    return CheckResult(
        "norm limits",
        e1 <= rel and e2 <= rel,
        f"L={L:g}: (1/R)int h~ = {r1:.8f} vs 2|H|_1 = {2 * cf.l1_norm:.8f} (rel {e1:.1e}); "
        f"(1/R)int h~^2 = {r2:.8f} vs 2|H|_2^2 = {2 * cf.l2sq_norm:.8f} (rel {e2:.1e})",
    )


def desk_checks(workers: int = 1) -> list[CheckResult]:
    """Reduced-size versions of every check; a minute or so on one core."""
    runs = Runs(workers)
    out = [
        mean_law(runs, L=300, trials=3000),
        poisson_tail(runs, L=1000, trials=3000, tol=0.04),
        tv_trend(runs, L_values=(100, 300), trials=3000, final_max=0.08),
    ]
    out.append(connectivity(runs))
    out += [
        chen_stein(),
        coupling(runs, L=100, trials=3000),
        discretization(runs, L=10, trials=10000),
        oracle_equivalence(graphs=200, resamples=10000),
        determinism(L=100, trials=100, workers=(1, 2)),
        norm_limits(),
    ]
    return out
