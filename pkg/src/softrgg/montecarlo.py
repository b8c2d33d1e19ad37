"""Reproducible trial harness: isolated-node count laws, connectivity, coupling and grid statistics."""
from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import theory
from .connection import ConnectionFunction, ScalingRegime, scaling_radius
from .discretize import build_grid, collision_bound
from .geometry import Torus, sample_ppp
from .graph import MODES, is_connected, isolated_count, sample_edges, truncate_edges
from .theory import CountDistribution, Poisson, tv_distance

log = logging.getLogger(__name__)

Z_LEVEL = 3.0  # 99.7% intervals
DEFAULT_MAX_WORK = 5e9


class ResourceLimitError(RuntimeError):
    pass


@dataclass(frozen=True)
class ExperimentSpec:
    tau: float
    L: float
    alpha: float = 1.0
    family: str = "rayleigh"
    r_c: float | None = None
    table: str | None = None
    truncated: bool = False
    coupled: bool = False
    mode: str = "windowed"
    eps: float = 1e-12
    trials: int = 20000
    seed: int = 0
    m_values: tuple = ()
    m_bound: int = 1000
    max_work: float = DEFAULT_MAX_WORK

    def connection(self) -> ConnectionFunction:
        return ConnectionFunction.from_name(self.family, self.r_c, self.table)

    def regime(self, cf: ConnectionFunction | None = None) -> ScalingRegime:
        return scaling_radius(self.tau, self.L, cf or self.connection(), self.alpha)

    @property
    def tracks_truncated(self) -> bool:
        return self.truncated or self.coupled

    def validate(self) -> None:
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.mode == "windowed" and not 0 < self.eps < 1:
            raise ValueError("eps must lie in (0, 1)")
        if self.m_values and not self.tracks_truncated:
            raise ValueError("m_values needs truncated or coupled sampling")
        if any(int(m) != m or m < 1 for m in self.m_values):
            raise ValueError("m_values must be positive integers")
        if self.m_values and not float(self.L).is_integer():
            raise ValueError("discretization needs an integer L")
        if self.seed < 0:
            raise ValueError("seed must be nonnegative")
        self.regime()
        work = self.L * self.trials if self.mode == "windowed" else self.L**2 / 2 * self.trials
        if work > self.max_work:
            raise ResourceLimitError(
                f"estimated work {work:.3g} exceeds max_work {self.max_work:.3g}"
            )

    def to_dict(self) -> dict:
        d = asdict(self)
        d["m_values"] = list(self.m_values)
        return d


@dataclass(frozen=True)
class Proportion:
    value: float
    lo: float
    hi: float
    successes: int
    trials: int

    @classmethod
    def wilson(cls, successes: int, n: int, z: float = Z_LEVEL) -> "Proportion":
        p = successes / n
        denom = 1 + z * z / n
        centre = (p + z * z / (2 * n)) / denom
        half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
        return cls(p, max(0.0, centre - half), min(1.0, centre + half), int(successes), int(n))


@dataclass(frozen=True)
class Mean:
    value: float
    se: float

    @classmethod
    def of(cls, x) -> "Mean":
        x = np.asarray(x, dtype=np.float64)
        se = float(x.std(ddof=1) / math.sqrt(x.size)) if x.size > 1 else math.inf
        return cls(float(x.mean()), se)


@dataclass
class TrialBatch:
    """Per-trial records for a contiguous block of trial indices, as parallel arrays."""

    start: int
    n_nodes: np.ndarray
    n_iso: np.ndarray
    n_iso_truncated: np.ndarray  # -1 when not tracked
    connected: np.ndarray
    W: np.ndarray  # (trials, len(m_values))
    collision: np.ndarray
    violations: int = 0

    @classmethod
    def concat(cls, batches) -> "TrialBatch":
        batches = sorted(batches, key=lambda b: b.start)
        cat = lambda name: np.concatenate([getattr(b, name) for b in batches])  # noqa: E731
        return cls(
            start=batches[0].start,
            n_nodes=cat("n_nodes"),
            n_iso=cat("n_iso"),
            n_iso_truncated=cat("n_iso_truncated"),
            connected=cat("connected"),
            W=cat("W"),
            collision=cat("collision"),
            violations=sum(b.violations for b in batches),
        )


def trial_rng(seed: int, t: int) -> np.random.Generator:
    """Child stream for trial t: depends on (seed, t) only, not on scheduling."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(t,))))


def run_block(spec: ExperimentSpec, start: int, stop: int) -> TrialBatch:
    cf = spec.connection()
    regime = spec.regime(cf)
    torus = Torus(spec.L)
    n = stop - start
    k = len(spec.m_values)
    out = TrialBatch(
        start=start,
        n_nodes=np.zeros(n, dtype=np.int64),
        n_iso=np.zeros(n, dtype=np.int64),
        n_iso_truncated=np.full(n, -1, dtype=np.int64),
        connected=np.zeros(n, dtype=bool),
        W=np.zeros((n, k), dtype=np.int64),
        collision=np.zeros((n, k), dtype=bool),
    )
    for row, t in enumerate(range(start, stop)):
        rng = trial_rng(spec.seed, t)
        config = sample_ppp(torus, rng)
        g = sample_edges(config, cf, regime, rng, spec.mode, spec.eps, truncated=spec.truncated and not spec.coupled)
        gt = None
        if spec.coupled:
            gt = truncate_edges(g, regime.truncation_cutoff)
        elif spec.truncated:
            gt = g
        n_iso = isolated_count(g)
        conn = is_connected(g)
        out.n_nodes[row] = config.n
        out.n_iso[row] = n_iso
        out.connected[row] = conn
        if conn and config.n >= 2 and n_iso > 0:
            out.violations += 1
        if gt is not None:
            n_tilde = isolated_count(gt)
            out.n_iso_truncated[row] = n_tilde
            if n_tilde < n_iso:
                out.violations += 1
            for col, m in enumerate(spec.m_values):
                grid = build_grid(gt, int(m), regime.truncation_cutoff)
                out.W[row, col] = grid.W
                out.collision[row, col] = grid.collision
                if grid.W != n_tilde and not grid.collision:
                    out.violations += 1
    return out


def _blocks(trials: int, workers: int):
    size = max(1, math.ceil(trials / (workers * 8)))
    return [(s, min(trials, s + size)) for s in range(0, trials, size)]


def worker_count(requested: int | None) -> int:
    """Worker count, capped by the SOFTRGG_MAX_WORKERS environment variable when set."""
    env = os.environ.get("SOFTRGG_MAX_WORKERS")
    n = requested or 1
    if env:
        n = int(env)
    return max(1, n)


def collect(spec: ExperimentSpec, workers: int = 1) -> TrialBatch:
    spec.validate()
    workers = worker_count(workers)
    if workers == 1:
        return run_block(spec, 0, spec.trials)
    blocks = _blocks(spec.trials, workers)
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(run_block, spec, a, b) for a, b in blocks]
        return TrialBatch.concat([f.result() for f in futures])


def tv_noise(dist: CountDistribution) -> float:
    """Rough standard-error scale of an empirical TV distance: half the sum of per-bin binomial SEs."""
    n = dist.total
    return 0.5 * sum(math.sqrt(c / n * (1 - c / n) / n) for c in dist.counts.values())


@dataclass
class ExperimentResult:
    spec: ExperimentSpec
    distribution: CountDistribution
    p_no_isolated: Proportion
    p_connected: Proportion
    mean_n_iso: Mean
    expected_n_iso: float
    tv_poisson: float
    tv_noise: float
    violations: int
    distribution_truncated: CountDistribution | None = None
    mean_n_iso_truncated: Mean | None = None
    mean_gap: Mean | None = None
    coupling_gap: float | None = None
    discretization: list = field(default_factory=list)
    batch: TrialBatch | None = field(default=None, repr=False)

    @property
    def trials(self) -> int:
        return self.distribution.total

    def to_dict(self) -> dict:
        d = {
            "spec": self.spec.to_dict(),
            "trials": self.trials,
            "distribution": self.distribution.to_dict(),
            "p_no_isolated": asdict(self.p_no_isolated),
            "p_connected": asdict(self.p_connected),
            "mean_n_iso": asdict(self.mean_n_iso),
            "expected_n_iso": self.expected_n_iso,
            "tv_poisson": self.tv_poisson,
            "tv_noise": self.tv_noise,
            "violations": self.violations,
        }
        if self.distribution_truncated is not None:
            d["distribution_truncated"] = self.distribution_truncated.to_dict()
            d["mean_n_iso_truncated"] = asdict(self.mean_n_iso_truncated)
        if self.mean_gap is not None:
            d["mean_gap"] = asdict(self.mean_gap)
            d["coupling_gap"] = self.coupling_gap
        if self.discretization:
            d["discretization"] = self.discretization
        return d

    def trial_rows(self) -> list[dict]:
        b = self.batch
        rows = []
        for i in range(b.n_nodes.size):
            nt = int(b.n_iso_truncated[i])
            rows.append(
                {
                    "trial": b.start + i,
                    "n_nodes": int(b.n_nodes[i]),
                    "n_iso": int(b.n_iso[i]),
                    "n_iso_truncated": None if nt < 0 else nt,
                    "connected": bool(b.connected[i]),
                }
            )
        return rows


TRIAL_CSV_HEADER = ["trial", "n_nodes", "n_iso", "n_iso_truncated", "connected"]


def summarize(spec: ExperimentSpec, batch: TrialBatch) -> ExperimentResult:
    cf = spec.connection()
    regime = spec.regime(cf)
    truncated_only = spec.truncated and not spec.coupled
    n = batch.n_iso.size
    dist = CountDistribution.from_samples(batch.n_iso)
    result = ExperimentResult(
        spec=spec,
        distribution=dist,
        p_no_isolated=Proportion.wilson(int(np.count_nonzero(batch.n_iso == 0)), n),
        p_connected=Proportion.wilson(int(np.count_nonzero(batch.connected)), n),
        mean_n_iso=Mean.of(batch.n_iso),
        expected_n_iso=theory.expected_isolated(regime, cf, truncated_only),
        tv_poisson=tv_distance(dist, Poisson(1 / spec.tau)),
        tv_noise=tv_noise(dist),
        violations=batch.violations,
        batch=batch,
    )
    if spec.coupled:
        nt = batch.n_iso_truncated
        result.distribution_truncated = CountDistribution.from_samples(nt)
        result.mean_n_iso_truncated = Mean.of(nt)
        result.mean_gap = Mean.of(nt - batch.n_iso)
        result.coupling_gap = theory.coupling_gap(regime, cf)
    if spec.m_values:
        nt = batch.n_iso_truncated
        dist_t = CountDistribution.from_samples(nt)
        for col, m in enumerate(spec.m_values):
            w = batch.W[:, col]
            mismatch = int(np.count_nonzero(w != nt))
            result.discretization.append(
                {
                    "m": int(m),
                    "p_mismatch": asdict(Proportion.wilson(mismatch, n)),
                    "p_collision": asdict(
                        Proportion.wilson(int(np.count_nonzero(batch.collision[:, col])), n)
                    ),
                    "collision_bound": collision_bound(int(m), int(spec.L)),
                    "tv_w": tv_distance(dist_t, CountDistribution.from_samples(w)),
                    "mean_W": Mean.of(w).value,
                }
            )
    return result


def run_trials(spec: ExperimentSpec, workers: int = 1) -> ExperimentResult:
    """Run ``spec.trials`` independent trials and aggregate them.

    Trial t draws from a stream derived from (seed, t) alone, so the result is
    the same for any worker count.
    """
    return summarize(spec, collect(spec, workers))


SWEEP_CSV_HEADER = [
    "L", "R_L", "trials", "mean_n_iso", "expected_n_iso", "p_no_isolated", "ci_lo", "ci_hi",
    "p_connected", "tv_empirical", "b1", "b2_upper", "b3", "tv_chen_stein",
]


@dataclass
class SweepRow:
    L: float
    result: ExperimentResult
    report: theory.ChenSteinReport
    regime: ScalingRegime
    coupling_gap: float

    def to_csv_row(self) -> dict:
        r = self.result
        return {
            "L": self.L,
            "R_L": self.regime.R_L,
            "trials": r.trials,
            "mean_n_iso": r.mean_n_iso.value,
            "expected_n_iso": r.expected_n_iso,
            "p_no_isolated": r.p_no_isolated.value,
            "ci_lo": r.p_no_isolated.lo,
            "ci_hi": r.p_no_isolated.hi,
            "p_connected": r.p_connected.value,
            "tv_empirical": r.tv_poisson,
            "b1": self.report.b1,
            "b2_upper": self.report.b2_upper,
            "b3": self.report.b3,
            "tv_chen_stein": self.report.tv_upper,
        }

    def to_dict(self) -> dict:
        return {
            "L": self.L,
            "R_L": self.regime.R_L,
            "coupling_gap": self.coupling_gap,
            "result": self.result.to_dict(),
            "bounds": self.report.to_dict(),
        }


def sweep(base: ExperimentSpec, L_values, workers: int = 1) -> list[SweepRow]:
    """Run the same experiment at each L and pair it with the bound numerics."""
    specs = [replace(base, L=float(L)) for L in L_values]
    for s in specs:
        s.validate()
    rows = []
    for s in specs:
        log.info("sweep: L=%g, %d trials", s.L, s.trials)
        cf = s.connection()
        regime = s.regime(cf)
        rows.append(
            SweepRow(
                L=s.L,
                result=run_trials(s, workers),
                report=theory.chen_stein_report(regime, cf, s.m_bound),
                regime=regime,
                coupling_gap=theory.coupling_gap(regime, cf),
            )
        )
    return rows
