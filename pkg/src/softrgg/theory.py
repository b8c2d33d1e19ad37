"""Closed-form expectations, Poisson references, TV distances and Chen-Stein bound numerics.

Everything here is deterministic numerics; large-L quantities are assembled in
log space so that L up to 1e8 neither overflows nor underflows.
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import integrate, special

from .connection import QUAD_EPSABS, QUAD_EPSREL, ConnectionFunction, ScalingRegime, evaluate_scaled

POISSON_TAIL = 1e-12


# -- distributions -----------------------------------------------------------


@dataclass(frozen=True)
class Poisson:
    lam: float

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError("Poisson mean must be positive")


@dataclass(frozen=True)
class CountDistribution:
    """Empirical law of a nonnegative integer count."""

    counts: dict = field(default_factory=dict)
    total: int = 0

    def __post_init__(self):
        counts = {int(k): int(v) for k, v in self.counts.items() if v}
        if any(k < 0 or v < 0 for k, v in counts.items()):
            raise ValueError("counts must be nonnegative and indexed by nonnegative integers")
        if sum(counts.values()) != self.total:
            raise ValueError("counts do not sum to total")
        object.__setattr__(self, "counts", dict(sorted(counts.items())))

    @classmethod
    def from_samples(cls, samples) -> "CountDistribution":
        c = Counter(int(s) for s in samples)
        return cls(dict(c), sum(c.values()))

    def merge(self, other: "CountDistribution") -> "CountDistribution":
        c = Counter(self.counts)
        c.update(other.counts)
        return CountDistribution(dict(c), self.total + other.total)

    @property
    def max_k(self) -> int:
        return max(self.counts, default=0)

    def pmf(self, k_max: int | None = None) -> np.ndarray:
        if self.total == 0:
            raise ValueError("empty distribution")
        k_max = self.max_k if k_max is None else k_max
        p = np.zeros(k_max + 1)
        for k, v in self.counts.items():
            if k <= k_max:
                p[k] = v / self.total
        return p

    def mean(self) -> float:
        return sum(k * v for k, v in self.counts.items()) / self.total

    def prob(self, k: int) -> float:
        return self.counts.get(k, 0) / self.total

    def to_dict(self) -> dict:
        return {"counts": {str(k): v for k, v in self.counts.items()}, "total": self.total}


def poisson_pmf(lam: float, k):
    """e^{-lam} lam^k / k!, evaluated in log space; ``k`` may be an array."""
    if not lam > 0:
        raise ValueError("lambda must be positive")
    k = np.asarray(k, dtype=np.float64)
    out = np.exp(k * math.log(lam) - lam - special.gammaln(k + 1))
    return float(out) if out.ndim == 0 else out


def poisson_support_end(lam: float, tail: float = POISSON_TAIL) -> int:
    """Smallest K with P(Po(lam) > K) < tail."""
    k = max(int(lam + 10 * math.sqrt(lam)) + 10, 1)
    while special.pdtrc(k, lam) >= tail:
        k *= 2
    lo = 0
    while lo < k:
        mid = (lo + k) // 2
        if special.pdtrc(mid, lam) < tail:
            k = mid
        else:
            lo = mid + 1
    return k


def tv_distance(a, b) -> float:
    """Total variation distance between two laws on the nonnegative integers.

    Each argument is a :class:`CountDistribution` or a :class:`Poisson`. Poisson
    tails past the summation range are added in full, so the result is an
    upper estimate with error at most POISSON_TAIL.
    """
    k_max = 0
    for d in (a, b):
        if isinstance(d, CountDistribution):
            if d.total == 0:
                raise ValueError("empty empirical distribution")
            k_max = max(k_max, d.max_k)
        elif isinstance(d, Poisson):
            k_max = max(k_max, poisson_support_end(d.lam))
        else:
            raise TypeError(f"unsupported distribution {type(d).__name__}")

    def mass(d):
        if isinstance(d, CountDistribution):
            return d.pmf(k_max), 0.0
        return poisson_pmf(d.lam, np.arange(k_max + 1)), float(special.pdtrc(k_max, d.lam))

    pa, ta = mass(a)
    pb, tb = mass(b)
    tv = 0.5 * (float(np.abs(pa - pb).sum()) + ta + tb)
    return min(1.0, max(0.0, tv))


# -- expectations of isolated-node counts -------------------------------------


def _reach(regime: ScalingRegime, truncated: bool) -> float:
    """Largest circular distance at which h^L (or its truncation) can be nonzero."""
    half = regime.L / 2
    return min(half, regime.truncation_cutoff) if truncated else half


def exposure(regime: ScalingRegime, cf: ConnectionFunction, truncated: bool, power: int = 1) -> float:
    """Integral over the torus of h^L(0, z)**power: 2 R_L * int_0^{reach / R_L} H**power."""
    R = regime.R_L
    return 2 * R * cf.integral(_reach(regime, truncated) / R, power)


def expected_isolated(regime: ScalingRegime, cf: ConnectionFunction, truncated: bool = False) -> float:
    """Mean number of isolated nodes, L * exp(-int h^L(0, z) dz)."""
    return math.exp(math.log(regime.L) - exposure(regime, cf, truncated))


def coupling_gap(regime: ScalingRegime, cf: ConnectionFunction) -> float:
    """E[truncated isolated count] - E[isolated count], the Markov bound on their TV distance."""
    R = regime.R_L
    missing = 2 * R * cf.integral_between(_reach(regime, True) / R, _reach(regime, False) / R)
    return expected_isolated(regime, cf, False) * math.expm1(missing)


# -- the two-point intensity phi and its integral ------------------------------


def _h_trunc(cf, regime, r):
    return evaluate_scaled(cf, regime, r, truncated=True)


def cross_integral(y: float, regime: ScalingRegime, cf: ConnectionFunction) -> float:
    """int_0^L htilde(0, z) htilde(y, z) dz, integrated over the overlap of the two supports."""
    L = regime.L
    a = _reach(regime, True)
    c = regime.truncation_cutoff
    # z parametrised by its signed offset t in (-L/2, L/2] from 0
    pieces = []
    for lo, hi in sorted((max(-a, y + s - c), min(a, y + s + c)) for s in (0.0, -L, L)):
        if hi <= lo:
            continue
        if pieces and lo <= pieces[-1][1]:
            pieces[-1] = (pieces[-1][0], max(hi, pieces[-1][1]))
        else:
            pieces.append((lo, hi))
    if not pieces:
        return 0.0

    def f(t):
        d = abs(t - y) % L
        return float(_h_trunc(cf, regime, abs(t))) * float(_h_trunc(cf, regime, min(d, L - d)))

    kinks = [0.0, y, y - L / 2, y + L / 2]
    total = 0.0
    for lo, hi in pieces:
        pts = sorted({p for p in kinks if lo < p < hi})
        val, _ = integrate.quad(
            f, lo, hi, points=pts or None, epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL, limit=200
        )
        total += val
    return total


def phi_integral(y: float, regime: ScalingRegime, cf: ConnectionFunction) -> float:
    """int_0^L phi(z, {0, y}) dz with phi = 1 - (1 - htilde(z, 0))(1 - htilde(z, y))."""
    if not 0 <= y <= regime.L / 2:
        raise ValueError("y must lie in [0, L/2]")
    return 2 * exposure(regime, cf, True) - cross_integral(y, regime, cf)


def schwarz_lower(regime: ScalingRegime, cf: ConnectionFunction) -> float:
    """2 int htilde - int htilde^2, a lower bound for phi_integral at every y."""
    return 2 * exposure(regime, cf, True) - exposure(regime, cf, True, power=2)


def norm_ratios(regime: ScalingRegime, cf: ConnectionFunction) -> tuple[float, float]:
    """(1/R_L) int_0^L htilde(0, z) dz and (1/R_L) int_0^L htilde(0, z)^2 dz by direct quadrature in z.

    These tend to 2‖H‖₁ and 2‖H‖₂² as L grows.
    """
    L, R = regime.L, regime.R_L
    a = _reach(regime, True)
    out = []
    for power in (1, 2):
        total = 0.0
        # the support is [0, a] and [L - a, L] on the circle
        for lo, hi in ((0.0, a), (L - a, L)):
            val, _ = integrate.quad(
                lambda z: _h_trunc(cf, regime, min(z, L - z)) ** power,
                lo, hi, epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL, limit=200,
            )
            total += val
        out.append(total / R)
    return out[0], out[1]


# -- Chen-Stein terms ----------------------------------------------------------


@dataclass(frozen=True)
class B1Limit:
    b1: float
    kappa_limit: float
    p_limit: float
    b1_alt: float


def b1_limit(regime: ScalingRegime, cf: ConnectionFunction) -> B1Limit:
    """m -> inf limit of b1 = |Gamma| |B_i| p_i^2.

    ``b1_alt`` is the same product with p_i entering once instead of squared,
    kept only for comparison with the alternative reading of the formula.
    """
    L = regime.L
    kappa = exposure(regime, cf, True)
    width = min(6 * regime.truncation_cutoff, L)
    log_pre = math.log(L) + math.log(width)
    return B1Limit(
        b1=math.exp(log_pre - 2 * kappa),
        kappa_limit=kappa,
        p_limit=math.exp(-kappa),
        b1_alt=math.exp(log_pre - kappa),
    )


def b2_upper(regime: ScalingRegime, cf: ConnectionFunction) -> float:
    """2L int_0^{3 cutoff} exp(-phi_integral(y)) dy, the m -> inf upper bound on b2."""
    L, c = regime.L, regime.truncation_cutoff
    kappa = exposure(regime, cf, True)
    top = min(3 * c, L / 2)
    # exp(-phi) = exp(-2 kappa) * exp(cross); the cross term vanishes once supports are disjoint
    split = 2 * c if 4 * c < L else top
    split = min(split, top)
    inner, _ = integrate.quad(
        lambda y: math.exp(cross_integral(y, regime, cf)),
        0.0, split, epsabs=0.0, epsrel=1e-8, limit=200,
    )
    inner += top - split
    return math.exp(math.log(2 * L) - 2 * kappa + math.log(inner))


@dataclass(frozen=True)
class B3Value:
    value: float
    valid: bool


def b3_value(regime: ScalingRegime, m: int) -> B3Value:
    """b3 vanishes once segments are fine enough: valid iff 2/m <= cutoff."""
    if m < 1:
        raise ValueError("m must be a positive integer")
    return B3Value(0.0, 2.0 / m <= regime.truncation_cutoff)


def chen_stein_upper(b1: float, b2: float, b3: float, expected_W: float) -> float:
    if min(b1, b2, b3) < 0 or not expected_W > 0:
        raise ValueError("bound terms must be nonnegative and E[W] positive")
    return min(1.0, min(1.0, 1.0 / expected_W) * (b1 + b2 + b3))


@dataclass(frozen=True)
class ChenSteinReport:
    tau: float
    L: float
    alpha: float
    family: str
    m: int
    b1: float
    b2_upper: float
    b3: float
    b3_valid: bool
    expected_W: float
    kappa_limit: float
    p_limit: float
    tv_upper: float
    b1_alt: float

    def to_dict(self) -> dict:
        return asdict(self)


def chen_stein_report(regime: ScalingRegime, cf: ConnectionFunction, m: int = 1000) -> ChenSteinReport:
    """All bound terms for one regime; E[W] is its m -> inf value L * p_limit."""
    one = b1_limit(regime, cf)
    b2 = b2_upper(regime, cf)
    b3 = b3_value(regime, m)
    ew = math.exp(math.log(regime.L) - one.kappa_limit)
    return ChenSteinReport(
        tau=regime.tau,
        L=regime.L,
        alpha=regime.alpha,
        family=cf.family,
        m=int(m),
        b1=one.b1,
        b2_upper=b2,
        b3=b3.value,
        b3_valid=b3.valid,
        expected_W=ew,
        kappa_limit=one.kappa_limit,
        p_limit=one.p_limit,
        tv_upper=chen_stein_upper(one.b1, b2, b3.value, ew),
        b1_alt=one.b1_alt,
    )
