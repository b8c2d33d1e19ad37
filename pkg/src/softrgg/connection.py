"""Connection functions H, their norms, the scaling radius and truncation."""
from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy import integrate, special

FAMILIES = ("rayleigh", "exponential", "hard", "tabulated")

QUAD_EPSABS = 1e-12
QUAD_EPSREL = 1e-10
TAIL_MASS = 1e-14
# δ at or below this is treated as zero when checking ‖H‖₂² < ‖H‖₁
MARGIN_FLOOR = 1e-9
# a tabulated H whose last sample is still this large is treated as non-integrable
TABLE_TAIL_LIMIT = 1e-3


class InvalidRegimeError(ValueError):
    pass


class DivergentIntegralError(ValueError):
    pass


@dataclass(frozen=True)
class ConnectionFunction:
    """A connection function H: [0, inf) -> [0, 1].

    Use the family constructors (:meth:`rayleigh`, :meth:`exponential`,
    :meth:`hard`, :meth:`tabulated`, :meth:`from_csv`) rather than building
    instances directly.
    """

    family: str
    r_c: float | None = None
    table_x: tuple = field(default=(), repr=False)
    table_y: tuple = field(default=(), repr=False)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        if self.family == "hard":
            if self.r_c is None or not self.r_c > 0:
                raise ValueError("hard connection function needs r_c > 0")
        if self.family == "tabulated":
            x = np.asarray(self.table_x, dtype=np.float64)
            y = np.asarray(self.table_y, dtype=np.float64)
            if x.ndim != 1 or x.size < 2 or x.size != y.size:
                raise ValueError("tabulated H needs at least two (x, H(x)) samples")
            if x[0] < 0 or np.any(np.diff(x) <= 0):
                raise ValueError("tabulated x values must be nonnegative and strictly increasing")
            if not np.all(np.isfinite(y)):
                raise ValueError("tabulated H values must be finite")
            if np.clip(y[-1], 0, 1) >= TABLE_TAIL_LIMIT:
                raise DivergentIntegralError(
                    f"tabulated H does not decay: last sample H({x[-1]:g}) = {y[-1]:g}"
                )
            # the tail beyond the last sample is taken as zero
            if y[-1] > 0:
                warnings.warn(
                    f"tabulated H truncated at last sample x = {x[-1]:g} where H = {y[-1]:g}",
                    stacklevel=3,
                )

    # -- constructors ----------------------------------------------------

    @classmethod
    def rayleigh(cls):
        """H(x) = exp(-x^2)."""
        return cls("rayleigh")

    @classmethod
    def exponential(cls):
        """H(x) = exp(-x)."""
        return cls("exponential")

    @classmethod
    def hard(cls, r_c: float = 1.0):
        """H(x) = 1 for x <= r_c, else 0."""
        return cls("hard", r_c=float(r_c))

    @classmethod
    def tabulated(cls, x, y):
        """Piecewise-linear H through the samples, clamped to [0, 1], zero past the last sample."""
        return cls(
            "tabulated",
            table_x=tuple(float(v) for v in x),
            table_y=tuple(float(v) for v in y),
        )

    @classmethod
    def from_csv(cls, path):
        return cls.tabulated(*load_table_csv(path))

    @classmethod
    def from_name(cls, family: str, r_c: float | None = None, table: str | None = None):
        if family == "hard":
            return cls.hard(1.0 if r_c is None else r_c)
        if family == "tabulated":
            if table is None:
                raise ValueError("tabulated family needs a table path")
            return cls.from_csv(table)
        return cls(family)

    # -- evaluation ------------------------------------------------------

    def __call__(self, x):
        x = np.asarray(x, dtype=np.float64)
        if self.family == "rayleigh":
            out = np.exp(-x * x)
        elif self.family == "exponential":
            out = np.exp(-x)
        elif self.family == "hard":
            out = (x <= self.r_c).astype(np.float64)
        else:
            tx, ty = self._table
            out = np.clip(np.interp(x, tx, ty, right=0.0), 0.0, 1.0)
            out = np.where(x > tx[-1], 0.0, out)
        return float(out) if out.ndim == 0 else out

    @cached_property
    def _table(self):
        return np.asarray(self.table_x), np.asarray(self.table_y)

    @property
    def tail_cutoff(self) -> float:
        """Point beyond which the integral of H is below TAIL_MASS (or exactly zero)."""
        if self.family == "rayleigh":
            # int_T^inf e^{-x^2} <= e^{-T^2} / (2T)
            return float(math.sqrt(-math.log(TAIL_MASS)))
        if self.family == "exponential":
            return float(-math.log(TAIL_MASS))
        if self.family == "hard":
            return float(self.r_c)
        return float(self.table_x[-1])

    def breakpoints(self, upper: float) -> list[float]:
        """Kinks of H inside (0, upper), handed to the quadrature."""
        if self.family == "hard":
            pts = [self.r_c]
        elif self.family == "tabulated":
            pts = list(self.table_x)
        else:
            pts = []
        return [p for p in pts if 0 < p < upper]

    def integral(self, upper: float, power: int = 1) -> float:
        """Integral of H(x)**power over [0, upper]; closed form when the family has one."""
        if power not in (1, 2):
            raise ValueError("power must be 1 or 2")
        if upper <= 0:
            return 0.0
        a = float(upper)
        if self.family == "rayleigh":
            if power == 1:
                return math.sqrt(math.pi) / 2 * math.erf(a)
            return math.sqrt(math.pi / 8) * math.erf(math.sqrt(2) * a)
        if self.family == "exponential":
            return -math.expm1(-power * a) / power
        if self.family == "hard":
            return min(a, self.r_c)
        return quad_integral(self, a, power)

    def integral_between(self, lo: float, hi: float) -> float:
        """Integral of H over [lo, hi], written to avoid cancellation when both ends are far out."""
        if hi <= lo:
            return 0.0
        if self.family == "rayleigh":
            return math.sqrt(math.pi) / 2 * (special.erfc(lo) - special.erfc(hi))
        if self.family == "exponential":
            return math.exp(-lo) - math.exp(-hi)
        if self.family == "hard":
            return max(0.0, min(hi, self.r_c) - min(lo, self.r_c))
        return max(0.0, self.integral(hi) - self.integral(lo))

    def window(self, eps: float) -> float:
        """Smallest x with sup_{x' > x} H(x') < eps (unscaled units)."""
        if not 0 < eps < 1:
            raise ValueError("window tolerance must lie in (0, 1)")
        if self.family == "rayleigh":
            return math.sqrt(math.log(1 / eps))
        if self.family == "exponential":
            return math.log(1 / eps)
        if self.family == "hard":
            return float(self.r_c)
        tx, ty = self._table
        ty = np.clip(ty, 0.0, 1.0)
        above = np.flatnonzero(ty >= eps)
        if above.size == 0:
            return 0.0
        k = int(above[-1])
        if k == tx.size - 1:
            return float(tx[-1])
        # linear crossing of eps on [x_k, x_{k+1}]
        x0, x1, y0, y1 = tx[k], tx[k + 1], ty[k], ty[k + 1]
        return float(x0 + (y0 - eps) / (y0 - y1) * (x1 - x0))

    # -- norms -----------------------------------------------------------

    @cached_property
    def l1_norm(self) -> float:
        return l1_norm(self)

    @cached_property
    def l2sq_norm(self) -> float:
        return l2sq_norm(self)

    @property
    def assumption_margin(self) -> float:
        return self.l1_norm - self.l2sq_norm

    def describe(self) -> dict:
        d = {"family": self.family}
        if self.family == "hard":
            d["r_c"] = self.r_c
        return d


def quad_integral(cf: ConnectionFunction, upper: float, power: int = 1) -> float:
    """Adaptive quadrature of H**power on [0, upper]; infinite limits are cut at the tail cutoff."""
    b = min(float(upper), cf.tail_cutoff)
    if b <= 0:
        return 0.0
    pts = cf.breakpoints(b)
    # quad's `points` argument is capped by `limit`; integrate long tables piecewise
    edges = [0.0] + pts + [b]
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        if hi <= lo:
            continue
        val, _ = integrate.quad(
            lambda x: cf(x) ** power, lo, hi, epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL, limit=200
        )
        total += val
    return total


def l1_norm(cf: ConnectionFunction) -> float:
    """‖H‖₁, analytic for the closed-form families and by quadrature otherwise."""
    if cf.family == "tabulated":
        val = quad_integral(cf, math.inf, 1)
    else:
        val = cf.integral(math.inf, 1)
    if not (math.isfinite(val) and val > 0):
        raise DivergentIntegralError(f"‖H‖₁ must be finite and positive, got {val}")
    return val


def l2sq_norm(cf: ConnectionFunction) -> float:
    if cf.family == "tabulated":
        val = quad_integral(cf, math.inf, 2)
    else:
        val = cf.integral(math.inf, 2)
    if not (math.isfinite(val) and val > 0):
        raise DivergentIntegralError(f"‖H‖₂² must be finite and positive, got {val}")
    return val


@dataclass(frozen=True)
class AssumptionReport:
    passed: bool
    margin: float
    l1_norm: float
    l2sq_norm: float


def check_assumptions(cf: ConnectionFunction) -> AssumptionReport:
    """Check ‖H‖₁ < inf and ‖H‖₂² < ‖H‖₁ (strictly, up to MARGIN_FLOOR)."""
    l1, l2 = cf.l1_norm, cf.l2sq_norm
    margin = l1 - l2
    return AssumptionReport(bool(math.isfinite(l1) and margin > MARGIN_FLOOR), margin, l1, l2)


@dataclass(frozen=True)
class ScalingRegime:
    tau: float
    L: float
    alpha: float
    R_L: float
    truncation_cutoff: float

    @property
    def torus_half(self) -> float:
        return self.L / 2


def scaling_radius(tau: float, L: float, cf: ConnectionFunction, alpha: float = 1.0) -> ScalingRegime:
    """R_L = ln(tau L) / (2 ‖H‖₁) and the truncation cutoff R_L^(1 + 1/alpha)."""
    if not (tau > 0 and L > 0):
        raise InvalidRegimeError("tau and L must be positive")
    if not alpha > 0:
        raise InvalidRegimeError("alpha must be positive")
    if tau * L <= 1:
        raise InvalidRegimeError("invalid regime: tau*L <= 1")
    R = math.log(tau * L) / (2 * cf.l1_norm)
    return ScalingRegime(float(tau), float(L), float(alpha), R, R ** (1 + 1 / alpha))


def evaluate_scaled(cf: ConnectionFunction, regime: ScalingRegime, rho, truncated: bool = False):
    """h^L at circular distance rho: H(rho / R_L), zeroed beyond the cutoff when truncated."""
    rho = np.asarray(rho, dtype=np.float64)
    out = np.asarray(cf(rho / regime.R_L), dtype=np.float64)
    if truncated:
        out = np.where(rho > regime.truncation_cutoff, 0.0, out)
    return float(out) if out.ndim == 0 else out


def scaled_window(cf: ConnectionFunction, regime: ScalingRegime, eps: float, truncated: bool = False) -> float:
    """Distance beyond which every scaled connection probability is below eps."""
    w = regime.R_L * cf.window(eps)
    if truncated:
        w = min(w, regime.truncation_cutoff)
    return w


def load_table_csv(path):
    """Read a two-column (x, H(x)) CSV; a non-numeric first row is taken as a header."""
    xs, ys = [], []
    with Path(path).open(newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or not "".join(row).strip() or row[0].lstrip().startswith("#"):
                continue
            if len(row) < 2:
                raise ValueError(f"{path}:{lineno}: expected two columns")
            try:
                x, y = float(row[0]), float(row[1])
            except ValueError:
                if not xs and lineno == 1:
                    continue
                raise ValueError(f"{path}:{lineno}: non-numeric row {row!r}") from None
            xs.append(x)
            ys.append(y)
    return np.array(xs), np.array(ys)
