"""Circle arithmetic and unit-intensity Poisson sampling on [0, L)."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Torus:
    """The interval [0, length) with 0 and length identified."""

    length: float

    def __post_init__(self):
        if not np.isfinite(self.length) or self.length <= 0:
            raise ValueError(f"torus length must be positive, got {self.length!r}")

    def wrap(self, x):
        """Reduce coordinates modulo the length, guaranteeing the half-open range."""
        y = np.mod(np.asarray(x, dtype=np.float64), self.length)
        # mod can round up to exactly `length` for tiny negative inputs
        y = np.where(y >= self.length, 0.0, y)
        return float(y) if y.ndim == 0 else y


@dataclass(frozen=True)
class PointConfiguration:
    torus: Torus
    positions: np.ndarray = field(repr=False)

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=np.float64)
        if pos.ndim != 1:
            raise ValueError("positions must be one-dimensional")
        if pos.size and (pos[0] < 0 or pos[-1] >= self.torus.length):
            raise ValueError("positions must lie in [0, L)")
        if pos.size > 1 and np.any(np.diff(pos) < 0):
            raise ValueError("positions must be sorted")
        pos.setflags(write=False)
        object.__setattr__(self, "positions", pos)

    @property
    def n(self) -> int:
        return int(self.positions.size)

    def __len__(self):
        return self.n


def _check_on_torus(x, L):
    x = np.asarray(x, dtype=np.float64)
    if np.any(x < 0) or np.any(x >= L) or np.any(~np.isfinite(x)):
        raise ValueError(f"coordinates must lie in [0, {L})")
    return x


def toroidal_distance(x, y, torus: Torus):
    """Circular distance min(|x - y|, L - |x - y|).

    Accepts scalars or broadcastable arrays; returns a float for scalar input.
    """
    L = torus.length
    x = _check_on_torus(x, L)
    y = _check_on_torus(y, L)
    d = np.abs(x - y)
    out = np.minimum(d, L - d)
    return float(out) if out.ndim == 0 else out


def sample_ppp(torus: Torus, rng: np.random.Generator) -> PointConfiguration:
    """Unit-intensity Poisson process on the torus: Poisson(L) count, then sorted uniforms."""
    L = torus.length
    n = rng.poisson(L)
    pos = rng.random(n) * L
    pos[pos >= L] = np.nextafter(L, 0.0)
    pos.sort()
    return PointConfiguration(torus, pos)
