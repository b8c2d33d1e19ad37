"""Segment-grid indicators J_i, I_i, the sum W and the collision union bound."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .graph import GraphSample


@dataclass(frozen=True)
class DiscretizationGrid:
    m: int
    L: int
    J: np.ndarray = field(repr=False)
    I: np.ndarray = field(repr=False)
    W: int = 0
    collision: bool = False
    neighborhood_radius: int | None = None

    @property
    def segment_count(self) -> int:
        return self.m * self.L


def _integer_length(L: float) -> int:
    if not float(L).is_integer() or L < 1:
        raise ValueError(f"discretization needs a positive integer torus length, got {L!r}")
    return int(L)


def build_grid(g: GraphSample, m: int, cutoff: float | None = None) -> DiscretizationGrid:
    """Split [0, L) into m*L half-open segments of width 1/m and mark singleton / isolated-singleton segments.

    ``g`` should be sampled (or truncated) under the truncated connection
    function; the neighbourhood radius ``ceil(3 m cutoff)`` is filled in from
    ``cutoff`` or, failing that, from the graph's regime.
    """
    if m < 1 or int(m) != m:
        raise ValueError("m must be a positive integer")
    m = int(m)
    L = _integer_length(g.config.torus.length)
    nseg = m * L
    seg = np.minimum(np.floor(g.config.positions * m).astype(np.int64), nseg - 1)
    occupancy = np.bincount(seg, minlength=nseg)
    J = occupancy == 1
    isolated = np.bincount(seg[g.degrees == 0], minlength=nseg) > 0
    I = J & isolated
    if cutoff is None and g.regime is not None:
        cutoff = g.regime.truncation_cutoff
    radius = None if cutoff is None else int(math.ceil(3 * m * cutoff))
    for a in (J, I):
        a.setflags(write=False)
    return DiscretizationGrid(
        m=m,
        L=L,
        J=J,
        I=I,
        W=int(np.count_nonzero(I)),
        collision=bool(np.any(occupancy >= 2)),
        neighborhood_radius=radius,
    )


def collision_bound(m: int, L: int) -> float:
    """Union bound mL(1 - e^{-1/m} - e^{-1/m}/m) on P(some segment holds two or more nodes)."""
    if m < 1 or L < 1:
        raise ValueError("m and L must be at least 1")
    a = 1.0 / m
    return m * L * (-math.expm1(-a) - a * math.exp(-a))
