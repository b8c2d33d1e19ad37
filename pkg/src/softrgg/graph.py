"""Soft RGG edge sampling, isolated-node counts, connectivity and edge truncation."""
from __future__ import annotations

import csv
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .connection import ConnectionFunction, ScalingRegime, scaled_window
from .geometry import PointConfiguration

MODES = ("exact", "windowed")


@dataclass(frozen=True)
class GraphSample:
    """A sampled graph on a point configuration.

    ``edges`` is an (E, 2) integer array of pairs ``i < j`` (in sampling
    order, which is deterministic), ``edge_lengths`` their circular lengths and ``degrees`` the
    per-vertex degree.  ``truncated`` records whether edges longer than the
    regime's cutoff are absent by construction.
    """

    config: PointConfiguration
    edges: np.ndarray = field(repr=False)
    edge_lengths: np.ndarray = field(repr=False)
    degrees: np.ndarray = field(repr=False)
    regime: ScalingRegime | None = None
    truncated: bool = False

    @property
    def n(self) -> int:
        return self.config.n

    @property
    def n_edges(self) -> int:
        return int(self.edges.shape[0])


@dataclass(frozen=True)
class TrialSummary:
    n_nodes: int
    n_iso: int
    connected: bool
    n_iso_truncated: int | None = None


def _build(config, u, v, lengths, regime, truncated) -> GraphSample:
    n = config.n
    degrees = np.bincount(u, minlength=n) + np.bincount(v, minlength=n)
    edges = np.column_stack((u, v)).astype(np.int64, copy=False)
    for a in (edges, lengths, degrees):
        a.setflags(write=False)
    return GraphSample(config, edges, lengths, degrees, regime, truncated)


_FAMILY_KERNELS = {
    "rayleigh": _kernels.h_rayleigh,
    "exponential": _kernels.h_exponential,
    "hard": _kernels.h_hard,
    "tabulated": _kernels.h_tabulated,
}
_NO_TABLE = np.zeros(1)


def sample_edges(
    config: PointConfiguration,
    cf: ConnectionFunction,
    regime: ScalingRegime,
    rng: np.random.Generator,
    mode: str = "windowed",
    eps: float = 1e-12,
    truncated: bool = False,
) -> GraphSample:
    """Draw each edge independently with probability h^L(rho(x_i, x_j)).

    Pair uniforms come from a counter-based hash of one 64-bit key drawn from
    ``rng``, so a given pair gets the same draw in exact and windowed mode.
    Windowed mode only visits pairs closer than the distance past which
    h^L < eps.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    L = float(config.torus.length)
    if not np.isclose(regime.L, L, rtol=1e-12, atol=0):
        raise ValueError("regime length does not match the configuration's torus")
    window = -1.0
    if mode == "windowed":
        if not 0 < eps < 1:
            raise ValueError("windowed mode needs 0 < eps < 1")
        window = scaled_window(cf, regime, eps, truncated)
        if window >= L / 2:
            window = -1.0
    key = rng.integers(0, np.iinfo(np.uint64).max, dtype=np.uint64, endpoint=True)
    if cf.family == "tabulated":
        tx, ty = (np.asarray(a, dtype=np.float64) for a in (cf.table_x, cf.table_y))
    else:
        tx = ty = _NO_TABLE
    u, v, d = _kernels.sample_edges(
        config.positions, L, window, key, _FAMILY_KERNELS[cf.family], regime.R_L,
        regime.truncation_cutoff, truncated, float(cf.r_c or 0.0), tx, ty,
    )
    return _build(config, u, v, d, regime, truncated)


def from_edges(config: PointConfiguration, edges, regime: ScalingRegime | None = None) -> GraphSample:
    """GraphSample from an explicit edge list; lengths are computed from the positions."""
    e = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    if e.size and (e.min() < 0 or e.max() >= config.n):
        raise ValueError("edge endpoint out of range")
    if np.any(e[:, 0] == e[:, 1]):
        raise ValueError("self-loops are not allowed")
    u, v = np.minimum(e[:, 0], e[:, 1]), np.maximum(e[:, 0], e[:, 1])
    if np.unique(u * max(config.n, 1) + v).size != u.size:
        raise ValueError("duplicate edges")
    x, L = config.positions, config.torus.length
    d = np.abs(x[v] - x[u])
    return _build(config, u, v, np.minimum(d, L - d), regime, False)


def isolated_count(g: GraphSample) -> int:
    return int(np.count_nonzero(g.degrees == 0))


def is_connected(g: GraphSample) -> bool:
    """Single connected component, by union-find. Graphs with at most one vertex count as connected."""
    if g.n <= 1:
        return True
    return _kernels.component_count(g.n, g.edges[:, 0], g.edges[:, 1]) == 1


def is_connected_bfs(g: GraphSample) -> bool:
    """Breadth-first-search reference for :func:`is_connected`."""
    n = g.n
    if n <= 1:
        return True
    adj = [[] for _ in range(n)]
    for a, b in g.edges.tolist():
        adj[a].append(b)
        adj[b].append(a)
    seen = [False] * n
    seen[0] = True
    queue = deque([0])
    reached = 1
    while queue:
        a = queue.popleft()
        for b in adj[a]:
            if not seen[b]:
                seen[b] = True
                reached += 1
                queue.append(b)
    return reached == n


def truncate_edges(g: GraphSample, cutoff: float) -> GraphSample:
    """Drop edges longer than ``cutoff``; everything else (including the draws) is shared."""
    keep = g.edge_lengths <= cutoff
    truncated = g.truncated or (g.regime is not None and cutoff <= g.regime.truncation_cutoff)
    return _build(
        g.config, g.edges[keep, 0], g.edges[keep, 1], g.edge_lengths[keep], g.regime, truncated
    )


def summarize(g: GraphSample, truncated: GraphSample | None = None) -> TrialSummary:
    return TrialSummary(
        n_nodes=g.n,
        n_iso=isolated_count(g),
        connected=is_connected(g),
        n_iso_truncated=None if truncated is None else isolated_count(truncated),
    )


def write_edge_csv(g: GraphSample, fh) -> None:
    """Debug dump: one ``u,v,length`` row per edge."""
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["u", "v", "length"])
    for (a, b), d in zip(g.edges.tolist(), g.edge_lengths.tolist()):
        w.writerow([a, b, format(d, ".17g")])
