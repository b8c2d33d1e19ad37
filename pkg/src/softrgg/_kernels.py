"""Compiled inner loops: edge sampling with counter-based pair uniforms, union-find."""
import numpy as np
from numba import njit

_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S32 = np.uint64(32)
_S11 = np.uint64(11)
_INV53 = 1.0 / 9007199254740992.0


@njit(cache=True)
def _splitmix(z):
    z = z + _GOLDEN
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


@njit(cache=True)
def pair_uniforms(key, u, v):
    """Uniform [0, 1) per unordered pair, a pure function of (key, min, max).

    Counter-based, so the draw for a pair does not depend on which other pairs
    were enumerated or in what order.
    """
    n = u.size
    out = np.empty(n, dtype=np.float64)
    k = np.uint64(key)
    for t in range(n):
        out[t] = _uniform(k, min(u[t], v[t]), max(u[t], v[t]))
    return out


# H for each family as a compiled function of (x, r_c, tx, ty); passed into the
# sampler as an argument so each family gets its own specialisation.


@njit(cache=True)
def h_rayleigh(s, r_c, tx, ty):
    return np.exp(-s * s)


@njit(cache=True)
def h_exponential(s, r_c, tx, ty):
    return np.exp(-s)


@njit(cache=True)
def h_hard(s, r_c, tx, ty):
    return 1.0 if s <= r_c else 0.0


@njit(cache=True)
def h_tabulated(s, r_c, tx, ty):
    if s > tx[-1]:
        return 0.0
    return min(1.0, max(0.0, np.interp(s, tx, ty)))


@njit(cache=True)
def _uniform(k, a, b):
    z = _splitmix(k ^ _splitmix((np.uint64(a) << _S32) | np.uint64(b)))
    return np.float64(z >> _S11) * _INV53


@njit(cache=True)
def sample_edges(x, L, w, key, h, R, cutoff, truncated, r_c, tx, ty):
    """Kept edges (u < v, circular length) of the soft RGG on sorted positions x.

    With 0 <= w < L/2 only pairs within circular distance w are visited, each
    reached from exactly one endpoint by walking forward around the circle;
    otherwise (w < 0) every pair is visited.  Pair (a, b) is kept iff its
    counter-based uniform is below h^L = h(rho / R), zero past ``cutoff``
    when truncated, so the outcome for a pair does not
    depend on the enumeration.
    """
    n = x.size
    k = np.uint64(key)
    windowed = w >= 0.0
    if windowed:
        cap = 0
        for i in range(n):
            for step in range(1, n):
                j = i + step
                d = x[j] - x[i] if j < n else x[j - n] + L - x[i]
                if d > w:
                    break
                cap += 1
    else:
        cap = n * (n - 1) // 2
    us = np.empty(cap, dtype=np.int64)
    vs = np.empty(cap, dtype=np.int64)
    ds = np.empty(cap, dtype=np.float64)
    t = 0
    for i in range(n):
        top = n if windowed else n - i
        for step in range(1, top):
            j = i + step
            if windowed:
                if j < n:
                    d = x[j] - x[i]
                else:
                    j -= n
                    d = x[j] + L - x[i]
                if d > w:
                    break
            else:
                d = abs(x[j] - x[i])
                d = min(d, L - d)
            a = min(i, j)
            b = max(i, j)
            if truncated and d > cutoff:
                continue
            if _uniform(k, a, b) < h(d / R, r_c, tx, ty):
                us[t] = a
                vs[t] = b
                ds[t] = d
                t += 1
    return us[:t].copy(), vs[:t].copy(), ds[:t].copy()


@njit(cache=True)
def _find(parent, a):
    while parent[a] != a:
        parent[a] = parent[parent[a]]
        a = parent[a]
    return a


@njit(cache=True)
def component_count(n, u, v):
    """Number of connected components via union-find (path halving, union by size)."""
    parent = np.arange(n)
    size = np.ones(n, dtype=np.int64)
    comps = n
    for t in range(u.size):
        a = _find(parent, u[t])
        b = _find(parent, v[t])
        if a == b:
            continue
        if size[a] < size[b]:
            a, b = b, a
        parent[b] = a
        size[a] += size[b]
        comps -= 1
    return comps
