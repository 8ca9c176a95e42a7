"""Small deterministic numerical helpers shared by the physics modules."""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


class NumericalError(RuntimeError):
    """A quadrature or search failed to reach its tolerance."""


@lru_cache(maxsize=None)
def gauss_legendre(order: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(order)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


@lru_cache(maxsize=None)
def gauss_hermite(order: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.hermite.hermgauss(order)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def graded_edges(lo: float, hi: float, levels: int = 40) -> np.ndarray:
    """Panel edges on [lo, hi], halving geometrically towards both ends.

    Handles integrable endpoint singularities (log, sqrt) without knowing
    which end is singular.
    """
    mid = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    steps = half * 0.5 ** np.arange(levels + 1)
    left = lo + steps[::-1]
    right = hi - steps
    return np.concatenate(([lo], left, right[1:], [hi]))


def cap_widths(edges: np.ndarray, max_width: float) -> np.ndarray:
    """Split any panel wider than ``max_width`` into equal pieces."""
    if not np.isfinite(max_width):
        return edges
    widths = np.diff(edges)
    pieces = np.maximum(1, np.ceil(widths / max_width).astype(np.int64))
    if np.all(pieces == 1):
        return edges
    out = [edges[:1]]
    for a, w, n in zip(edges[:-1], widths, pieces):
        out.append(a + w * np.arange(1, n + 1) / n)
    out = np.concatenate(out)
    out[-1] = edges[-1]
    return out


def panel_nodes(edges: np.ndarray, order: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on every panel of ``edges`` (flattened)."""
    x, w = gauss_legendre(order)
    a = edges[:-1, None]
    h = 0.5 * np.diff(edges)[:, None]
    nodes = a + h * (1.0 + x[None, :])
    weights = h * w[None, :]
    return nodes.ravel(), weights.ravel()


def golden_section_max(func, lo: float, hi: float, xtol: float, max_iter: int = 200):
    """Maximise a unimodal ``func`` on [lo, hi]; returns (x, f(x)).

    Deterministic: the sequence of evaluations depends only on lo, hi, xtol.
    """
    a, b = lo, hi
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = func(c), func(d)
    for _ in range(max_iter):
        if abs(b - a) <= xtol:
            break
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = func(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = func(d)
    else:
        raise NumericalError(f"golden-section search did not reach xtol={xtol} in {max_iter} steps")
    x = 0.5 * (a + b)
    fx = func(x)
    # the bracket midpoint can be marginally worse than the best interior probe
    best = max((fx, x), (fc, c), (fd, d))
    return best[1], best[0]
