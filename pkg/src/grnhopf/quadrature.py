"""Composite Simpson quadrature split at interior kinks."""

from __future__ import annotations

import numpy as np
from scipy.integrate import simpson

__all__ = ["simpson_split", "split_nodes"]


def split_nodes(a: float, b: float, breaks=(), panels: int = 10_000):
    """Nodes for composite Simpson on ``[a, b]`` with breakpoints as nodes.

    Each sub-interval between consecutive breakpoints receives an even number
    of panels proportional to its length (at least two).

    Returns
    -------
    list of ndarray
        One node array per sub-interval.
    """
    pts = sorted({float(a), float(b), *(float(c) for c in breaks if a < c < b)})
    total = b - a
    pieces = []
    for lo, hi in zip(pts[:-1], pts[1:]):
        n = max(2, int(round(panels * (hi - lo) / total)))
        n += n % 2
        pieces.append(np.linspace(lo, hi, n + 1))
    return pieces


def simpson_split(func, a: float, b: float, breaks=(), panels: int = 10_000):
    """Integrate a vectorized ``func`` over ``[a, b]``.

    Parameters
    ----------
    func : callable
        Maps an array of nodes to an array of (real or complex) values.
    a, b : float
        Integration limits.
    breaks : sequence of float
        Points where ``func`` has a kink or jump; each becomes a panel edge.
    panels : int
        Approximate total number of Simpson panels.
    """
    return sum(simpson(func(xs), x=xs) for xs in split_nodes(a, b, breaks, panels))
