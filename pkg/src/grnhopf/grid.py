"""Uniform grid on the unit interval and grid versions of the source terms."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import sparse

from .errors import ConfigurationError
from .model import dirac_eps

__all__ = ["SpatialGrid", "discrete_source", "discrete_indicator", "neumann_laplacian"]


@dataclass(frozen=True)
class SpatialGrid:
    """Nodes ``0, dx, ..., 1`` with ``dx = 1 / (n_nodes - 1)``."""

    n_nodes: int = 2001

    def __post_init__(self):
        if int(self.n_nodes) != self.n_nodes or self.n_nodes < 3:
            raise ConfigurationError(f"n_nodes must be an integer >= 3, got {self.n_nodes!r}")

    @property
    def dx(self) -> float:
        return 1.0 / (self.n_nodes - 1)

    @cached_property
    def x(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.n_nodes)

    @cached_property
    def weights(self) -> np.ndarray:
        """Trapezoid weights."""
        w = np.full(self.n_nodes, self.dx)
        w[0] = w[-1] = 0.5 * self.dx
        return w

    def integrate(self, values):
        """Trapezoid rule; returns a complex number for complex ``values``."""
        r = np.dot(self.weights, values)
        return complex(r) if np.iscomplexobj(r) else float(r)

    def nearest(self, x: float) -> int:
        return int(round(x / self.dx))

    def has_node(self, x: float, tol: float = 1e-9) -> bool:
        return abs(self.nearest(x) * self.dx - x) <= tol * self.dx

    def resolves(self, epsilon: float) -> bool:
        """True if the source support spans at least eight cells."""
        return self.dx <= epsilon / 8.0


def discrete_source(grid: SpatialGrid, x_M: float, epsilon: float) -> np.ndarray:
    """Node values of the regularized source with unit trapezoid mass.

    The raised cosine is sampled at the nodes and rescaled so that its
    trapezoid integral is exactly one.  If no node falls inside the support
    the whole mass is placed on the node nearest to ``x_M``.
    """
    src = dirac_eps(grid.x, x_M, epsilon)
    mass = grid.integrate(src)
    if mass <= 0.0:
        src = np.zeros(grid.n_nodes)
        i = grid.nearest(x_M)
        src[i] = 1.0 / grid.weights[i]
        return src
    return src / mass


def discrete_indicator(grid: SpatialGrid, l: float) -> np.ndarray:
    """Cell average of the cytoplasm indicator around each node.

    A node exactly on the membrane gets 1/2, which keeps the trapezoid
    integral of ``g * u`` second-order accurate for smooth ``u``.
    """
    half = 0.5 * grid.dx
    lo = np.clip(grid.x - half, 0.0, 1.0)
    hi = np.clip(grid.x + half, 0.0, 1.0)
    covered = np.clip(hi - np.maximum(lo, l), 0.0, None)
    return covered / (hi - lo)


def neumann_laplacian(grid: SpatialGrid):
    """Second-difference matrix with mirror ghost nodes, as CSC sparse."""
    n = grid.n_nodes
    inv = 1.0 / grid.dx ** 2
    main = np.full(n, -2.0 * inv)
    upper = np.full(n - 1, inv)
    lower = np.full(n - 1, inv)
    upper[0] = 2.0 * inv
    lower[-1] = 2.0 * inv
    return sparse.diags([lower, main, upper], [-1, 0, 1], format="csc")
