"""Stationary solutions.

In the point-source limit the whole stationary state is fixed by the protein
level at the gene site, ``p_g``, which solves the scalar equation::

    p_g = c(D) * f(p_g),   c(D) = alpha_m * alpha_p * int_l^1 G(x_M, y)**2 dy

with the Green's function of ``D u'' - mu u``.  The profiles then follow
from the Green's representation.  For a regularized source the problem is a
fixed point of a compact integral operator, solved here on a grid.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.sparse.linalg import splu
from scipy import sparse

from .errors import ConfigurationError, ConvergenceError
from .greens import KernelContext, green, green_product_integral
from .grid import SpatialGrid, discrete_indicator, discrete_source, neumann_laplacian
from .model import ModelParams, hill, hill_derivs

__all__ = [
    "SteadyStateSolution",
    "gene_coefficient",
    "solve_p_at_gene",
    "solve_p_at_gene_newton",
    "reconstruct_profiles",
    "solve_eps_fixed_point",
    "stationary_residual",
    "write_profile_csv",
]


@dataclass(frozen=True)
class SteadyStateSolution:
    """Stationary profiles on a grid.

    Attributes
    ----------
    D : float
    p_at_gene : float
        Protein concentration at the gene site.
    x, m_profile, p_profile : ndarray
    residual : float
        For the point-source solution, the residual of the scalar equation;
        for the regularized solution, the relative sup-norm residual of the
        discretized stationary equations.
    epsilon : float
        Source half-width, 0 for the point-source limit.
    """

    D: float
    p_at_gene: float
    x: np.ndarray
    m_profile: np.ndarray
    p_profile: np.ndarray
    residual: float
    epsilon: float = 0.0
    iterations: int = 0


def _check_D(D):
    if not (np.isfinite(D) and D > 0):
        raise ConfigurationError(f"D must be positive and finite, got {D!r}")


def gene_coefficient(params: ModelParams, D: float) -> float:
    """Coefficient ``c(D)`` of the scalar stationary equation."""
    _check_D(D)
    return params.gain * green_product_integral(params.x_M, D, params.mu, params.x_M, params.l)


def solve_p_at_gene(params: ModelParams, D: float) -> float:
    """Unique positive root of ``p = c(D) f(p)``.

    The right-hand side is positive at 0 and decreasing, so the root lies in
    ``[0, c(D)]``.  Bisection narrows the bracket to relative width 1e-13 and
    one Newton step polishes the result.

    Raises
    ------
    ConvergenceError
        If ``c(D)`` underflows (only for ``D`` far below 1e-7).
    """
    c = gene_coefficient(params, D)
    if not (c > 0 and np.isfinite(c)):
        raise ConvergenceError(f"stationary coefficient is {c!r}; cannot bracket the root")
    h = params.h

    def phi(p):
        return p - c / (1.0 + p ** h)

    lo, hi = 0.0, c
    for _ in range(2000):
        if hi - lo <= 1e-13 * hi:
            break
        mid = 0.5 * (lo + hi)
        if phi(mid) > 0:
            hi = mid
        else:
            lo = mid
    p = 0.5 * (lo + hi)
    f1 = hill_derivs(p, h)[0]
    dp = phi(p) / (1.0 - c * f1)
    if lo <= p - dp <= hi:
        p -= dp
    return p


def solve_p_at_gene_newton(params: ModelParams, D: float, p0: float | None = None,
                           tol: float = 1e-14, max_iter: int = 200) -> float:
    """Damped Newton iteration for the same scalar equation.

    Used as an independent cross-check of :func:`solve_p_at_gene`.
    """
    c = gene_coefficient(params, D)
    h = params.h
    p = min(c, 1.0) if p0 is None else p0
    for _ in range(max_iter):
        r = p - c * hill(p, h)
        dp = r / (1.0 - c * hill_derivs(p, h)[0])
        step = 1.0
        while p - step * dp < 0:
            step *= 0.5
        p_new = p - step * dp
        if abs(p_new - p) <= tol * max(p, 1e-300):
            return p_new
        p = p_new
    raise ConvergenceError("Newton iteration for the gene-site level did not converge",
                           residual=abs(p - c * hill(p, h)))


def reconstruct_profiles(params: ModelParams, D: float, p_at_gene: float,
                         grid: SpatialGrid) -> SteadyStateSolution:
    """Closed-form point-source profiles on the grid nodes.

    ``m(x) = alpha_m f(p_g) G(x, x_M)`` and
    ``p(x) = alpha_m alpha_p f(p_g) int_l^1 G(x, y) G(y, x_M) dy``.
    The formulas are evaluated exactly at the nodes; if ``x_M`` is not a
    node, the kink of ``m`` falls between nodes and a warning is issued.
    """
    _check_D(D)
    if not grid.has_node(params.x_M):
        warnings.warn("x_M is not a grid node; the kink of m is not resolved",
                      RuntimeWarning, stacklevel=2)
    fg = hill(p_at_gene, params.h)
    ctx = KernelContext.create(D, params.mu)
    x = grid.x
    m = params.alpha_m * fg * green(ctx, x, params.x_M)
    p = params.gain * fg * green_product_integral(x, D, params.mu, params.x_M, params.l)
    c = gene_coefficient(params, D)
    residual = abs(p_at_gene - c * fg)
    return SteadyStateSolution(D, float(p_at_gene), x, np.asarray(m), np.asarray(p), residual)


def _operators(params: ModelParams, D: float, grid: SpatialGrid):
    lap = neumann_laplacian(grid)
    op = (params.mu * sparse.identity(grid.n_nodes, format="csc") - D * lap).tocsc()
    src = discrete_source(grid, params.x_M, params.epsilon)
    gate = discrete_indicator(grid, params.l)
    return lap, splu(op), src, gate


def stationary_residual(params: ModelParams, D: float, grid: SpatialGrid, m, p) -> float:
    """Relative sup-norm residual of the discretized stationary equations.

    Each equation's residual is divided by the sup-norm of its production
    term.
    """
    lap, _, src, gate = _operators(params, D, grid)
    prod_m = params.alpha_m * src * hill(np.maximum(p, 0.0), params.h)
    prod_p = params.alpha_p * gate * m
    rm = D * (lap @ m) - params.mu * m + prod_m
    rp = D * (lap @ p) - params.mu * p + prod_p
    return max(np.max(np.abs(rm)) / np.max(np.abs(prod_m)),
               np.max(np.abs(rp)) / max(np.max(np.abs(prod_p)), 1e-300))


def solve_eps_fixed_point(params: ModelParams, D: float, grid: SpatialGrid,
                          damping: float | None = None, tol: float = 1e-10,
                          max_iter: int = 100_000) -> SteadyStateSolution:
    """Stationary state with the regularized source, by damped Picard iteration.

    Each iterate applies the discrete solution operator of ``mu - D d2/dx2``
    twice: ``m = alpha_m A^-1 (delta f(p))`` and ``p = alpha_p A^-1 (g m)``.

    Parameters
    ----------
    damping : float, optional
        Relaxation weight ``w`` in ``p <- (1 - w) p + w K(p)``.  By default
        ``w = 1 / (1 + c |f'(p_g)|)`` from the point-source solution, which
        cancels the linearized contraction factor.  A fixed ``w = 0.5`` fails
        to converge once ``c |f'| > 3``, i.e. for ``D`` above about 4e-4 with
        the default parameters.
    tol : float
        Stop when the sup-norm of the update falls below ``tol``.

    Raises
    ------
    ConvergenceError
        After ``max_iter`` iterations, carrying the last update norm.
    """
    _check_D(D)
    _, lu, src, gate = _operators(params, D, grid)
    if damping is None:
        pg = solve_p_at_gene(params, D)
        slope = gene_coefficient(params, D) * abs(hill_derivs(pg, params.h)[0])
        damping = 1.0 / (1.0 + slope)
    if not 0 < damping <= 1:
        raise ConfigurationError("damping must lie in (0, 1]")
    p = np.zeros(grid.n_nodes)
    m = np.zeros(grid.n_nodes)
    update = np.inf
    for it in range(1, max_iter + 1):
        m = params.alpha_m * lu.solve(src * hill(p, params.h))
        p_new = (1.0 - damping) * p + damping * params.alpha_p * lu.solve(gate * m)
        update = np.max(np.abs(p_new - p))
        p = p_new
        if update < tol:
            break
    else:
        raise ConvergenceError(f"fixed point not reached in {max_iter} iterations",
                               residual=update)
    m = params.alpha_m * lu.solve(src * hill(p, params.h))
    res = stationary_residual(params, D, grid, m, p)
    pg = float(np.interp(params.x_M, grid.x, p))
    return SteadyStateSolution(D, pg, grid.x, m, p, res, params.epsilon, it)


def write_profile_csv(path, sol: SteadyStateSolution) -> None:
    """Write ``x,m_star,p_star`` rows with 17 significant digits."""
    from .io import write_csv
    write_csv(path, ("x", "m_star", "p_star"), zip(sol.x, sol.m_profile, sol.p_profile))
