"""Linear stability of the point-source stationary state.

Linearizing about the stationary state reduces the eigenvalue problem to the
scalar characteristic equation ``R(lambda) = 0`` with, for ``s = mu + lambda``
and ``theta = sqrt(s / D)``::

    R = K * Phi(theta) - theta * D * s * sinh(theta)**2
    K = alpha_m * alpha_p * f'(p_g)
    Phi(theta) = cosh(theta x_M)**2 * H(theta)
    H(theta) = theta (1 - l) / 2 + sinh(2 theta (1 - l)) / 4

``R`` is odd in ``theta``, so its zeros do not depend on the branch.  All
quantities are evaluated through the scaled values ``R * exp(-2 theta)``,
which stay finite for any ``theta`` with non-negative real part.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .errors import ConfigurationError, SimplicityError, SingularKernelError
from .greens import SCALED_THRESHOLD, chs, shs
from .model import ModelParams, hill_derivs
from .steady import solve_p_at_gene

__all__ = [
    "CharacteristicContext",
    "RootSet",
    "TransversalityData",
    "SEARCH_BOX",
    "char_fn",
    "char_fn_terms",
    "char_fn_deriv",
    "char_fn_dD",
    "loop_residual",
    "newton_polish",
    "find_roots",
    "max_real_part",
    "dpstar_dD",
    "dlambda_dD",
    "write_roots_csv",
]

SEARCH_BOX = (-5.0, 35.0, 0.0, 35.0)


@dataclass(frozen=True)
class CharacteristicContext:
    """Data that fixes ``R`` for one diffusion coefficient."""

    D: float
    p_at_gene: float
    fprime_at_gene: float
    params: ModelParams

    @classmethod
    def create(cls, params: ModelParams, D: float) -> "CharacteristicContext":
        if not (np.isfinite(D) and D > 0):
            raise ConfigurationError(f"D must be positive and finite, got {D!r}")
        pg = solve_p_at_gene(params, D)
        return cls(float(D), pg, hill_derivs(pg, params.h)[0], params)

    @property
    def loop_gain(self) -> float:
        return self.params.gain * self.fprime_at_gene


def _principal(z):
    t = np.sqrt(np.asarray(z, dtype=complex))
    flip = (t.real < 0) | ((t.real == 0) & (t.imag < 0))
    return np.where(flip, -t, t)


def _shift(ctx, lam):
    s = ctx.params.mu + np.asarray(lam, dtype=complex)
    if np.any(s == 0):
        raise SingularKernelError("lambda = -mu is a singular point of R")
    return s


def _scaled_pieces(ctx: CharacteristicContext, lam):
    """Scaled building blocks (each multiplied by ``exp(-2 theta)``).

    Returns ``s, t, Phi, dPhi/dtheta, T, dT/dlambda`` with ``T = t D s sinh(t)**2``
    and ``t`` the principal root.
    """
    P = ctx.params
    D = ctx.D
    s = _shift(ctx, lam)
    t = _principal(s / D)
    q = 1.0 - P.l
    z = 2.0 * t * q
    e1 = np.exp(2.0 * t * (P.x_M - 1.0))
    e2 = np.exp(2.0 * t * (P.x_M - P.l))
    c2 = chs(t * P.x_M) ** 2
    hs = t * q / 2.0 * e1 + e2 * shs(z) / 4.0
    phi = c2 * hs
    dphi = P.x_M * shs(2.0 * t * P.x_M) * hs + c2 * q / 2.0 * (e1 + e2 * chs(z))
    st, ct = shs(t), chs(t)
    T = t * D * s * st ** 2
    dT = 0.5 * (3.0 * D * t * st ** 2 + 2.0 * s * st * ct)
    return s, t, phi, dphi, T, dT


def _unscale(ctx, lam, scaled, t, branch):
    with np.errstate(over="ignore", invalid="ignore"):
        out = scaled * np.exp(2.0 * t)
    out = out if branch >= 0 else -out
    return out.item() if np.ndim(out) == 0 else out


def char_fn_terms(ctx: CharacteristicContext, lam, branch: int = 1):
    """The two terms ``K Phi`` and ``theta D s sinh(theta)**2`` of ``R``.

    For ``|theta| <= 30`` they are evaluated directly with the requested
    branch of ``theta``; otherwise from the scaled form.
    """
    P = ctx.params
    s = _shift(ctx, lam)
    t = _principal(s / ctx.D)
    if branch < 0:
        t = -t
    if np.all(np.abs(t) <= SCALED_THRESHOLD):
        q = 1.0 - P.l
        H = t * q / 2.0 + np.sinh(2.0 * t * q) / 4.0
        t1 = ctx.loop_gain * np.cosh(t * P.x_M) ** 2 * H
        t2 = t * ctx.D * s * np.sinh(t) ** 2
    else:
        _, tp, phi, _, T, _ = _scaled_pieces(ctx, lam)
        with np.errstate(over="ignore", invalid="ignore"):
            scale = np.exp(2.0 * tp) * (1 if branch >= 0 else -1)
        t1 = ctx.loop_gain * phi * scale
        t2 = T * scale
    if np.ndim(t1) == 0:
        return complex(t1), complex(t2)
    return t1, t2


def char_fn(ctx: CharacteristicContext, lam, branch: int = 1):
    """Characteristic function ``R(lambda)``.

    Parameters
    ----------
    ctx : CharacteristicContext
    lam : complex or array_like
    branch : {1, -1}
        Square-root branch for ``theta``; ``-1`` negates ``R``.

    Notes
    -----
    ``R`` grows like ``exp(2 Re theta)`` and overflows once that exponent
    passes about 709; :func:`loop_residual` is the scaled alternative.

    Raises
    ------
    SingularKernelError
        At ``lambda = -mu``.
    """
    t1, t2 = char_fn_terms(ctx, lam, branch)
    return t1 - t2


def char_fn_deriv(ctx: CharacteristicContext, lam, branch: int = 1):
    """Derivative ``dR/dlambda`` in closed form."""
    _, t, phi, dphi, T, dT = _scaled_pieces(ctx, lam)
    scaled = ctx.loop_gain * dphi / (2.0 * t * ctx.D) - dT
    return _unscale(ctx, lam, scaled, t, branch)


def char_fn_dD(ctx: CharacteristicContext, lam, branch: int = 1, dpdD: float | None = None):
    """Partial derivative of ``R`` with respect to ``D`` at fixed ``lambda``.

    Includes the dependence through the stationary level ``p_g(D)``.
    """
    P = ctx.params
    s, t, phi, dphi, T, dT = _scaled_pieces(ctx, lam)
    if dpdD is None:
        dpdD = dpstar_dD(P, ctx.D, ctx.p_at_gene)
    f2 = hill_derivs(ctx.p_at_gene, P.h)[1]
    st, ct = shs(t), chs(t)
    scaled = (P.gain * f2 * dpdD * phi
              - ctx.loop_gain * dphi * t / (2.0 * ctx.D)
              - s * t / 2.0 * (st ** 2 - 2.0 * t * st * ct))
    return _unscale(ctx, lam, scaled, t, branch)


def loop_residual(ctx: CharacteristicContext, lam):
    """Reduced function ``F = K Phi / T - 1`` and its derivative.

    ``R = F * T``, so ``F`` has the same zeros as ``R`` away from the poles
    ``sinh(theta) = 0`` (all at ``Re lambda <= -mu``) and is of order one,
    which makes it the better Newton target.
    """
    _, t, phi, dphi, T, dT = _scaled_pieces(ctx, lam)
    K = ctx.loop_gain
    F = K * phi / T - 1.0
    dR = K * dphi / (2.0 * t * ctx.D) - dT
    dF = (dR - F * dT) / T
    return F, dF


def _relative_residual(ctx, lam):
    F, _ = loop_residual(ctx, lam)
    return np.abs(F) / np.maximum(np.abs(F + 1.0), 1.0)


def newton_polish(ctx: CharacteristicContext, lam0, max_iter: int = 60, tol: float = 1e-13):
    """Damped Newton iteration on the reduced function, vectorized over seeds.

    Returns
    -------
    lam : ndarray of complex
    converged : ndarray of bool
    """
    lam = np.array(lam0, dtype=complex, ndmin=1)
    F, dF = loop_residual(ctx, lam)
    active = np.isfinite(F) & np.isfinite(dF) & (dF != 0)
    converged = np.zeros(lam.shape, dtype=bool)
    for _ in range(max_iter):
        if not active.any():
            break
        idx = np.nonzero(active)[0]
        step = F[idx] / dF[idx]
        a = np.abs(F[idx])
        trial = lam[idx] - step
        Ft, dFt = loop_residual(ctx, trial)
        # halve the step while the residual grows
        for _ in range(30):
            bad = ~(np.abs(Ft) <= a) | ~np.isfinite(Ft)
            if not bad.any():
                break
            step[bad] *= 0.5
            trial[bad] = lam[idx][bad] - step[bad]
            Ft[bad], dFt[bad] = loop_residual(ctx, trial[bad])
        lam[idx], F[idx], dF[idx] = trial, Ft, dFt
        done = (np.abs(Ft) < tol) | (np.abs(step) < 1e-15 * (1.0 + np.abs(trial)))
        ok = np.isfinite(Ft) & np.isfinite(dFt) & (dFt != 0)
        converged[idx[done & ok]] = True
        active[idx[done | ~ok]] = False
    with np.errstate(invalid="ignore"):
        rel = np.abs(F) / np.maximum(np.abs(F + 1.0), 1.0)
    converged &= rel < 1e-10
    return lam, converged


@dataclass(frozen=True)
class RootSet:
    """Zeros of ``R`` with ``Im >= 0`` inside the search box.

    ``residuals`` are relative: ``|R| / max(|K Phi|, |theta D s sinh**2|)``.
    Conjugates of the stored roots are roots as well.
    """

    D: float
    roots: np.ndarray
    residuals: np.ndarray
    derivatives: np.ndarray
    box: tuple = field(default=SEARCH_BOX)

    def __len__(self):
        return len(self.roots)

    @property
    def max_real(self) -> float:
        return float(np.max(self.roots.real)) if len(self.roots) else -np.inf


def _dedup(values, tol):
    out = []
    for v in values[np.argsort(values.real)]:
        if not any(abs(v - w) <= tol for w in out):
            out.append(v)
    return np.array(out, dtype=complex)


def find_roots(ctx: CharacteristicContext, step: float = 0.25, box=SEARCH_BOX,
               dedup_tol: float = 1e-6, refine: bool = True) -> RootSet:
    """All zeros of ``R`` with ``Re > -mu`` found from a grid of Newton seeds.

    Parameters
    ----------
    step : float
        Spacing of the seed grid over ``box = (re_min, re_max, im_min, im_max)``.
        A second grid with spacing ``step / 25`` covers
        ``[-mu, 1] x [0, 1]``.
    refine : bool
        Add a 5 x 5 block of extra seeds around each local minimum of ``|F|``
        on the seed grid.

    Returns
    -------
    RootSet
        Possibly empty; roots sorted by decreasing real part.
    """
    re0, re1, im0, im1 = box
    re = np.arange(re0, re1 + 0.5 * step, step)
    im = np.arange(im0, im1 + 0.5 * step, step)
    RE, IM = np.meshgrid(re, im, indexing="ij")
    Z = RE + 1j * IM
    Z[Z == -ctx.params.mu] += 1e-9
    seeds = Z.ravel()
    # Eigenvalues of interest have |lambda| comparable to mu, where the Newton
    # basins are far narrower than the coarse spacing; seed that patch finely.
    mu = ctx.params.mu
    fine = step / 25.0
    fr = np.arange(-mu + 0.5 * fine, 1.0, fine)
    fi = np.arange(0.0, 1.0, fine)
    FR, FI = np.meshgrid(fr, fi, indexing="ij")
    seeds = np.concatenate([seeds, (FR + 1j * FI).ravel()])
    if refine:
        with np.errstate(all="ignore"):
            F, _ = loop_residual(ctx, Z)
        mag = np.where(np.isfinite(F), np.abs(F), np.inf)
        minima = (mag == ndimage.minimum_filter(mag, size=3, mode="nearest")) & np.isfinite(mag)
        offs = np.linspace(-0.4, 0.4, 5) * step
        block = (offs[:, None] + 1j * offs[None, :]).ravel()
        extra = (Z[minima][:, None] + block[None, :]).ravel()
        seeds = np.concatenate([seeds, extra])
    with np.errstate(all="ignore"):
        lam, ok = newton_polish(ctx, seeds)
    lam = lam[ok]
    lam = np.where(lam.imag < 0, lam.conj(), lam)
    keep = ((lam.real > -ctx.params.mu) & (lam.real >= re0) & (lam.real <= re1)
            & (lam.imag <= im1))
    lam = _dedup(lam[keep], dedup_tol)
    if len(lam):
        lam = lam[np.argsort(-lam.real, kind="stable")]
    # snap numerically real roots onto the axis
    lam = np.where(np.abs(lam.imag) < 1e-12, lam.real + 0j, lam)
    with np.errstate(all="ignore"):
        res = _relative_residual(ctx, lam) if len(lam) else np.zeros(0)
        der = char_fn_deriv(ctx, lam) if len(lam) else np.zeros(0, dtype=complex)
    return RootSet(ctx.D, lam, np.atleast_1d(res), np.atleast_1d(der), tuple(box))


def max_real_part(ctx: CharacteristicContext, **kwargs) -> float:
    """Largest real part of the zeros of ``R``; ``-inf`` if there are none."""
    return find_roots(ctx, **kwargs).max_real


def _dpsi_dD(params: ModelParams, D: float):
    """Loop transfer ``Psi = Phi / T`` at ``lambda = 0`` and ``dPsi/dD``."""
    ctx = CharacteristicContext(D, 0.0, 0.0, params)
    s, t, phi, dphi, T, _ = _scaled_pieces(ctx, 0.0)
    dt_dD = -t / (2.0 * D)
    st, ct = shs(t), chs(t)
    dT_dD = s * t / 2.0 * (st ** 2 - 2.0 * t * st * ct)
    psi = phi / T
    dpsi = (dphi * dt_dD * T - phi * dT_dD) / T ** 2
    return float(np.real(psi)), float(np.real(dpsi))


def dpstar_dD(params: ModelParams, D: float, p_at_gene: float | None = None) -> float:
    """Derivative of the gene-site stationary level with respect to ``D``.

    Implicit differentiation of ``p = c(D) f(p)`` gives
    ``dp/dD = c'(D) f(p) / (1 - c f'(p))``, where
    ``1 - c f'(p) = (1 + (h + 1) p**h) / (1 + p**h)``.
    """
    if p_at_gene is None:
        p_at_gene = solve_p_at_gene(params, D)
    _, dpsi = _dpsi_dD(params, D)
    p = p_at_gene
    u = p ** params.h
    f = 1.0 / (1.0 + u)
    return params.gain * dpsi * f * (1.0 + u) / (1.0 + (params.h + 1.0) * u)


@dataclass(frozen=True)
class TransversalityData:
    """Speed of an eigenvalue with respect to ``D``."""

    dlambda_dD: complex
    dpstar_dD: float
    R_prime: complex
    R_D: complex


def dlambda_dD(ctx: CharacteristicContext, lam) -> TransversalityData:
    """``dlambda/dD = -(dR/dD) / R'(lambda)`` at a simple zero.

    Raises
    ------
    SimplicityError
        If ``|R'(lambda)| < 1e-10``.
    """
    lam = complex(lam)
    dp = dpstar_dD(ctx.params, ctx.D, ctx.p_at_gene)
    rp = complex(char_fn_deriv(ctx, lam))
    if not abs(rp) >= 1e-10:
        raise SimplicityError(f"R'(lambda) = {rp} vanishes; eigenvalue not simple")
    rd = complex(char_fn_dD(ctx, lam, dpdD=dp))
    return TransversalityData(-rd / rp, dp, rp, rd)


def write_roots_csv(path, rootsets) -> None:
    """Write ``D,re_lambda,im_lambda,residual,re_Rprime,im_Rprime`` rows."""
    from .io import write_csv
    rows = []
    for rs in rootsets:
        for lam, res, der in zip(rs.roots, rs.residuals, rs.derivatives):
            rows.append((rs.D, lam.real, lam.imag, res, der.real, der.imag))
    write_csv(path, ("D", "re_lambda", "im_lambda", "residual", "re_Rprime", "im_Rprime"), rows)
