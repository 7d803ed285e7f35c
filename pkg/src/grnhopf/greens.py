"""Neumann Green's function of ``D u'' - s u`` on the unit interval.

For a shift ``s`` (``mu`` for the stationary problem, ``mu + lambda`` for the
spectral problem) and ``theta = sqrt(s / D)`` the kernel is::

    G(y, x) = cosh(theta * min(x, y)) * cosh(theta * (1 - max(x, y)))
              / (D * theta * sinh(theta))

It is even in ``theta``, so the choice of square-root branch does not matter.
For ``|theta| > 30`` the hyperbolic functions are evaluated in scaled form,
``cosh(z) = exp(z) * chs(z)`` with ``chs(z) = (1 + exp(-2 z)) / 2``, and the
exponentials are combined before evaluation so that nothing overflows.
"""

from __future__ import annotations

import cmath
import itertools
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, SingularKernelError

__all__ = [
    "principal_sqrt",
    "KernelContext",
    "green",
    "chs",
    "shs",
    "green_product_integral",
    "SCALED_THRESHOLD",
    "SINGULAR_TOL",
]

SCALED_THRESHOLD = 30.0
SINGULAR_TOL = 1e-14


def principal_sqrt(z) -> complex:
    """Square root with non-negative real part.

    On the imaginary axis the root with non-negative imaginary part is
    returned.  ``z = 0`` returns 0 and emits a :class:`RuntimeWarning`.
    """
    z = complex(z)
    if z == 0:
        warnings.warn("principal_sqrt of zero", RuntimeWarning, stacklevel=2)
        return 0j
    w = cmath.sqrt(z)
    if w.real < 0 or (w.real == 0 and w.imag < 0):
        w = -w
    return w


def chs(z):
    """Scaled cosh, ``cosh(z) * exp(-z)``; bounded for ``Re z >= 0``."""
    return 0.5 * (1.0 + np.exp(-2.0 * z))


def shs(z):
    """Scaled sinh, ``sinh(z) * exp(-z)``; accurate near ``z = 0``."""
    return -0.5 * np.expm1(-2.0 * z)


@dataclass(frozen=True)
class KernelContext:
    """Diffusion coefficient, shift and the associated ``theta``.

    Use :meth:`create` to compute ``theta`` from ``shift`` and ``D``.  Passing
    ``branch=-1`` selects the other square root; every quantity built on the
    kernel is invariant under that choice.
    """

    D: float
    shift: complex
    theta: complex

    @classmethod
    def create(cls, D: float, shift, branch: int = 1) -> "KernelContext":
        if not D > 0:
            raise ConfigurationError(f"D must be positive, got {D!r}")
        shift = complex(shift)
        if shift == 0:
            raise SingularKernelError("shift = 0 (lambda = -mu) has no Green's function")
        theta = principal_sqrt(shift / D)
        return cls(float(D), shift, theta if branch >= 0 else -theta)

    @property
    def theta_principal(self) -> complex:
        t = self.theta
        return -t if (t.real < 0 or (t.real == 0 and t.imag < 0)) else t


def green(ctx: KernelContext, y, x):
    """Evaluate ``G(y, x)`` for the shift stored in ``ctx``.

    Parameters
    ----------
    ctx : KernelContext
    y, x : float or array_like
        Points of the unit interval; broadcast against each other.

    Returns
    -------
    complex or ndarray
        Kernel values.  Real shifts give real output.

    Raises
    ------
    SingularKernelError
        If ``|sinh(theta)| < 1e-14``, i.e. the shift is a Neumann eigenvalue.
    """
    y = np.asarray(y, dtype=float)
    x = np.asarray(x, dtype=float)
    lo = np.minimum(x, y)
    hi = np.maximum(x, y)
    theta = ctx.theta
    if abs(theta) <= SCALED_THRESHOLD:
        sh = np.sinh(theta)
        if abs(sh) < SINGULAR_TOL:
            raise SingularKernelError(f"|sinh(theta)| < {SINGULAR_TOL} for theta={theta}")
        out = np.cosh(theta * lo) * np.cosh(theta * (1.0 - hi)) / (ctx.D * theta * sh)
    else:
        t = ctx.theta_principal
        out = (np.exp(-t * (hi - lo)) * chs(t * lo) * chs(t * (1.0 - hi))
               / (ctx.D * t * shs(t)))
    if np.isrealobj(ctx.shift) or ctx.shift.imag == 0:
        out = np.real(out)
    if out.ndim == 0:
        return out.item()
    return out


def _exp_integral(t, alpha, beta, a, b):
    """Integral of ``exp(t * (alpha + beta * y))`` over ``[a, b]`` (arrays).

    The exponential is anchored at the endpoint with the larger exponent so
    the result never overflows when that exponent is non-positive.
    """
    width = b - a
    if beta == 0:
        return np.exp(t * alpha) * width
    if beta > 0:
        return -np.exp(t * (alpha + beta * b)) * np.expm1(-t * beta * width) / (t * beta)
    return np.exp(t * (alpha + beta * a)) * np.expm1(t * beta * width) / (t * beta)


def green_product_integral(x, D: float, shift, x_M: float, l: float):
    """Closed form of ``int_l^1 G(x, y) G(y, x_M) dy``.

    This is the response at ``x`` of the two-stage cascade: a point source at
    ``x_M`` diffuses, is converted on ``[l, 1]`` and diffuses again.  With
    ``x = x_M`` it is the loop transfer function that enters the stationary
    equation and the characteristic function.

    Parameters
    ----------
    x : float or array_like
        Evaluation points.
    D : float
        Diffusion coefficient.
    shift : complex
        Kernel shift ``s``; must not be 0.
    x_M, l : float
        Source position and lower end of the conversion region, ``x_M < l``.

    Notes
    -----
    Each product of four ``cosh`` factors is expanded into 16 exponentials
    whose exponents are linear in the integration variable; each is
    integrated exactly.  Combined with the factor ``1/sinh(theta)**2`` every
    exponent has non-positive real part on its integration range, so the
    formula is stable from ``theta ~ 1e-2`` up to ``theta ~ 1e3`` and beyond.
    """
    ctx = KernelContext.create(D, shift)
    t = ctx.theta
    if abs(t) <= SCALED_THRESHOLD and abs(np.sinh(t)) < SINGULAR_TOL:
        raise SingularKernelError(f"|sinh(theta)| < {SINGULAR_TOL} for theta={t}")
    xs = np.asarray(x, dtype=float)
    X = np.maximum(xs, l)
    total = np.zeros(xs.shape, dtype=complex)
    signs = list(itertools.product((1, -1), repeat=4))
    # y in [l, x] (only for x > l): cosh(ty) cosh(t(1-x)) cosh(t x_M) cosh(t(1-y))
    inner = xs > l
    if np.any(inner):
        xa = xs[inner]
        part = np.zeros(xa.shape, dtype=complex)
        for s1, s2, s3, s4 in signs:
            alpha = s2 * (1.0 - xa) + s3 * x_M + s4 - 2.0
            part += _exp_integral(t, alpha, s1 - s4, l, xa)
        total[inner] = part
    # y in [max(x, l), 1]: cosh(t x) cosh(t x_M) cosh(t(1-y))**2
    for s1, s2, s3, s4 in signs:
        alpha = s1 * xs + s2 * x_M + (s3 + s4) - 2.0
        total += _exp_integral(t, alpha, -(s3 + s4), X, 1.0)
    out = total / (16.0 * (t * D) ** 2 * shs(t) ** 2)
    if complex(shift).imag == 0:
        out = np.real(out)
    if out.ndim == 0:
        return out.item()
    return out
