"""Hopf points, normal-form coefficients and the amplitude equation.

Near a critical diffusion coefficient ``D_c`` with eigenvalue ``i omega``,
``D = D_c + nu * delta**2`` and solutions look like
``stationary + delta * (A(T) exp(i omega t) xi + c.c.)`` with slow time
``T = delta**2 t`` and::

    dA/dT = a nu A + b A |A|**2

The linear coefficient ``a`` is identified with ``dlambda/dD`` at the
critical point.  The cubic coefficient ``b`` is evaluated in the point-source
limit, with the eigenfunction normalized so that its protein component is 1
at the gene site.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import (BracketError, ConfigurationError, ConvergenceError,
                     DegenerateResonanceError)
from .greens import KernelContext, green, green_product_integral
from .grid import SpatialGrid
from .model import ModelParams, hill_derivs
from .quadrature import simpson_split
from .simulator import ConcentrationState, classify, simulate
from .spectral import (CharacteristicContext, dlambda_dD, find_roots,
                       newton_polish)
from .steady import solve_eps_fixed_point

__all__ = [
    "HopfPoint",
    "NormalFormIntermediates",
    "AmplitudeParams",
    "AmplitudeCheck",
    "find_critical",
    "normal_form_intermediates",
    "eigenfunction",
    "adjoint_eigenfunction",
    "hopf_coefficient_b",
    "analyze_hopf",
    "amplitude_evolve",
    "predict_vs_simulate",
    "hopf_report",
    "write_amplitude_csv",
]

DEFAULT_BRACKETS = ((1e-4, 1e-3), (5e-3, 2e-2))


@dataclass(frozen=True)
class HopfPoint:
    """A crossing of a simple complex pair through the imaginary axis.

    ``a`` equals ``dlambda_dD``.  ``nu`` is the sign of ``Re a``, so that
    ``Re(a nu) > 0`` on the side ``D = D_c + nu delta**2`` where the
    stationary state is unstable.  ``b`` and ``classification`` are filled in
    by :func:`analyze_hopf`.
    """

    j: int
    D_c: float
    omega_c: float
    re_lambda: float
    dlambda_dD: complex
    R_prime: complex
    nu: int
    b: complex | None = None
    classification: str | None = None

    @property
    def a(self) -> complex:
        return self.dlambda_dD

    @property
    def period(self) -> float:
        return 2.0 * math.pi / self.omega_c


@dataclass(frozen=True)
class NormalFormIntermediates:
    """Point values entering the cubic coefficient.

    Attributes
    ----------
    G1_at_xM, G2_at_xM
        Loop transfer at shifts ``mu + 2 i omega`` and ``mu``.
    w2_at_xM, wtilde2_at_xM
        Protein components at the gene site of the second-harmonic and
        mean-field corrections.
    xi1_star_at_xM
        mRNA component of the normalized adjoint eigenfunction at ``x_M``.
    normalization
        ``int_0^1 xi_m xi_p dx`` for the direct eigenfunction.
    """

    p_at_gene: float
    f1: float
    f2: float
    f3: float
    G1_at_xM: complex
    G2_at_xM: float
    w2_at_xM: complex
    wtilde2_at_xM: float
    xi1_star_at_xM: complex
    normalization: complex


@dataclass(frozen=True)
class AmplitudeParams:
    """Coefficients of the amplitude equation and, optionally, a solution."""

    a: complex
    b: complex
    nu: int
    A0: complex = 0.1
    T: np.ndarray | None = None
    A: np.ndarray | None = None
    diverged: bool = False

    @property
    def equilibrium_amplitude(self) -> float | None:
        """``sqrt(-Re(a nu) / Re(b))`` when positive, else ``None``."""
        val = -(self.a * self.nu).real / self.b.real if self.b.real != 0 else -1.0
        return math.sqrt(val) if val > 0 else None


def _track(params, D, lam_guess):
    ctx = CharacteristicContext.create(params, D)
    lam, ok = newton_polish(ctx, [lam_guess])
    if ok[0] and lam[0].imag > 0:
        return ctx, complex(lam[0])
    rs = find_roots(ctx)
    if not len(rs):
        return ctx, None
    return ctx, complex(rs.roots[0])


def find_critical(params: ModelParams, bracket, j: int | None = None,
                  rel_tol: float = 1e-12) -> HopfPoint:
    """Locate a sign change of the largest eigenvalue real part in ``D``.

    The end points are examined with a full root search.  Inside the bracket
    the leading eigenvalue is followed by Newton continuation and the bracket
    is bisected geometrically until its relative width drops below
    ``rel_tol``.

    Parameters
    ----------
    bracket : (float, float)
        ``D_lo < D_hi``; the largest real part must change sign between them.
    j : int, optional
        Label stored in the result; defaults to 1 for a loss of stability
        with increasing ``D`` and 2 for a regain.

    Raises
    ------
    BracketError
        If there is no sign change.
    """
    lo, hi = (float(v) for v in bracket)
    if not (0 < lo < hi):
        raise ConfigurationError(f"invalid bracket {bracket!r}")
    rs_lo = find_roots(CharacteristicContext.create(params, lo))
    rs_hi = find_roots(CharacteristicContext.create(params, hi))
    s_lo, s_hi = rs_lo.max_real > 0, rs_hi.max_real > 0
    if s_lo == s_hi:
        raise BracketError(
            f"no change of stability in [{lo:g}, {hi:g}] "
            f"(max Re lambda: {rs_lo.max_real:.3g}, {rs_hi.max_real:.3g})")
    lam = complex((rs_lo if s_lo else rs_hi).roots[0])
    for _ in range(200):
        if hi - lo <= rel_tol * lo:
            break
        mid = math.sqrt(lo * hi)
        _, lam_mid = _track(params, mid, lam)
        unstable = lam_mid is not None and lam_mid.real > 0
        if lam_mid is not None:
            lam = lam_mid
        if unstable == s_lo:
            lo = mid
        else:
            hi = mid
    D_c = math.sqrt(lo * hi)
    ctx, lam = _track(params, D_c, lam)
    if lam is None:
        raise ConvergenceError("lost the critical eigenvalue during bisection")
    rs = find_roots(ctx)
    others = [r for r in rs.roots if abs(r - lam) > 1e-6]
    if others and max(r.real for r in others) > 1e-8:
        raise ConvergenceError("another eigenvalue has positive real part at the crossing")
    tv = dlambda_dD(ctx, lam)
    nu = 1 if tv.dlambda_dD.real > 0 else -1
    if j is None:
        j = 1 if nu > 0 else 2
    return HopfPoint(j, D_c, lam.imag, lam.real, tv.dlambda_dD, tv.R_prime, nu)


def eigenfunction(params: ModelParams, hopf: HopfPoint, x):
    """Critical eigenfunction ``(xi_m, xi_p)`` with ``xi_p(x_M) = 1``."""
    D = hopf.D_c
    ctx = CharacteristicContext.create(params, D)
    lam = complex(hopf.re_lambda, hopf.omega_c)
    s = params.mu + lam
    f1 = ctx.fprime_at_gene
    xi_m = params.alpha_m * f1 * green(KernelContext.create(D, s), x, params.x_M)
    xi_p = params.gain * f1 * green_product_integral(x, D, s, params.x_M, params.l)
    return xi_m, xi_p


def adjoint_eigenfunction(params: ModelParams, hopf: HopfPoint, x, xi1_star_at_xM=1.0):
    """Adjoint eigenfunction for ``conj(lambda)`` with prescribed value at ``x_M``.

    Solves the adjoint equations by their own Green's representation:
    ``xi*_p = alpha_m f' xi*_m(x_M) G(x, x_M)`` and
    ``xi*_m = alpha_p int_l^1 G(x, y) xi*_p(y) dy``, with shift
    ``mu + conj(lambda)``.
    """
    D = hopf.D_c
    ctx = CharacteristicContext.create(params, D)
    s = params.mu + complex(hopf.re_lambda, -hopf.omega_c)
    f1 = ctx.fprime_at_gene
    star_p = params.alpha_m * f1 * xi1_star_at_xM * green(KernelContext.create(D, s), x, params.x_M)
    star_m = (params.gain * f1 * xi1_star_at_xM
              * green_product_integral(x, D, s, params.x_M, params.l))
    return star_m, star_p


def normal_form_intermediates(params: ModelParams, hopf: HopfPoint,
                              panels: int = 10_000, min_denominator: float = 1e-8
                              ) -> NormalFormIntermediates:
    """Gene-site values of the second-order corrections and the adjoint scale.

    The second-order corrections solve linear problems forced at ``x_M``;
    their protein components at the gene site are
    ``w2 = (alpha_m alpha_p f''/2) G1 / (1 - alpha_m alpha_p f' G1)`` and
    ``wt2 = alpha_m alpha_p f'' G2 / (1 - alpha_m alpha_p f' G2)``.

    The conjugated adjoint eigenfunction equals the direct one with its
    components swapped, times a constant ``c``; ``<xi, xi*> = 1`` then gives
    ``c = 1 / (2 int xi_m xi_p dx)``, and ``conj(xi*_m(x_M)) = c``.  The
    integral is evaluated by composite Simpson split at ``x_M`` and ``l``.

    Raises
    ------
    DegenerateResonanceError
        If ``|1 - alpha_m alpha_p f' G|`` is below ``min_denominator`` for
        either shift, i.e. ``2 i omega`` or 0 is an eigenvalue.
    """
    D = hopf.D_c
    ctx = CharacteristicContext.create(params, D)
    pg = ctx.p_at_gene
    f1, f2, f3 = hill_derivs(pg, params.h)
    lam = complex(hopf.re_lambda, hopf.omega_c)
    K = params.gain * f1
    G1 = complex(green_product_integral(params.x_M, D, params.mu + 2.0 * lam, params.x_M, params.l))
    G2 = float(green_product_integral(params.x_M, D, params.mu, params.x_M, params.l))
    d1, d2 = 1.0 - K * G1, 1.0 - K * G2
    if abs(d1) < min_denominator or abs(d2) < min_denominator:
        raise DegenerateResonanceError(
            f"resolvent denominators {abs(d1):.3g}, {abs(d2):.3g} are near zero")
    w2 = 0.5 * params.gain * f2 * G1 / d1
    wt2 = params.gain * f2 * G2 / d2

    def integrand(x):
        xm, xp = eigenfunction(params, hopf, x)
        return xm * xp

    norm = complex(simpson_split(integrand, 0.0, 1.0, (params.x_M, params.l), panels))
    c = 1.0 / (2.0 * norm)
    return NormalFormIntermediates(pg, f1, f2, f3, G1, G2, w2, wt2, c.conjugate(), norm)


def hopf_coefficient_b(params: ModelParams, hopf: HopfPoint,
                       intermediates: NormalFormIntermediates) -> complex:
    """Cubic coefficient ``b = alpha_m (f'' (w2 + wt2) + f'''/2) conj(xi*_m(x_M))``."""
    nf = intermediates
    return complex(params.alpha_m * (nf.f2 * (nf.w2_at_xM + nf.wtilde2_at_xM) + 0.5 * nf.f3)
                   * nf.xi1_star_at_xM.conjugate())


def analyze_hopf(params: ModelParams, bracket, j: int | None = None) -> HopfPoint:
    """:func:`find_critical` followed by the cubic coefficient and its sign."""
    hp = find_critical(params, bracket, j)
    nf = normal_form_intermediates(params, hp)
    b = hopf_coefficient_b(params, hp, nf)
    return replace(hp, b=b, classification="supercritical" if b.real < 0 else "subcritical")


def _rhs(a_nu, b, A):
    return a_nu * A + b * A * abs(A) ** 2


def amplitude_evolve(ap: AmplitudeParams, T_end: float, dT: float,
                     blowup: float = 1e6) -> AmplitudeParams:
    """Integrate the amplitude equation with the classical Runge-Kutta scheme.

    Integration stops early, with ``diverged=True``, once ``|A|`` exceeds
    ``blowup``.

    Raises
    ------
    ConfigurationError
        If ``|a nu| dT >= 0.1`` or the arguments are not positive.
    """
    a_nu = ap.a * ap.nu
    if not (T_end > 0 and dT > 0):
        raise ConfigurationError("T_end and dT must be positive")
    if abs(a_nu) * dT >= 0.1:
        raise ConfigurationError(f"step too large: |a nu| dT = {abs(a_nu) * dT:.3g} >= 0.1")
    n = int(math.ceil(T_end / dT - 1e-9))
    T = np.empty(n + 1)
    A = np.empty(n + 1, dtype=complex)
    T[0], A[0] = 0.0, complex(ap.A0)
    y = complex(ap.A0)
    diverged = False
    k = 0
    for k in range(1, n + 1):
        k1 = _rhs(a_nu, ap.b, y)
        k2 = _rhs(a_nu, ap.b, y + 0.5 * dT * k1)
        k3 = _rhs(a_nu, ap.b, y + 0.5 * dT * k2)
        k4 = _rhs(a_nu, ap.b, y + dT * k3)
        y = y + dT / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        T[k], A[k] = k * dT, y
        if not abs(y) <= blowup:
            diverged = True
            break
    else:
        k = n
    return replace(ap, T=T[:k + 1], A=A[:k + 1], diverged=diverged)


@dataclass(frozen=True)
class AmplitudeCheck:
    """Simulated oscillation amplitudes against the square-root law."""

    offsets: tuple
    D_above: tuple
    amplitudes: tuple
    periods: tuple
    exponent: float
    predicted_period: float
    below_kinds: tuple
    predicted_amplitudes: tuple = field(default=())

    @property
    def period_error(self) -> float:
        per = [p for p in self.periods if p]
        if not per:
            return math.inf
        return abs(per[0] - self.predicted_period) / self.predicted_period


def predict_vs_simulate(params: ModelParams, hopf: HopfPoint, offsets=None,
                        grid: SpatialGrid | None = None, t_end: float = 3e4,
                        window: float = 4e3, kick: float = 1.1,
                        check_below: bool = True) -> AmplitudeCheck:
    """Compare simulated limit cycles near ``D_c`` with the weakly nonlinear law.

    For each ``delta**2`` in ``offsets`` the PDE is integrated at
    ``D_c + nu delta**2`` from the discrete stationary state with ``p``
    scaled by ``kick``.  The oscillation amplitude of ``P(t)`` (half the
    peak-to-peak range over the final ``window``) is fitted against
    ``delta**2`` on log-log axes; the square-root law predicts slope 1/2.
    Runs at ``D_c - nu delta**2`` must decay back to the steady state.

    Parameters
    ----------
    offsets : sequence of float
        Values of ``delta**2``; default ``(0.01, 0.02, 0.04) * D_c``.
    grid : SpatialGrid
        Defaults to 1001 nodes.
    """
    grid = grid or SpatialGrid(1001)
    if offsets is None:
        offsets = tuple(f * hopf.D_c for f in (0.01, 0.02, 0.04))
    offsets = tuple(float(o) for o in offsets)
    if any(o <= 0 or o > 0.1 * hopf.D_c for o in offsets):
        raise ConfigurationError("offsets must lie in (0, 0.1 D_c]")
    nf = normal_form_intermediates(params, hopf) if hopf.b is None else None
    b = hopf.b if hopf.b is not None else hopf_coefficient_b(params, hopf, nf)
    ap = AmplitudeParams(hopf.a, b, hopf.nu)
    r_eq = ap.equilibrium_amplitude
    xs = grid.x
    xi_p = eigenfunction(params, hopf, xs)[1]
    weight = abs(grid.integrate(xi_p))

    def run(D):
        st = solve_eps_fixed_point(params, D, grid)
        init = ConcentrationState(0.0, st.m_profile.copy(), kick * st.p_profile)
        return simulate(params, D, t_end, grid, sample_every=1.0, initial=init)

    amps, periods, D_above, predicted = [], [], [], []
    n_win = int(round(window))
    for off in offsets:
        D = hopf.D_c + hopf.nu * off
        tr = run(D)
        tail = tr.P[-n_win:]
        amps.append(0.5 * float(np.max(tail) - np.min(tail)))
        cls = classify(tr, window / t_end)
        periods.append(cls.period)
        D_above.append(D)
        predicted.append(2.0 * math.sqrt(off) * r_eq * weight if r_eq else math.nan)
    slope = float(np.polyfit(np.log(offsets), np.log(amps), 1)[0])
    below = []
    if check_below:
        for off in offsets:
            below.append(classify(run(hopf.D_c - hopf.nu * off)).kind)
    return AmplitudeCheck(offsets, tuple(D_above), tuple(amps), tuple(periods), slope,
                          hopf.period, tuple(below), tuple(predicted))


def hopf_report(hp: HopfPoint) -> dict:
    """JSON-ready summary with a fixed key order."""
    a = hp.dlambda_dD
    b = hp.b if hp.b is not None else complex("nan")
    return {
        "j": int(hp.j),
        "D_c": hp.D_c,
        "omega_c": hp.omega_c,
        "period": hp.period,
        "dlambda_dD_re": a.real,
        "dlambda_dD_im": a.imag,
        "b_re": b.real,
        "b_im": b.imag,
        "classification": hp.classification,
    }


def write_amplitude_csv(path, ap: AmplitudeParams) -> None:
    from .io import write_csv
    write_csv(path, ("T", "re_A", "im_A", "abs_A"),
              ((t, a.real, a.imag, abs(a)) for t, a in zip(ap.T, ap.A)))
