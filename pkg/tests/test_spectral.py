import math

import numpy as np
import pytest

import oracles
import shared
from grnhopf import (CharacteristicContext, ConfigurationError, SimplicityError,
                     SingularKernelError, char_fn, char_fn_deriv, dlambda_dD, dpstar_dD,
                     find_roots, max_real_part, solve_p_at_gene)
from grnhopf import spectral
from grnhopf.spectral import char_fn_dD, char_fn_terms, newton_polish, write_roots_csv

P = shared.params()
D1, W1 = 3.1171090272437e-4, 0.0176411537350862
D2, W2 = 7.884711951131778e-3, 0.051234592503328


def ctx_at(D):
    return CharacteristicContext.create(P, D)


def rel_residual(ctx, lam, branch=1):
    t1, t2 = char_fn_terms(ctx, lam, branch)
    return abs(t1 - t2) / max(abs(t1), abs(t2))


def random_lams(seed, n=20, D=1.0):
    # keep |theta| below ~300 so the unscaled R stays representable
    r = min(2.0, 300.0 ** 2 * D / 2)
    rng = np.random.default_rng(seed)
    return rng.uniform(-0.5 * P.mu, r, n) + 1j * rng.uniform(-r, r, n)


def test_context():
    ctx = ctx_at(1e-3)
    assert ctx.p_at_gene == solve_p_at_gene(P, 1e-3)
    assert ctx.loop_gain < 0
    with pytest.raises(ConfigurationError):
        ctx_at(0.0)


@pytest.mark.parametrize("D, w", [(D1, W1), (D2, W2)])
def test_residual_at_computed_critical_points(D, w):
    assert rel_residual(ctx_at(D), 1j * w) < 1e-8


@pytest.mark.parametrize("D, w", [(3.117109e-4, 0.0176411537), (7.884712e-3, 0.0512345925)])
def test_residual_at_reference_values(D, w):
    # the reference digits are rounded; bound |R| by the rounding half-units
    ctx = ctx_at(D)
    lam = 1j * w
    t1, t2 = char_fn_terms(ctx, lam)
    half_D = 0.5 * 10 ** (math.floor(math.log10(D)) - 6)
    half_w = 5e-11
    bound = abs(char_fn_deriv(ctx, lam)) * half_w + abs(char_fn_dD(ctx, lam)) * half_D
    assert abs(t1 - t2) <= bound
    assert abs(t1 - t2) / max(abs(t1), abs(t2)) < 1e-6


@pytest.mark.parametrize("D", [D1, 1e-3, D2])
def test_conjugate_symmetry(D):
    ctx = ctx_at(D)
    lam = random_lams(1)
    r = char_fn(ctx, lam)
    scale = np.maximum(*map(np.abs, char_fn_terms(ctx, lam)))
    assert np.max(np.abs(char_fn(ctx, lam.conj()) - r.conj()) / scale) < 1e-12


@pytest.mark.parametrize("D", [D1, 1e-3, D2, 1e-6])
def test_branch_invariance(D):
    ctx = ctx_at(D)
    lam = random_lams(2, D=D)
    t1p, t2p = char_fn_terms(ctx, lam, 1)
    t1m, t2m = char_fn_terms(ctx, lam, -1)
    # R is odd in theta, its normalized form and its zeros are not affected
    scale = np.maximum(np.abs(t1p), np.abs(t2p))
    assert np.max(np.abs((t1m - t2m) + (t1p - t2p)) / scale) < 1e-12
    assert np.max(np.abs(t1m / t2m - t1p / t2p)) < 1e-12


@pytest.mark.parametrize("D", [D1, 1e-3, D2])
def test_derivative_vs_finite_differences(D):
    ctx = ctx_at(D)
    h = 1e-6
    for lam in random_lams(3):
        exact = char_fn_deriv(ctx, lam)
        fd = oracles.fd_derivative(lambda z: char_fn(ctx, z), lam, h)
        fdi = oracles.fd_derivative(lambda z: char_fn(ctx, lam + 1j * (z - lam)), lam, h) / 1j
        assert abs(exact - fd) <= 1e-5 * abs(exact)
        assert abs(exact - fdi) <= 1e-5 * abs(exact)


@pytest.mark.parametrize("D", [D1, 1e-3, D2])
def test_dD_vs_finite_differences(D):
    # partial derivative at fixed lambda, including the dependence through p_g
    lam = 0.01 + 0.03j
    h = D * 1e-5
    fd = oracles.fd_derivative(lambda d: char_fn(ctx_at(d), lam), D, h)
    assert char_fn_dD(ctx_at(D), lam) == pytest.approx(fd, rel=1e-6)


def test_singular_point():
    with pytest.raises(SingularKernelError):
        char_fn(ctx_at(1e-3), -P.mu)


def test_roots_at_first_critical_point():
    rs = find_roots(ctx_at(D1))
    assert len(rs) > 0
    assert np.all(rs.roots.imag >= 0)
    top = rs.roots[0]
    assert abs(top.real) < 1e-8 and top.imag == pytest.approx(W1, rel=1e-10)
    assert np.all(rs.roots[1:].real < -1e-8)
    assert np.all(rs.residuals < 1e-10)
    d = np.abs(rs.roots[:, None] - rs.roots[None, :]) + np.eye(len(rs))
    assert d.min() > 1e-6
    assert np.all(rs.roots.real > -P.mu)
    for lam, der in zip(rs.roots, rs.derivatives):
        assert rel_residual(rs_ctx := ctx_at(D1), lam, -1) < 1e-10
        assert rel_residual(rs_ctx, np.conj(lam)) == pytest.approx(rel_residual(rs_ctx, lam),
                                                                    rel=1e-6, abs=1e-14)
        assert der == pytest.approx(char_fn_deriv(rs_ctx, lam), rel=1e-12)


def test_stability_windows():
    assert max_real_part(ctx_at(1e-4)) < 0
    rs = find_roots(ctx_at(1e-3))
    assert rs.max_real > 0
    assert np.count_nonzero(rs.roots.real > 0) == 1
    assert max_real_part(ctx_at(5e-2)) < 0


def test_seed_refinement_changes_no_roots():
    ctx = ctx_at(1e-3)
    a = find_roots(ctx, step=0.25).roots
    b = find_roots(ctx, step=0.1).roots
    assert len(a) == len(b)
    assert np.max(np.abs(np.sort_complex(a) - np.sort_complex(b))) < 1e-9


def test_empty_root_set_is_valid():
    rs = find_roots(ctx_at(1e-3), box=(30.0, 31.0, 30.0, 31.0), refine=False)
    # nothing in a box far from the spectrum apart from the fine patch seeds
    assert all(30.0 <= z.real <= 31.0 for z in rs.roots)


@pytest.mark.slow
def test_sign_structure():
    for D in np.geomspace(1e-7, 0.1, 40):
        m = max_real_part(ctx_at(float(D)))
        if D < D1:
            assert m < 0, D
        elif D < D2:
            assert m > 0, D
        else:
            assert m < 0, D


@pytest.mark.parametrize("D", [1e-3, D1, D2, 1e-6, 0.05])
def test_dpstar_dD(D):
    exact = dpstar_dD(P, D)
    fd = oracles.fd_derivative(lambda d: solve_p_at_gene(P, d), D, D * 1e-6)
    assert exact == pytest.approx(fd, rel=1e-4)
    # l = 1/2 explicit route: differentiate the explicit coefficient numerically
    th = math.sqrt(P.mu / D)
    coef = lambda d: (lambda t: P.gain / 4 * math.cosh(t * P.x_M) ** 2 * (t + math.sinh(t))  # noqa: E731
                      / (P.mu * d * t * math.sinh(t) ** 2))(math.sqrt(P.mu / d))
    if th < 30:
        pg = solve_p_at_gene(P, D)
        u = pg ** P.h
        dc = oracles.fd_derivative(coef, D, D * 1e-5)
        assert exact == pytest.approx(dc * (1 + u) / (1 + (P.h + 1) * u) / (1 + u), rel=1e-6)


def _tracked(D, lam0):
    lam, ok = newton_polish(ctx_at(D), [lam0])
    assert ok[0]
    return complex(lam[0])


@pytest.mark.parametrize("D, lam0", [(D1, 1j * W1), (D2, 1j * W2), (1e-3, None)])
def test_dlambda_dD_vs_root_tracking(D, lam0):
    if lam0 is None:
        lam0 = find_roots(ctx_at(D)).roots[0]
    td = dlambda_dD(ctx_at(D), lam0)
    h = D * 1e-5
    fd = (_tracked(D + h, lam0) - _tracked(D - h, lam0)) / (2 * h)
    assert abs(td.dlambda_dD - fd) <= 1e-3 * abs(fd)
    assert td.dpstar_dD == pytest.approx(dpstar_dD(P, D), rel=1e-14)


def test_simplicity_error(monkeypatch):
    monkeypatch.setattr(spectral, "char_fn_deriv", lambda ctx, lam, branch=1: 0j)
    with pytest.raises(SimplicityError):
        spectral.dlambda_dD(ctx_at(D1), 1j * W1)


def test_roots_csv(tmp_path):
    rs = find_roots(ctx_at(1e-3))
    path = tmp_path / "roots.csv"
    write_roots_csv(path, [rs])
    lines = path.read_text().splitlines()
    assert lines[0] == "D,re_lambda,im_lambda,residual,re_Rprime,im_Rprime"
    assert len(lines) == len(rs) + 1
    assert complex(*map(float, lines[1].split(",")[1:3])) == rs.roots[0]
