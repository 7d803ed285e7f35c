import cmath
import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from grnhopf import KernelContext, SingularKernelError, green, principal_sqrt
from grnhopf.greens import green_product_integral
from grnhopf.quadrature import simpson_split

unit = st.floats(0.0, 1.0)


def test_principal_sqrt():
    assert principal_sqrt(4) == 2
    assert principal_sqrt(-1) == 1j
    assert principal_sqrt(-4 - 0j) == 2j
    with pytest.warns(RuntimeWarning):
        assert principal_sqrt(0) == 0


@given(st.complex_numbers(max_magnitude=1e6, allow_nan=False, allow_infinity=False))
def test_principal_sqrt_property(z):
    if z == 0:
        return
    w = principal_sqrt(z)
    assert abs(w * w - z) <= 1e-12 * abs(z)
    assert w.real >= 0
    if w.real == 0:
        assert w.imag >= 0


@settings(max_examples=50)
@given(unit, unit)
def test_symmetry(y, x):
    ctx = KernelContext.create(1e-3, 0.03 + 0.02j)
    assert green(ctx, y, x) == pytest.approx(green(ctx, x, y), rel=1e-14)


@pytest.mark.parametrize("D, shift", [(1e-3, 0.03), (1e-3, 0.03 + 0.5j), (1e-7, 0.03),
                                      (3e-4, 0.03 + 0.0176j), (10.0, 1.0 - 2.0j)])
def test_branch_invariance(D, shift):
    y = np.linspace(0, 1, 41)
    g1 = green(KernelContext.create(D, shift, 1), y, 0.1)
    g2 = green(KernelContext.create(D, shift, -1), y, 0.1)
    assert np.max(np.abs(g1 - g2)) <= 1e-14 * np.max(np.abs(g1))


def test_conjugate_symmetry_random_shifts():
    rng = np.random.default_rng(3)
    y = np.linspace(0, 1, 23)
    for _ in range(20):
        s = complex(rng.uniform(-0.02, 2.0), rng.uniform(-2.0, 2.0))
        D = 10 ** rng.uniform(-6, -1)
        a = green(KernelContext.create(D, s), y, 0.37)
        b = green(KernelContext.create(D, s.conjugate()), y, 0.37)
        assert np.max(np.abs(b - np.conj(a))) <= 1e-13 * np.max(np.abs(a))


@pytest.mark.parametrize("x", [0.0, 0.1, 0.5, 0.93])
def test_integral_is_inverse_decay_rate(x):
    # u = 1/mu solves D u'' - mu u = -1 with Neumann conditions
    ctx = KernelContext.create(1e-3, 0.03)
    val = simpson_split(lambda y: green(ctx, y, x), 0.0, 1.0, (x,))
    assert val == pytest.approx(1 / 0.03, rel=1e-8)


def test_finite_difference_residual():
    # D G_yy - s G = 0 away from the kink, with second-order error
    D, s, x = 1e-2, 0.03 + 0.2j, 0.4
    ctx = KernelContext.create(D, s)
    errs = []
    for n in (2501, 5001, 10001):
        y = np.linspace(0, 1, n)
        h = y[1] - y[0]
        g = green(ctx, y, x)
        res = D * (g[2:] - 2 * g[1:-1] + g[:-2]) / h ** 2 - s * g[1:-1]
        away = np.abs(y[1:-1] - x) > 2 * h
        errs.append(np.max(np.abs(res[away])) / np.max(np.abs(s * g)))
    assert errs[-1] < 1e-5
    assert errs[0] / errs[1] == pytest.approx(4, rel=0.05)
    # Neumann condition at both ends
    y = np.array([0.0, 1e-6, 1 - 1e-6, 1.0])
    g = green(ctx, y, x)
    assert abs(g[1] - g[0]) / 1e-6 < 1e-4 * abs(g[0])
    assert abs(g[3] - g[2]) / 1e-6 < 1e-4 * abs(g[3])


def test_jump_condition():
    # -D [G_y] at y = x equals 1
    D, s, x, d = 2e-3, 0.05 + 0.1j, 0.3, 1e-7
    ctx = KernelContext.create(D, s)
    left = (green(ctx, x - d, x) - green(ctx, x - 2 * d, x)) / d
    right = (green(ctx, x + 2 * d, x) - green(ctx, x + d, x)) / d
    assert D * (left - right) == pytest.approx(1.0, rel=1e-5)


def test_localization_large_theta():
    D = 0.03 / 50 ** 2
    ctx = KernelContext.create(D, 0.03)
    assert abs(ctx.theta - 50) < 1e-12
    assert green(ctx, 0.25, 0.75) < 1e-9 * green(ctx, 0.75, 0.75)


def test_scaled_and_direct_agree_near_threshold():
    y = np.linspace(0, 1, 101)
    for theta in (29.9, 30.1):
        D = 0.03 / theta ** 2
        ctx = KernelContext.create(D, 0.03)
        direct = np.cosh(theta * np.minimum(y, 0.2)) * np.cosh(theta * (1 - np.maximum(y, 0.2))) / (
            D * theta * np.sinh(theta))
        assert np.allclose(green(ctx, y, 0.2), direct, rtol=1e-12, atol=0)


def test_small_D_finite():
    ctx = KernelContext.create(1e-7, 0.03)
    g = green(ctx, np.linspace(0, 1, 11), 0.1)
    assert np.all(np.isfinite(g)) and np.all(g >= 0)


def test_singular_kernel():
    # theta = i pi gives sinh(theta) = 0: shift = -pi^2 D
    with pytest.raises(SingularKernelError):
        green(KernelContext.create(1e-3, -math.pi ** 2 * 1e-3), 0.2, 0.4)
    with pytest.raises(SingularKernelError):
        KernelContext.create(1e-3, 0)


def _product_quad(x, D, s, branch, x_M=0.1, l=0.5):
    ctx = KernelContext.create(D, s, branch)

    def part(y, k):
        v = complex(green(ctx, x, y) * green(ctx, y, x_M))
        return v.real if k == 0 else v.imag

    pts = [x] if l < x < 1 else None
    kw = dict(points=pts, epsabs=0, epsrel=1e-12, limit=200)
    return complex(quad(part, l, 1, args=(0,), **kw)[0], quad(part, l, 1, args=(1,), **kw)[0])


@pytest.mark.parametrize("D, s", [(3e-4, 0.03), (3e-4, 0.03 + 0.0353j), (7.9e-3, 0.03 + 0.1j),
                                  (1e-2, 0.5 - 0.3j), (1.0, 0.03), (1e-5, 0.03 + 0.01j)])
@pytest.mark.parametrize("x", [0.0, 0.1, 0.3, 0.5, 0.7, 1.0])
def test_product_integral_vs_quadrature(D, s, x):
    closed = complex(green_product_integral(x, D, s, 0.1, 0.5))
    for branch in (1, -1):
        ref = _product_quad(x, D, s, branch)
        assert abs(closed - ref) <= 1e-10 * max(abs(ref), 1e-300) + 1e-300


def test_product_integral_extreme_D():
    for D in (1e-7, 1e-6, 100.0):
        v = green_product_integral(np.linspace(0, 1, 11), D, 0.03, 0.1, 0.5)
        assert np.all(np.isfinite(v)) and np.all(v >= 0)
    # well-mixed limit: G -> 1/mu, so the integral tends to (1 - l)/mu^2
    v = green_product_integral(0.1, 1e6, 0.03, 0.1, 0.5)
    assert v == pytest.approx(0.5 / 0.03 ** 2, rel=1e-6)


def test_product_integral_conjugate():
    a = green_product_integral(0.1, 3e-4, 0.03 + 0.2j, 0.1, 0.5)
    b = green_product_integral(0.1, 3e-4, 0.03 - 0.2j, 0.1, 0.5)
    assert b == pytest.approx(np.conj(a), rel=1e-14)
    assert cmath.isfinite(a)


def test_no_warnings_in_scaled_regime():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        green_product_integral(np.linspace(0, 1, 51), 1e-7, 0.03 + 35j, 0.1, 0.5)
        green(KernelContext.create(1e-7, 0.03 + 35j), np.linspace(0, 1, 51), 0.1)
