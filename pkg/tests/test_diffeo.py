import math

import mpmath as mp
import numpy as np
import pytest
from scipy import integrate

from psflab.diffeo import (
    AffineMap,
    Diffeo1D,
    DiffeoError,
    Multiplier,
    affine_comb_check,
    dirac_pushforward,
    identity_map,
    invert_diffeo,
    linear_map,
    sine_warp,
    warped_coefficients,
    warped_comb_lhs,
    warped_comb_rhs,
)
from psflab.lattice import TruncationBudget
from psflab.schwartz import gaussian, shift_modulate
from psflab.weak import pair_dirac_comb, pair_exp_comb

mp.mp.dps = 40


def bisect_oracle(psi, y, lo=-100.0, hi=100.0):
    lo, hi = mp.mpf(lo), mp.mpf(hi)
    for _ in range(200):
        mid = (lo + hi) / 2
        if psi(mid) < y:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2


def mollified_1d(d, z, f, sigma):
    """int eta_sigma(psi(x) - z) f(x) dx with a normalized Gaussian eta."""
    x0 = invert_diffeo(d, z)
    span = 12 * sigma / d.c1

    def part(x, which):
        eta = math.exp(-((float(d.psi(x)) - z) ** 2) / (2 * sigma ** 2)) / (sigma * math.sqrt(2 * math.pi))
        v = complex(f.value(x)) * eta
        return v.real if which == 0 else v.imag

    re = integrate.quad(part, x0 - span, x0 + span, args=(0,), epsabs=1e-14, limit=200)[0]
    im = integrate.quad(part, x0 - span, x0 + span, args=(1,), epsabs=1e-14, limit=200)[0]
    return complex(re, im)


# --------------------------------------------------------------- maps


def test_diffeo_validation():
    with pytest.raises(DiffeoError):
        Diffeo1D(np.sin, np.cos, 0.5, 1.0)
    with pytest.raises(DiffeoError):
        sine_warp(1.0, 1.5)
    with pytest.raises(DiffeoError):
        linear_map(-1.0)
    with pytest.raises(DiffeoError):
        Diffeo1D(lambda x: x, lambda x: np.ones_like(x), 2.0, 1.0)


def test_affine_validation():
    with pytest.raises(np.linalg.LinAlgError):
        AffineMap(np.array([[1.0, 2.0], [2.0, 4.0]]), [0.0, 0.0])
    A = AffineMap(np.array([[2.0, 1.0], [0.5, 3.0]]), [0.1, -0.2])
    assert np.allclose(A.A @ A.Ainv, np.eye(2), atol=1e-12)
    assert A.detA == pytest.approx(5.5)
    y = A([0.3, 0.7])
    assert np.allclose(A.inverse(y), [0.3, 0.7])


def test_invert_examples():
    assert invert_diffeo(identity_map(), 3.0) == 3.0
    assert invert_diffeo(linear_map(2.0), 3.0) == pytest.approx(1.5, abs=1e-15)
    d = sine_warp(1.0, 0.1)
    ref = bisect_oracle(lambda x: x + mp.mpf("0.1") * mp.sin(x), 1)
    assert abs(invert_diffeo(d, 1.0) - float(ref)) <= 1e-14


@pytest.mark.parametrize("y", [-250.0, -3.3, 0.0, 0.5, 17.0, 1e4])
def test_invert_residual(y):
    for d in (sine_warp(1.0, 0.1), sine_warp(2.0, 0.2), linear_map(0.5, 3.0)):
        x = invert_diffeo(d, y)
        assert abs(float(d.psi(x)) - y) <= 1e-13 * max(1.0, abs(y))


def test_multiplier():
    g = Multiplier.gaussian(2.0)
    x = np.linspace(-10, 10, 2001)
    assert np.allclose(g(x), np.exp(-x * x / 4))
    assert np.max(np.abs(g(x))) <= g.sup_bound()
    h = Multiplier(0.5, (0.0, 1.0, -0.3), 1.5)
    assert np.max(np.abs(h(x))) <= h.sup_bound() * (1 + 1e-12)
    assert Multiplier().is_constant and not g.is_constant


# ------------------------------------------------------------ pushforward


def test_pushforward_examples():
    f = shift_modulate(gaussian(1.0, 1), h=0.2, m=0.7)
    assert dirac_pushforward(identity_map(), 0.4, f) == pytest.approx(complex(f.value(0.4)))
    assert dirac_pushforward(linear_map(2.0), 1.0, f) == pytest.approx(0.5 * complex(f.value(0.5)))
    f2 = gaussian(1.0, 2)
    A = AffineMap(np.diag([2.0, 3.0]), [0.0, 0.0])
    assert dirac_pushforward(A, [2.0, 3.0], f2) == pytest.approx(complex(f2.value([1.0, 1.0])) / 6)


@pytest.mark.parametrize("d,z", [(linear_map(2.0), 1.0), (sine_warp(1.0, 0.1), 0.8), (sine_warp(2.0, 0.2), -1.3)])
def test_jacobian_consistency_1d(d, z):
    f = shift_modulate(gaussian(1.0, 1), h=0.2, m=0.7)
    exact = dirac_pushforward(d, z, f)
    errs = [abs(mollified_1d(d, z, f, s) - exact) for s in (0.08, 0.04, 0.02, 0.01)]
    assert errs[-1] < 1e-3
    orders = [math.log2(a / b) for a, b in zip(errs, errs[1:])]
    assert min(orders) >= 1.0


def test_jacobian_consistency_affine():
    f = shift_modulate(gaussian(1.0, 2), h=[0.2, -0.1])
    A = AffineMap(np.array([[2.0, 0.5], [0.0, 3.0]]), [0.1, 0.2])
    z = np.array([2.0, 3.0])
    exact = dirac_pushforward(A, z, f)

    def mollified(sigma, m=161):
        # substitute y = A x: int eta(y - z) f(A^-1 y) dy / |det A|
        ax = np.linspace(-8 * sigma, 8 * sigma, m)
        h = ax[1] - ax[0]
        Y = np.stack(np.meshgrid(ax, ax, indexing="ij"), -1).reshape(-1, 2)
        eta = np.exp(-np.sum(Y * Y, axis=1) / (2 * sigma ** 2)) / (2 * math.pi * sigma ** 2)
        return np.sum(eta * f.value(A.inverse(Y + z))) * h * h / abs(A.detA)

    errs = [abs(mollified(s) - exact) for s in (0.08, 0.04, 0.02)]
    assert errs[-1] < 1e-3
    assert all(math.log2(a / b) >= 1.0 for a, b in zip(errs, errs[1:]))


# -------------------------------------------------------------- warped RHS


def test_rhs_identity_reduces_to_dirac_comb():
    for f in (gaussian(1.0, 1), shift_modulate(gaussian(0.25, 1), h=0.3, m=1.0)):
        assert abs(warped_comb_rhs(identity_map(), Multiplier(), f).value - pair_dirac_comb(f).value) <= 1e-12


def test_rhs_linear_half_lattice():
    f = shift_modulate(gaussian(1.0, 1), h=0.3)
    ref = mp.nsum(lambda k: 0.5 * mp.exp(-(k / 2 - mp.mpf("0.3")) ** 2 / 2), [-mp.inf, mp.inf])
    assert abs(warped_comb_rhs(linear_map(2.0), Multiplier(), f).value - complex(ref)) <= 1e-14


def test_rhs_tail_is_rigorous():
    d = sine_warp(2.0, 0.2)
    f = shift_modulate(gaussian(2.0, 1), h=1.0)
    res = warped_comb_rhs(d, Multiplier.gaussian(1.0), f, tol=1e-6)
    full = warped_comb_rhs(d, Multiplier.gaussian(1.0), f, tol=1e-18)
    assert abs(full.value - res.value) <= res.tail_estimate


def test_coefficients_positive():
    ks = np.arange(-30, 31)
    for d in (identity_map(), sine_warp(1.0, 0.1), sine_warp(2.0, 0.2), linear_map(0.7, 0.4)):
        c = warped_coefficients(d, Multiplier(), ks)
        assert np.all(c.real > 0) and np.all(c.imag == 0)
        assert np.all(c.real <= 1 / d.c1 + 1e-15) and np.all(c.real >= 1 / d.c2 - 1e-15)


# -------------------------------------------------------------- warped LHS


def test_lhs_identity_reduction():
    for f in (gaussian(1.0, 1), shift_modulate(gaussian(0.5, 1), h=0.3, m=0.8)):
        res = warped_comb_lhs(identity_map(), Multiplier(), f, N=16)
        assert abs(res.undamped - pair_exp_comb(f, 16).value) <= 1e-12


@pytest.mark.parametrize("g", [Multiplier(), Multiplier.gaussian(2.0), Multiplier(0.5, (0.0, 1.0), 1.0)])
def test_sine_warp_agreement(g):
    d = sine_warp(1.0, 0.1)
    f = gaussian(1.0, 1)
    lhs = warped_comb_lhs(d, g, f)
    rhs = warped_comb_rhs(d, g, f)
    assert abs(lhs.value - rhs.value) <= 1e-6


def test_lhs_parameter_checks():
    with pytest.raises(ValueError):
        warped_comb_lhs(identity_map(), Multiplier(), gaussian(1.0, 1), N=0)
    with pytest.raises(ValueError):
        warped_comb_lhs(identity_map(), Multiplier(), gaussian(1.0, 1), eps=(1e-2, 4e-3, 2e-3))
    with pytest.raises(ValueError):
        warped_comb_rhs(identity_map(), Multiplier(), gaussian(1.0, 2))


def test_abel_extrapolation_improves():
    d = sine_warp(1.0, 0.1)
    f = gaussian(1.0, 1)
    lhs = warped_comb_lhs(d, Multiplier(), f)
    rhs = warped_comb_rhs(d, Multiplier(), f).value
    raw = min(abs(s - rhs) for s in lhs.damped)
    assert abs(lhs.value - rhs) < raw


# ------------------------------------------------------------------ affine


def test_affine_identity_is_classical_pairing():
    f = shift_modulate(gaussian(1.0, 1), h=0.3, m=0.5)
    ev = affine_comb_check(AffineMap(np.eye(1), [0.0]), f)
    assert ev.passed
    assert abs(ev.rhs_value - pair_dirac_comb(f).value) <= 1e-12
    assert abs(ev.lhs_value - pair_exp_comb(f, 10).value) <= 1e-12


def test_affine_diag2():
    f = gaussian(1.0, 1)
    ev = affine_comb_check(AffineMap(np.diag([2.0]), [0.0]), f, TruncationBudget(target_abs_tol=1e-12))
    ref = mp.nsum(lambda k: 0.5 * mp.exp(-(k / 2) ** 2 / 2), [-mp.inf, mp.inf])
    lhs = mp.sqrt(2 * mp.pi) * mp.nsum(lambda k: mp.exp(-(4 * mp.pi * k) ** 2 / 2), [-mp.inf, mp.inf])
    assert abs(ev.rhs_value - complex(ref)) <= 1e-12
    assert abs(ev.lhs_value - complex(lhs)) <= 1e-12
    assert ev.passed


@pytest.mark.parametrize("deg", [30.0, 45.0, 73.0])
def test_affine_rotation(deg):
    c, s = math.cos(math.radians(deg)), math.sin(math.radians(deg))
    A = AffineMap(np.array([[c, -s], [s, c]]), [0.1, 0.25])
    f = shift_modulate(gaussian(1.0, 2), h=[0.3, -0.2], m=[0.5, 1.0])
    ev = affine_comb_check(A, f, TruncationBudget(target_abs_tol=1e-10))
    assert ev.passed


def test_affine_matches_brute_force():
    A = AffineMap(np.array([[1.0, 0.5], [0.0, 1.5]]), [0.25, -0.1])
    f = shift_modulate(gaussian(0.8, 2), h=[0.3, 0.1], m=[0.2, -0.4])
    ev = affine_comb_check(A, f, TruncationBudget(target_abs_tol=1e-12))
    ax = np.arange(-25, 26)
    K = np.stack(np.meshgrid(ax, ax, indexing="ij"), -1).reshape(-1, 2).astype(float)
    rhs = np.sum(f.value(A.inverse(K))) / abs(A.detA)
    assert abs(ev.rhs_value - rhs) <= 1e-12 and ev.passed


def test_affine_dimension_mismatch():
    with pytest.raises(ValueError):
        affine_comb_check(AffineMap(np.eye(2), [0.0, 0.0]), gaussian(1.0, 1))
