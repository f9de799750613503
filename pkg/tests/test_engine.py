import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from psflab.engine import (
    classical_psf,
    coth_series_bracket,
    coth_series_check,
    coth_series_closed_form,
    engine_slack,
    evaluate_identity,
    preferred_side,
    theta_transform_check,
)
from psflab.kernels import bessel_pair, heat_pair, poisson_pair, symbol_pair
from psflab.lattice import TruncationBudget
from psflab.schwartz import battery, gaussian, shift_modulate

mp.mp.dps = 30
TOL = TruncationBudget(target_abs_tol=1e-12)


def brute_psf(f, x, K=30):
    """Both sides of the classical identity by plain summation over a wide box."""
    n = f.dim
    axis = np.arange(-K, K + 1)
    grids = np.meshgrid(*([axis] * n), indexing="ij")
    ks = np.stack([g.ravel() for g in grids], axis=1).astype(float)
    x = np.asarray(x, dtype=float)
    lhs = math.fsum(np.real(f.value(x + 2 * math.pi * ks))) + 1j * math.fsum(np.imag(f.value(x + 2 * math.pi * ks)))
    terms = f.fourier(ks) * np.exp(1j * ks @ x) / (2 * math.pi) ** (n / 2)
    rhs = math.fsum(terms.real) + 1j * math.fsum(terms.imag)
    return lhs, rhs


def test_slack_formula():
    eps = np.finfo(float).eps
    assert engine_slack(0.0, 0.0) == 1e3 * eps
    assert engine_slack(5.0, -7.0) == 7e3 * eps


def test_small_t_prefers_spatial():
    ev = evaluate_identity(heat_pair(0.01, 1), [0.5], TOL)
    assert ev.chosen_side == "spatial"
    assert ev.passed and ev.discrepancy <= 2 * (ev.lhs_tail + ev.rhs_tail)
    ref = 2 * mp.nsum(lambda k: mp.exp(-(k + 0.5) ** 2 / 0.01), [0, mp.inf]) / mp.sqrt(0.01 * mp.pi)
    assert abs(ev.rhs_value - complex(ref)) <= 1e-20


@pytest.mark.parametrize("pair,side", [(heat_pair(10.0, 1), "frequency"), (heat_pair(0.01, 1), "spatial"),
                                       (poisson_pair(1.0, 1), "frequency")])
def test_preferred_side_examples(pair, side):
    best, shells, counts = preferred_side(pair, 1e-12)
    assert best == side
    assert shells == min(counts.values())


@pytest.mark.parametrize("make,x,tol", [
    (lambda: heat_pair(0.3, 1), [0.2], 1e-12),
    (lambda: heat_pair(2.0, 2), [0.1, 0.9], 1e-12),
    (lambda: poisson_pair(0.5, 1), [0.7], 1e-10),
    (lambda: poisson_pair(1.5, 2), [0.3, 0.2], 1e-10),
    (lambda: bessel_pair(-4.0, 1), [0.25], 1e-9),
    (lambda: symbol_pair(gaussian(0.5, 1)), [1.0], 1e-12),
])
def test_prediction_matches_actual(make, x, tol):
    pair = make()
    b = TruncationBudget(target_abs_tol=tol)
    best, _, counts = preferred_side(pair, tol, x, b)
    ev = evaluate_identity(pair, x, b)
    assert abs(counts["frequency"] - ev.shells_lhs) <= 1
    assert abs(counts["spatial"] - ev.shells_rhs) <= 1
    assert ev.chosen_side == best
    chosen = ev.shells_lhs if ev.chosen_side == "frequency" else ev.shells_rhs
    assert chosen <= max(ev.shells_lhs, ev.shells_rhs)


def test_budget_exhaustion_flag():
    ev = evaluate_identity(heat_pair(0.01, 1), [0.5], TruncationBudget(target_abs_tol=1e-12, max_shell=3))
    assert ev.budget_exhausted and not ev.passed
    assert ev.discrepancy <= ev.bound


def test_imag_residue():
    ev = evaluate_identity(heat_pair(0.4, 2), [0.3, 0.8], TOL)
    assert ev.imag_residue <= ev.slack


# ----------------------------------------------------------- classical PSF


def test_psf_origin_gaussian():
    ev = classical_psf(gaussian(1.0, 1), [0.0], TOL)
    lhs = mp.nsum(lambda k: mp.exp(-(2 * mp.pi * k) ** 2 / 2), [-mp.inf, mp.inf])
    rhs = mp.nsum(lambda k: mp.exp(-k * k / 2), [-mp.inf, mp.inf]) / mp.sqrt(2 * mp.pi)
    assert abs(lhs - rhs) < 1e-25
    assert abs(ev.lhs_value - complex(lhs)) <= 1e-15
    assert abs(ev.rhs_value - complex(rhs)) <= ev.rhs_tail + 1e-15
    assert ev.passed


@pytest.mark.parametrize("f,x", [(gaussian(1.0, 1), [math.pi]), (shift_modulate(gaussian(1.0, 1), h=0.3), [0.0]),
                                 (shift_modulate(gaussian(2.0, 2), h=[0.3, -1.0], m=[1.0, 0.5]), [0.4, 2.0])])
def test_psf_against_brute_force(f, x):
    ev = classical_psf(f, x, TOL)
    lhs, rhs = brute_psf(f, x)
    assert ev.passed and ev.discrepancy <= 1e-12
    assert abs(ev.lhs_value - lhs) <= 1e-13 and abs(ev.rhs_value - rhs) <= 1e-13


@pytest.mark.parametrize("n", [1, 2])
def test_psf_battery(n, rng):
    for label, f in battery(n):
        x = rng.uniform(-3, 3, size=n)
        ev = classical_psf(f, x, TOL)
        assert ev.passed, label
        assert ev.discrepancy <= 1e-12


# ------------------------------------------------------------------- theta


def test_theta_t1():
    ev = theta_transform_check(1.0, 1, TOL)
    lhs = mp.jtheta(3, 0, mp.exp(-1))
    rhs = mp.sqrt(mp.pi) * mp.jtheta(3, 0, mp.exp(-mp.pi ** 2))
    assert abs(ev.lhs_value - complex(lhs)) <= ev.lhs_tail + 1e-15
    assert abs(ev.rhs_value - complex(rhs)) <= ev.rhs_tail + 1e-15
    assert ev.passed


def test_theta_t_half_3d():
    ev = theta_transform_check(0.5, 3, TOL)
    ref = mp.jtheta(3, 0, mp.exp(-0.5)) ** 3
    assert ev.passed
    assert abs(ev.lhs_value - complex(ref)) <= ev.lhs_tail + 1e-14


@pytest.mark.parametrize("n", [1, 2, 3])
def test_theta_self_dual(n):
    ev = theta_transform_check(math.pi, n, TOL)
    assert ev.discrepancy <= 1e-14


def test_theta_rejects():
    with pytest.raises(ValueError):
        theta_transform_check(0.0, 1)


# ------------------------------------------------------------- coth series


def test_coth_closed_form():
    ref = mp.pi * mp.coth(mp.pi) + 1
    alt = mp.pi * (1 + mp.exp(-2 * mp.pi)) / (1 - mp.exp(-2 * mp.pi)) + 1
    series = 2 * mp.nsum(lambda k: 1 / (1 + k * k), [0, mp.inf])
    assert abs(ref - alt) < 1e-28 and abs(ref - series) < 1e-25
    assert abs(coth_series_closed_form() - float(ref)) <= 1e-15
    assert f"{coth_series_closed_form():.5f}" == "4.15335"


def test_coth_bracket():
    partial, lower, upper = coth_series_bracket(10_000)
    closed = coth_series_closed_form()
    assert lower <= closed <= upper
    exact_partial = 2 * mp.fsum(1 / (1 + mp.mpf(k) ** 2) for k in range(10_000))
    assert abs(partial - float(exact_partial)) <= 1e-13


def test_coth_check():
    ev = coth_series_check()
    assert ev.passed and ev.label == "coth-series"
    assert ev.discrepancy <= 1e-10


# ------------------------------------------------------ monotone refinement


def _total(ev):
    return ev.discrepancy + ev.lhs_tail + ev.rhs_tail


@pytest.mark.parametrize("make,x", [(lambda: heat_pair(0.05, 2), [0.2, 0.6]), (lambda: poisson_pair(1.0, 1), [0.3]),
                                    (lambda: bessel_pair(-4.0, 1), [0.1]), (lambda: symbol_pair(gaussian(2.0, 1)), [2.0])])
def test_monotone_refinement(make, x):
    pair = make()
    prev = None
    for tol in (1e-3, 1e-5, 1e-7, 1e-9, 1e-10):
        ev = evaluate_identity(pair, x, TruncationBudget(target_abs_tol=tol))
        if prev is not None:
            assert _total(ev) <= _total(prev) + ev.slack
        prev = ev


@settings(max_examples=25, deadline=None)
@given(st.floats(0.05, 5.0), st.floats(0.0, 1.0), st.floats(0.0, 1.0), st.integers(1, 2))
def test_heat_bracket_property(t, x0, x1, n):
    x = [x0, x1][:n]
    ev = evaluate_identity(heat_pair(t, n), x, TOL)
    assert ev.passed
    chosen = ev.shells_lhs if ev.chosen_side == "frequency" else ev.shells_rhs
    other = ev.shells_rhs if ev.chosen_side == "frequency" else ev.shells_lhs
    assert chosen <= other


@settings(max_examples=15, deadline=None)
@given(st.floats(0.3, 3.0), st.floats(-1.0, 1.0), st.floats(-2.0, 2.0), st.floats(-5.0, 5.0))
def test_psf_property(a, h, m, x):
    ev = classical_psf(shift_modulate(gaussian(a, 1), h=h, m=m), [x], TOL)
    assert ev.passed
