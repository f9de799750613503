import itertools
import math
import random
from fractions import Fraction

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from psflab.lattice import (
    LatticePoint,
    NonConvergentError,
    TruncationBudget,
    accumulate,
    enumerate_shell,
    exp_tail_bound,
    gaussian_tail_bound,
    power_tail_bound,
    radius_for,
    shell_points,
    shell_size,
)

mp.mp.dps = 40


def brute_tail(term, R, n, box=60):
    """High-precision sum of term(k) over R < |k|_inf <= box."""
    total = mp.mpf(0)
    axis = range(-box, box + 1)
    for k in itertools.product(axis, repeat=n):
        if max(abs(c) for c in k) > R:
            total += term(k)
    return total


# ------------------------------------------------------------------ shells


@pytest.mark.parametrize("n,r,count", [(1, 0, 1), (2, 1, 8), (3, 2, 98)])
def test_shell_counts(n, r, count):
    pts = enumerate_shell(n, r)
    assert len(pts) == count == shell_size(n, r)
    assert all(p.sup_norm == r for p in pts)


def test_origin_shell():
    assert enumerate_shell(1, 0) == [LatticePoint((0,))]


@pytest.mark.parametrize("n", [1, 2, 3])
def test_shell_partition(n):
    for R in range(7):
        got = [tuple(p) for r in range(R + 1) for p in shell_points(n, r).tolist()]
        box = set(itertools.product(range(-R, R + 1), repeat=n))
        assert len(got) == len(set(got)) == len(box)
        assert set(got) == box


@pytest.mark.parametrize("n", [1, 2, 3])
def test_shell_lexicographic(n):
    for r in range(5):
        pts = [tuple(p) for p in shell_points(n, r).tolist()]
        assert pts == sorted(pts)
        brute = sorted(k for k in itertools.product(range(-r, r + 1), repeat=n) if max(map(abs, k), default=0) == r)
        assert pts == brute


def test_lattice_point_validation():
    with pytest.raises(ValueError):
        LatticePoint(())


def test_budget_validation():
    with pytest.raises(ValueError):
        TruncationBudget(max_shell=-1)
    with pytest.raises(ValueError):
        TruncationBudget(target_abs_tol=0.0)
    with pytest.raises(ValueError):
        TruncationBudget(max_terms=0)
    b = TruncationBudget(max_shell=10**6, max_terms=1000)
    assert (2 * b.shell_cap(3) + 1) ** 3 <= 1000


# ------------------------------------------------------------ accumulation


def test_accumulate_cancellation():
    res = accumulate([1.0, -1.0, 1e-16])
    assert res.value == pytest.approx(1e-16, rel=1e-12)
    assert res.compensation_residual <= 1e-15


def test_accumulate_empty():
    res = accumulate([])
    assert res.value == 0 and res.terms_used == 0


def test_accumulate_many_tenths():
    res = accumulate(0.1 for _ in range(10**6))
    exact = Fraction(0.1) * 10**6
    assert abs(Fraction(res.value.real) - exact) <= Fraction(1, 10**9)
    assert res.terms_used == 10**6


def test_accumulate_overflow():
    with pytest.raises(OverflowError):
        accumulate([1e308, 1e308])
    with pytest.raises(OverflowError):
        accumulate([float("inf")])


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(min_value=-1e6, max_value=1e6, allow_nan=False), min_size=1, max_size=200),
       st.randoms(use_true_random=False))
def test_accumulate_permutation(values, rnd):
    ordered = accumulate(sorted(values))
    shuffled = list(values)
    rnd.shuffle(shuffled)
    perm = accumulate(shuffled)
    scale = np.finfo(float).eps * len(values) * max(abs(v) for v in values)
    assert abs(perm.value - ordered.value) <= perm.compensation_residual + ordered.compensation_residual + scale


# -------------------------------------------------------------- tail bounds


def test_gaussian_tail_limit():
    assert gaussian_tail_bound(1e4, 0, 1) < 1e-300
    assert gaussian_tail_bound(1e4, 0, 1) >= 0


def test_gaussian_tail_1d_tight():
    true = 2 * mp.nsum(lambda k: mp.exp(-k * k), [6, mp.inf])
    b = gaussian_tail_bound(1.0, 5, 1)
    assert true <= b <= 10 * true


def test_gaussian_tail_2d():
    true = brute_tail(lambda k: mp.exp(-(k[0] ** 2 + k[1] ** 2)), 5, 2, box=14)
    assert gaussian_tail_bound(1.0, 5, 2) >= true


def test_exp_tail_examples():
    assert exp_tail_bound(200.0, 0, 1) < 1e-80
    b = 2 * math.pi
    assert exp_tail_bound(b, 3, 1) >= 2 * math.exp(-8 * math.pi) / (1 - math.exp(-2 * math.pi))
    true = brute_tail(lambda k: mp.exp(-b * mp.sqrt(k[0] ** 2 + k[1] ** 2)), 3, 2, box=20)
    assert exp_tail_bound(b, 3, 2) >= true


def test_power_tail_examples():
    true = 2 * mp.nsum(lambda k: 1 / (k * k + 1), [11, mp.inf])
    assert power_tail_bound(2.0, 1.0, 10, 1) >= true
    assert power_tail_bound(400.0, 1.0, 10, 1) < 1e-300
    # 2-D, p = 3: exact remainder = full sum minus box
    box = brute_tail(lambda k: (k[0] ** 2 + k[1] ** 2 + 1) ** mp.mpf(-1.5), -1, 2, box=10)
    full = mp.nsum(lambda a, b: (a * a + b * b + 1) ** mp.mpf(-1.5), [-mp.inf, mp.inf], [-mp.inf, mp.inf])
    assert power_tail_bound(3.0, 1.0, 10, 2) >= full - box


def test_power_tail_nonconvergent():
    with pytest.raises(NonConvergentError):
        power_tail_bound(1.0, 1.0, 5, 1)
    with pytest.raises(NonConvergentError):
        power_tail_bound(2.0, 1.0, 5, 2)


@pytest.mark.parametrize("shift", [0.0, 0.3, 0.5])
def test_shifted_tails_dominate(shift):
    # terms centred at x with |x|_inf <= shift
    x = shift
    g = brute_tail(lambda k: mp.exp(-0.7 * (k[0] - x) ** 2), 3, 1, box=40)
    assert gaussian_tail_bound(0.7, 3, 1, shift) >= g
    e = brute_tail(lambda k: mp.exp(-1.3 * abs(k[0] - x)), 3, 1, box=60)
    assert exp_tail_bound(1.3, 3, 1, shift) >= e
    right = mp.nsum(lambda k: ((k - x) ** 2 + 0.25) ** mp.mpf(-1.25), [4, mp.inf])
    left = mp.nsum(lambda k: ((k + x) ** 2 + 0.25) ** mp.mpf(-1.25), [4, mp.inf])
    assert power_tail_bound(2.5, 0.5, 3, 1, shift) >= right + left


@settings(max_examples=40, deadline=None)
@given(st.floats(0.05, 5.0), st.integers(1, 3), st.floats(0.0, 0.5))
def test_tails_monotone(a, n, shift):
    for R in range(0, 12):
        assert gaussian_tail_bound(a, R + 1, n, shift) <= gaussian_tail_bound(a, R, n, shift)
        assert exp_tail_bound(a, R + 1, n, shift) <= exp_tail_bound(a, R, n, shift)
    p = n + 0.5 + a
    for R in range(1, 12):
        assert power_tail_bound(p, a, R + 1, n, shift) <= power_tail_bound(p, a, R, n, shift)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.2, 3.0), st.integers(0, 4), st.floats(0.0, 0.5))
def test_gaussian_tail_overestimates_2d(a, R, shift):
    x = mp.mpf(shift)
    true = brute_tail(lambda k: mp.exp(-a * ((k[0] - x) ** 2 + (k[1] - x) ** 2)), R, 2, box=R + 14)
    assert gaussian_tail_bound(a, R, 2, shift) >= true


def test_radius_for():
    R, met = radius_for(lambda r: 10.0 ** (-r), 1e-5, 100)
    assert (R, met) == (5, True)
    R, met = radius_for(lambda r: 10.0 ** (-r), 1e-5, 3)
    assert (R, met) == (3, False)
