r"""Weak (distributional) checks of lattice identities.

A distribution identity ``A = B`` is tested as ``<A, f> = <B, f>`` for
Gaussian-family test functions ``f``.  For the exponential comb the pairing
uses ``int e^{i a x} f(x) dx = (2 pi)^{n/2} f_hat(-a)``; for the Dirac comb
it is ``sum f(k)``.

Littlewood-Paley pieces of the exponential comb,
``sum_k phi_j(2 pi k) e^{i 2 pi k x}``, are finite trigonometric sums and
are tabulated on grids by FFT.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ._quad import gauss_legendre, tanh_sinh
from .kernels import TWO_PI, DualKernelPair, ModeError
from .lattice import Accumulator, TruncationBudget, gaussian_tail_bound, radius_for, shell_points
from .schwartz import TestFunction, as_points, dyadic_window

__all__ = [
    "PairingResult",
    "LPReport",
    "pair_dirac_comb",
    "pair_exp_comb",
    "periodize",
    "periodic_coefficient",
    "lp_piece",
    "lp_grid",
    "lp_support_count",
    "csn_report",
    "pair_identity",
]


@dataclass(frozen=True)
class PairingResult:
    value: complex
    truncation_level: int
    tail_estimate: float

    def __post_init__(self):
        if not self.tail_estimate >= 0:
            raise ValueError("tail estimate must be nonnegative")


def _shell_sum(n: int, center: np.ndarray, R: int, terms) -> complex:
    acc = Accumulator()
    for r in range(R + 1):
        acc.add_array(terms(shell_points(n, r) + center))
    return acc.value


# widest translate-side integration range pair_identity will attempt
MAX_PAIRING_RANGE = 1e4

# ---------------------------------------------------------- comb pairings


def pair_dirac_comb(f: TestFunction, budget: Optional[TruncationBudget] = None) -> PairingResult:
    """``sum_k f(k)`` with a certified Gaussian tail."""
    budget = budget or TruncationBudget(target_abs_tol=1e-16)
    n = f.dim
    c = np.rint(f.peak).astype(np.int64)
    tail = lambda R: f.value_tail(R, c)
    R, _ = radius_for(tail, budget.target_abs_tol, budget.shell_cap(n))
    val = _shell_sum(n, c, R, lambda K: np.asarray(f.value(K.astype(float)), dtype=complex))
    return PairingResult(val, R, tail(R))


def pair_exp_comb(f: TestFunction, N: int) -> PairingResult:
    """``(2 pi)^(n/2) sum_{|k|_inf <= N} f_hat(-2 pi k)``: the exponential comb paired with f."""
    if N < 0:
        raise ValueError("truncation N must be >= 0")
    n = f.dim
    pref = TWO_PI ** (0.5 * n)
    zero = np.zeros(n, dtype=np.int64)
    val = _shell_sum(n, zero, N, lambda K: pref * np.asarray(f.fourier(-TWO_PI * K), dtype=complex))
    tail = pref * f.fourier_tail(N, np.zeros(n), scale=-TWO_PI)
    return PairingResult(val, N, tail)


# --------------------------------------------------------- periodization


def _periodize_points(f: TestFunction, pts: np.ndarray, tol: float, period: float = TWO_PI):
    """``sum_k f(x + period k)`` at many points; returns (values, R, tail)."""
    n = f.dim
    u = pts / period
    # one box of k around the peak serves every point of the bounding box of u
    lo, hi = u.min(axis=0), u.max(axis=0)
    mid = 0.5 * (lo + hi)
    spread = float(np.max(0.5 * (hi - lo)))
    c = np.rint(f.peak / period - mid).astype(np.int64)

    def tail(R):
        total = 0.0
        for atom in f.atoms:
            s = float(np.max(np.abs(atom.shift / period - mid - c))) + spread
            total += abs(atom.coef) * gaussian_tail_bound(period ** 2 / (2 * atom.width), R, n, s)
        return total

    R, _ = radius_for(tail, tol, 10_000)
    out = np.zeros(len(pts), dtype=complex)
    for r in range(R + 1):
        for k in shell_points(n, r) + c:
            out += f.value(pts + period * k)
    return out, R, tail(R)


def periodize(f: TestFunction, x, budget: Optional[TruncationBudget] = None) -> PairingResult:
    """The 2 pi-periodic function ``sum_k f(x + 2 pi k)`` at one point."""
    budget = budget or TruncationBudget(target_abs_tol=1e-16)
    n = f.dim
    x = np.asarray(x, dtype=float).reshape(n)
    c = np.rint((f.peak - x) / TWO_PI).astype(np.int64)
    tail = lambda R: f.value_tail(R, c, scale=TWO_PI, offset=x)
    R, _ = radius_for(tail, budget.target_abs_tol, budget.shell_cap(n))
    val = _shell_sum(n, c, R, lambda K: np.asarray(f.value(x[None, :] + TWO_PI * K), dtype=complex))
    return PairingResult(val, R, tail(R))


def periodic_coefficient(f: TestFunction, m, points: int = 256) -> complex:
    """Torus Fourier coefficient ``(2 pi)^(-n/2) int_T e^{-i m x} F(x) dx`` of the periodization F.

    Trapezoid rule with ``points`` nodes per coordinate on ``[-pi, pi)``.
    """
    n = f.dim
    m = np.asarray(m, dtype=float).reshape(n)
    axis = -math.pi + TWO_PI * np.arange(points) / points
    grids = np.meshgrid(*([axis] * n), indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=1)
    vals, _, _ = _periodize_points(f, pts, 1e-17)
    integrand = vals * np.exp(-1j * (pts @ m))
    weight = TWO_PI ** (-0.5 * n) * (TWO_PI / points) ** n
    return weight * complex(math.fsum(integrand.real), math.fsum(integrand.imag))


# -------------------------------------------------------- Littlewood-Paley


def _lp_range(j: int) -> int:
    # supp phi_j lies in |xi| <= 3 * 2^(j-1) (|xi| <= 3/2 for j = 0)
    reach = 1.5 if j == 0 else 3.0 * 2.0 ** (j - 1)
    return int(math.floor(reach / TWO_PI))


def _lp_coefficients(j: int, n: int) -> tuple[np.ndarray, np.ndarray]:
    K = _lp_range(j)
    axis = np.arange(-K, K + 1)
    grids = np.meshgrid(*([axis] * n), indexing="ij")
    ks = np.stack([g.ravel() for g in grids], axis=1)
    w = dyadic_window(j, TWO_PI * ks.astype(float), n)
    w = np.atleast_1d(np.asarray(w, dtype=float))
    keep = w != 0
    return ks[keep], w[keep]


def lp_piece(j: int, x, n: int = 1):
    """``sum_k phi_j(2 pi k) e^{i 2 pi k x}`` by direct finite summation."""
    if j < 0:
        raise ValueError("level must be >= 0")
    pts, single = as_points(x, n)
    ks, w = _lp_coefficients(j, n)
    if len(w) == 0:
        out = np.zeros(len(pts), dtype=complex)
    else:
        out = np.exp(1j * TWO_PI * (pts @ ks.T)) @ w.astype(complex)
    return complex(out[0]) if single else out


def lp_support_count(j: int, n: int) -> int:
    """Lattice points with ``phi_j(2 pi k) != 0``; bounds ``|lp_piece(j, .)|`` since ``0 <= phi_j <= 1``."""
    return int(len(_lp_coefficients(j, n)[1]))


def lp_grid(j: int, n: int, points: int = 1024, offset=0.0) -> np.ndarray:
    """``lp_piece`` on the grid ``offset + l / points``, ``l`` in ``[0, points)^n``, via FFT."""
    ks, w = _lp_coefficients(j, n)
    if len(w) and 2 * int(np.max(np.abs(ks))) + 1 > points:
        raise ValueError("grid too coarse for this level")
    off = np.broadcast_to(np.asarray(offset, dtype=float), (n,))
    coeff = np.zeros((points,) * n, dtype=complex)
    if len(w):
        phase = np.exp(1j * TWO_PI * (ks @ off))
        idx = tuple((ks % points).T)
        np.add.at(coeff, idx, w * phase)
    return np.fft.ifftn(coeff) * points ** n


@dataclass
class LPReport:
    dim: int
    points: int
    levels: list = field(default_factory=list)  # (j, sup, ratio)
    refined: list = field(default_factory=list)  # (j, sup, ratio) on the 2x grid

    @property
    def max_ratio(self) -> float:
        return max(r for _, _, r in self.levels)

    @property
    def refined_max_ratio(self) -> float:
        return max(r for _, _, r in self.refined) if self.refined else math.nan

    @property
    def stable(self) -> bool:
        if not self.refined:
            return True
        return abs(self.refined_max_ratio - self.max_ratio) <= 0.1 * self.max_ratio


def csn_report(j_max: int, n: int = 1, points: int = 1024, refine: bool = True, seed: Optional[int] = None) -> LPReport:
    """Ratios ``2^(-j n) sup_grid |lp_piece(j, .)|`` for ``j <= j_max``.

    The sup is taken over a grid of ``points`` nodes per period and axis,
    shifted by a random sub-cell offset when ``seed`` is given.  With
    ``refine`` the same ratios are also computed on a grid twice as fine.
    """
    if j_max < 2:
        raise ValueError("j_max must be >= 2")
    if seed is None:
        offset = np.zeros(n)
    else:
        offset = np.random.default_rng(seed).uniform(0.0, 1.0 / points, size=n)
    report = LPReport(dim=n, points=points)
    for j in range(j_max + 1):
        sup = float(np.max(np.abs(lp_grid(j, n, points, offset))))
        report.levels.append((j, sup, sup * 2.0 ** (-j * n)))
        if refine:
            sup2 = float(np.max(np.abs(lp_grid(j, n, 2 * points, offset))))
            report.refined.append((j, sup2, sup2 * 2.0 ** (-j * n)))
    return report


# ------------------------------------------------ kernel pairs, weak form


def _periodic_sup(f: TestFunction, period: float) -> float:
    # sup_y sum_k |f(y + P k)| <= sum_atoms |c| * 2 / (1 - exp(-P^2 / (2 a)))
    return sum(abs(a.coef) * 2.0 / -math.expm1(-period ** 2 / (2 * a.width)) for a in f.atoms)


def pair_identity(pair: DualKernelPair, f: TestFunction, tol: float = 1e-10):
    """Pair both sides of a kernel identity with ``f``.

    Frequency side: ``sum_k c(k) (2 pi)^(n/2) f_hat(-s k)``.  Translate side:
    ``int K(y) F(y) dy`` with ``F(y) = sum_k f(y + P k)``; supported in one
    dimension, where the integral is split at the kernel's centre (tanh-sinh
    on ``[-1, 1]``, Gauss-Legendre panels beyond).

    Returns ``(lhs, rhs)`` as :class:`PairingResult`.
    """
    n = pair.dim
    if f.dim != n:
        raise ValueError("test function dimension does not match the pair")
    pref = TWO_PI ** (0.5 * n)
    if n != 1:
        raise ModeError("weak pairing of the translate side is implemented for n = 1")
    if pair.profile_tail is None:
        raise ModeError(f"{pair.label} pair has no integrable-tail bound for weak pairing")
    s = pair.freq_scale
    cbound = pair.extra.get("coeff_bound", 1.0)
    zero = np.zeros(n, dtype=np.int64)
    ftail = lambda R: cbound * pref * f.fourier_tail(R, np.zeros(n), scale=-s)
    R, _ = radius_for(ftail, tol * 1e-3, 100_000)
    lhs = _shell_sum(n, zero, R, lambda K: pair.freq_coeff(K) * pref * np.asarray(f.fourier(-s * K), dtype=complex))
    lhs_res = PairingResult(lhs, R, ftail(R))

    P = pair.period
    sup_per = _periodic_sup(f, P)
    L = 2.0
    while pair.profile_tail(L) * sup_per > 0.1 * tol:
        L *= 1.5
        if L > MAX_PAIRING_RANGE:
            raise ModeError(f"{pair.label} translate kernel decays too slowly to pair at tol={tol:g}")
    L = math.ceil(L)

    def integrand(y):
        y = np.asarray(y, dtype=float)
        vals, _, _ = _periodize_points(f, y[:, None], 1e-18, period=P)
        return pair.profile(y[:, None]) * vals

    total = 0.0 + 0.0j
    err = 0.0
    for a, b in ((-1.0, 0.0), (0.0, 1.0)):
        v, e = tanh_sinh(integrand, a, b, rtol=1e-13, atol=1e-3 * tol)
        total += complex(v)
        err += e
    for a, b in ((-L, -1.0), (1.0, L)):
        v, e = gauss_legendre(integrand, a, b, max_width=0.5, order=24, rtol=1e-13, atol=1e-3 * tol)
        total += complex(v)
        err += e
    if pair.profile_rtol:
        # kernels evaluated by quadrature are positive, so int |K| is the k = 0 coefficient
        mass = abs(complex(pair.freq_coeff(np.zeros((1, n), dtype=np.int64))[0]))
        err += pair.profile_rtol * mass * sup_per
    rhs_res = PairingResult(total, L, pair.profile_tail(L) * sup_per + err)
    return lhs_res, rhs_res
