r"""Warped exponential combs.

For an increasing 1-D diffeomorphism ``psi`` with ``c1 <= psi' <= c2`` and a
bounded smooth multiplier ``g``,

.. math:: g(x) \sum_k e^{i 2\pi k \psi(x)} = \sum_k \frac{g}{\psi'}(\psi^{-1}(k))\,
          \delta_{\psi^{-1}(k)}

in the weak sense.  The left side is paired with a test function by
oscillatory quadrature under Gaussian Abel damping, extrapolated to zero
damping; the right side is a rapidly convergent point sum.

For an affine map ``x -> A x + b`` in n dimensions both pairings are
closed-form Gaussian sums.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import optimize

from ._quad import QuadratureError, gauss_legendre
from .engine import DualEvaluation, Side, _evaluate_sides
from .kernels import TWO_PI
from .lattice import Accumulator, TruncationBudget, gaussian_tail_bound, radius_for
from .schwartz import TestFunction
from .weak import PairingResult

__all__ = [
    "DiffeoError",
    "QuadratureError",
    "Diffeo1D",
    "identity_map",
    "linear_map",
    "sine_warp",
    "AffineMap",
    "Multiplier",
    "invert_diffeo",
    "dirac_pushforward",
    "warped_comb_rhs",
    "warped_comb_lhs",
    "affine_comb_check",
    "ABEL_EPS",
]

ABEL_EPS = (1e-2, 5e-3, 2.5e-3)


class DiffeoError(ValueError):
    """A map violates its declared monotonicity or derivative bounds."""


@dataclass(frozen=True)
class Diffeo1D:
    psi: Callable
    dpsi: Callable
    c1: float
    c2: float
    label: str = "custom"
    check_range: float = 50.0

    def __post_init__(self):
        if not (0 < self.c1 <= self.c2 < math.inf):
            raise DiffeoError("need 0 < c1 <= c2 < inf")
        grid = np.linspace(-self.check_range, self.check_range, 4001)
        d = np.asarray(self.dpsi(grid), dtype=float)
        slack = 1e-12 * self.c2
        if np.any(d < self.c1 - slack) or np.any(d > self.c2 + slack):
            raise DiffeoError(f"derivative of {self.label} leaves [{self.c1}, {self.c2}] on the check grid")

    def __call__(self, x):
        return self.psi(x)


def identity_map() -> Diffeo1D:
    return Diffeo1D(lambda x: np.asarray(x, dtype=float) * 1.0, lambda x: np.ones_like(np.asarray(x, dtype=float)),
                    1.0, 1.0, "identity")


def linear_map(s: float, shift: float = 0.0) -> Diffeo1D:
    if not s > 0:
        raise DiffeoError("slope must be positive")
    return Diffeo1D(lambda x: s * np.asarray(x, dtype=float) + shift,
                    lambda x: np.full_like(np.asarray(x, dtype=float), s), s, s, f"linear({s})")


def sine_warp(slope: float = 1.0, amp: float = 0.1) -> Diffeo1D:
    """``x -> slope x + amp sin x``; needs ``|amp| < slope``."""
    if not abs(amp) < slope:
        raise DiffeoError("sine warp needs |amp| < slope to stay increasing")
    return Diffeo1D(
        lambda x: slope * np.asarray(x, dtype=float) + amp * np.sin(x),
        lambda x: slope + amp * np.cos(x),
        slope - abs(amp),
        slope + abs(amp),
        f"{slope}x+{amp}sin(x)",
    )


@dataclass(frozen=True)
class AffineMap:
    A: np.ndarray
    b: np.ndarray
    detA: float = field(init=False)
    Ainv: np.ndarray = field(init=False)

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        if A.shape[0] != A.shape[1]:
            raise ValueError("A must be square")
        b = np.broadcast_to(np.asarray(self.b, dtype=float), (A.shape[0],)).copy()
        det = float(np.linalg.det(A))
        cond = np.linalg.cond(A)
        if det == 0.0 or not np.isfinite(cond) or cond > 1e12:
            raise np.linalg.LinAlgError("affine map matrix is singular")
        Ainv = np.linalg.inv(A)
        if np.max(np.abs(A @ Ainv - np.eye(A.shape[0]))) > 1e-12:
            raise np.linalg.LinAlgError("affine map matrix is too ill-conditioned to invert")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "detA", det)
        object.__setattr__(self, "Ainv", Ainv)

    @property
    def dim(self) -> int:
        return self.A.shape[0]

    def __call__(self, x):
        return np.asarray(x, dtype=float) @ self.A.T + self.b

    def inverse(self, y):
        return (np.asarray(y, dtype=float) - self.b) @ self.Ainv.T


@dataclass(frozen=True)
class Multiplier:
    """``g(x) = const + sum_i c_i x^i exp(-x^2 / (2 w))``, bounded with bounded derivatives."""

    const: complex = 1.0
    coeffs: Sequence[complex] = ()
    width: float = 1.0
    label: str = "constant"

    def __post_init__(self):
        if not self.width > 0:
            raise ValueError("multiplier width must be positive")

    @classmethod
    def gaussian(cls, width: float = 1.0) -> "Multiplier":
        return cls(0.0, (1.0,), width, f"gauss(w={width})")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.full(x.shape, complex(self.const))
        if len(self.coeffs):
            env = np.exp(-x * x / (2 * self.width))
            out = out + np.polyval(list(self.coeffs)[::-1], x) * env
        return out

    def sup_bound(self) -> float:
        # sup |x^i exp(-x^2/(2w))| = (i w)^(i/2) e^(-i/2)
        total = abs(self.const)
        for i, c in enumerate(self.coeffs):
            total += abs(c) * ((i * self.width) ** (0.5 * i) * math.exp(-0.5 * i) if i else 1.0)
        return total

    @property
    def is_constant(self) -> bool:
        return not any(self.coeffs)


# ------------------------------------------------------------- inversion


def invert_diffeo(d: Diffeo1D, y: float) -> float:
    """``x`` with ``psi(x) = y`` by safeguarded root finding on an exact bracket.

    Since ``c1 (x - 0) <= psi(x) - psi(0) <= c2 (x - 0)`` for ``x >= 0`` (and
    reversed for ``x < 0``), the root lies between ``(y - psi0)/c2`` and
    ``(y - psi0)/c1``.
    """
    y = float(y)
    psi0 = float(d.psi(0.0))
    lo, hi = sorted(((y - psi0) / d.c2, (y - psi0) / d.c1))
    pad = 1e-12 * (1.0 + abs(lo) + abs(hi))
    lo, hi = lo - pad, hi + pad
    F = lambda x: float(d.psi(x)) - y
    flo, fhi = F(lo), F(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if flo > 0 or fhi < 0:
        raise DiffeoError(f"bracket [{lo}, {hi}] does not enclose psi^-1({y}); map violates its bounds")
    scale = max(1.0, abs(y))
    x = optimize.brentq(F, lo, hi, xtol=5e-14 * scale / d.c2, rtol=4 * np.finfo(float).eps, maxiter=200)
    if abs(F(x)) > 1e-13 * scale:
        raise DiffeoError(f"inversion residual {abs(F(x)):.3e} exceeds tolerance at y={y}")
    return x


def dirac_pushforward(d, z, f: TestFunction) -> complex:
    """Pairing of the composed Dirac mass ``delta_z o psi`` with ``f``.

    Equals ``|det (psi^-1)_*|(z) f(psi^-1(z))``; for a 1-D map the factor is
    ``1 / psi'(psi^-1(z))``, for an affine map ``1 / |det A|``.
    """
    if isinstance(d, AffineMap):
        x = d.inverse(np.asarray(z, dtype=float).reshape(d.dim))
        return complex(f.value(x)) / abs(d.detA)
    x = invert_diffeo(d, float(z))
    return complex(f.value(x)) / float(d.dpsi(x))


# ------------------------------------------------------ warped combs, 1-D


def _check_1d(f: TestFunction):
    if f.dim != 1:
        raise ValueError("warped combs with a general diffeomorphism are one-dimensional")


def warped_comb_rhs(d: Diffeo1D, g: Multiplier, f: TestFunction, tol: float = 1e-15) -> PairingResult:
    """``sum_k (g / psi')(psi^-1(k)) f(psi^-1(k))`` with a certified tail.

    ``|psi^-1(k) - h| >= |k - psi(h)| / c2``, so an atom of width ``a`` at
    ``h`` contributes at most ``|c| sup|g| / c1 * exp(-(k - psi(h))^2 / (2 a c2^2))``.
    """
    _check_1d(f)
    centers = [float(d.psi(float(atom.shift[0]))) for atom in f.atoms]
    c = int(round(centers[0]))
    gsup = g.sup_bound()

    def tail(R):
        total = 0.0
        for atom, p in zip(f.atoms, centers):
            total += abs(atom.coef) * gaussian_tail_bound(1.0 / (2 * atom.width * d.c2 ** 2), R, 1, abs(p - c))
        return gsup / d.c1 * total

    R, _ = radius_for(tail, tol, 1_000_000)
    ks = np.arange(c - R, c + R + 1)
    # shell order: 0, -1, +1, -2, +2, ...
    order = np.argsort(np.abs(ks - c) * 2 + (ks > c), kind="stable")
    acc = Accumulator()
    for k in ks[order]:
        x = invert_diffeo(d, float(k))
        acc.add(complex(g(x)) / float(d.dpsi(x)) * complex(f.value(x)))
    return PairingResult(acc.value, R, tail(R))


def warped_coefficients(d: Diffeo1D, g: Multiplier, ks) -> np.ndarray:
    """``(g / psi')(psi^-1(k))`` for the given integers."""
    out = []
    for k in ks:
        x = invert_diffeo(d, float(k))
        out.append(complex(g(x)) / float(d.dpsi(x)))
    return np.asarray(out)


def _support(f: TestFunction, drop: float = 50.0) -> tuple[float, float]:
    lo, hi = math.inf, -math.inf
    for atom in f.atoms:
        w = math.sqrt(2.0 * atom.width * (drop + max(0.0, math.log(max(abs(atom.coef), 1e-300)))))
        h = float(atom.shift[0])
        lo, hi = min(lo, h - w), max(hi, h + w)
    return lo, hi


def warped_oscillatory_integrals(d: Diffeo1D, g: Multiplier, f: TestFunction, N: int,
                                 rtol: float = 1e-13, atol: float = 1e-15) -> tuple[np.ndarray, np.ndarray, float]:
    """``I_k = int g f e^{i 2 pi k psi}`` for ``|k| <= N`` on panels of width ``<= 1/(4 N c2)``."""
    _check_1d(f)
    ks = np.arange(-N, N + 1)
    lo, hi = _support(f)

    def integrand(x):
        base = g(x) * f.value(x)
        return base[None, :] * np.exp(1j * TWO_PI * ks[:, None] * np.asarray(d.psi(x))[None, :])

    width = 1.0 / (4.0 * max(N, 1) * d.c2)
    vals, err = gauss_legendre(integrand, lo, hi, max_width=width, order=16, rtol=rtol, atol=atol)
    return ks, vals, err


@dataclass(frozen=True)
class WarpedLHS(PairingResult):
    eps: tuple = ABEL_EPS
    damped: tuple = ()
    quad_error: float = 0.0
    undamped: complex = 0.0


def warped_comb_lhs(d: Diffeo1D, g: Multiplier, f: TestFunction, eps: Sequence[float] = ABEL_EPS,
                    N: int = 16) -> WarpedLHS:
    """Abel-damped pairing of ``g sum e^{i 2 pi k psi}`` with ``f``, extrapolated to zero damping.

    ``S(e) = sum_{|k|<=N} exp(-e k^2) I_k`` is evaluated at ``e1 = 2 e2 = 4 e3``;
    two Richardson steps remove the first- and second-order terms in ``e``.
    The reported tail estimate is the size of the last Richardson correction
    plus the quadrature change estimate; it is not a rigorous bound.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    e1, e2, e3 = (float(e) for e in eps)
    if not (e1 > 0 and abs(e1 - 2 * e2) <= 1e-12 * e1 and abs(e2 - 2 * e3) <= 1e-12 * e2):
        raise ValueError("Abel parameters must be positive and halve successively")
    ks, I, qerr = warped_oscillatory_integrals(d, g, f, N)
    k2 = ks.astype(float) ** 2

    def S(e):
        return complex(np.sum(np.exp(-e * k2) * I))

    s1, s2, s3 = S(e1), S(e2), S(e3)
    r1a = 2 * s2 - s1
    r1b = 2 * s3 - s2
    r2 = (4 * r1b - r1a) / 3.0
    est = abs(r2 - r1b) + ks.size * qerr
    return WarpedLHS(r2, N, est, (e1, e2, e3), (s1, s2, s3), qerr, S(0.0))


# ---------------------------------------------------- affine combs, n-D


def affine_comb_check(A: AffineMap, f: TestFunction, budget: Optional[TruncationBudget] = None) -> DualEvaluation:
    """Pair ``sum_k e^{i 2 pi k (A x + b)}`` and ``sum_k |det A|^-1 delta_{A^-1(k - b)}`` with ``f``.

    Left terms: ``e^{i 2 pi k b} (2 pi)^(n/2) f_hat(-2 pi A^T k)``.
    Right terms: ``f(A^-1 (k - b)) / |det A|``.
    """
    budget = budget or TruncationBudget()
    n = A.dim
    if f.dim != n:
        raise ValueError("test function and map dimensions differ")
    sv = np.linalg.svd(A.A, compute_uv=False)
    smin, smax = float(sv.min()), float(sv.max())
    pref = TWO_PI ** (0.5 * n)
    AinvT = A.Ainv.T
    # left: atom peaks at k = -A^-T m / (2 pi); right: at k = b + A h
    lpeaks = [-(AinvT @ atom.modulation) / TWO_PI for atom in f.atoms]
    rpeaks = [A.b + A.A @ atom.shift for atom in f.atoms]
    lc = np.rint(lpeaks[0]).astype(np.int64)
    rc = np.rint(rpeaks[0]).astype(np.int64)

    def ltail(R):
        total = 0.0
        for atom, p in zip(f.atoms, lpeaks):
            rate = 0.5 * atom.width * (TWO_PI * smin) ** 2
            total += abs(atom.coef) * atom.width ** (0.5 * n) * gaussian_tail_bound(rate, R, n, float(np.max(np.abs(p - lc))))
        return pref * total

    def rtail(R):
        total = 0.0
        for atom, p in zip(f.atoms, rpeaks):
            rate = 1.0 / (2.0 * atom.width * smax ** 2)
            total += abs(atom.coef) * gaussian_tail_bound(rate, R, n, float(np.max(np.abs(p - rc))))
        return total / abs(A.detA)

    def lterms(K):
        Kf = K.astype(float)
        return np.exp(1j * TWO_PI * (Kf @ A.b)) * pref * np.asarray(f.fourier(-TWO_PI * Kf @ A.A), dtype=complex)

    def rterms(K):
        return np.asarray(f.value(A.inverse(K.astype(float))), dtype=complex) / abs(A.detA)

    lhs = Side("frequency", n, lc, lterms, ltail)
    rhs = Side("spatial", n, rc, rterms, rtail)
    params = {"n": n, "A": A.A.tolist(), "b": A.b.tolist(), "f": f.params}
    return _evaluate_sides(lhs, rhs, budget, "affine", params, False)
