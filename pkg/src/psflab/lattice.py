"""Integer lattice enumeration, compensated accumulation and tail bounds.

Lattice sums are truncated on sup-norm shells ``{k : max_j |k_j| = r}``.
Every truncation is paired with an analytic over-estimate of the discarded
remainder, so a partial sum plus its bound brackets the full series.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np
from scipy import special

__all__ = [
    "LatticePoint",
    "TruncationBudget",
    "AccumulationResult",
    "Accumulator",
    "enumerate_shell",
    "shell_points",
    "shell_size",
    "accumulate",
    "gaussian_tail_bound",
    "exp_tail_bound",
    "power_tail_bound",
    "NonConvergentError",
]

# Relative inflation applied to every bound to absorb rounding in its evaluation.
_SAFETY = 1.0 + 1e-12


class NonConvergentError(ValueError):
    """The requested lattice series is not absolutely convergent."""


@dataclass(frozen=True)
class LatticePoint:
    coords: tuple[int, ...]

    def __post_init__(self):
        if len(self.coords) < 1:
            raise ValueError("lattice points need at least one coordinate")

    @property
    def dim(self) -> int:
        return len(self.coords)

    @property
    def sup_norm(self) -> int:
        return max(abs(c) for c in self.coords)


@dataclass(frozen=True)
class TruncationBudget:
    """Work limits for one side of a lattice sum."""

    max_shell: int = 4096
    target_abs_tol: float = 1e-12
    max_terms: int = 50_000_000

    def __post_init__(self):
        if self.max_shell < 0:
            raise ValueError("max_shell must be >= 0")
        if not self.target_abs_tol > 0:
            raise ValueError("target_abs_tol must be > 0")
        if self.max_terms < 1:
            raise ValueError("max_terms must be >= 1")

    def shell_cap(self, n: int) -> int:
        """Largest radius whose full box still fits in ``max_terms``."""
        side = int(math.floor(self.max_terms ** (1.0 / n)))
        while side ** n > self.max_terms:
            side -= 1
        while (side + 1) ** n <= self.max_terms:
            side += 1
        return max(0, min(self.max_shell, (side - 1) // 2))


@dataclass(frozen=True)
class AccumulationResult:
    value: complex
    compensation_residual: float = 0.0
    terms_used: int = 0


# ---------------------------------------------------------------- shells


def shell_size(n: int, r: int) -> int:
    if r == 0:
        return 1
    return (2 * r + 1) ** n - (2 * r - 1) ** n


def _box(n: int, r: int) -> np.ndarray:
    axis = np.arange(-r, r + 1, dtype=np.int64)
    grids = np.meshgrid(*([axis] * n), indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1)


def shell_points(n: int, r: int) -> np.ndarray:
    """Points of the sup-norm shell of radius ``r`` as an ``(m, n)`` int array.

    Rows are in lexicographic order.
    """
    if n < 1:
        raise ValueError("dimension must be >= 1")
    if r < 0:
        raise ValueError("shell radius must be >= 0")
    if r == 0:
        return np.zeros((1, n), dtype=np.int64)
    if n == 1:
        return np.array([[-r], [r]], dtype=np.int64)
    inner = shell_points(n - 1, r)
    box = _box(n - 1, r)
    heads = np.arange(-r + 1, r, dtype=np.int64)
    middle = np.hstack([np.repeat(heads, inner.shape[0])[:, None], np.tile(inner, (heads.size, 1))])
    first = np.hstack([np.full((box.shape[0], 1), -r, dtype=np.int64), box])
    last = np.hstack([np.full((box.shape[0], 1), r, dtype=np.int64), box])
    return np.vstack([first, middle, last])


def enumerate_shell(n: int, r: int) -> list[LatticePoint]:
    """All ``k`` in Z^n with ``max_j |k_j| == r``, lexicographically ordered."""
    return [LatticePoint(tuple(int(c) for c in row)) for row in shell_points(n, r)]


# ----------------------------------------------------------- accumulation


@dataclass
class Accumulator:
    """Running Neumaier sum for complex values (real and imaginary parts kept apart)."""

    _re: float = 0.0
    _im: float = 0.0
    _cre: float = 0.0
    _cim: float = 0.0
    terms: int = field(default=0)
    # running sum of |term|, the scale of the rounding error
    magnitude: float = 0.0

    @staticmethod
    def _step(s: float, c: float, x: float) -> tuple[float, float]:
        t = s + x
        if abs(s) >= abs(x):
            c += (s - t) + x
        else:
            c += (x - t) + s
        return t, c

    def add(self, z: complex) -> None:
        z = complex(z)
        if not (math.isfinite(z.real) and math.isfinite(z.imag)):
            raise OverflowError("range error: non-finite term in lattice sum")
        self.magnitude += abs(z)
        self._push(z, 1)

    def _push(self, z: complex, count: int) -> None:
        self._re, self._cre = self._step(self._re, self._cre, z.real)
        self._im, self._cim = self._step(self._im, self._cim, z.imag)
        if not (math.isfinite(self._re) and math.isfinite(self._im)):
            raise OverflowError("range error: partial sum overflowed")
        self.terms += count

    def add_array(self, values: np.ndarray) -> None:
        """Add a block of terms; the block itself is summed exactly rounded."""
        values = np.asarray(values)
        if values.size == 0:
            return
        if not np.all(np.isfinite(values)):
            raise OverflowError("range error: non-finite term in lattice sum")
        re = math.fsum(np.real(values).ravel())
        im = math.fsum(np.imag(values).ravel()) if np.iscomplexobj(values) else 0.0
        self.magnitude += math.fsum(np.abs(values).ravel())
        self._push(complex(re, im), values.size)

    @property
    def value(self) -> complex:
        return complex(self._re + self._cre, self._im + self._cim)

    @property
    def residual(self) -> float:
        return math.hypot(self._cre, self._cim)

    def result(self) -> AccumulationResult:
        return AccumulationResult(self.value, self.residual, self.terms)


def accumulate(terms: Iterable[complex]) -> AccumulationResult:
    """Compensated sum of a finite stream of (complex) numbers.

    Raises ``OverflowError`` when a term or a partial sum leaves the double range.
    """
    acc = Accumulator()
    for z in terms:
        acc.add(z)
    return acc.result()


# ------------------------------------------------------------ tail bounds
#
# All bounds below are over-estimates of sums over {k : |k|_inf > R}, where
# the summand is centred at a point x with |x|_inf <= shift.


def _gauss_run(a: float, u0: float) -> float:
    """Bound on sum_{i>=0} exp(-a (u0 + i)^2).

    For u0 >= 0 consecutive ratios are at most exp(-a (2 u0 + 1)), which gives
    a geometric majorant. A progression that starts left of zero splits into
    two runs each dominated by the u0 = 0 case.
    """
    if u0 < 0:
        return 2.0 / -math.expm1(-a)
    return math.exp(-a * u0 * u0) / -math.expm1(-a * (2.0 * u0 + 1.0))


def _product_tail(full: float, tail: float, n: int) -> float:
    # full^n - (full - tail)^n, expanded so tiny tails do not cancel to zero
    tail = min(tail, full)
    rest = full - tail
    return tail * sum(full ** i * rest ** (n - 1 - i) for i in range(n))


def gaussian_tail_bound(a: float, R: int, n: int, shift: float = 0.0) -> float:
    """Bound on ``sum_{|k|_inf > R} exp(-a |x - k|^2)`` for ``|x|_inf <= shift``.

    Derivation
    ----------
    The summand factorises over coordinates, so with ``F_j`` the full 1-D sum
    and ``T_j`` its part with ``|k_j| > R`` the n-D tail equals
    ``prod F_j - prod (F_j - T_j)``, which increases in every ``F_j`` and
    ``T_j``.  Both 1-D quantities are bounded by geometric majorants of
    ``exp(-a u^2)`` along arithmetic progressions (consecutive ratios at
    most ``exp(-a (2 u + 1))``).  Points with ``|k_j| > R`` sit at distance at
    least ``R + 1 - shift`` from ``x_j`` on both sides.
    """
    if not a > 0:
        raise ValueError("decay rate must be positive")
    if R < 0 or n < 1:
        raise ValueError("need R >= 0 and n >= 1")
    if math.isinf(a):
        return 0.0
    s = abs(float(shift))
    if s == 0.0:
        tail1 = 2.0 * _gauss_run(a, R + 1.0)
        full1 = 1.0 + 2.0 * _gauss_run(a, 1.0)
    else:
        tail1 = 2.0 * _gauss_run(a, R + 1.0 - s)
        full1 = _gauss_run(a, 0.0) + _gauss_run(a, max(1.0 - s, 0.0))
    return _SAFETY * _product_tail(full1, tail1, n)


def _shell_majorant(n: int, r: float) -> float:
    # (2r+1)^n - (2r-1)^n <= 2n (2r+1)^(n-1) by the mean value theorem
    return 2.0 * n * (2.0 * r + 1.0) ** (n - 1)


def exp_tail_bound(b: float, R: int, n: int, shift: float = 0.0) -> float:
    """Bound on ``sum_{|k|_inf > R} exp(-b |x - k|)`` for ``|x|_inf <= shift``.

    Uses ``|x - k| >= |k|_inf - shift`` and counts shell sizes exactly.  Shells
    are added one by one while the majorant's ratio is still far from its
    limit ``exp(-b)``; the rest is a geometric series whose ratio
    ``((2r+3)/(2r+1))^(n-1) exp(-b)`` decreases in ``r``.
    """
    if not b > 0:
        raise ValueError("decay rate must be positive")
    if R < 0 or n < 1:
        raise ValueError("need R >= 0 and n >= 1")
    if math.isinf(b):
        return 0.0
    s = abs(float(shift))
    if R + 1 - s <= 0:
        return math.inf
    q = math.exp(-b)
    threshold = 0.5 * (1.0 + q)
    total = 0.0
    r = R + 1
    while True:
        rho = ((2.0 * r + 3.0) / (2.0 * r + 1.0)) ** (n - 1) * q
        if rho <= threshold:
            total += _shell_majorant(n, r) * math.exp(-b * r) / (1.0 - rho)
            break
        total += shell_size(n, r) * math.exp(-b * r)
        r += 1
    return _SAFETY * math.exp(b * s) * total


def _power_integral(p: float, t: float, n: int, u0: float) -> float:
    """Exact value of ``int_{u0}^inf u^(n-1) (u^2 + t^2)^(-p/2) du``."""
    a, b = 0.5 * n, 0.5 * (p - n)
    w0 = u0 * u0 / (u0 * u0 + t * t)
    if t == 0.0:
        return u0 ** (n - p) / (p - n)
    return 0.5 * t ** (n - p) * special.beta(a, b) * special.betaincc(a, b, w0)


def power_tail_bound(p: float, t: float, R: int, n: int, shift: float = 0.0) -> float:
    """Bound on ``sum_{|k|_inf > R} (|x - k|^2 + t^2)^(-p/2)`` for ``|x|_inf <= shift``.

    A point on shell ``r`` is at distance ``u >= r - shift`` from ``x`` and the
    shell holds at most ``2n (2r+1)^(n-1) <= 2n kappa^(n-1) u^(n-1)`` points,
    ``kappa = 2 + (2 shift + 1) / u0``.  The radial majorant
    ``h(u) = u^(n-1) (u^2 + t^2)^(-p/2)`` is summed explicitly until it starts
    to decrease and the remainder is compared with its integral.

    Returns ``inf`` when ``R + 1 - shift <= 0`` (no separation from x).
    """
    if p <= n:
        raise NonConvergentError(f"exponent p={p} must exceed the dimension n={n}")
    if t < 0:
        raise ValueError("scale t must be >= 0")
    if R < 0:
        raise ValueError("R must be >= 0")
    if math.isinf(p):
        return 0.0
    s = abs(float(shift))
    u0 = R + 1.0 - s
    if u0 <= 0:
        return math.inf
    kappa = 2.0 + (2.0 * s + 1.0) / u0
    u_turn = t * math.sqrt((n - 1) / (p - n + 1)) if n > 1 else 0.0

    def h(u: float) -> float:
        return u ** (n - 1) * (u * u + t * t) ** (-0.5 * p)

    total = 0.0
    u = u0
    while u < u_turn:
        total += h(u)
        u += 1.0
    total += h(u) + _power_integral(p, t, n, u)
    return _SAFETY * 2.0 * n * kappa ** (n - 1) * total


def radius_for(bound, tol: float, r_max: int) -> tuple[int, bool]:
    """Smallest R <= r_max with ``bound(R) <= tol`` (bound nonincreasing in R).

    Returns ``(R, met)``; when no radius qualifies, ``(r_max, False)``.
    """
    if bound(r_max) > tol:
        return r_max, False
    if bound(0) <= tol:
        return 0, True
    lo, hi = 0, 1
    while hi < r_max and bound(hi) > tol:
        lo, hi = hi, min(2 * hi, r_max)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if bound(mid) <= tol:
            hi = mid
        else:
            lo = mid
    return hi, True

