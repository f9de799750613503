r"""Dual kernel pairs: a lattice Fourier series and the matching sum of translates.

Every pair realises an identity of the form

.. math:: \sum_k c(k)\, e^{i s\, k x} = \sum_k K(x - P k),

with frequency scale ``s`` (``2\pi`` for the periodic kernels, ``-1`` for
symbol pairs) and translate period ``P`` (``1`` or ``2\pi``).  Both sides
carry rigorous bounds for their discarded tails.

Tails are parametrised by a shell radius ``R`` and an integer lattice
``center``; the bound covers the terms ``k = center + j`` with ``|j|_inf > R``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import special

from .lattice import exp_tail_bound, gaussian_tail_bound, power_tail_bound
from .schwartz import TestFunction, as_points

__all__ = [
    "ModeError",
    "KernelSingularityError",
    "DualKernelPair",
    "heat_pair",
    "poisson_pair",
    "normalize_cn",
    "BesselPotentialEvaluator",
    "bessel_hat",
    "bessel_closed_form",
    "bessel_pair",
    "symbol_pair",
]

TWO_PI = 2.0 * math.pi
_LOG_PI = math.log(math.pi)


class ModeError(ValueError):
    """The requested evaluation mode is not valid for these parameters."""


class KernelSingularityError(ValueError):
    """The translate kernel is infinite at the requested point."""


def _sup(v) -> float:
    return float(np.max(np.abs(v))) if np.size(v) else 0.0


def _radius(Y: np.ndarray) -> np.ndarray:
    """Euclidean norm of each row, scaled so tiny coordinates do not underflow to 0."""
    Y = np.asarray(Y, dtype=float)
    m = np.max(np.abs(Y), axis=-1)
    safe = np.where(m > 0, m, 1.0)
    Z = Y / safe[..., None]
    return m * np.sqrt(np.einsum("ij,ij->i", Z, Z))


@dataclass(frozen=True)
class DualKernelPair:
    label: str
    dim: int
    params: dict
    freq_coeff: Callable[[np.ndarray], np.ndarray]
    freq_scale: float
    freq_peak: np.ndarray
    freq_tail: Callable[[int, np.ndarray], float]
    profile: Callable[[np.ndarray], np.ndarray]
    period: float
    spatial_peak: Callable[[np.ndarray], np.ndarray]
    spatial_tail: Callable[[int, np.ndarray, np.ndarray], float]
    # (R, u, center) -> (estimate, error bound) of the discarded spatial terms
    spatial_correction: Optional[Callable[[int, np.ndarray, np.ndarray], tuple[float, float]]] = None
    mode: str = "pointwise"
    real_valued: bool = True
    singular_at_zero: bool = False
    # (L) -> bound on the integral of |profile| over |y| > L (weak pairing)
    profile_tail: Optional[Callable[[float], float]] = None
    # relative accuracy of each profile value (quadrature-based kernels)
    profile_rtol: float = 0.0
    extra: dict = field(default_factory=dict)

    def spatial_kernel(self, x, k) -> complex:
        """One translate term ``K(x - P k)``."""
        x = np.asarray(x, dtype=float).reshape(self.dim)
        k = np.asarray(k, dtype=float).reshape(self.dim)
        return complex(self.profile((x - self.period * k)[None, :])[0])

    def freq_term(self, x, k) -> complex:
        x = np.asarray(x, dtype=float).reshape(self.dim)
        k = np.asarray(k, dtype=np.int64).reshape(1, self.dim)
        c = self.freq_coeff(k)[0]
        return complex(c * np.exp(1j * self.freq_scale * float(k[0] @ x)))

    def reduce(self, x) -> np.ndarray:
        """Centred representative of ``x / period`` in ``[-1/2, 1/2)^n``."""
        u = np.asarray(x, dtype=float).reshape(self.dim) / self.period
        return u - np.floor(u + 0.5)


# ------------------------------------------------------------------- heat


def heat_pair(t: float, n: int) -> DualKernelPair:
    """``sum exp(-t pi^2 |k|^2) e^{i 2 pi k x} = (t pi)^(-n/2) sum exp(-|x-k|^2 / t)``."""
    if not t > 0:
        raise ValueError("heat pair needs t > 0")
    if n < 1:
        raise ValueError("dimension must be >= 1")
    t = float(t)
    rate = t * math.pi ** 2
    pref = (t * math.pi) ** (-0.5 * n)

    def coeff(K):
        K = np.asarray(K, dtype=float)
        return np.exp(-rate * np.einsum("ij,ij->i", K, K)).astype(complex)

    def profile(Y):
        return pref * np.exp(-np.einsum("ij,ij->i", Y, Y) / t) + 0j

    return DualKernelPair(
        label="heat",
        dim=n,
        params={"t": t, "n": n},
        freq_coeff=coeff,
        freq_scale=TWO_PI,
        freq_peak=np.zeros(n),
        freq_tail=lambda R, c: gaussian_tail_bound(rate, R, n, _sup(c)),
        profile=profile,
        period=1.0,
        spatial_peak=lambda u: np.asarray(u, dtype=float),
        spatial_tail=lambda R, u, c: pref * gaussian_tail_bound(1.0 / t, R, n, _sup(u - c)),
        profile_tail=lambda L: _gauss_radial_tail(1.0 / t, L, n) * pref,
    )


def _gauss_radial_tail(a: float, L: float, n: int) -> float:
    # int_{|y| > L} exp(-a |y|^2) dy
    area = 2.0 * math.pi ** (0.5 * n) / math.gamma(0.5 * n)
    return 0.5 * area * a ** (-0.5 * n) * special.gammaincc(0.5 * n, a * L * L) * math.gamma(0.5 * n)


# ---------------------------------------------------------------- Poisson


def normalize_cn(n: int) -> float:
    """Constant with ``c_n * int (1 + |x|^2)^(-(n+1)/2) dx = 1``.

    In polar form the integral is ``|S^{n-1}| * B(n/2, 1/2) / 2``, which
    simplifies to ``pi^((n+1)/2) / Gamma((n+1)/2)``.
    """
    if n < 1:
        raise ValueError("dimension must be >= 1")
    sphere = 2.0 * math.pi ** (0.5 * n) / math.gamma(0.5 * n)
    integral = 0.5 * sphere * special.beta(0.5 * n, 0.5)
    return 1.0 / integral


def _box_mass_1d(t: float, lo: float, hi: float) -> float:
    """Mass of the 1-D Cauchy density ``(t/pi)/(y^2+t^2)`` outside ``[lo, hi]``."""
    return (math.atan2(t, hi) + math.atan2(t, -lo)) / math.pi


def _corner_2d(t: float, u: float, v: float) -> float:
    # mass of t/(2 pi) (|y|^2 + t^2)^(-3/2) over [0, u] x [0, v]
    return math.atan(u * v / (t * math.sqrt(u * u + v * v + t * t))) / TWO_PI


def _poisson_outside_box(t: float, n: int, u: np.ndarray, half: float) -> float:
    """Mass of the Poisson kernel centred at u outside the box ``|y|_inf <= half``."""
    if n == 1:
        return _box_mass_1d(t, -half - u[0], half - u[0])
    if n == 2:
        inside = 0.0
        for a in (half - u[0], half + u[0]):
            for b in (half - u[1], half + u[1]):
                inside += _corner_2d(t, a, b)
        return 1.0 - inside
    raise NotImplementedError


def poisson_pair(t: float, n: int) -> DualKernelPair:
    """``sum exp(-2 pi t |k|) e^{i 2 pi k x} = c_n t sum (|x-k|^2 + t^2)^(-(n+1)/2)``.

    The spatial side converges only algebraically.  For ``n <= 2`` the
    discarded translates are replaced by the kernel's mass outside the
    truncation box; the midpoint rule on unit cells bounds the error of
    that replacement by ``(1/24) sum_i sup |d_i^2 K|`` per cell, and
    ``|d_i^2 K| <= p (p+1) c_n t (|y|^2 + t^2)^(-(p+2)/2)`` with ``p = n+1``.
    """
    if not t > 0:
        raise ValueError("Poisson pair needs t > 0")
    if n < 1:
        raise ValueError("dimension must be >= 1")
    t = float(t)
    cn = normalize_cn(n)
    p = n + 1.0
    rate = TWO_PI * t

    def coeff(K):
        K = np.asarray(K, dtype=float)
        return np.exp(-rate * np.sqrt(np.einsum("ij,ij->i", K, K))).astype(complex)

    def profile(Y):
        return cn * t * (np.einsum("ij,ij->i", Y, Y) + t * t) ** (-0.5 * p) + 0j

    def spatial_tail(R, u, c):
        return cn * t * power_tail_bound(p, t, R, n, _sup(u - c))

    correction = None
    if n <= 2:
        def correction(R, u, c):
            d = np.asarray(u, dtype=float) - np.asarray(c, dtype=float)
            est = _poisson_outside_box(t, n, d, R + 0.5)
            err = n * p * (p + 1) / 24.0 * cn * t * power_tail_bound(p + 2, t, R, n, _sup(d) + 0.5)
            return est, err

    def profile_tail(L):
        # mass outside the ball of radius L
        return float(special.betaincc(0.5 * n, 0.5, L * L / (L * L + t * t)))

    return DualKernelPair(
        label="poisson",
        dim=n,
        params={"t": t, "n": n},
        freq_coeff=coeff,
        freq_scale=TWO_PI,
        freq_peak=np.zeros(n),
        freq_tail=lambda R, c: exp_tail_bound(rate, R, n, _sup(c)),
        profile=profile,
        period=1.0,
        spatial_peak=lambda u: np.asarray(u, dtype=float),
        spatial_tail=spatial_tail,
        spatial_correction=correction,
        profile_tail=profile_tail,
        extra={"c_n": cn},
    )


# ------------------------------------------------------------ Bessel potentials


@dataclass(frozen=True)
class BesselPotentialEvaluator:
    r"""Quadrature for the radial Bessel potential

    .. math:: \hat w_\alpha(r) = C \int_0^\infty t^{-(\alpha+n)/2}
              e^{-\pi r^2/t - t/(4\pi)} \frac{dt}{t},
              \qquad C = \frac{(4\pi)^{\alpha/2}(2\pi)^{n/2}}{\Gamma(|\alpha|/2)}.

    With ``u = log t`` the log-integrand
    ``phi(u) = beta u - pi r^2 e^{-u} - e^u / (4 pi)`` (``beta = -(alpha+n)/2``)
    is strictly concave.  Its maximum sits where the two exponentials balance
    against ``beta``; for ``beta = 0`` that is ``t = 2 pi r``.  The trapezoid
    rule runs over the window where ``phi`` lies within ``drop`` of its peak,
    doubling the node count until successive results agree to ``rtol``.
    """

    alpha: float
    dim: int
    drop: float = 50.0
    rtol: float = 1e-13
    start_nodes: int = 64
    max_nodes: int = 1 << 16

    def __post_init__(self):
        if not self.alpha < 0:
            raise ValueError("Bessel potential order alpha must be negative")
        if self.dim < 1:
            raise ValueError("dimension must be >= 1")

    @property
    def beta(self) -> float:
        return -0.5 * (self.alpha + self.dim)

    @property
    def prefactor(self) -> float:
        a, n = self.alpha, self.dim
        return (4 * math.pi) ** (0.5 * a) * TWO_PI ** (0.5 * n) / math.gamma(0.5 * abs(a))

    def at_origin(self) -> float:
        if self.alpha >= -self.dim:
            raise KernelSingularityError(
                f"Bessel potential with alpha={self.alpha} >= -n is singular at the origin"
            )
        b = self.beta
        return self.prefactor * math.exp(special.gammaln(b) + b * math.log(4 * math.pi))

    # radii enter through lr2 = log(r^2) so that tiny r do not underflow

    def _phi(self, u, lr2):
        return self.beta * u - np.exp(_LOG_PI + lr2 - u) - np.exp(u) / (4 * math.pi)

    def _peak(self, lr2: np.ndarray) -> np.ndarray:
        # phi'(u) = beta + pi r^2 e^{-u} - e^u / (4 pi), strictly decreasing in u
        b = self.beta
        lo = np.minimum(lr2, 0.0) - 1.0
        hi = np.maximum(lr2, 0.0) + 1.0
        dphi = lambda u: b + np.exp(_LOG_PI + lr2 - u) - np.exp(u) / (4 * math.pi)
        while np.any(dphi(lo) <= 0):
            lo = np.where(dphi(lo) <= 0, 2.0 * lo - 1.0, lo)
        while np.any(dphi(hi) >= 0):
            hi = np.where(dphi(hi) >= 0, 2.0 * hi + 1.0, hi)
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            pos = dphi(mid) > 0
            lo = np.where(pos, mid, lo)
            hi = np.where(pos, hi, mid)
            if np.all(hi - lo < 1e-13 * (1.0 + np.abs(mid))):
                break
        return 0.5 * (lo + hi)

    def _edge(self, u_star, level, lr2, direction: float) -> np.ndarray:
        # phi is concave, so phi - level changes sign exactly once on each side
        near = u_star.copy()
        step = np.ones_like(u_star)
        far = u_star + direction * step
        while True:
            bad = self._phi(far, lr2) > level
            if not np.any(bad):
                break
            near = np.where(bad, far, near)
            step = np.where(bad, 2.0 * step, step)
            far = np.where(bad, u_star + direction * step, far)
        for _ in range(60):
            mid = 0.5 * (near + far)
            above = self._phi(mid, lr2) > level
            near = np.where(above, mid, near)
            far = np.where(above, far, mid)
        return far

    def log_integral(self, r) -> tuple[np.ndarray, np.ndarray]:
        """``(log of peak factor, scaled integral)`` so that ``w = C e^peak * scaled``."""
        r = np.atleast_1d(np.asarray(r, dtype=float))
        lr2 = 2.0 * np.log(r)
        u_star = self._peak(lr2)
        top = self._phi(u_star, lr2)
        level = top - self.drop
        left = self._edge(u_star, level, lr2, -1.0)
        right = self._edge(u_star, level, lr2, 1.0)
        width = (right - left)[:, None]

        def trap(m):
            z = np.linspace(0.0, 1.0, m + 1)[None, :]
            u = left[:, None] + width * z
            vals = np.exp(self._phi(u, lr2[:, None]) - top[:, None])
            vals[:, 0] *= 0.5
            vals[:, -1] *= 0.5
            return vals.sum(axis=1) * width[:, 0] / m

        m = self.start_nodes
        prev = trap(m)
        while True:
            m *= 2
            cur = trap(m)
            if np.all(np.abs(cur - prev) <= self.rtol * np.abs(cur)):
                return top, cur
            if m >= self.max_nodes:
                raise ArithmeticError("Bessel potential quadrature did not converge")
            prev = cur

    def __call__(self, r):
        r_arr = np.asarray(r, dtype=float)
        flat = np.abs(r_arr.ravel())
        out = np.empty_like(flat)
        zero = flat == 0
        if np.any(zero):
            out[zero] = self.at_origin()
        if np.any(~zero):
            top, scaled = self.log_integral(flat[~zero])
            out[~zero] = self.prefactor * np.exp(top) * scaled
        if r_arr.ndim == 0:
            return float(out[0])
        return out.reshape(r_arr.shape)

    def decay_bound(self, r0: float, theta: float = 0.2) -> float:
        """``M`` with ``w(r) <= M exp(-(1 - theta) r)`` for all ``r >= r0 > 0``.

        Split ``pi r^2/t + t/(4 pi) = theta (...) + (1-theta)(...)``.  The
        second part is at least ``(1-theta) r`` by AM-GM.  The first part is
        decreasing in ``r`` so it may be frozen at ``r0``; the remaining
        integral is ``2 (2 pi r0)^beta K_beta(theta r0)``.
        """
        if not r0 > 0:
            raise ValueError("r0 must be positive")
        b = self.beta
        return self.prefactor * 2.0 * (TWO_PI * r0) ** b * special.kv(b, theta * r0)


def bessel_hat(alpha: float, n: int, x) -> float:
    """Bessel potential ``w_alpha`` at a point (or array of radii when n == 1)."""
    ev = BesselPotentialEvaluator(alpha, n)
    pts, single = as_points(x, n)
    r = _radius(pts)
    if np.any(r == 0) and alpha >= -n:
        raise KernelSingularityError("Bessel potential is singular at x = 0 for alpha >= -n")
    vals = ev(r)
    return float(vals[0]) if single else vals


def bessel_closed_form(n: int, r):
    """``w_{1-n}(r) = (2 pi)^(n/2) e^{-r} / ((2 sqrt(pi))^(n-1) Gamma((n-1)/2) r)``, n >= 2."""
    if n < 2:
        raise ValueError("closed form needs n >= 2")
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise KernelSingularityError("closed-form Bessel potential is singular at r = 0")
    const = TWO_PI ** (0.5 * n) / ((2.0 * math.sqrt(math.pi)) ** (n - 1) * math.gamma(0.5 * (n - 1)))
    return const * np.exp(-r) / r


def bessel_pair(alpha: float, n: int, mode: str = "pointwise", theta: float = 0.2) -> DualKernelPair:
    """``sum (1 + |2 pi k|^2)^(alpha/2) e^{i 2 pi k x} = (2 pi)^(-n/2) sum w_alpha(x - k)``."""
    if mode not in ("pointwise", "weak"):
        raise ValueError("mode must be 'pointwise' or 'weak'")
    if n < 1:
        raise ValueError("dimension must be >= 1")
    alpha = float(alpha)
    if not alpha < 0 or (mode == "pointwise" and alpha >= -n):
        raise ModeError(
            f"pointwise Bessel identity needs alpha < -n (got alpha={alpha}, n={n}); "
            "use weak mode for -n <= alpha < 0"
            if alpha < 0
            else f"Bessel identity needs alpha < 0 (got alpha={alpha})"
        )
    ev = BesselPotentialEvaluator(alpha, n)
    closed = n >= 2 and alpha == 1.0 - n
    norm = TWO_PI ** (-0.5 * n)
    singular = alpha >= -n

    def radial(r):
        if closed:
            return bessel_closed_form(n, r)
        return ev(r)

    def coeff(K):
        K = np.asarray(K, dtype=float)
        return (1.0 + TWO_PI ** 2 * np.einsum("ij,ij->i", K, K)) ** (0.5 * alpha) + 0j

    def profile(Y):
        r = _radius(Y)
        if singular and np.any(r == 0):
            raise KernelSingularityError("Bessel translate kernel is singular on the lattice")
        return norm * radial(r) + 0j

    def freq_tail(R, c):
        if alpha >= -n:
            return math.inf
        # (1 + 4 pi^2 |k|^2)^(a/2) = (2 pi)^a (|k|^2 + (2 pi)^-2)^(a/2)
        return TWO_PI ** alpha * power_tail_bound(-alpha, 1.0 / TWO_PI, R, n, _sup(c))

    decay = 1.0 - theta

    def spatial_tail(R, u, c):
        s = _sup(np.asarray(u) - np.asarray(c))
        r0 = R + 1.0 - s
        if r0 <= 0:
            return math.inf
        return norm * ev.decay_bound(r0, theta) * exp_tail_bound(decay, R, n, s)

    def profile_tail(L):
        M = ev.decay_bound(L, theta)
        area = 2.0 * math.pi ** (0.5 * n) / math.gamma(0.5 * n)
        # int_L^inf r^(n-1) e^{-d r} dr
        integral = special.gammaincc(n, decay * L) * math.gamma(n) / decay ** n
        return norm * M * area * integral

    return DualKernelPair(
        label="bessel",
        dim=n,
        params={"alpha": alpha, "n": n, "mode": mode},
        freq_coeff=coeff,
        freq_scale=TWO_PI,
        freq_peak=np.zeros(n),
        freq_tail=freq_tail,
        profile=profile,
        period=1.0,
        spatial_peak=lambda u: np.asarray(u, dtype=float),
        spatial_tail=spatial_tail,
        mode=mode,
        singular_at_zero=singular,
        profile_tail=profile_tail,
        profile_rtol=0.0 if closed else 10.0 * ev.rtol,
        extra={"closed_form": closed, "evaluator": ev},
    )


# ---------------------------------------------------------------- symbols


def symbol_pair(tau: TestFunction, n: Optional[int] = None) -> DualKernelPair:
    """``sum tau(k) e^{-i x k} = (2 pi)^(n/2) sum tau_hat(x - 2 pi k)`` for a Gaussian-family symbol."""
    if not isinstance(tau, TestFunction):
        raise TypeError("symbol must be a TestFunction with an analytic transform")
    if n is not None and n != tau.dim:
        raise ValueError(f"symbol has dimension {tau.dim}, requested {n}")
    n = tau.dim
    pref = TWO_PI ** (0.5 * n)

    def coeff(K):
        return np.asarray(tau.value(np.asarray(K, dtype=float)), dtype=complex)

    def profile(Y):
        return pref * np.asarray(tau.fourier(Y), dtype=complex)

    def spatial_tail(R, u, c):
        # terms tau_hat(2 pi (u - c - j)); the index set |j| > R is symmetric
        return pref * tau.fourier_tail(R, np.asarray(u) - np.asarray(c), scale=TWO_PI)

    def profile_tail(L):
        # |tau_hat| per atom is |c| a^(n/2) exp(-a |y - m|^2 / 2) and |y| > L forces |y - m| > L - |m|
        total = 0.0
        for atom in tau.atoms:
            reach = max(L - float(np.linalg.norm(atom.modulation)), 0.0)
            total += abs(atom.coef) * atom.width ** (0.5 * n) * _gauss_radial_tail(0.5 * atom.width, reach, n)
        return pref * total

    return DualKernelPair(
        label="symbol",
        dim=n,
        params={"n": n, "symbol": tau.params},
        freq_coeff=coeff,
        freq_scale=-1.0,
        freq_peak=np.asarray(tau.peak, dtype=float),
        freq_tail=lambda R, c: tau.value_tail(R, c),
        profile=profile,
        period=TWO_PI,
        spatial_peak=lambda u: np.asarray(u, dtype=float) - tau.spectral_peak / TWO_PI,
        spatial_tail=spatial_tail,
        real_valued=tau.is_real_even,
        profile_tail=profile_tail,
        extra={"coeff_bound": tau.sup_bound()},
    )
