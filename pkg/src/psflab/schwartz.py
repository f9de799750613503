r"""Gaussian test functions with exact Fourier transforms, and dyadic windows.

Fourier convention (unitary)::

    \hat f(\xi) = (2\pi)^{-n/2} \int e^{-i x \xi} f(x) dx

A :class:`TestFunction` is a finite linear combination of atoms

.. math:: c\, e^{i m x} \exp(-|x - h|^2 / (2a)),

whose transforms are :math:`c\, a^{n/2} e^{-i h(\xi - m)} e^{-a|\xi - m|^2/2}`.
The family is closed under shifts, modulations and sums.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .lattice import gaussian_tail_bound

__all__ = [
    "GaussianAtom",
    "TestFunction",
    "gaussian",
    "shift_modulate",
    "smooth_step",
    "phi0",
    "dyadic_window",
    "battery",
]


def as_points(x, n: int) -> tuple[np.ndarray, bool]:
    """Coerce ``x`` to an ``(m, n)`` float array; flag whether a single point was given."""
    arr = np.asarray(x, dtype=float)
    if n == 1 and arr.ndim <= 1:
        single = arr.ndim == 0
        return arr.reshape(-1, 1), single
    if arr.ndim == 1:
        if arr.shape[0] != n:
            raise ValueError(f"expected a point of dimension {n}, got shape {arr.shape}")
        return arr.reshape(1, n), True
    if arr.shape[-1] != n:
        raise ValueError(f"expected points of dimension {n}, got shape {arr.shape}")
    return arr.reshape(-1, n), False


def _vec(v, n: int) -> np.ndarray:
    out = np.broadcast_to(np.asarray(v, dtype=float), (n,)).copy()
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class GaussianAtom:
    coef: complex
    width: float
    shift: np.ndarray
    modulation: np.ndarray

    def value(self, pts: np.ndarray) -> np.ndarray:
        d = pts - self.shift
        r2 = np.einsum("ij,ij->i", d, d)
        phase = pts @ self.modulation
        return self.coef * np.exp(1j * phase - r2 / (2.0 * self.width))

    def fourier(self, pts: np.ndarray) -> np.ndarray:
        n = pts.shape[1]
        d = pts - self.modulation
        r2 = np.einsum("ij,ij->i", d, d)
        phase = -(d @ self.shift)
        return self.coef * self.width ** (0.5 * n) * np.exp(1j * phase - 0.5 * self.width * r2)


@dataclass(frozen=True)
class TestFunction:
    """Schwartz probe given by value and analytic Fourier transform."""

    __test__ = False  # keep pytest from collecting this class

    dim: int
    atoms: tuple[GaussianAtom, ...]

    def __post_init__(self):
        if self.dim < 1 or not self.atoms:
            raise ValueError("a test function needs dim >= 1 and at least one atom")
        for atom in self.atoms:
            if not atom.width > 0:
                raise ValueError("Gaussian width must be positive")

    # -- evaluation --------------------------------------------------------

    def value(self, x):
        pts, single = as_points(x, self.dim)
        out = sum(atom.value(pts) for atom in self.atoms)
        return complex(out[0]) if single else out

    def fourier(self, xi):
        pts, single = as_points(xi, self.dim)
        out = sum(atom.fourier(pts) for atom in self.atoms)
        return complex(out[0]) if single else out

    # -- descriptors -------------------------------------------------------

    @property
    def decay_class(self) -> str:
        if len(self.atoms) > 1:
            return "combination"
        atom = self.atoms[0]
        if np.any(atom.modulation != 0):
            return "modulated-gaussian"
        if np.any(atom.shift != 0):
            return "shifted-gaussian"
        return "gaussian"

    @property
    def params(self) -> dict:
        return {
            "dim": self.dim,
            "atoms": [
                {
                    "coef": [atom.coef.real, atom.coef.imag],
                    "width": atom.width,
                    "shift": atom.shift.tolist(),
                    "modulation": atom.modulation.tolist(),
                }
                for atom in self.atoms
            ],
        }

    @property
    def is_real_even(self) -> bool:
        return all(
            atom.coef.imag == 0 and not np.any(atom.shift) and not np.any(atom.modulation)
            for atom in self.atoms
        )

    @property
    def peak(self) -> np.ndarray:
        return np.asarray(self.atoms[0].shift)

    @property
    def spectral_peak(self) -> np.ndarray:
        return np.asarray(self.atoms[0].modulation)

    def l1_norm_bound(self) -> float:
        return sum(abs(a.coef) * (2.0 * math.pi * a.width) ** (0.5 * self.dim) for a in self.atoms)

    def sup_bound(self) -> float:
        return sum(abs(a.coef) for a in self.atoms)

    def fourier_sup_bound(self) -> float:
        return sum(abs(a.coef) * a.width ** (0.5 * self.dim) for a in self.atoms)

    # -- tails of lattice samples -------------------------------------------

    def value_tail(self, R: int, center, scale: float = 1.0, offset=0.0) -> float:
        """Bound on ``sum_{|j|_inf > R} |value(offset + scale (center + j))|``."""
        total = 0.0
        c = _vec(center, self.dim)
        off = _vec(offset, self.dim)
        for atom in self.atoms:
            peak = (atom.shift - off) / scale
            total += abs(atom.coef) * gaussian_tail_bound(
                scale * scale / (2.0 * atom.width), R, self.dim, float(np.max(np.abs(peak - c)))
            )
        return total

    def fourier_tail(self, R: int, center, scale: float = 1.0, offset=0.0) -> float:
        """Bound on ``sum_{|j|_inf > R} |fourier(offset + scale (center + j))|``."""
        total = 0.0
        c = _vec(center, self.dim)
        off = _vec(offset, self.dim)
        for atom in self.atoms:
            peak = (atom.modulation - off) / scale
            total += abs(atom.coef) * atom.width ** (0.5 * self.dim) * gaussian_tail_bound(
                0.5 * atom.width * scale * scale, R, self.dim, float(np.max(np.abs(peak - c)))
            )
        return total

    # -- algebra -------------------------------------------------------------

    def __add__(self, other: "TestFunction") -> "TestFunction":
        if not isinstance(other, TestFunction) or other.dim != self.dim:
            return NotImplemented
        return TestFunction(self.dim, self.atoms + other.atoms)

    def scaled(self, c: complex) -> "TestFunction":
        atoms = tuple(
            GaussianAtom(complex(c) * a.coef, a.width, a.shift, a.modulation) for a in self.atoms
        )
        return TestFunction(self.dim, atoms)

    def __sub__(self, other: "TestFunction") -> "TestFunction":
        return self + other.scaled(-1.0)

    def __mul__(self, other: "TestFunction") -> "TestFunction":
        """Pointwise product; Gaussian atoms multiply to Gaussian atoms."""
        if not isinstance(other, TestFunction) or other.dim != self.dim:
            return NotImplemented
        atoms = []
        for p in self.atoms:
            for q in other.atoms:
                a = 1.0 / (1.0 / p.width + 1.0 / q.width)
                h = a * (p.shift / p.width + q.shift / q.width)
                expo = -0.5 * (p.shift @ p.shift / p.width + q.shift @ q.shift / q.width - h @ h / a)
                atoms.append(GaussianAtom(p.coef * q.coef * math.exp(expo), a, _vec(h, self.dim),
                                          _vec(p.modulation + q.modulation, self.dim)))
        return TestFunction(self.dim, tuple(atoms))

    def hat(self) -> "TestFunction":
        """The Fourier transform, which is again in the family."""
        atoms = tuple(
            GaussianAtom(a.coef * a.width ** (0.5 * self.dim) * complex(np.exp(1j * float(a.shift @ a.modulation))),
                         1.0 / a.width, a.modulation, _vec(-a.shift, self.dim))
            for a in self.atoms
        )
        return TestFunction(self.dim, atoms)


def gaussian(a: float, n: int) -> TestFunction:
    """``exp(-|x|^2 / (2a))`` on R^n; its transform is ``a^(n/2) exp(-a |xi|^2 / 2)``."""
    if not a > 0:
        raise ValueError("width a must be positive")
    if n < 1:
        raise ValueError("dimension must be >= 1")
    zero = _vec(0.0, n)
    return TestFunction(n, (GaussianAtom(1.0 + 0j, float(a), zero, zero),))


def shift_modulate(f: TestFunction, h=0.0, m=0.0) -> TestFunction:
    """Return ``x -> exp(i m x) f(x - h)``."""
    h = _vec(h, f.dim)
    m = _vec(m, f.dim)
    atoms = []
    for atom in f.atoms:
        coef = atom.coef * complex(np.exp(-1j * float(atom.modulation @ h)))
        atoms.append(GaussianAtom(coef, atom.width, _vec(atom.shift + h, f.dim), _vec(atom.modulation + m, f.dim)))
    return TestFunction(f.dim, tuple(atoms))


def battery(n: int = 1, widths: Sequence[float] = (0.25, 1.0, 4.0)) -> list[tuple[str, TestFunction]]:
    """Twelve labelled probes: three widths, each plain, shifted, modulated and both."""
    out = []
    h = np.linspace(0.3, 0.3 + 0.1 * (n - 1), n)
    m = np.linspace(1.0, 1.0 - 0.25 * (n - 1), n)
    for a in widths:
        g = gaussian(a, n)
        out.append((f"gauss(a={a})", g))
        out.append((f"gauss(a={a},h)", shift_modulate(g, h=h)))
        out.append((f"gauss(a={a},m)", shift_modulate(g, m=m)))
        out.append((f"gauss(a={a},h,m)", shift_modulate(g, h=h, m=m)))
    return out


# ------------------------------------------------------------ dyadic windows


def _g(u):
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    pos = u > 0
    out[pos] = np.exp(-1.0 / u[pos])
    return out


def smooth_step(u):
    """C-infinity step: 0 for u <= 0, 1 for u >= 1."""
    u = np.asarray(u, dtype=float)
    a, b = _g(u), _g(1.0 - u)
    return a / (a + b)


def phi0(x, n: int = 1):
    """Radial bump equal to 1 on ``|x| <= 1`` and 0 on ``|x| >= 3/2``."""
    pts, single = as_points(x, n)
    r = np.sqrt(np.einsum("ij,ij->i", pts, pts))
    out = 1.0 - smooth_step(2.0 * (r - 1.0))
    return float(out[0]) if single else out


def dyadic_window(j: int, x, n: int = 1):
    """Level ``j`` of the dyadic resolution of unity built from :func:`phi0`."""
    if j < 0:
        raise ValueError("level must be >= 0")
    pts, single = as_points(x, n)
    if j == 0:
        out = phi0(pts, n)
    else:
        out = phi0(pts * 2.0 ** (-j), n) - phi0(pts * 2.0 ** (1 - j), n)
    out = np.asarray(out, dtype=float)
    return float(out[0]) if single else out
