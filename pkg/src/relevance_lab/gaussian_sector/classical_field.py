"""Relevance of observables of a Gaussian classical scalar field.

Around a translation-invariant Gaussian state the field modes decouple and
each behaves like the blurred classical particle: the inverse covariance
eigenvalue ``a_k`` plays the role of ``1/tau**2`` and ``h**2 exp(k**2 sigma**2)``
plays the role of the blur variance.  Hence

    eta = prod_i (1 + a_{k_i} h**2 exp(k_i**2 sigma**2))**(-n_i)

for the product of Hermite polynomials of degree ``n_i`` in distinct modes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..errors import DomainError, ValidationError, WindowError

__all__ = [
    "FieldLattice",
    "ClassicalFieldTheory",
    "SmearingParams",
    "classical_mode_relevance",
    "phi_squared_relevance",
    "phi_laplacian_phi_relevance",
    "scaling_exponent",
    "ScalingFit",
]


@dataclass(frozen=True)
class FieldLattice:
    """Periodic hypercubic lattice with ``extent`` sites per dimension.

    Its modes are the discrete Fourier wavevectors, each component a
    multiple of ``2 pi / (extent * spacing)`` with ``|k_i| <= pi / spacing``.
    """

    d: int
    spacing: float
    extent: int

    def __post_init__(self):
        if self.d not in (1, 2, 3):
            raise ValidationError(f"dimension must be 1, 2 or 3, got {self.d}")
        if not self.spacing > 0 or self.extent < 1:
            raise ValidationError("spacing must be positive and extent at least 1")

    @property
    def n_modes(self) -> int:
        return self.extent**self.d

    def axis_wavenumbers(self) -> np.ndarray:
        return 2.0 * np.pi * np.fft.fftfreq(self.extent, d=self.spacing)

    def k_squared(self) -> np.ndarray:
        """``|k|**2`` for every mode, as a flat array."""
        k2 = self.axis_wavenumbers() ** 2
        total = k2
        for _ in range(self.d - 1):
            total = np.add.outer(total, k2)
        return total.ravel()

    def modes(self) -> np.ndarray:
        """All wavevectors, shape ``(n_modes, d)``; avoid for large lattices."""
        ax = self.axis_wavenumbers()
        grids = np.meshgrid(*([ax] * self.d), indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=1)


@dataclass(frozen=True)
class ClassicalFieldTheory:
    """Thermal free field with inverse covariance eigenvalues ``a_k``.

    By default ``a_k = beta (|k|**2 + m**2)``, so ``a_0 = beta m**2``.  Setting
    ``mass_outside_beta`` uses ``a_k = beta |k|**2 + m**2`` instead.
    """

    beta: float
    m: float
    mass_outside_beta: bool = False

    def __post_init__(self):
        if not self.beta > 0 or self.m < 0:
            raise ValidationError("need beta > 0 and m >= 0")

    def a(self, k2):
        k2 = np.asarray(k2, dtype=float)
        if self.mass_outside_beta:
            return self.beta * k2 + self.m**2
        return self.beta * (k2 + self.m**2)


@dataclass(frozen=True)
class SmearingParams:
    """Spatial precision ``sigma`` and field-value precisions.

    ``h`` is the classical field uncertainty; ``h_phi`` and ``h_pi`` are the
    quantum ones (default to ``h``).  ``kernel_normalization`` selects how
    the smearing kernel is scaled: ``"unit"`` gives mode factors
    ``X_k = exp(-k**2 sigma**2 / 2)`` exactly, while ``"average"`` divides
    the kernel by ``(2 pi sigma**2)**(d/2)`` so that it averages over a
    region of size ``sigma``.  The averaging kernel is equivalent to the
    unit one with ``h_eff = h (2 pi sigma**2)**(d/2)``.
    """

    sigma: float
    h: float = 1.0
    h_phi: float | None = None
    h_pi: float | None = None
    kernel_normalization: str = "unit"

    def __post_init__(self):
        if self.sigma < 0 or self.h < 0:
            raise ValidationError("sigma and h must be nonnegative")
        for name in ("h_phi", "h_pi"):
            val = getattr(self, name)
            if val is None:
                object.__setattr__(self, name, self.h)
            elif val < 0:
                raise ValidationError(f"{name} must be nonnegative")
        if self.kernel_normalization not in ("unit", "average"):
            raise ValidationError("kernel_normalization must be 'unit' or 'average'")

    def X(self, k2):
        return np.exp(-0.5 * np.asarray(k2, dtype=float) * self.sigma**2)

    def h_effective(self, d: int, h: float | None = None) -> float:
        h = self.h if h is None else h
        if self.kernel_normalization == "average":
            return h * (2.0 * np.pi * self.sigma**2) ** (d / 2.0)
        return h


def _mode_eta(k2, n, theory: ClassicalFieldTheory, smear: SmearingParams, d: int):
    a = theory.a(k2)
    he = smear.h_effective(d)
    with np.errstate(over="ignore"):
        return (1.0 + a * he * he * np.exp(np.asarray(k2) * smear.sigma**2)) ** (-np.asarray(n))


def classical_mode_relevance(modes: Sequence, degrees: Sequence[int],
                             theory: ClassicalFieldTheory, smear: SmearingParams) -> float:
    """Relevance of ``prod_i He_{n_i}(sqrt(a_{k_i}) phi_{k_i}) / sqrt(n_i!)``.

    Parameters
    ----------
    modes : sequence
        Distinct wavevectors; scalars are read as one-dimensional.
    degrees : sequence of int
        Positive degree for each mode.
    """
    ks = [np.atleast_1d(np.asarray(k, dtype=float)) for k in modes]
    if len(ks) != len(degrees):
        raise ValidationError("need one degree per mode")
    if not ks:
        return 1.0
    d = ks[0].size
    if any(k.size != d for k in ks):
        raise ValidationError("wavevectors have different dimensions")
    if len({tuple(k) for k in ks}) != len(ks):
        raise DomainError("modes must be distinct")
    if any(int(n) != n or n < 1 for n in degrees):
        raise DomainError("degrees must be positive integers")
    k2 = np.array([float(k @ k) for k in ks])
    return float(np.prod(_mode_eta(k2, np.asarray(degrees, dtype=float), theory, smear, d)))


def _weighted_relevance(weights, k2, theory, smear, d) -> float:
    eta2 = _mode_eta(k2, 2.0, theory, smear, d)
    return float(np.sum(weights * eta2) / np.sum(weights))


def _singular_check(theory: ClassicalFieldTheory, k2):
    a = theory.a(k2)
    if np.any(a <= 0):
        raise DomainError("a zero-mode has a_k = 0 (massless field): the quadratic relevance is singular")
    return a


def phi_squared_relevance(lattice: FieldLattice, theory: ClassicalFieldTheory,
                          smear: SmearingParams) -> float:
    """Relevance of the centred ``int phi**2``.

    Its expansion in eigenfeatures has coefficient ``sqrt 2 / a_k`` on each
    mode's second Hermite feature, so
    ``eta = sum a_k**-2 eta_{k,2} / sum a_k**-2``.
    """
    k2 = lattice.k_squared()
    a = _singular_check(theory, k2)
    return _weighted_relevance(a**-2.0, k2, theory, smear, lattice.d)


def phi_laplacian_phi_relevance(lattice: FieldLattice, theory: ClassicalFieldTheory,
                                smear: SmearingParams) -> float:
    """Relevance of the centred ``int phi Laplacian phi = -sum_k k**2 phi_k**2``.

    Mode weights are ``k**4 / a_k**2``; the zero mode drops out.
    """
    k2 = lattice.k_squared()
    a = _singular_check(theory, k2)
    return _weighted_relevance(k2**2 * a**-2.0, k2, theory, smear, lattice.d)


@dataclass(frozen=True)
class ScalingFit:
    slope: float
    intercept: float
    nonlinearity: float
    values: np.ndarray
    etas: np.ndarray


_KINDS = {"phi2": phi_squared_relevance, "phi_laplacian_phi": phi_laplacian_phi_relevance}


def scaling_exponent(observable_kind: str, lattice: FieldLattice, theory: ClassicalFieldTheory,
                     h: float, sigma_range, variable: str = "sigma", points: int = 9,
                     sigma: float | None = None, max_nonlinearity: float = 0.1) -> ScalingFit:
    """Log-log slope of the relevance against ``sigma`` or ``h``.

    Parameters
    ----------
    observable_kind : {"phi2", "phi_laplacian_phi"}
    h : float
        Field uncertainty, held fixed when ``variable == "sigma"``.
    sigma_range : (float, float)
        Window of the swept variable (``sigma`` or ``h``).
    sigma : float, optional
        Spatial precision held fixed when ``variable == "h"``.
    max_nonlinearity : float
        Largest allowed change of the local slope across the window,
        relative to the fitted slope.

    Raises
    ------
    WindowError
        If the local slope varies by more than ``max_nonlinearity``.
    """
    if observable_kind not in _KINDS:
        raise ValidationError(f"unknown observable kind {observable_kind!r}")
    lo, hi = map(float, sigma_range)
    if not 0 < lo < hi:
        raise ValidationError("window must satisfy 0 < lo < hi")
    if variable not in ("sigma", "h"):
        raise ValidationError("variable must be 'sigma' or 'h'")
    if variable == "h" and sigma is None:
        raise ValidationError("a fixed sigma is needed for an h sweep")
    f = _KINDS[observable_kind]
    xs = np.geomspace(lo, hi, points)
    etas = np.array([
        f(lattice, theory, SmearingParams(x, h) if variable == "sigma" else SmearingParams(sigma, x))
        for x in xs
    ])
    lx, ly = np.log(xs), np.log(etas)
    slope, intercept = np.polyfit(lx, ly, 1)
    local = np.diff(ly) / np.diff(lx)
    nonlin = float((local.max() - local.min()) / abs(slope)) if slope != 0 else math.inf
    if nonlin > max_nonlinearity:
        raise WindowError(
            f"{observable_kind} is not a power law in {variable} on [{lo:g}, {hi:g}]: "
            f"local slope ranges over [{local.min():.3f}, {local.max():.3f}]"
        )
    return ScalingFit(float(slope), float(intercept), nonlin, xs, etas)
