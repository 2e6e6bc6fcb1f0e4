"""Wilsonian rescaling and the momentum-shell mass shift.

Dropping modes with ``|k| > 1/sigma`` from the free Hamiltonian and
rescaling ``k = s k~`` with ``s = eps/sigma`` restores the cutoff ``1/eps``.
The fields rescale as ``Phi~ = s**((d+1)/2) Phi`` and
``Pi~ = s**((d-1)/2) Pi``, which leaves an overall factor ``s`` in front of the
Hamiltonian (absorbed by ``beta~ = s beta``) and turns the mass term into
``m**2 / s**2``.

To first order in a quartic coupling ``lam/4! int phi**4``, tracing out the
shell ``1/sigma < |k| < 1/eps`` at zero temperature shifts the mass to

    m_phys**2 = m**2 + (lam/2) int_shell d^dk / (2 omega_k),

with the radial measure ``Omega_{d-1} k**(d-1) dk``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

from scipy import integrate

from ..errors import DomainError, ValidationError

__all__ = [
    "WilsonParams",
    "wilson_rescale",
    "field_exponents",
    "rescale_quadratic_hamiltonian",
    "sphere_factor",
    "shell_integral",
    "shell_integral_closed_form",
    "mass_shell_shift",
]


@dataclass(frozen=True)
class WilsonParams:
    """Free-theory parameters: squared mass, inverse temperature, momentum cutoff."""

    m2: object
    beta: object
    cutoff: object


def wilson_rescale(params: WilsonParams, s) -> WilsonParams:
    """Rescale momenta by ``k~ = k/s``.

    Returns ``(m2 / s**2, s beta, cutoff / s)``.  Exact for
    :class:`fractions.Fraction` inputs, so rescaling by ``s`` then ``1/s``
    is the identity.
    """
    if not s > 0:
        raise DomainError(f"scale factor must be positive, got {s!r}")
    return WilsonParams(params.m2 / s**2, params.beta * s, params.cutoff / s)


def field_exponents(d: int) -> tuple[Fraction, Fraction]:
    """Powers of ``s`` in ``Phi~ = s**a Phi`` and ``Pi~ = s**b Pi``."""
    return Fraction(d + 1, 2), Fraction(d - 1, 2)


def _power(s, exponent: Fraction):
    if exponent.denominator == 1:
        return s ** int(exponent)
    return s ** float(exponent)


def rescale_quadratic_hamiltonian(coefficients: Mapping[str, object], s, d: int) -> tuple[object, dict]:
    """Rewrite ``1/2 int dk (c_pi Pi**2 + (c_k2 k**2 + c_m2) Phi**2)`` in rescaled variables.

    Each term picks up ``s**d`` from the measure, ``s**2`` per power of
    ``k**2`` and ``s**(-2a)`` from its field.  The overall prefactor is the
    factor of the ``Pi**2`` term; the returned coefficients are divided by
    it.

    Returns
    -------
    prefactor, dict
        ``s`` and ``{"pi2": 1, "k2": c_k2, "m2": c_m2 / s**2}`` for the free field.
    """
    unknown = set(coefficients) - {"pi2", "k2", "m2"}
    if unknown:
        raise ValidationError(f"unknown coefficients {sorted(unknown)}")
    a_phi, a_pi = field_exponents(d)
    measure = s**d
    raw = {
        "pi2": coefficients.get("pi2", 1) * measure / _power(s, 2 * a_pi),
        "k2": coefficients.get("k2", 1) * measure * s**2 / _power(s, 2 * a_phi),
        "m2": coefficients.get("m2", 0) * measure / _power(s, 2 * a_phi),
    }
    pref = raw["pi2"] / coefficients.get("pi2", 1)
    return pref, {k: v / pref for k, v in raw.items()}


def sphere_factor(d: int, measure: str = "two-ray") -> float:
    """Surface area of the unit sphere in ``d`` dimensions.

    In one dimension ``"two-ray"`` counts both signs of ``k`` (factor 2) and
    ``"single-ray"`` only ``k > 0`` (factor 1).
    """
    if d == 1:
        if measure not in ("two-ray", "single-ray"):
            raise ValidationError("measure must be 'two-ray' or 'single-ray'")
        return 2.0 if measure == "two-ray" else 1.0
    if d in (2, 3):
        return 2.0 * math.pi ** (d / 2.0) / math.gamma(d / 2.0)
    raise ValidationError(f"dimension must be 1, 2 or 3, got {d}")


def _check_shell(m, ir, uv, d):
    if d not in (1, 2, 3):
        raise ValidationError(f"dimension must be 1, 2 or 3, got {d}")
    if m < 0 or ir < 0:
        raise DomainError("mass and infrared scale must be nonnegative")
    if ir > uv:
        raise DomainError(f"inverted shell: infrared scale {ir:g} above ultraviolet cutoff {uv:g}")
    if m == 0 and ir == 0 and d == 1 and uv > 0:
        raise DomainError("massless shell integral diverges at k = 0 in one dimension")


def shell_integral(m: float, ir: float, uv: float, d: int = 1, measure: str = "two-ray") -> float:
    """``int_ir^uv Omega_{d-1} k**(d-1) dk / (2 omega_k)`` by adaptive quadrature."""
    _check_shell(m, ir, uv, d)
    if ir == uv:
        return 0.0
    omega = sphere_factor(d, measure)
    val, _ = integrate.quad(lambda k: k ** (d - 1) / (2.0 * math.sqrt(k * k + m * m)),
                            ir, uv, epsabs=0.0, epsrel=1e-13, limit=200)
    return omega * val


def shell_integral_closed_form(m: float, ir: float, uv: float, d: int = 1, measure: str = "two-ray") -> float:
    """Antiderivative form of :func:`shell_integral`.

    ``d = 1``: ``asinh(k/m)/2``; ``d = 2``: ``omega_k/2``;
    ``d = 3``: ``(k omega_k - m**2 asinh(k/m))/4``.
    """
    _check_shell(m, ir, uv, d)
    omega = sphere_factor(d, measure)

    def prim(k):
        w = math.sqrt(k * k + m * m)
        if d == 1:
            return 0.5 * math.asinh(k / m) if m > 0 else 0.5 * math.log(k)
        if d == 2:
            return 0.5 * w
        return 0.25 * (k * w - (m * m * math.asinh(k / m) if m > 0 else 0.0))

    return omega * (prim(uv) - prim(ir))


def mass_shell_shift(m: float, lam: float, uv: float, ir: float, d: int = 1,
                     measure: str = "two-ray") -> float:
    """Physical squared mass after integrating out the shell ``ir < |k| < uv``."""
    if lam == 0:
        _check_shell(m, ir, uv, d)
        return m * m
    return m * m + 0.5 * lam * shell_integral(m, ir, uv, d, measure)
