"""Randomized invariant suite for the Kubo-Mori metric and Kraus channels.

Each trial draws a full-rank state, a Kraus channel and a traceless
feature, then checks:

* ``0 <= eta <= 1`` (metric contraction),
* positivity of the metric Gram matrix on a random feature set,
* the Hilbert-Schmidt adjoint identity ``Tr(B E(A)) = Tr(E^dag(B) A)`` and its
  metric counterpart for the recovery map,
* ``omega_apply`` against Gauss-Legendre quadrature of
  ``int_0^1 rho^(1-s) A rho^s ds``,
* the quadratic expansion of relative entropy, through the log-log slope of
  the residual ``|S(rho + eps X || rho) - eps**2 <X, X>_rho / 2|``.

Features have unit metric norm and the slope is fitted over
``eps`` in ``[1e-2, 1e-4]``.  When the cubic coefficient of a random feature
happens to be small, the quartic term still matters at ``eps = 1e-2`` and the
full-window slope drops below 3 (about one trial in a hundred).  The slope
over the three smallest ``eps`` is recorded alongside as a diagnostic.

The suite is shared by the ``quantum-props`` command and the test modules.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channels import random_kraus_channel
from .kubo_mori import (
    DensityMatrix,
    inner_product,
    omega_apply,
    omega_inverse,
    relative_entropy,
    relevance,
)

__all__ = [
    "random_density_matrix",
    "random_feature",
    "omega_quadrature",
    "entropy_expansion_slope",
    "TrialRecord",
    "PropertyReport",
    "run_property_suite",
]

ETA_SLACK = 1e-12
ADJOINT_TOL = 1e-9
OMEGA_TOL = 1e-10
MIN_SLOPE = 2.9
EPSILONS = np.geomspace(1e-2, 1e-4, 5)


def random_density_matrix(dim: int, rng=None, mix: float = 0.05) -> DensityMatrix:
    """Ginibre density matrix mixed with a little of the maximally mixed state."""
    rng = np.random.default_rng(rng)
    G = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    W = G @ G.conj().T
    W /= np.trace(W).real
    return DensityMatrix.from_unnormalized((1 - mix) * W + mix * np.eye(dim) / dim)


def random_feature(rho: DensityMatrix, rng=None, normalize: bool = True) -> np.ndarray:
    """Random traceless Hermitian feature, scaled to unit metric norm by default."""
    rng = np.random.default_rng(rng)
    d = rho.dim
    G = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    X = G + G.conj().T
    X -= np.trace(X).real / d * np.eye(d)
    if normalize:
        X /= np.sqrt(inner_product(rho, X, X))
    return X


def omega_quadrature(rho: DensityMatrix, A, nodes: int = 64) -> np.ndarray:
    """``int_0^1 rho^(1-s) A rho^s ds`` by Gauss-Legendre quadrature on matrix powers."""
    s, w = np.polynomial.legendre.leggauss(nodes)
    s = 0.5 * (s + 1.0)
    w = 0.5 * w
    p, U = rho.eigenvalues, rho.eigenvectors
    out = np.zeros_like(np.asarray(A, dtype=complex))
    for sk, wk in zip(s, w):
        left = (U * p ** (1 - sk)) @ U.conj().T
        right = (U * p**sk) @ U.conj().T
        out += wk * left @ A @ right
    return out


def entropy_expansion_slope(rho: DensityMatrix, X, epsilons=EPSILONS, factor: float = 0.5) -> float:
    """Log-log slope of ``|S(rho + eps X || rho) - factor eps**2 <X, X>|`` against ``eps``.

    ``factor=0.5`` is the second-order Taylor coefficient of relative entropy
    and gives a slope near 3.  ``factor=1`` drops the one-half and the slope
    falls to 2.
    """
    g = inner_product(rho, X, X)
    eps = np.asarray(epsilons, dtype=float)
    resid = []
    for e in eps:
        shifted = DensityMatrix(rho.matrix + e * X, floor=0.0)
        resid.append(abs(relative_entropy(shifted, rho) - factor * e * e * g))
    slope, _ = np.polyfit(np.log(eps), np.log(resid), 1)
    return float(slope)


@dataclass
class TrialRecord:
    dim: int
    trial: int
    eta: float
    gram_min: float
    adjoint_err: float
    recovery_err: float
    omega_err: float
    slope: float
    slope_tail: float
    slope_unhalved: float

    def violations(self) -> list[str]:
        out = []
        if not (-ETA_SLACK <= self.eta <= 1 + ETA_SLACK):
            out.append("eta")
        if not self.gram_min > 0:
            out.append("positivity")
        if self.adjoint_err > ADJOINT_TOL or self.recovery_err > ADJOINT_TOL:
            out.append("adjoint")
        if self.omega_err > OMEGA_TOL:
            out.append("omega")
        if self.slope < MIN_SLOPE:
            out.append("entropy_slope")
        return out


@dataclass
class PropertyReport:
    seed: int
    records: list[TrialRecord] = field(default_factory=list)

    COLUMNS = ("dim", "trial", "eta", "gram_min", "adjoint_err", "recovery_err",
               "omega_err", "slope", "slope_tail", "slope_unhalved")

    @property
    def violations(self) -> dict[str, int]:
        counts = {k: 0 for k in ("eta", "positivity", "adjoint", "omega", "entropy_slope")}
        for r in self.records:
            for v in r.violations():
                counts[v] += 1
        return counts

    @property
    def ok(self) -> bool:
        return not any(self.violations.values())

    def worst(self) -> dict[str, float]:
        recs = self.records
        return {
            "eta_min": min(r.eta for r in recs),
            "eta_max": max(r.eta for r in recs),
            "gram_min": min(r.gram_min for r in recs),
            "adjoint_err": max(max(r.adjoint_err, r.recovery_err) for r in recs),
            "omega_err": max(r.omega_err for r in recs),
            "slope_min": min(r.slope for r in recs),
            "slope_tail_min": min(r.slope_tail for r in recs),
            "slope_unhalved_max": max(r.slope_unhalved for r in recs),
        }

    def rows(self) -> list[tuple]:
        return [tuple(getattr(r, c) for c in self.COLUMNS) for r in self.records]


def _trial(dim: int, trial: int, rng: np.random.Generator) -> TrialRecord:
    rho = random_density_matrix(dim, rng)
    # output rank is at most dim * n_kraus, so dim_out <= dim keeps E(rho) full rank
    dim_out = int(rng.integers(2, dim + 1))
    n_kraus = int(rng.integers(max(2, -(-dim // dim_out)), dim + 2))
    channel = random_kraus_channel(dim, dim_out, n_kraus, rng)
    X = random_feature(rho, rng)
    eta = relevance(rho, channel, X)

    feats = np.array([random_feature(rho, rng, normalize=False) for _ in range(dim * dim - 1)])
    gram = np.array([[inner_product(rho, a, b) for b in feats] for a in feats])
    gram_min = float(np.linalg.eigvalsh(gram)[0])

    A = random_feature(rho, rng, normalize=False)
    B = rng.normal(size=(dim_out, dim_out)) + 1j * rng.normal(size=(dim_out, dim_out))
    B = B + B.conj().T
    lhs = np.trace(B @ channel.apply(A))
    rhs = np.trace(channel.adjoint(B) @ A)
    adjoint_err = float(abs(lhs - rhs) / max(1.0, abs(lhs)))

    out = channel.apply_state(rho)
    Y = B - np.trace(out.matrix @ B).real * np.eye(dim_out)
    Y = omega_apply(out, Y)
    R = omega_apply(rho, channel.adjoint(omega_inverse(out, Y)))
    m1 = inner_product(out, channel.apply(A), Y)
    m2 = inner_product(rho, A, R)
    recovery_err = float(abs(m1 - m2) / max(1.0, abs(m1)))

    O = omega_apply(rho, A)
    Q = omega_quadrature(rho, A)
    omega_err = float(np.max(np.abs(O - Q)) / max(1.0, np.max(np.abs(O))))

    return TrialRecord(dim, trial, float(eta), gram_min, adjoint_err, recovery_err, omega_err,
                       entropy_expansion_slope(rho, X),
                       entropy_expansion_slope(rho, X, EPSILONS[-3:]),
                       entropy_expansion_slope(rho, X, factor=1.0))


def run_property_suite(dims=(2, 3, 4, 6), trials: int = 100, seed: int = 0) -> PropertyReport:
    """Run ``trials`` random triples for each dimension from one seeded generator."""
    rng = np.random.default_rng(seed)
    report = PropertyReport(seed=seed)
    for d in dims:
        for t in range(trials):
            report.records.append(_trial(int(d), t, rng))
    return report
