"""Kubo-Mori (Bogoliubov) information metric.

States are either classical probability vectors on a uniform grid or
full-rank density matrices.  The superoperator ``Omega_rho`` is the
operator derivative of the exponential at ``log(rho)``; in the eigenbasis of
``rho`` it multiplies matrix entries by the logarithmic mean of the
corresponding eigenvalues, and classically it is multiplication by ``p``.

Features (tangent vectors, usually traceless) and observables (their
duals) are plain numpy arrays: vectors for classical states, square
matrices for quantum ones.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, DomainError, RankError, ValidationError

__all__ = [
    "ClassicalState",
    "DensityMatrix",
    "as_state",
    "log_mean",
    "omega_apply",
    "omega_inverse",
    "inner_product",
    "center",
    "is_centered",
    "relevance",
    "relative_entropy",
]

logger = logging.getLogger(__name__)

#: relative distance ``|a/b - 1|`` under which the logarithmic mean is
#: evaluated from its Taylor series
LOG_MEAN_SERIES_THRESHOLD = 1e-8
DEFAULT_FLOOR = 1e-12


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class ClassicalState:
    """Probability masses on a uniform one-dimensional grid.

    ``probs`` are cell masses (density times spacing), so sums over the grid
    approximate integrals directly.

    Parameters
    ----------
    grid : array_like
        Strictly increasing, uniformly spaced sample points.
    probs : array_like
        Strictly positive masses summing to one.
    floor : float
        Masses must exceed this value.  The default accepts any positive
        mass, since Gaussian tails on a padded grid are legitimately tiny.
    """

    grid: np.ndarray
    probs: np.ndarray
    floor: float = 0.0

    is_quantum = False

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        probs = np.asarray(self.probs, dtype=float)
        if grid.ndim != 1 or probs.shape != grid.shape:
            raise DimensionError(
                f"grid {grid.shape} and probs {probs.shape} must be equal-length vectors"
            )
        if grid.size > 1:
            steps = np.diff(grid)
            if np.any(steps <= 0):
                raise ValidationError("grid must be strictly increasing")
            if np.ptp(steps) > 1e-12 * max(abs(steps[0]), 1.0) * grid.size:
                raise ValidationError("grid spacing is not uniform")
        if not np.all(np.isfinite(probs)):
            raise ValidationError("probabilities must be finite")
        if abs(probs.sum() - 1.0) > 1e-12:
            raise ValidationError(f"probabilities sum to {probs.sum()!r}, not 1")
        if np.any(probs <= self.floor):
            raise RankError(
                f"state is not full rank: min mass {probs.min():.3e} <= floor {self.floor:.1e}"
            )
        object.__setattr__(self, "grid", _readonly(grid))
        object.__setattr__(self, "probs", _readonly(probs))

    @classmethod
    def from_weights(cls, grid, weights, floor: float = 0.0) -> "ClassicalState":
        """Normalise nonnegative ``weights`` into a state on ``grid``."""
        w = np.asarray(weights, dtype=float)
        return cls(grid, w / w.sum(), floor=floor)

    @property
    def dim(self) -> int:
        return self.probs.size

    @property
    def payload(self) -> np.ndarray:
        return self.probs

    @property
    def spacing(self) -> float:
        return float(self.grid[1] - self.grid[0]) if self.dim > 1 else 1.0

    def expectation(self, A) -> float:
        return float(np.dot(self.probs, _check_classical(self, A)))


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Full-rank density matrix with a cached eigendecomposition."""

    matrix: np.ndarray
    floor: float = DEFAULT_FLOOR
    eigenvalues: np.ndarray = field(init=False, repr=False)
    eigenvectors: np.ndarray = field(init=False, repr=False)

    is_quantum = True

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
            raise DimensionError(f"density matrix must be square, got {m.shape}")
        if np.max(np.abs(m - m.conj().T)) > 1e-12:
            raise ValidationError("density matrix is not Hermitian")
        m = 0.5 * (m + m.conj().T)
        tr = np.trace(m).real
        if abs(tr - 1.0) > 1e-12:
            raise ValidationError(f"density matrix has trace {tr!r}, not 1")
        w, v = np.linalg.eigh(m)
        if w[0] <= self.floor:
            raise RankError(
                f"state is not full rank: min eigenvalue {w[0]:.3e} <= floor {self.floor:.1e}"
            )
        object.__setattr__(self, "matrix", _readonly(m))
        object.__setattr__(self, "eigenvalues", _readonly(w))
        object.__setattr__(self, "eigenvectors", _readonly(v))

    @classmethod
    def from_unnormalized(cls, m, floor: float = DEFAULT_FLOOR) -> "DensityMatrix":
        """Hermitise and trace-normalise ``m`` before validation."""
        m = np.asarray(m, dtype=complex)
        m = 0.5 * (m + m.conj().T)
        return cls(m / np.trace(m).real, floor=floor)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def payload(self) -> np.ndarray:
        return self.matrix

    def expectation(self, A) -> float:
        return float(np.trace(self.matrix @ _check_hermitian(self, A)).real)


State = ClassicalState | DensityMatrix


def as_state(obj, floor: float | None = None) -> State:
    """Coerce ``obj`` into a state; vectors become classical, matrices quantum."""
    if isinstance(obj, (ClassicalState, DensityMatrix)):
        return obj
    a = np.asarray(obj)
    if a.ndim == 1:
        return ClassicalState(np.arange(a.size, dtype=float), a, floor=floor or 0.0)
    if a.ndim == 2:
        return DensityMatrix(a, floor=DEFAULT_FLOOR if floor is None else floor)
    raise DimensionError(f"cannot interpret array of shape {a.shape} as a state")


def log_mean(a, b):
    """Logarithmic mean ``(a - b) / (log a - log b)`` with ``L(a, a) = a``.

    Near the diagonal the quotient is replaced by the series
    ``b * (1 + x/2 + x**2/6 + x**3/24)`` in ``x = log(a/b)``, which avoids the
    cancellation in both numerator and denominator.
    """
    a, b = np.broadcast_arrays(np.asarray(a, dtype=float), np.asarray(b, dtype=float))
    if np.any(a <= 0) or np.any(b <= 0):
        raise DomainError("logarithmic mean needs positive arguments")
    # log1p keeps log(a/b) accurate when a and b are close; a - b is then exact
    x = np.log1p((a - b) / b)
    near = np.abs(a / b - 1.0) < LOG_MEAN_SERIES_THRESHOLD
    with np.errstate(divide="ignore", invalid="ignore"):
        direct = (a - b) / x
    series = b * (1.0 + x / 2.0 + x * x / 6.0 + x**3 / 24.0)
    return np.where(near, series, direct)


def _check_classical(rho: ClassicalState, A) -> np.ndarray:
    A = np.asarray(A)
    if A.shape != (rho.dim,):
        raise DimensionError(f"expected a vector of length {rho.dim}, got {A.shape}")
    if np.iscomplexobj(A):
        if np.max(np.abs(A.imag), initial=0.0) > 1e-12 * max(1.0, np.max(np.abs(A))):
            raise ValidationError("classical observables must be real")
        A = A.real
    return A.astype(float, copy=False)


def _check_hermitian(rho: DensityMatrix, A) -> np.ndarray:
    A = np.asarray(A, dtype=complex)
    if A.shape != (rho.dim, rho.dim):
        raise DimensionError(f"expected a {rho.dim}x{rho.dim} matrix, got {A.shape}")
    scale = max(1.0, float(np.max(np.abs(A), initial=0.0)))
    if np.max(np.abs(A - A.conj().T), initial=0.0) > 1e-10 * scale:
        raise ValidationError("operator is not Hermitian")
    return 0.5 * (A + A.conj().T)


def _log_mean_matrix(rho: DensityMatrix) -> np.ndarray:
    p = rho.eigenvalues
    return log_mean(p[:, None], p[None, :])


def _in_eigenbasis(rho: DensityMatrix, A: np.ndarray) -> np.ndarray:
    U = rho.eigenvectors
    return U.conj().T @ A @ U


def _from_eigenbasis(rho: DensityMatrix, A: np.ndarray) -> np.ndarray:
    U = rho.eigenvectors
    out = U @ A @ U.conj().T
    return 0.5 * (out + out.conj().T)


def omega_apply(rho, A) -> np.ndarray:
    """Map an observable to the feature ``int_0^1 rho^(1-s) A rho^s ds``."""
    rho = as_state(rho)
    if not rho.is_quantum:
        return rho.probs * _check_classical(rho, A)
    At = _in_eigenbasis(rho, _check_hermitian(rho, A))
    return _from_eigenbasis(rho, At * _log_mean_matrix(rho))


def omega_inverse(rho, X) -> np.ndarray:
    """Inverse of :func:`omega_apply`; ``omega_inverse(rho, rho)`` is the identity."""
    rho = as_state(rho)
    if not rho.is_quantum:
        return _check_classical(rho, X) / rho.probs
    Xt = _in_eigenbasis(rho, _check_hermitian(rho, X))
    return _from_eigenbasis(rho, Xt / _log_mean_matrix(rho))


def inner_product(rho, X, Y) -> float:
    """Kubo-Mori inner product ``Tr(X Omega_rho^{-1}(Y))``."""
    rho = as_state(rho)
    if not rho.is_quantum:
        X = _check_classical(rho, X)
        Y = _check_classical(rho, Y)
        return float(np.sum(X * Y / rho.probs))
    Xt = _in_eigenbasis(rho, _check_hermitian(rho, X))
    Yt = _in_eigenbasis(rho, _check_hermitian(rho, Y))
    return float(np.sum(Xt.conj() * Yt / _log_mean_matrix(rho)).real)


def center(rho, A) -> np.ndarray:
    """Subtract ``Tr(rho A)`` times the identity."""
    rho = as_state(rho)
    mean = rho.expectation(A)
    if not rho.is_quantum:
        return np.asarray(A, dtype=float) - mean
    return np.asarray(A, dtype=complex) - mean * np.eye(rho.dim)


def is_centered(rho, A, atol: float = 1e-10) -> bool:
    return abs(as_state(rho).expectation(A)) <= atol


def relevance(rho, channel, X) -> float:
    """Ratio of coarse-grained to fine-grained metric norm of feature ``X``.

    ``channel`` is any channel object from :mod:`relevance_lab.channels`.
    The result lies in ``[0, 1]`` because the metric contracts under
    stochastic and completely positive trace-preserving maps.
    """
    rho = as_state(rho)
    denom = inner_product(rho, X, X)
    if denom <= 0.0:
        raise DomainError("relevance of the zero feature is undefined")
    out = channel.apply_state(rho)
    EX = channel.apply(X)
    return inner_product(out, EX, EX) / denom


def relative_entropy(sigma, rho) -> float:
    """``S(sigma || rho) = Tr sigma (log sigma - log rho)`` for full-rank inputs."""
    sigma, rho = as_state(sigma), as_state(rho)
    if sigma.is_quantum != rho.is_quantum or sigma.dim != rho.dim:
        raise DimensionError("states live on different spaces")
    if not rho.is_quantum:
        return float(np.sum(sigma.probs * (np.log(sigma.probs) - np.log(rho.probs))))

    def logm(s: DensityMatrix) -> np.ndarray:
        U = s.eigenvectors
        return (U * np.log(s.eigenvalues)) @ U.conj().T

    return float(np.trace(sigma.matrix @ (logm(sigma) - logm(rho))).real)
