"""Channels, their Hilbert-Schmidt adjoints and the metric-adjoint recovery map.

Three representations are supported:

* :class:`StochasticChannel` for classical distributions on grids,
* :class:`KrausChannel` for completely positive trace-preserving maps,
* :class:`GaussianChannelSpec` acting on covariance data ``gamma -> X^T gamma X + Y``.

The first two share a small interface used throughout the package:
``apply`` (linear action on arrays), ``adjoint`` (action on observables) and
``apply_state`` (action on validated states).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from typing import Any, Mapping, Sequence

import numpy as np

from .errors import ConfigurationError, DimensionError, DomainError, ValidationError
from .kubo_mori import (
    ClassicalState,
    DensityMatrix,
    as_state,
    omega_apply,
    omega_inverse,
)

__all__ = [
    "StochasticChannel",
    "KrausChannel",
    "GaussianChannelSpec",
    "RecoveryMap",
    "apply",
    "adjoint_apply",
    "recovery_apply",
    "cell_centers",
    "build_gaussian_convolution",
    "partial_trace_channel",
    "identity_channel",
    "depolarizing_channel",
    "random_kraus_channel",
    "random_stochastic_channel",
    "channel_from_dict",
    "symplectic_form",
]

#: largest superoperator (as an ``n x n`` matrix, ``n = d_in * d_out``) that
#: :meth:`KrausChannel.superoperator` builds without being asked explicitly
DENSE_SUPEROPERATOR_CAP = 64**2


class _ChannelBase:
    is_quantum: bool

    def apply(self, X):
        raise NotImplementedError

    def adjoint(self, B):
        raise NotImplementedError

    def apply_state(self, rho):
        raise NotImplementedError

    def __call__(self, X):
        return self.apply(X)


@dataclass(frozen=True, eq=False)
class StochasticChannel(_ChannelBase):
    """Column-stochastic matrix ``M[out, in]`` between grids.

    Parameters
    ----------
    matrix : array_like
        Nonnegative, every column sums to one within ``1e-10``.
    output_grid : array_like, optional
        Grid of the output distribution.  Defaults to the input grid for
        square matrices and to ``arange(n_out)`` otherwise.
    """

    matrix: np.ndarray
    output_grid: np.ndarray | None = None

    is_quantum = False

    def __post_init__(self):
        M = np.asarray(self.matrix, dtype=float)
        if M.ndim != 2:
            raise DimensionError(f"stochastic matrix must be 2-D, got {M.shape}")
        if np.any(M < 0):
            raise ValidationError("stochastic matrix has negative entries")
        bad = np.max(np.abs(M.sum(axis=0) - 1.0), initial=0.0)
        if bad > 1e-10:
            raise ValidationError(f"columns do not sum to one (worst deviation {bad:.2e})")
        M = M.copy()
        M.setflags(write=False)
        object.__setattr__(self, "matrix", M)
        if self.output_grid is not None:
            g = np.asarray(self.output_grid, dtype=float)
            if g.shape != (M.shape[0],):
                raise DimensionError("output grid length does not match matrix rows")
            object.__setattr__(self, "output_grid", g)

    @property
    def dim_in(self) -> int:
        return self.matrix.shape[1]

    @property
    def dim_out(self) -> int:
        return self.matrix.shape[0]

    def apply(self, X):
        X = np.asarray(X, dtype=float)
        if X.shape[0] != self.dim_in:
            raise DimensionError(f"input has length {X.shape[0]}, channel expects {self.dim_in}")
        return self.matrix @ X

    def adjoint(self, B):
        B = np.asarray(B, dtype=float)
        if B.shape[0] != self.dim_out:
            raise DimensionError(f"observable has length {B.shape[0]}, channel emits {self.dim_out}")
        return self.matrix.T @ B

    def apply_state(self, rho):
        rho = as_state(rho)
        if rho.is_quantum:
            raise DimensionError("a stochastic channel acts on classical states")
        q = self.apply(rho.probs)
        if self.output_grid is not None:
            grid = self.output_grid
        elif self.dim_in == self.dim_out:
            grid = rho.grid
        else:
            grid = np.arange(self.dim_out, dtype=float)
        return ClassicalState.from_weights(grid, q, floor=rho.floor)


@dataclass(frozen=True, eq=False)
class KrausChannel(_ChannelBase):
    """Completely positive map ``rho -> sum_i K_i rho K_i^dagger``.

    ``kraus_ops`` has shape ``(n, d_out, d_in)``; trace preservation is
    checked to ``1e-10``.
    """

    kraus_ops: np.ndarray
    check_tp: bool = True

    is_quantum = True

    def __post_init__(self):
        K = np.asarray(self.kraus_ops, dtype=complex)
        if K.ndim == 2:
            K = K[None]
        if K.ndim != 3 or K.shape[0] == 0:
            raise DimensionError(f"Kraus operators must stack to (n, d_out, d_in), got {K.shape}")
        if self.check_tp:
            G = np.einsum("kai,kaj->ij", K.conj(), K)
            dev = np.max(np.abs(G - np.eye(K.shape[2])))
            if dev > 1e-10:
                raise ValidationError(f"Kraus set is not trace preserving (deviation {dev:.2e})")
        K = K.copy()
        K.setflags(write=False)
        object.__setattr__(self, "kraus_ops", K)

    @property
    def dim_in(self) -> int:
        return self.kraus_ops.shape[2]

    @property
    def dim_out(self) -> int:
        return self.kraus_ops.shape[1]

    def apply(self, X):
        X = np.asarray(X, dtype=complex)
        if X.shape != (self.dim_in, self.dim_in):
            raise DimensionError(f"input is {X.shape}, channel expects {self.dim_in}x{self.dim_in}")
        K = self.kraus_ops
        return np.einsum("kai,ij,kbj->ab", K, X, K.conj(), optimize=True)

    def adjoint(self, B):
        B = np.asarray(B, dtype=complex)
        if B.shape != (self.dim_out, self.dim_out):
            raise DimensionError(f"observable is {B.shape}, channel emits {self.dim_out}x{self.dim_out}")
        K = self.kraus_ops
        return np.einsum("kai,ab,kbj->ij", K.conj(), B, K, optimize=True)

    def apply_state(self, rho):
        rho = as_state(rho)
        if not rho.is_quantum:
            raise DimensionError("a Kraus channel acts on density matrices")
        # trace preservation holds to 1e-10, so renormalise away the roundoff
        return DensityMatrix.from_unnormalized(self.apply(rho.matrix), floor=rho.floor)

    def superoperator(self, force: bool = False) -> np.ndarray:
        """Matrix ``S`` with ``vec(E(X)) = S vec(X)`` for row-major ``vec``."""
        n = self.dim_in * self.dim_out
        if n > DENSE_SUPEROPERATOR_CAP and not force:
            raise ConfigurationError(
                f"superoperator of size {n} exceeds the dense cap {DENSE_SUPEROPERATOR_CAP}"
            )
        K = self.kraus_ops
        return np.einsum("kai,kbj->abij", K, K.conj()).reshape(
            self.dim_out**2, self.dim_in**2
        )

    def compose(self, other: "KrausChannel") -> "KrausChannel":
        """Channel ``self o other`` (``other`` acts first)."""
        if other.dim_out != self.dim_in:
            raise DimensionError("channel dimensions do not chain")
        ops = [a @ b for a, b in product(self.kraus_ops, other.kraus_ops)]
        return KrausChannel(np.array(ops))


def symplectic_form(n_modes: int) -> np.ndarray:
    """``[[0, I], [-I, 0]]`` in the ordering (all positions, then all momenta)."""
    I = np.eye(n_modes)
    Z = np.zeros((n_modes, n_modes))
    return np.block([[Z, I], [-I, Z]])


@dataclass(frozen=True, eq=False)
class GaussianChannelSpec:
    """Gaussian channel on covariance data, ``gamma -> X^T gamma X + Y``.

    Covariances follow the convention ``gamma_ij = <{R_i, R_j}>`` (twice the
    symmetrised covariance) with phase-space ordering positions-then-momenta,
    so the vacuum has ``gamma = I`` and physical states satisfy
    ``gamma + i S >= 0``.

    Parameters
    ----------
    X, Y : array_like
        Square real matrices, ``Y`` symmetric.
    params : dict
        Free-form record of the physical parameters (``sigma``, ``h``,
        ``sigma_x`` ...) used to build the channel.
    quantum : bool
        Quantum channels need ``Y + iS - X^T iS X >= 0``; classical ones
        only ``Y >= 0``.
    """

    X: np.ndarray
    Y: np.ndarray
    params: Mapping[str, float] = field(default_factory=dict)
    quantum: bool = True

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        Y = np.asarray(self.Y, dtype=float)
        if X.ndim != 2 or X.shape[0] != X.shape[1] or Y.shape != X.shape:
            raise DimensionError("X and Y must be square matrices of equal size")
        if np.max(np.abs(Y - Y.T), initial=0.0) > 1e-12:
            raise ValidationError("noise matrix Y is not symmetric")
        if self.quantum:
            if X.shape[0] % 2:
                raise DimensionError("quantum phase space has even dimension")
            S = symplectic_form(X.shape[0] // 2)
            cond = Y + 1j * S - X.T @ (1j * S) @ X
        else:
            cond = Y
        if np.linalg.eigvalsh(cond)[0] < -1e-10:
            raise ValidationError("Gaussian channel violates complete positivity")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Y", Y)
        object.__setattr__(self, "params", dict(self.params))

    def act(self, gamma) -> np.ndarray:
        gamma = np.asarray(gamma, dtype=float)
        if gamma.shape != self.X.shape:
            raise DimensionError("covariance has the wrong size")
        return self.X.T @ gamma @ self.X + self.Y

    def displace(self, mean) -> np.ndarray:
        return self.X.T @ np.asarray(mean, dtype=float)

    @classmethod
    def quadrature_noise(cls, sigma_x: float, sigma_p: float) -> "GaussianChannelSpec":
        """Single-mode additive noise, ``v^2 -> v^2 + sigma_x^2`` and ``u^2 -> u^2 + sigma_p^2``."""
        if sigma_x < 0 or sigma_p < 0:
            raise DomainError("noise widths must be nonnegative")
        return cls(np.eye(2), np.diag([sigma_x**2, sigma_p**2]),
                   {"sigma_x": sigma_x, "sigma_p": sigma_p})


class RecoveryMap:
    """Metric adjoint ``R = Omega_rho E^dagger Omega_{E(rho)}^{-1}`` of a channel.

    Only the composition is stored; nothing is materialised.
    """

    def __init__(self, rho, channel):
        self.rho = as_state(rho)
        self.channel = channel
        self.output_state = channel.apply_state(self.rho)

    def __call__(self, Y):
        """Map an output feature back to an input feature."""
        return omega_apply(self.rho, self.channel.adjoint(omega_inverse(self.output_state, Y)))

    def adjoint(self, A):
        """Hilbert-Schmidt adjoint on observables, ``Omega_{E(rho)}^{-1} E Omega_rho``."""
        return omega_inverse(self.output_state, self.channel.apply(omega_apply(self.rho, A)))

    def dual_relevance(self, A):
        """``E^dagger R^dagger (A)``, whose eigenvectors are the eigenrelevant observables."""
        return self.channel.adjoint(self.adjoint(A))


def apply(channel, state):
    """Apply ``channel`` to a state object, or linearly to a raw array."""
    if isinstance(state, (ClassicalState, DensityMatrix)):
        return channel.apply_state(state)
    return channel.apply(state)


def adjoint_apply(channel, B):
    return channel.adjoint(B)


def recovery_apply(rho, channel, Y):
    return RecoveryMap(rho, channel)(Y)


def cell_centers(start: float, stop: float, cells: int) -> np.ndarray:
    """Midpoints of ``cells`` equal cells partitioning ``[start, stop]``."""
    if cells < 1 or not stop > start:
        raise ConfigurationError("need stop > start and at least one cell")
    dx = (stop - start) / cells
    return start + dx * (np.arange(cells) + 0.5)


def build_gaussian_convolution(grid, sigma: float, output_grid=None,
                               strict: bool = True) -> StochasticChannel:
    """Discretised convolution with a centred Gaussian of width ``sigma``.

    Each column is renormalised to sum to one, which compensates for the
    mass lost off the ends of the grid.  Pad the grid by at least
    ``6 * sigma`` beyond the region of interest.

    Parameters
    ----------
    grid : array_like
        Uniform input grid.
    sigma : float
        Kernel width, must be positive.
    output_grid : array_like, optional
        Defaults to ``grid``.
    strict : bool
        Reject kernels narrower than three grid spacings.  Disable to build
        deliberately near-identity kernels.
    """
    grid = np.asarray(grid, dtype=float)
    if not sigma > 0:
        raise ConfigurationError(f"sigma must be positive, got {sigma!r}")
    out = grid if output_grid is None else np.asarray(output_grid, dtype=float)
    if grid.size > 1:
        dx = grid[1] - grid[0]
        if strict and dx > sigma / 3:
            raise ConfigurationError(
                f"grid too coarse for sigma={sigma:g}: spacing {dx:g} exceeds sigma/3"
            )
    W = np.exp(-0.5 * ((out[:, None] - grid[None, :]) / sigma) ** 2)
    W /= W.sum(axis=0, keepdims=True)
    return StochasticChannel(W, None if output_grid is None else out)


def _validate_keep(dims: Sequence[int], keep) -> list[int]:
    keep = sorted(set(int(k) for k in keep))
    if not keep:
        raise ValidationError("keep set is empty")
    if keep[0] < 0 or keep[-1] >= len(dims):
        raise ValidationError(f"keep indices {keep} out of range for {len(dims)} subsystems")
    if any(int(d) < 1 for d in dims):
        raise ValidationError("subsystem dimensions must be positive")
    return keep


def partial_trace_channel(dims: Sequence[int], keep) -> KrausChannel:
    """Trace out every subsystem not listed in ``keep`` (0-based indices).

    Kraus operators are ``1_keep (x) <i|_discard`` for each basis state ``i``
    of the discarded factors; kept subsystems stay in their original order.
    """
    dims = [int(d) for d in dims]
    keep = _validate_keep(dims, keep)
    discard = [i for i in range(len(dims)) if i not in keep]
    d_total = int(np.prod(dims))
    d_keep = int(np.prod([dims[i] for i in keep]))
    idx = np.indices(dims).reshape(len(dims), -1)  # digits of each full basis state
    keep_flat = np.ravel_multi_index(idx[keep], [dims[i] for i in keep])
    if discard:
        disc_flat = np.ravel_multi_index(idx[discard], [dims[i] for i in discard])
        n_disc = int(np.prod([dims[i] for i in discard]))
    else:
        disc_flat = np.zeros(d_total, dtype=int)
        n_disc = 1
    ops = np.zeros((n_disc, d_keep, d_total))
    ops[disc_flat, keep_flat, np.arange(d_total)] = 1.0
    return KrausChannel(ops)


def identity_channel(dim: int, quantum: bool = True):
    if quantum:
        return KrausChannel(np.eye(dim)[None])
    return StochasticChannel(np.eye(dim))


def depolarizing_channel(dim: int, p: float) -> KrausChannel:
    """``rho -> (1 - p) rho + p I/dim``, with ``p = 1`` fully depolarising."""
    if not 0.0 <= p <= 1.0:
        raise DomainError("depolarising probability must lie in [0, 1]")
    ops = [np.sqrt(1.0 - p) * np.eye(dim)] if p < 1 else []
    for i, j in product(range(dim), repeat=2):
        E = np.zeros((dim, dim))
        E[i, j] = np.sqrt(p / dim)
        ops.append(E)
    return KrausChannel(np.array(ops))


def random_kraus_channel(dim_in: int, dim_out: int | None = None, n_kraus: int = 3,
                         rng=None) -> KrausChannel:
    """Random channel from a Haar-like Stinespring isometry."""
    rng = np.random.default_rng(rng)
    dim_out = dim_in if dim_out is None else dim_out
    if dim_out * n_kraus < dim_in:
        raise DimensionError(f"{n_kraus} Kraus operators of shape {dim_out}x{dim_in} cannot form an isometry")
    G = rng.normal(size=(dim_out * n_kraus, dim_in)) + 1j * rng.normal(size=(dim_out * n_kraus, dim_in))
    V, _ = np.linalg.qr(G)
    return KrausChannel(V.reshape(n_kraus, dim_out, dim_in))


def random_stochastic_channel(dim_in: int, dim_out: int | None = None, rng=None) -> StochasticChannel:
    rng = np.random.default_rng(rng)
    dim_out = dim_in if dim_out is None else dim_out
    M = rng.dirichlet(np.ones(dim_out), size=dim_in).T
    M /= M.sum(axis=0, keepdims=True)
    return StochasticChannel(M)


def _matrix_from_json(obj) -> np.ndarray:
    if isinstance(obj, Mapping):
        _check_keys(obj, {"real", "imag"}, {"real"}, "complex matrix")
        re = np.asarray(obj["real"], dtype=float)
        im = np.asarray(obj.get("imag", np.zeros_like(re)), dtype=float)
        if im.shape != re.shape:
            raise DimensionError("real and imaginary parts differ in shape")
        return re + 1j * im
    return np.asarray(obj, dtype=float)


def _check_keys(spec: Mapping, allowed: set, required: set, what: str):
    unknown = set(spec) - allowed
    if unknown:
        raise ConfigurationError(f"unknown keys for {what}: {sorted(unknown)}")
    missing = required - set(spec)
    if missing:
        raise ConfigurationError(f"missing keys for {what}: {sorted(missing)}")


def channel_from_dict(spec: Mapping[str, Any]):
    """Build a channel from its JSON description.

    Recognised forms::

        {"kind": "convolution", "sigma": 1.0,
         "grid": {"start": -12, "stop": 12, "cells": 600}, "strict": true}
        {"kind": "partial_trace", "dims": [2, 2], "keep": [0]}
        {"kind": "kraus", "ops": [M1, M2, ...]}
        {"kind": "gaussian", "X": [[...]], "Y": [[...]], "quantum": true, "params": {...}}

    Complex matrices are written ``{"real": [[...]], "imag": [[...]]}``.
    """
    if not isinstance(spec, Mapping) or "kind" not in spec:
        raise ConfigurationError("channel spec needs a 'kind'")
    kind = spec["kind"]
    if kind == "convolution":
        _check_keys(spec, {"kind", "sigma", "grid", "strict"}, {"kind", "sigma", "grid"}, kind)
        g = spec["grid"]
        if isinstance(g, Mapping):
            _check_keys(g, {"start", "stop", "cells"}, {"start", "stop", "cells"}, "grid")
            grid = cell_centers(float(g["start"]), float(g["stop"]), int(g["cells"]))
        else:
            grid = np.asarray(g, dtype=float)
        return build_gaussian_convolution(grid, float(spec["sigma"]),
                                          strict=bool(spec.get("strict", True)))
    if kind == "partial_trace":
        _check_keys(spec, {"kind", "dims", "keep"}, {"kind", "dims", "keep"}, kind)
        return partial_trace_channel(spec["dims"], spec["keep"])
    if kind == "kraus":
        _check_keys(spec, {"kind", "ops"}, {"kind", "ops"}, kind)
        return KrausChannel(np.array([_matrix_from_json(m) for m in spec["ops"]]))
    if kind == "gaussian":
        _check_keys(spec, {"kind", "X", "Y", "quantum", "params"}, {"kind", "X", "Y"}, kind)
        return GaussianChannelSpec(np.asarray(spec["X"], dtype=float),
                                   np.asarray(spec["Y"], dtype=float),
                                   spec.get("params", {}), bool(spec.get("quantum", True)))
    raise ConfigurationError(f"unknown channel kind {kind!r}")
