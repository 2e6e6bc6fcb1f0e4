"""Eigenrelevance spectra and first-order equivalence.

The eigenrelevant features solve ``R_rho E (X) = eta X``.  In a real
orthonormal operator basis this is the symmetric pencil ``F x = eta K x``
with ``K`` the metric at ``rho`` and ``F`` the pulled-back metric at
``E(rho)``.  The basis used here is the Hermitian matrix units in the
eigenbasis of ``rho``, which makes ``K`` diagonal.
"""

from __future__ import annotations

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import linalg

from .channels import KrausChannel, RecoveryMap, StochasticChannel
from .errors import CapacityError, DimensionError, RankError, ValidationError
from .kubo_mori import as_state, log_mean, omega_inverse

__all__ = [
    "OperatorBasis",
    "RelevancePencil",
    "RelevanceSpectrum",
    "EquivalenceResult",
    "relevance_operator",
    "solve_spectrum",
    "project_relevant",
    "equivalent_first_order",
    "dual_relevance_apply",
    "thread_cap",
]

logger = logging.getLogger(__name__)

DEFAULT_CAP = 4096
DEGENERACY_GAP = 1e-9
CLAMP_TOL = 1e-9


def thread_cap() -> int:
    """Worker count, honouring ``RELEVANCE_LAB_THREADS``."""
    n = os.cpu_count() or 1
    env = os.environ.get("RELEVANCE_LAB_THREADS")
    if env:
        try:
            n = min(n, max(1, int(env)))
        except ValueError:
            raise ValidationError(f"RELEVANCE_LAB_THREADS={env!r} is not an integer") from None
    return n


@dataclass(frozen=True, eq=False)
class OperatorBasis:
    """Real orthonormal basis of Hermitian operators (or grid vectors).

    Quantum elements are, in the eigenbasis ``V`` of the reference state,
    the diagonal units ``E_ii`` followed by ``(E_ij + E_ji)/sqrt 2`` and
    ``i (E_ij - E_ji)/sqrt 2`` for each ``i < j``.  Classical elements are the
    grid unit vectors.
    """

    dim: int
    rotation: np.ndarray | None = None

    @property
    def is_quantum(self) -> bool:
        return self.rotation is not None

    @property
    def size(self) -> int:
        return self.dim**2 if self.is_quantum else self.dim

    def _pairs(self):
        return np.triu_indices(self.dim, 1)

    def to_operator(self, coeffs) -> np.ndarray:
        c = np.asarray(coeffs, dtype=float)
        if c.shape != (self.size,):
            raise DimensionError(f"expected {self.size} coefficients, got {c.shape}")
        if not self.is_quantum:
            return c.copy()
        d = self.dim
        i, j = self._pairs()
        npair = i.size
        Mt = np.zeros((d, d), dtype=complex)
        Mt[np.arange(d), np.arange(d)] = c[:d]
        off = (c[d:d + npair] + 1j * c[d + npair:]) / np.sqrt(2.0)
        Mt[i, j] = off
        Mt[j, i] = off.conj()
        V = self.rotation
        return V @ Mt @ V.conj().T

    def coordinates(self, X) -> np.ndarray:
        X = np.asarray(X)
        if not self.is_quantum:
            if X.shape != (self.dim,):
                raise DimensionError(f"expected a vector of length {self.dim}")
            return np.real(X).astype(float)
        if X.shape != (self.dim, self.dim):
            raise DimensionError(f"expected a {self.dim}x{self.dim} matrix")
        V = self.rotation
        return self.coordinates_in_eigenbasis(V.conj().T @ X @ V)

    def coordinates_in_eigenbasis(self, Mt) -> np.ndarray:
        d = self.dim
        i, j = self._pairs()
        return np.concatenate([
            np.real(np.diagonal(Mt)),
            np.sqrt(2.0) * np.real(Mt[i, j]),
            np.sqrt(2.0) * np.imag(Mt[i, j]),
        ])

    def element(self, a: int) -> np.ndarray:
        e = np.zeros(self.size)
        e[a] = 1.0
        return self.to_operator(e)


@dataclass(frozen=True, eq=False)
class RelevancePencil:
    """Symmetric pencil ``(F, K)`` with ``R E = K^{-1} F`` in ``basis``."""

    F: np.ndarray
    K: np.ndarray
    rho: object
    channel: object
    basis: OperatorBasis
    asymmetry: float = 0.0

    @property
    def size(self) -> int:
        return self.F.shape[0]

    def rayleigh(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return float(x @ self.F @ x / (x @ self.K @ x))

    def check_ordering(self, probes: int = 20, rng=None, tol: float = 1e-9) -> bool:
        """Check ``0 <= F <= K`` as quadratic forms on random probes."""
        rng = np.random.default_rng(rng)
        for _ in range(probes):
            x = rng.normal(size=self.size)
            f = x @ self.F @ x
            k = x @ self.K @ x
            if f < -tol * k or f > (1 + tol) * k:
                return False
        return True


def _metric_weights(p: np.ndarray) -> np.ndarray:
    """Log-mean weights of the basis elements; ``K = diag(1 / weights)``."""
    i, j = np.triu_indices(p.size, 1)
    L = log_mean(p[i], p[j])
    return np.concatenate([p, L, L])


def _reference_basis(rho) -> OperatorBasis:
    if rho.is_quantum:
        return OperatorBasis(rho.dim, np.array(rho.eigenvectors))
    return OperatorBasis(rho.dim)


def _pencil_K(rho) -> np.ndarray:
    if rho.is_quantum:
        return np.diag(1.0 / _metric_weights(rho.eigenvalues))
    return np.diag(1.0 / rho.probs)


def _F_adjoint(rho, channel, basis: OperatorBasis) -> np.ndarray:
    out = channel.apply_state(rho)
    if not rho.is_quantum:
        M = channel.matrix
        return M.T @ (M / out.probs[:, None])

    def column(a):
        Y = channel.adjoint(omega_inverse(out, channel.apply(basis.element(a))))
        return basis.coordinates(Y)

    workers = thread_cap()
    if workers > 1 and basis.size > 16:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            cols = list(pool.map(column, range(basis.size)))
    else:
        cols = [column(a) for a in range(basis.size)]
    return np.column_stack(cols)


def _F_gram(rho, channel, basis: OperatorBasis) -> np.ndarray:
    """``F = C^T C`` with ``C`` the whitened output coordinates of each basis image."""
    out = channel.apply_state(rho)
    if not rho.is_quantum:
        C = channel.matrix / np.sqrt(out.probs)[:, None]
        return C.T @ C
    n, no = rho.dim, out.dim
    U, V = out.eigenvectors, rho.eigenvectors
    Kt = np.einsum("ab,kbc,cd->kad", U.conj().T, channel.kraus_ops, V, optimize=True)
    A1 = Kt.transpose(1, 2, 0).reshape(no * n, -1)
    # S[a, b, i, j] = sum_k Kt[k, a, i] conj(Kt[k, b, j])
    S = (A1 @ A1.conj().T).reshape(no, n, no, n).transpose(0, 2, 1, 3).reshape(no * no, n * n)
    del A1
    i, j = np.triu_indices(n, 1)
    diag_cols = S[:, np.arange(n) * (n + 1)]
    ij, ji = S[:, i * n + j], S[:, j * n + i]
    images = np.concatenate(
        [diag_cols, (ij + ji) / np.sqrt(2.0), 1j * (ij - ji) / np.sqrt(2.0)], axis=1
    )
    del S, ij, ji, diag_cols
    images = images.reshape(no, no, -1)
    io, jo = np.triu_indices(no, 1)
    wo = np.sqrt(_metric_weights(out.eigenvalues))
    C = np.concatenate([
        np.real(images[np.arange(no), np.arange(no)]),
        np.sqrt(2.0) * np.real(images[io, jo]),
        np.sqrt(2.0) * np.imag(images[io, jo]),
    ]) / wo[:, None]
    del images
    return C.T @ C


def relevance_operator(rho, channel, cap: int = DEFAULT_CAP, method: str = "auto") -> RelevancePencil:
    """Assemble the pencil ``(F, K)`` for ``rho`` and ``channel``.

    Parameters
    ----------
    rho : state
        Full-rank reference state.
    channel : StochasticChannel or KrausChannel
    cap : int
        Largest operator-space dimension allowed.
    method : {"auto", "adjoint", "gram"}
        ``"adjoint"`` applies ``E``, ``Omega^{-1}_{E(rho)}`` and ``E^dagger``
        to every basis element, then symmetrises.  ``"gram"`` factors
        ``F = C^T C`` through the output metric and is exactly symmetric;
        it is the fast route for large Kraus channels.  ``"auto"`` picks
        ``"gram"`` above 1024 basis elements.
    """
    rho = as_state(rho)
    if not isinstance(channel, (StochasticChannel, KrausChannel)):
        raise ValidationError(f"cannot build a pencil for {type(channel).__name__}")
    if channel.is_quantum != rho.is_quantum or channel.dim_in != rho.dim:
        raise DimensionError("channel does not act on the reference state")
    basis = _reference_basis(rho)
    if basis.size > cap:
        raise CapacityError(f"operator space of dimension {basis.size} exceeds the cap {cap}")
    if method == "auto":
        method = "gram" if basis.size > 1024 else "adjoint"
    if method == "adjoint":
        F = _F_adjoint(rho, channel, basis)
    elif method == "gram":
        F = _F_gram(rho, channel, basis)
    else:
        raise ValidationError(f"unknown assembly method {method!r}")
    scale = max(float(np.max(np.abs(F), initial=0.0)), 1e-300)
    asym = float(np.max(np.abs(F - F.T), initial=0.0)) / scale
    if asym > 1e-9:
        logger.warning("pencil asymmetry %.2e exceeds 1e-9 before symmetrisation", asym)
    else:
        logger.debug("pencil asymmetry %.2e", asym)
    F = 0.5 * (F + F.T)
    return RelevancePencil(F, _pencil_K(rho), rho, channel, basis, asym)


def _cholesky(K: np.ndarray) -> np.ndarray:
    try:
        return linalg.cholesky(K, lower=True)
    except linalg.LinAlgError:
        pass
    scale = float(np.mean(np.diag(K)))
    for jitter in (1e-14, 1e-13, 1e-12, 1e-11, 1e-10):
        try:
            L = linalg.cholesky(K + jitter * scale * np.eye(K.shape[0]), lower=True)
        except linalg.LinAlgError:
            continue
        logger.warning("Cholesky needed relative jitter %.0e; near-degenerate relevances are perturbed", jitter)
        return L
    raise RankError("metric matrix K is not positive definite")


@dataclass(frozen=True, eq=False)
class RelevanceSpectrum:
    """Ordered eigenrelevance triples ``(eta_n, X_n, A_n)``.

    Index 0 is the trivial direction ``X_0 = rho`` (observable ``1``) with
    ``eta = 1`` for any channel that preserves normalisation.  ``threshold``
    counts the nontrivial relevant features, indices ``1 .. threshold``.
    """

    etas: np.ndarray
    coefficients: np.ndarray
    features: np.ndarray
    observables: np.ndarray
    rho: object
    basis: OperatorBasis
    raw_etas: np.ndarray
    threshold: int = 0
    degenerate_blocks: tuple = ()

    def __len__(self) -> int:
        return self.etas.size

    @property
    def relevant(self) -> range:
        return range(1, self.threshold + 1)

    def with_threshold(self, n: int | None = None, eta_min: float | None = None) -> "RelevanceSpectrum":
        """Set the threshold from a count ``n`` or a minimal relevance ``eta_min``."""
        if (n is None) == (eta_min is None):
            raise ValidationError("give exactly one of n and eta_min")
        if n is None:
            n = int(np.count_nonzero(self.etas[1:] >= eta_min))
        if not 0 <= n < len(self):
            raise ValidationError(f"threshold {n} outside 0..{len(self) - 1}")
        return replace(self, threshold=int(n))


def _sign_fix(vecs: np.ndarray) -> np.ndarray:
    idx = np.argmax(np.abs(vecs), axis=0)
    signs = np.sign(vecs[idx, np.arange(vecs.shape[1])])
    signs[signs == 0] = 1.0
    return vecs * signs


def solve_spectrum(pencil: RelevancePencil, count: int | None = None, threshold: int = 0) -> RelevanceSpectrum:
    """Solve ``F x = eta K x`` and return the top ``count`` eigentriples."""
    n = pencil.size
    count = n if count is None else int(count)
    if not 1 <= count <= n:
        raise ValidationError(f"count must lie in 1..{n}, got {count}")
    L = _cholesky(pencil.K)
    Linv_F = linalg.solve_triangular(L, pencil.F, lower=True)
    M = linalg.solve_triangular(L, Linv_F.T, lower=True)
    M = 0.5 * (M + M.T)
    w, Y = linalg.eigh(M)
    w, Y = w[::-1], Y[:, ::-1]
    raw = w.copy()
    if w[0] > 1 + CLAMP_TOL or w[-1] < -CLAMP_TOL:
        logger.warning("relevances outside [0, 1] beyond tolerance: [%.3e, %.3e]", w[-1], w[0])
    w = np.where((w > 1) & (w <= 1 + CLAMP_TOL), 1.0, w)
    w = np.where((w < 0) & (w >= -CLAMP_TOL), 0.0, w)
    X = linalg.solve_triangular(L.T, Y, lower=False)  # K-orthonormal
    X = _sign_fix(X)

    # degenerate blocks, and the reference state first inside the top block
    blocks = []
    start = 0
    for k in range(1, n + 1):
        if k == n or raw[k - 1] - raw[k] >= DEGENERACY_GAP:
            if k - start > 1:
                blocks.append((start, k))
            start = k
    basis = pencil.basis
    rho = pencil.rho
    r = basis.coordinates(rho.payload)
    top = next((b for b in blocks if b[0] == 0), (0, 1))
    Xb = X[:, top[0]:top[1]]
    proj = Xb.T @ pencil.K @ r
    if np.linalg.norm(proj) > 1 - 1e-8:
        Q, _ = np.linalg.qr(np.column_stack([proj / np.linalg.norm(proj), np.eye(proj.size)]))
        Q = Q[:, :proj.size]
        Q[:, 0] *= np.sign(Q[:, 0] @ proj)
        X[:, top[0]:top[1]] = Xb @ Q
        if top[1] - top[0] > 1:
            X[:, top[0] + 1:top[1]] = _sign_fix(X[:, top[0] + 1:top[1]])
    else:
        logger.warning("reference state is not an eta=1 eigenvector; channel may not preserve normalisation")

    X = X[:, :count]
    feats = np.array([basis.to_operator(x) for x in X.T])
    obs = np.array([basis.to_operator(pencil.K @ x) for x in X.T])
    if not basis.is_quantum:
        feats, obs = feats.real, obs.real
    blocks = tuple((a, min(b, count)) for a, b in blocks if a < count)
    if blocks:
        logger.info("degenerate eigenvalue blocks: %s", blocks)
    spec = RelevanceSpectrum(w[:count], X, feats, obs, rho, basis, raw[:count], 0, blocks)
    return spec.with_threshold(min(threshold, count - 1)) if threshold else spec


def project_relevant(spectrum: RelevanceSpectrum, Y) -> np.ndarray:
    """Coefficients ``alpha_j = <X_j, Y>_rho`` for ``j = 1 .. threshold``."""
    Y = np.asarray(Y)
    idx = list(spectrum.relevant)
    if Y.shape != spectrum.features.shape[1:]:
        raise DimensionError(f"feature has shape {Y.shape}, expected {spectrum.features.shape[1:]}")
    A = spectrum.observables[idx]
    if Y.ndim == 1:
        return np.real(A @ Y) if idx else np.zeros(0)
    return np.real(np.einsum("nij,ji->n", A, Y)) if idx else np.zeros(0)


@dataclass(frozen=True)
class EquivalenceResult:
    equivalent: bool
    worst_index: int | None
    worst_value: float
    differences: np.ndarray = field(repr=False)

    def __bool__(self) -> bool:
        return self.equivalent


def equivalent_first_order(spectrum: RelevanceSpectrum, rho1, rho2, tol: float = 1e-8,
                           threshold: int | None = None) -> EquivalenceResult:
    """Whether two states agree on every relevant observable to ``tol``.

    The witness is the index with the largest ``|Tr((rho1 - rho2) A_i)|``.
    """
    n = spectrum.threshold if threshold is None else int(threshold)
    if not 0 <= n < len(spectrum):
        raise ValidationError(f"threshold {n} outside 0..{len(spectrum) - 1}")
    r1, r2 = as_state(rho1), as_state(rho2)
    delta = np.asarray(r1.payload) - np.asarray(r2.payload)
    A = spectrum.observables[1:n + 1]
    if delta.shape != spectrum.features.shape[1:]:
        raise DimensionError("states do not match the spectrum's space")
    if delta.ndim == 1:
        diffs = np.abs(A @ delta)
    else:
        diffs = np.abs(np.real(np.einsum("nij,ji->n", A, delta)))
    if diffs.size == 0:
        return EquivalenceResult(True, None, 0.0, diffs)
    k = int(np.argmax(diffs))
    return EquivalenceResult(bool(diffs[k] <= tol), k + 1, float(diffs[k]), diffs)


def dual_relevance_apply(rho, channel, A) -> np.ndarray:
    """``E^dagger R_rho^dagger (A)``; eigenrelevant observables are its eigenvectors."""
    return RecoveryMap(rho, channel).dual_relevance(A)
