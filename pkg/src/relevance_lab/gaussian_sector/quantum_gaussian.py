"""Gaussian quantum states of one mode, and free quantum fields mode by mode.

A single-mode Gaussian state with widths ``u``, ``v`` (``uv >= 1``) has
``Var x = v**2/2`` and ``Var p = u**2/2`` and can be written ``exp(-H)`` with

    H = s ((u/v)(x - x0)**2 + (v/u)(p - p0)**2) + alpha,
    s = arccoth(u v),  alpha = log sqrt(u**2 v**2 - 1).

Covariances are stored as ``gamma = 2 Cov`` so that the additive noise
channel reads ``gamma -> gamma + diag(sigma_x**2, sigma_p**2)``.

Linear and quadratic observables span invariant sectors of the relevance
problem.  Both sectors are solved here exactly from the Hessian of
``log Z = -log(2 sinh(nu/2))``, ``nu = sqrt(det M)``, where ``H = R^T M R / 2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from ..channels import GaussianChannelSpec
from ..errors import DomainError, ValidationError
from .classical_field import SmearingParams

__all__ = [
    "QuantumGaussianState",
    "QuadraticObservable",
    "ParticleRelevance",
    "GaussianSectorSpectrum",
    "quantum_particle_relevance",
    "gaussian_sector_spectrum",
    "hamiltonian_matrix",
    "QFieldState",
    "qfield_mode_relevance",
    "qfield_mode_relevance_exact",
    "product_relevance",
]


def _arccoth(x: float) -> float:
    return 0.5 * math.log((x + 1.0) / (x - 1.0))


@dataclass(frozen=True)
class QuantumGaussianState:
    """Single-mode Gaussian state with diagonal covariance."""

    u: float
    v: float
    x0: float = 0.0
    p0: float = 0.0

    def __post_init__(self):
        if not (self.u > 0 and self.v > 0):
            raise DomainError("widths u and v must be positive")
        if self.u * self.v < 1.0 - 1e-12:
            raise DomainError(f"uv = {self.u * self.v:g} violates the uncertainty bound uv >= 1")

    @property
    def uv(self) -> float:
        return self.u * self.v

    @property
    def s(self) -> float:
        """``arccoth(uv)``; infinite for a pure state."""
        return _arccoth(self.uv) if self.uv > 1 else math.inf

    @property
    def alpha(self) -> float:
        return math.log(math.sqrt(self.uv**2 - 1.0)) if self.uv > 1 else -math.inf

    @property
    def gamma(self) -> np.ndarray:
        return np.diag([self.v**2, self.u**2])

    @property
    def mean_occupation(self) -> float:
        """Thermal occupation in the Fock basis matched to the state's aspect ratio."""
        return 0.5 * (self.uv - 1.0)

    @property
    def length(self) -> float:
        """Oscillator length ``sqrt(v/u)`` of the matched Fock basis."""
        return math.sqrt(self.v / self.u)

    def hamiltonian_matrix(self) -> np.ndarray:
        """``M`` with ``H = R^T M R / 2`` (up to the constant), ``R = (x, p)``."""
        s = self.s
        return np.diag([2.0 * s * self.u / self.v, 2.0 * s * self.v / self.u])

    def after_noise(self, sigma_x: float, sigma_p: float) -> "QuantumGaussianState":
        """State after ``v**2 -> v**2 + sigma_x**2`` and ``u**2 -> u**2 + sigma_p**2``."""
        return QuantumGaussianState(math.hypot(self.u, sigma_p), math.hypot(self.v, sigma_x),
                                    self.x0, self.p0)


def hamiltonian_matrix(gamma) -> np.ndarray:
    """``M`` of the Gaussian state with ``gamma = 2 Cov``; needs ``det gamma > 1``."""
    gamma = np.asarray(gamma, dtype=float)
    D = float(np.linalg.det(gamma))
    if not D > 1.0:
        raise DomainError("covariance is pure or unphysical (det gamma <= 1)")
    root = math.sqrt(D)
    nu = 2.0 * _arccoth(root)
    return nu * root * np.linalg.inv(gamma)


def _covariance(theta) -> np.ndarray:
    M = np.array([[theta[0], theta[1]], [theta[1], theta[2]]])
    nu = math.sqrt(float(np.linalg.det(M)))
    return nu / math.tanh(nu / 2.0) * np.linalg.inv(M)


def _theta(M) -> np.ndarray:
    return np.array([M[0, 0], M[0, 1], M[1, 1]])


def _log_partition_hessian(theta) -> np.ndarray:
    """Hessian of ``log Z = -log(2 sinh(nu/2))`` in ``(M_xx, M_xp, M_pp)``."""
    a, b, c = theta
    D = a * c - b * b
    nu = math.sqrt(D)
    dD = np.array([c, -2.0 * b, a])
    d2D = np.array([[0.0, 0.0, 1.0], [0.0, -2.0, 0.0], [1.0, 0.0, 0.0]])
    dnu = dD / (2.0 * nu)
    d2nu = d2D / (2.0 * nu) - np.outer(dD, dD) / (4.0 * nu**3)
    f1 = -0.5 / math.tanh(nu / 2.0)
    f2 = 0.25 / math.sinh(nu / 2.0) ** 2
    return f2 * np.outer(dnu, dnu) + f1 * d2nu


def _theta_map_jacobian(theta, channel: GaussianChannelSpec) -> np.ndarray:
    """``d theta' / d theta`` for ``theta' = theta(X^T gamma(theta) X + Y)``, fourth-order differences."""
    def image(t):
        return _theta(hamiltonian_matrix(channel.act(_covariance(t))))

    h = 1e-3 * float(np.max(np.abs(theta)))
    J = np.empty((3, 3))
    for i in range(3):
        e = np.zeros(3)
        e[i] = h
        J[:, i] = (-image(theta + 2 * e) + 8 * image(theta + e)
                   - 8 * image(theta - e) + image(theta - 2 * e)) / (12 * h)
    return J


@dataclass(frozen=True)
class GaussianSectorSpectrum:
    """Exact relevances in the linear and quadratic sectors.

    ``linear_observables[:, n]`` holds the coefficients of ``(x, p)`` and
    ``quadratic_observables[:, n]`` those of ``(x**2, (xp + px)/2, p**2)``
    (each centred in the state).
    """

    linear_etas: np.ndarray
    linear_observables: np.ndarray
    quadratic_etas: np.ndarray
    quadratic_observables: np.ndarray


def _pencil(F, K):
    w, V = linalg.eigh(0.5 * (F + F.T), 0.5 * (K + K.T))
    order = np.argsort(w)[::-1]
    return w[order], V[:, order]


def gaussian_sector_spectrum(state: QuantumGaussianState, channel: GaussianChannelSpec) -> GaussianSectorSpectrum:
    """Relevances of linear and quadratic features under a one-mode Gaussian channel."""
    if channel.X.shape != (2, 2):
        raise ValidationError("a single-mode channel acts on 2x2 covariances")
    if state.uv <= 1:
        raise DomainError("a pure state has no full-rank relevance problem")
    M = state.hamiltonian_matrix()
    Mp = hamiltonian_matrix(channel.act(state.gamma))
    X = channel.X
    w1, V1 = _pencil(X @ Mp @ X.T, M)
    lin_obs = M @ V1
    theta = _theta(M)
    G = _log_partition_hessian(theta)
    Gp = _log_partition_hessian(_theta(Mp))
    J = _theta_map_jacobian(theta, channel)
    w2, V2 = _pencil(J.T @ Gp @ J, G)
    # features d rho / d theta_i pair with observables -(T_i - <T_i>), T = (x^2, xp + px, p^2)/2
    quad_obs = -0.5 * V2 * np.array([1.0, 2.0, 1.0])[:, None]
    for arr in (lin_obs, quad_obs):
        idx = np.argmax(np.abs(arr), axis=0)
        arr *= np.sign(arr[idx, np.arange(arr.shape[1])])
    return GaussianSectorSpectrum(w1, lin_obs, w2, quad_obs)


@dataclass(frozen=True)
class QuadraticObservable:
    """Centred ``(q - q0)**2 - offset`` for ``q`` in ``{"x", "p"}``, with its relevance."""

    quadrature: str
    offset: float
    eta: float


@dataclass(frozen=True)
class ParticleRelevance:
    eta_x: float
    eta_p: float
    eta_x_exact: float
    eta_p_exact: float
    quadratic_pair: tuple


def quantum_particle_relevance(state: QuantumGaussianState, sigma_x: float, sigma_p: float) -> ParticleRelevance:
    """Relevance of ``x``, ``p`` and the large-``uv`` quadratic pair.

    The asymptotic forms, valid for large noise, are
    ``eta(x) = (v / (s u)) sigma_x**-2`` and ``eta(p) = (u / (s v)) sigma_p**-2``;
    they are infinite at zero noise.  The exact linear relevances are
    ``eta(x) = (s' u'/v') / (s u/v)`` and ``eta(p) = (s' v'/u') / (s v/u)``
    with primes denoting the output state.

    For a very mixed state the centred quadratics are close to eigenobservables:
    ``x**2 - v**2/2`` with relevance ``v**4 sigma_x**-4`` and ``p**2 - u**2/2``
    with relevance ``u**4 sigma_p**-4``.
    """
    if state.uv <= 1:
        raise DomainError("relevance needs a mixed state, uv > 1")
    if sigma_x < 0 or sigma_p < 0:
        raise DomainError("noise widths must be nonnegative")
    u, v, s = state.u, state.v, state.s
    out = state.after_noise(sigma_x, sigma_p)
    up, vp, sp = out.u, out.v, out.s

    def asym(num, den, sig):
        return num / (s * den) / sig**2 if sig > 0 else math.inf

    def quartic(w, sig):
        return w**4 / sig**4 if sig > 0 else math.inf

    pair = (QuadraticObservable("x", v * v / 2.0, quartic(v, sigma_x)),
            QuadraticObservable("p", u * u / 2.0, quartic(u, sigma_p)))
    return ParticleRelevance(
        eta_x=asym(v, u, sigma_x),
        eta_p=asym(u, v, sigma_p),
        eta_x_exact=(sp * up / vp) / (s * u / v),
        eta_p_exact=(sp * vp / up) / (s * v / u),
        quadratic_pair=pair,
    )


@dataclass(frozen=True)
class QFieldState:
    """Thermal free scalar field, ``rho ~ exp(-beta/2 int (Pi_k**2 + omega_k**2 Phi_k**2))``."""

    beta: float
    m: float

    def __post_init__(self):
        if not self.beta > 0 or self.m < 0:
            raise ValidationError("need beta > 0 and m >= 0")

    def omega(self, k) -> float:
        k = np.atleast_1d(np.asarray(k, dtype=float))
        return float(math.sqrt(float(k @ k) + self.m**2))

    def mode(self, k) -> QuantumGaussianState:
        """Mode ``k`` as a one-mode state with ``Phi`` in the role of ``x``."""
        w = self.omega(k)
        if w == 0:
            raise DomainError("the zero mode of a massless field is not normalisable")
        c = 1.0 / math.tanh(self.beta * w / 2.0)
        return QuantumGaussianState(math.sqrt(w * c), math.sqrt(c / w))


def qfield_mode_relevance(k, state: QFieldState, smear: SmearingParams,
                          use_h_pi: bool = False) -> tuple[float, float]:
    """Asymptotic relevances of ``Phi_k`` and ``Pi_k`` for ``h_phi h_pi >> 1``.

    ``eta(Phi_k) = 1 / (b coth b + beta omega**2 h_phi**2 exp(k**2 sigma**2))`` and
    ``eta(Pi_k) = 1 / (b coth b + beta h**2 exp(k**2 sigma**2))`` with
    ``b = beta omega / 2``.  The second form uses ``h = h_phi`` unless
    ``use_h_pi`` is set, in which case the momentum precision ``h_pi`` enters.
    """
    k = np.atleast_1d(np.asarray(k, dtype=float))
    w = state.omega(k)
    b = state.beta * w / 2.0
    thermal = b / math.tanh(b) if b > 0 else 1.0
    e = math.exp(float(k @ k) * smear.sigma**2)
    h_pi = smear.h_pi if use_h_pi else smear.h_phi
    eta_phi = 1.0 / (thermal + state.beta * w * w * smear.h_phi**2 * e)
    eta_pi = 1.0 / (thermal + state.beta * h_pi**2 * e)
    return eta_phi, eta_pi


def qfield_mode_relevance_exact(k, state: QFieldState, smear: SmearingParams) -> tuple[float, float]:
    """Exact linear relevances for the mode channel.

    Widths map as ``v**2 -> X**2 v**2 + 2 h_phi**2`` (field) and
    ``u**2 -> X**2 u**2 + 2 h_pi**2`` (conjugate momentum), ``X = exp(-k**2 sigma**2 / 2)``;
    field expectations are multiplied by ``X``.
    """
    mode = state.mode(k)
    k = np.atleast_1d(np.asarray(k, dtype=float))
    X = float(smear.X(k @ k))
    u, v, s = mode.u, mode.v, mode.s
    up = math.sqrt(X * X * u * u + 2.0 * smear.h_pi**2)
    vp = math.sqrt(X * X * v * v + 2.0 * smear.h_phi**2)
    sp = _arccoth(up * vp)
    return X * X * (sp * up / vp) / (s * u / v), X * X * (sp * vp / up) / (s * v / u)


def product_relevance(ks, state: QFieldState, smear: SmearingParams, fields=None,
                      use_h_pi: bool = False) -> float:
    """Relevance of ``prod_i F_i(k_i)`` for distinct momenta, ``F_i`` in ``{"phi", "pi"}``."""
    ks = [tuple(np.atleast_1d(np.asarray(k, dtype=float))) for k in ks]
    if len(set(ks)) != len(ks):
        raise DomainError("momenta must be distinct for the product rule")
    fields = ["phi"] * len(ks) if fields is None else list(fields)
    total = 1.0
    for k, f in zip(ks, fields):
        ephi, epi = qfield_mode_relevance(np.array(k), state, smear, use_h_pi)
        if f not in ("phi", "pi"):
            raise ValidationError(f"unknown field {f!r}")
        total *= ephi if f == "phi" else epi
    return total
