"""Truncated Fock-space oracle for one-mode Gaussian relevances.

The reference state is the thermal state in the Hermite-function basis
whose ground state matches the aspect ratio of the covariance.  The noise
channel is a Gauss-Hermite mixture of phase-space displacements, written as
Kraus operators between the input basis and the Hermite basis matched to
the output state.  The resulting pencil is solved by the generic
eigenrelevance machinery, so this module checks the closed forms against
an independent finite-dimensional computation.

For circular noise on a circular state (equal widths after rescaling both
quadratures to the oscillator length) the problem is phase covariant: the
channel maps ``|n><n+j|`` into the span of ``|a><a+j|``, so each offset
``j`` is a separate block.  Additive circular noise of variance ``sigma**2``
is pure loss with transmissivity ``1/G`` followed by a quantum-limited
amplifier of gain ``G = 1 + sigma**2/2``, and both have closed-form Fock
matrix elements.  :func:`phase_covariant_oracle` uses this to reach
thermal occupations far beyond what the general oracle can hold.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.hermite_e import hermegauss
from scipy.special import gammaln

from ..channels import KrausChannel
from ..eigenrelevance import relevance_operator, solve_spectrum
from ..errors import DomainError
from ..kubo_mori import DensityMatrix, log_mean
from .quantum_gaussian import QuantumGaussianState

__all__ = [
    "hermite_functions",
    "FockOracleResult",
    "fock_relevance_oracle",
    "ladder_quadratures",
    "PhaseCovariantResult",
    "phase_covariant_oracle",
]

logger = logging.getLogger(__name__)

INPUT_TAIL_WARN = 1e-6


def hermite_functions(n: int, x, length: float = 1.0) -> np.ndarray:
    """Orthonormal ``psi_0 .. psi_{n-1}`` on ``x``; ``|psi_0|**2`` has variance ``length**2 / 2``."""
    y = np.asarray(x, dtype=float) / length
    out = np.empty((n,) + y.shape)
    out[0] = np.pi**-0.25 / math.sqrt(length) * np.exp(-0.5 * y * y)
    if n > 1:
        out[1] = math.sqrt(2.0) * y * out[0]
    for k in range(1, n - 1):
        out[k + 1] = math.sqrt(2.0 / (k + 1)) * y * out[k] - math.sqrt(k / (k + 1)) * out[k - 1]
    return out


def ladder_quadratures(n: int, length: float) -> tuple[np.ndarray, np.ndarray]:
    """Truncated ``x`` and ``p`` for the Hermite basis of oscillator length ``length``."""
    a = np.diag(np.sqrt(np.arange(1, n)), 1)
    x = length / math.sqrt(2.0) * (a + a.T)
    p = 1j / (length * math.sqrt(2.0)) * (a.T - a)
    return x, p


def _shift_overlaps(n_out, l_out, n_in, l_in, shifts, points_per_osc=12):
    """``O[j, m, n] = int phi_m(x) psi_n(x - shifts[j]) dx`` on a uniform grid."""
    reach = l_out * (math.sqrt(2.0 * n_out + 1.0) + 8.0)
    step = min(l_out / math.sqrt(2.0 * n_out + 1.0), l_in / math.sqrt(2.0 * n_in + 1.0)) / points_per_osc
    x = np.linspace(-reach, reach, int(2 * reach / step) + 1)
    dx = x[1] - x[0]
    phi = hermite_functions(n_out, x, l_out)
    psi = hermite_functions(n_in, x[None, :] - np.asarray(shifts)[:, None], l_in)  # (n_in, J, G)
    J = len(shifts)
    prod = phi @ psi.transpose(2, 1, 0).reshape(x.size, J * n_in)  # (n_out, J*n_in)
    return dx * prod.reshape(n_out, J, n_in).transpose(1, 0, 2)


def _occupation_cutoff(nbar: float, tail: float) -> int:
    if nbar <= 0:
        return 1
    q = nbar / (nbar + 1.0)
    return int(math.ceil(math.log(tail) / math.log(q)))


@dataclass(frozen=True)
class FockOracleResult:
    """Relevances read off the truncated pencil.

    For each probe observable the eigenvalue with the largest normalised
    overlap is reported together with the overlap and the probe's own
    Rayleigh quotient.
    """

    etas: np.ndarray
    probes: dict
    n_in: int
    n_out: int
    input_tail: float
    output_tail: float

    def eta(self, name: str) -> float:
        return self.probes[name]["eta"]


def fock_relevance_oracle(state: QuantumGaussianState, sigma_x: float, sigma_p: float = 0.0,
                          n_in: int = 40, n_out: int | None = None, nodes: int | None = None,
                          output_tail: float = 1e-4, n_out_max: int = 120,
                          count: int | None = None) -> FockOracleResult:
    """Relevance spectrum of a truncated one-mode Gaussian noise problem.

    Parameters
    ----------
    state : QuantumGaussianState
        Reference state, taken undisplaced.
    sigma_x, sigma_p : float
        Noise widths (``v**2 -> v**2 + sigma_x**2``, ``u**2 -> u**2 + sigma_p**2``).
    n_in : int
        Fock cutoff of the input space.
    n_out : int, optional
        Output cutoff; by default the smallest level above which the
        thermal output state would hold less than ``output_tail``
        relative weight, capped at ``n_out_max``.
    nodes : int, optional
        Gauss-Hermite nodes per noisy quadrature (default 200 for one noisy
        quadrature, 24 each when both are noisy).
    """
    if state.uv <= 1:
        raise DomainError("the oracle needs a mixed reference state")
    if sigma_x < 0 or sigma_p < 0:
        raise DomainError("noise widths must be nonnegative")
    out_state = state.after_noise(sigma_x, sigma_p)
    if n_out is None:
        n_out = max(n_in, _occupation_cutoff(out_state.mean_occupation, output_tail))
        if n_out > n_out_max:
            logger.warning("output cutoff %d capped at %d; truncation error is uncontrolled", n_out, n_out_max)
            n_out = n_out_max
    both = sigma_x > 0 and sigma_p > 0
    nodes = nodes or (24 if both else 200)

    l_in = state.length
    nbar = state.mean_occupation
    q = nbar / (nbar + 1.0)
    pops = q ** np.arange(n_in)
    input_tail = float(q**n_in)
    if input_tail > INPUT_TAIL_WARN:
        logger.warning("thermal weight above the input cutoff is %.2e; the truncated state "
                       "misrepresents the reference state", input_tail)
    rho = DensityMatrix(np.diag(pops / pops.sum()), floor=0.0)

    t, w = hermegauss(nodes)
    w = w / w.sum()

    # x noise: displacements by N(0, sigma_x**2 / 2)
    l_mid = math.sqrt(out_state.v / state.u) if both else out_state.length
    n_mid = n_out
    if sigma_x > 0:
        Kx = _shift_overlaps(n_mid if both else n_out, l_mid, n_in, l_in, t * sigma_x / math.sqrt(2.0))
        Kx = Kx * np.sqrt(w)[:, None, None]
    else:
        Kx = None
    # p noise: momentum kicks, computed in the Fourier-conjugate Hermite basis
    if sigma_p > 0:
        src_len, src_n = (l_mid, n_mid) if both else (l_in, n_in)
        dst_len = out_state.length
        O = _shift_overlaps(n_out, 1.0 / dst_len, src_n, 1.0 / src_len, t * sigma_p / math.sqrt(2.0))
        phase = (1j) ** np.arange(n_out)[:, None] * (-1j) ** np.arange(src_n)[None, :]
        Kp = O * phase * np.sqrt(w)[:, None, None]
    else:
        Kp = None
    if Kx is not None and Kp is not None:
        ops = np.einsum("lab,jbc->ljac", Kp, Kx).reshape(-1, n_out, n_in)
    else:
        ops = Kx if Kx is not None else Kp
    if ops is None:
        ops = np.eye(n_out, n_in)[None]
    channel = KrausChannel(ops, check_tp=False)
    tp_defect = float(np.max(np.abs(np.einsum("kai,kaj->ij", ops.conj(), ops) - np.eye(n_in))))
    logger.info("Fock oracle n_in=%d n_out=%d kraus=%d trace defect %.2e", n_in, n_out, ops.shape[0], tp_defect)

    pencil = relevance_operator(rho, channel, method="gram")
    spec = solve_spectrum(pencil, count)

    x, p = ladder_quadratures(n_in, l_in)
    I = np.eye(n_in)
    x2, p2 = (x @ x).real, (p @ p).real
    probes = {
        "x": x,
        "p": p,
        "x2": x2 - np.trace(rho.matrix @ x2).real * I,
        "p2": p2 - np.trace(rho.matrix @ p2).real * I,
    }
    basis = pencil.basis
    kdiag = np.diag(pencil.K)
    report = {}
    for name, B in probes.items():
        b = basis.coordinates(B)
        y = b / kdiag
        norm = math.sqrt(float(b @ y))
        ov = np.abs(spec.coefficients.T @ b) / norm
        k = int(np.argmax(ov))
        report[name] = {
            "eta": float(spec.etas[k]),
            "index": k,
            "overlap": float(ov[k]),
            "rayleigh": float(y @ pencil.F @ y / (y @ pencil.K @ y)),
        }
    pops_out = np.real(np.diag(channel.apply(rho.matrix)))
    return FockOracleResult(spec.etas, report, n_in, n_out, input_tail,
                            float(1.0 - pops_out.sum()) if sigma_x or sigma_p else 0.0)


@dataclass(frozen=True)
class PhaseCovariantResult:
    """Block spectra of the phase-covariant oracle.

    ``blocks[j]`` holds the relevances of features supported on
    ``|n><n+j|`` (and their conjugates), in decreasing order; ``blocks[0][0]``
    is the reference state itself.  ``probes`` reports, for the centred
    number operator ``"n"``, ``"a"`` (linear, offset 1), ``"a2"`` (offset 2)
    and the centred ``"x2"``, the Rayleigh quotient and, within its block,
    the eigenvalue of largest overlap.
    """

    blocks: dict
    probes: dict
    n_in: int
    n_out: int
    sigma: float
    input_tail: float
    output_tail: float

    def eta(self, name: str) -> float:
        return self.probes[name]["eta"]


def _loss_block(n_in: int, j: int, eta: float) -> np.ndarray:
    """``L[k, n]``: weight of ``|k><k+j|`` in the loss image of ``|n><n+j|``."""
    n = np.arange(n_in - j)[None, :]
    k = np.arange(n_in - j)[:, None]
    l = n - k
    ok = l >= 0
    l = np.where(ok, l, 0)
    logc = 0.5 * (gammaln(n + 1) - gammaln(l + 1) - gammaln(n - l + 1)
                  + gammaln(n + j + 1) - gammaln(l + 1) - gammaln(n + j - l + 1))
    with np.errstate(divide="ignore"):
        logw = logc + (n + 0.5 * j - l) * math.log(eta) + l * math.log1p(-eta)
    return np.where(ok, np.exp(logw), 0.0)


def _amplifier_block(n_src: int, n_out: int, j: int, gain: float) -> np.ndarray:
    """``A[a, n]``: weight of ``|a><a+j|`` in the amplified ``|n><n+j|``, ``a < n_out - j``."""
    n = np.arange(n_src)[None, :]
    a = np.arange(n_out - j)[:, None]
    l = a - n
    ok = l >= 0
    l = np.where(ok, l, 0)
    logc = 0.5 * (gammaln(n + l + 1) - gammaln(l + 1) - gammaln(n + 1)
                  + gammaln(n + j + l + 1) - gammaln(l + 1) - gammaln(n + j + 1))
    logw = logc - (n + 0.5 * j + 1.0) * math.log(gain) + l * math.log1p(-1.0 / gain)
    return np.where(ok, np.exp(logw), 0.0)


def phase_covariant_oracle(state: QuantumGaussianState, sigma_x: float, sigma_p: float,
                           n_in: int | None = None, n_out: int | None = None,
                           input_tail: float = 1e-8, output_tail: float = 1e-10,
                           blocks=(0, 1, 2)) -> PhaseCovariantResult:
    """Exact-in-structure Fock oracle for circular noise on a circular state.

    Parameters
    ----------
    state : QuantumGaussianState
        Undisplaced reference state.
    sigma_x, sigma_p : float
        Noise widths; they must satisfy ``sigma_x u = sigma_p v`` so that the
        noise is circular in the state's own oscillator units.
    n_in, n_out : int, optional
        Fock cutoffs; by default chosen so that the thermal weight beyond
        them is below ``input_tail`` and ``output_tail``.

    Raises
    ------
    DomainError
        For a pure state, or noise that is not circular.
    """
    if state.uv <= 1:
        raise DomainError("the oracle needs a mixed reference state")
    if sigma_x <= 0 or sigma_p <= 0:
        raise DomainError("circular noise needs positive widths")
    if abs(sigma_x * state.u - sigma_p * state.v) > 1e-12 * sigma_x * state.u:
        raise DomainError("noise is not circular for this state: need sigma_x u = sigma_p v")
    # in units of the oscillator length both quadratures get variance sigma**2 / 2
    sigma2 = sigma_x * sigma_p
    gain = 1.0 + 0.5 * sigma2
    nbar = state.mean_occupation
    nbar_out = 0.5 * (state.uv + sigma2 - 1.0)
    jmax = max(blocks)
    n_in = n_in or _occupation_cutoff(nbar, input_tail)
    n_out = n_out or _occupation_cutoff(nbar_out, output_tail)
    if n_in <= jmax + 1 or n_out < n_in:
        raise DomainError("cutoffs too small for the requested blocks")
    q = nbar / (nbar + 1.0)
    pops = q ** np.arange(n_in)
    in_tail = float(q**n_in)
    if in_tail > INPUT_TAIL_WARN:
        logger.warning("thermal weight above the input cutoff is %.2e; the truncated state "
                       "misrepresents the reference state", in_tail)
    pops /= pops.sum()

    T0 = _amplifier_block(n_in, n_out, 0, gain) @ _loss_block(n_in, 0, 1.0 / gain)
    out = T0 @ pops
    out_tail = float(1.0 - out.sum())
    logger.info("phase-covariant oracle n_in=%d n_out=%d output tail %.2e", n_in, n_out, out_tail)

    n = np.arange(n_in, dtype=float)
    probe_defs = {
        0: {"n": n - pops @ n},
        1: {"a": np.sqrt(n[1:])},
        2: {"a2": np.sqrt(n[1:-1] * n[2:])},
    }
    spectra, probes, parts = {}, {}, {}
    for j in blocks:
        T = T0 if j == 0 else _amplifier_block(n_in - j, n_out, j, gain) @ _loss_block(n_in, j, 1.0 / gain)
        w_in = log_mean(pops[: n_in - j], pops[j:])
        w_out = log_mean(out[: n_out - j], out[j:])
        S = T / np.sqrt(w_out)[:, None] * np.sqrt(w_in)[None, :]
        _, sv, Vt = np.linalg.svd(S, full_matrices=False)
        spectra[j] = sv**2
        for name, b in probe_defs.get(j, {}).items():
            z = np.sqrt(w_in) * b
            knorm = float(z @ z)
            fnorm = float(np.sum((S @ z) ** 2))
            ov = np.abs(Vt @ z) / math.sqrt(knorm)
            k = int(np.argmax(ov))
            probes[name] = {"eta": float(sv[k] ** 2), "index": k, "overlap": float(ov[k]),
                            "rayleigh": fnorm / knorm}
            parts[name] = (fnorm, knorm)
    if "n" in parts and "a2" in parts:
        # x**2 = (a**2 + a_dag**2 + 2 n + 1) / 2: one diagonal part, two conjugate offset-2 parts
        f = parts["n"][0] + 0.5 * parts["a2"][0]
        k = parts["n"][1] + 0.5 * parts["a2"][1]
        probes["x2"] = {"eta": f / k, "index": -1, "overlap": math.nan, "rayleigh": f / k}
    return PhaseCovariantResult(spectra, probes, n_in, n_out, math.sqrt(sigma2), in_tail, out_tail)
