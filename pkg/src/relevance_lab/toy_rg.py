"""Classical particle seen through a Gaussian blur.

The reference state is ``rho(x) ~ exp(-x**2 / 2 tau**2)`` and the channel
convolves with a Gaussian of width ``sigma``.  The eigenrelevant observables
are the Hermite polynomials ``He_n(x/tau)/sqrt(n!)`` with relevance
``(tau**2 / (sigma**2 + tau**2))**n``.

The second half of the module follows couplings of the perturbed Hamiltonian
``H = x**2/2tau**2 + lam (x/tau)**4 + eps6 (x/tau)**6`` along curves that keep
the second and fourth moments fixed.  To first order these run as
``lam(eps6) = lam_phys - 15 eps6`` and
``tau(eps6) = tau_phys (1 + 6 lam_phys - 45 eps6)``.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, special

from .channels import build_gaussian_convolution, cell_centers
from .eigenrelevance import equivalent_first_order, relevance_operator, solve_spectrum
from .errors import DivergenceError, DomainError, NoSolutionError, ValidationError
from .kubo_mori import ClassicalState

__all__ = [
    "ToyHamiltonian",
    "MomentVector",
    "FlowRecord",
    "RGCoefficients",
    "hermite_reference",
    "generating_function_error",
    "toy_exact_relevance",
    "toy_grid_problem",
    "toy_grid_spectrum",
    "moments",
    "target_moments",
    "match_couplings",
    "flow_trace",
    "rg_coefficients",
]

logger = logging.getLogger(__name__)

#: integrand tail, in units of its peak, below which the quadrature range stops
TAIL_TOL = 1e-14
NEWTON_MAXITER = 50
MATCH_TOL = 1e-10


@dataclass(frozen=True)
class ToyHamiltonian:
    """``H(x) = x**2/(2 tau**2) + lam (x/tau)**4 + eps6 (x/tau)**6``.

    Non-normalisable combinations can be constructed (they are what the
    regulator is for) but :func:`moments` rejects them.
    """

    tau: float
    lam: float = 0.0
    eps6: float = 0.0

    def __post_init__(self):
        if not (self.tau > 0 and math.isfinite(self.tau)):
            raise DomainError(f"tau must be positive and finite, got {self.tau!r}")
        if not (math.isfinite(self.lam) and math.isfinite(self.eps6)):
            raise DomainError("couplings must be finite")

    @property
    def normalizable(self) -> bool:
        if self.eps6 > 0:
            return True
        return self.eps6 == 0 and self.lam >= 0

    def potential(self, y):
        """``H`` as a function of the scaled coordinate ``y = x/tau``."""
        y2 = np.asarray(y, dtype=float) ** 2
        return 0.5 * y2 + self.lam * y2**2 + self.eps6 * y2**3

    def __call__(self, x):
        return self.potential(np.asarray(x, dtype=float) / self.tau)

    def grid_state(self, grid) -> ClassicalState:
        """Cell masses proportional to ``exp(-H)`` on ``grid``.

        Weights are kept above ``exp(-700)`` relative to the peak so that
        steep sextic tails do not underflow to an invalid zero mass.
        """
        if not self.normalizable:
            raise DivergenceError("exp(-H) cannot be normalised")
        h = self(grid)
        return ClassicalState.from_weights(grid, np.exp(-np.minimum(h - h.min(), 700.0)))


@dataclass(frozen=True, eq=False)
class MomentVector:
    """Even central moments ``<x**k>`` keyed by order."""

    orders: tuple
    values: np.ndarray

    def __post_init__(self):
        orders = tuple(int(k) for k in self.orders)
        values = np.asarray(self.values, dtype=float)
        if values.shape != (len(orders),):
            raise ValidationError("orders and values differ in length")
        if any(k <= 0 or k % 2 for k in orders):
            raise ValidationError(f"moment orders must be positive and even, got {orders}")
        if np.any(values <= 0):
            raise ValidationError("even moments must be positive")
        m = dict(zip(orders, values))
        if 2 in m and 4 in m and m[4] < m[2] ** 2 * (1 - 1e-12):
            raise ValidationError("moments violate <x^4> >= <x^2>^2")
        object.__setattr__(self, "orders", orders)
        object.__setattr__(self, "values", values)

    def __getitem__(self, order: int) -> float:
        try:
            return float(self.values[self.orders.index(int(order))])
        except ValueError:
            raise KeyError(order) from None

    def as_dict(self) -> dict:
        return dict(zip(self.orders, self.values.tolist()))


def hermite_reference(n: int, tau: float, grid) -> np.ndarray:
    """Eigenobservable ``He_n(x/tau)/sqrt(n!)`` (probabilists' Hermite) on ``grid``."""
    if n < 0:
        raise DomainError("Hermite degree must be nonnegative")
    y = np.asarray(grid, dtype=float) / tau
    return special.eval_hermitenorm(int(n), y) / math.sqrt(math.factorial(n))


def generating_function_error(x, t: float, tau: float = 1.0, terms: int = 20) -> float:
    """Max deviation of ``sum_n A_n(x) t**n / sqrt(n!)`` from ``exp(x t/tau - t**2/2)``."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    total = sum(hermite_reference(n, tau, x) * t**n / math.sqrt(math.factorial(n))
                for n in range(terms))
    return float(np.max(np.abs(total - np.exp(x * t / tau - 0.5 * t * t))))


def toy_exact_relevance(n: int, tau: float, sigma: float) -> float:
    """``(tau**2 / (sigma**2 + tau**2))**n``."""
    if not tau > 0 or sigma < 0:
        raise DomainError("need tau > 0 and sigma >= 0")
    return (tau * tau / (sigma * sigma + tau * tau)) ** n


def toy_grid_problem(tau: float = 1.0, sigma: float = 1.0, start: float = -12.0,
                     stop: float = 12.0, cells: int = 600, hamiltonian: ToyHamiltonian | None = None):
    """Reference state and convolution channel on a cell-centred grid."""
    grid = cell_centers(start, stop, cells)
    H = hamiltonian if hamiltonian is not None else ToyHamiltonian(tau)
    return H.grid_state(grid), build_gaussian_convolution(grid, sigma)


def toy_grid_spectrum(tau: float = 1.0, sigma: float = 1.0, count: int = 8, **grid):
    rho, channel = toy_grid_problem(tau, sigma, **grid)
    return solve_spectrum(relevance_operator(rho, channel), count)


def _potential_minimum(H: ToyHamiltonian) -> tuple[float, float]:
    """Location ``y >= 0`` and value of the global minimum of ``H`` in ``y``."""
    # H'(y) = y (1 + 4 lam y**2 + 6 eps6 y**4)
    cands = [0.0]
    if H.eps6 > 0:
        for z in np.roots([6.0 * H.eps6, 4.0 * H.lam, 1.0]):
            if abs(z.imag) < 1e-12 and z.real > 0:
                cands.append(math.sqrt(z.real))
    vals = [float(H.potential(y)) for y in cands]
    k = int(np.argmin(vals))
    return cands[k], vals[k]


def _log_weight_bound(H: ToyHamiltonian, order: int) -> float:
    """Half-width in ``y`` beyond which ``y**order exp(-H)`` is below the tail tolerance."""
    cut = -math.log(TAIL_TOL)
    ys = np.geomspace(1e-6, 1e3, 100001)
    vals = H.potential(ys) - order * np.log(ys)
    i0 = int(np.argmin(vals))
    ok = np.nonzero(vals[i0:] - vals[i0] > cut)[0]
    if not ok.size:
        raise DivergenceError("integrand tail does not decay within |y| < 1000")
    return float(ys[i0 + ok[0]])


def _scaled_moments(H: ToyHamiltonian, orders) -> np.ndarray:
    """``<y**k>`` for ``y = x/tau`` by adaptive quadrature on ``[0, L]``."""
    if not H.normalizable:
        raise DivergenceError(
            f"exp(-H) is not normalisable for lam={H.lam:g}, eps6={H.eps6:g}"
        )
    L = _log_weight_bound(H, max(orders))
    ystar, shift = _potential_minimum(H)
    points = [ystar] if 0 < ystar < L else None

    def integral(k):
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", integrate.IntegrationWarning)
            val, err = integrate.quad(lambda y: y**k * np.exp(-(H.potential(y) - shift)),
                                      0.0, L, epsabs=0.0, epsrel=1e-12, limit=400, points=points)
        if caught:
            logger.debug("quadrature of y^%d: %s (error estimate %.1e)", k, caught[0].message, err / val)
        return val

    Z = integral(0)
    return np.array([integral(k) / Z for k in orders])


def moments(H: ToyHamiltonian, max_order: int = 6) -> MomentVector:
    """Even moments ``<x**k>``, ``k = 2, 4, ... max_order``, of ``exp(-H)/Z``."""
    if max_order < 2:
        raise ValidationError("max_order must be at least 2")
    orders = tuple(range(2, int(max_order) + 1, 2))
    y = _scaled_moments(H, orders)
    return MomentVector(orders, y * np.array([H.tau**k for k in orders]))


def target_moments(tau_phys: float, lam_phys: float) -> MomentVector:
    """Second and fourth moments that define a flow's equivalence class.

    ``tau_phys`` is the physical width, ``<x**2> = tau_phys**2``.  For
    ``lam_phys >= 0`` the fourth moment is that of the quartic Hamiltonian
    at zero regulator.  For ``lam_phys < 0`` that Hamiltonian does not
    exist, and the fourth moment takes its first-order value
    ``tau_phys**4 (3 - 24 lam_phys)``.
    """
    if not tau_phys > 0:
        raise DomainError("tau_phys must be positive")
    if lam_phys >= 0:
        mu2, mu4 = _scaled_moments(ToyHamiltonian(1.0, lam_phys), (2, 4))
        ratio = mu4 / mu2**2
    else:
        ratio = 3.0 - 24.0 * lam_phys
    return MomentVector((2, 4), [tau_phys**2, ratio * tau_phys**4])


def match_couplings(eps6_value: float, target: MomentVector, lam0: float | None = None,
                    tol: float = MATCH_TOL) -> tuple[float, float]:
    """Find ``(tau, lam)`` so that ``H(tau, lam, eps6_value)`` has the target moments.

    The kurtosis ``<x^4>/<x^2>^2`` depends on ``lam`` alone, so Newton's
    method runs on that scalar equation with the exact derivative
    ``d<y^k>/dlam = -(<y^(k+4)> - <y^k><y^4>)``; ``tau`` then follows from
    the second moment.

    Raises
    ------
    NoSolutionError
        If Newton has not converged after 50 iterations.
    """
    if eps6_value < 0:
        raise DomainError("the regulator must be nonnegative")
    m2, m4 = target[2], target[4]
    R = m4 / m2**2
    lam = (3.0 - R - 360.0 * eps6_value) / 24.0 if lam0 is None else float(lam0)
    if eps6_value == 0 and R > 3.0:
        raise NoSolutionError("kurtosis above the Gaussian value needs lam < 0, which diverges without eps6")
    if eps6_value == 0:
        lam = max(lam, 0.0)

    def kurtosis_gap(l):
        mu2, mu4, mu6, mu8 = _scaled_moments(ToyHamiltonian(1.0, l, eps6_value), (2, 4, 6, 8))
        g = mu4 / mu2**2 - R
        d2 = -(mu6 - mu2 * mu4)
        d4 = -(mu8 - mu4 * mu4)
        return g, d4 / mu2**2 - 2.0 * mu4 * d2 / mu2**3, mu2

    g, dg, mu2 = kurtosis_gap(lam)
    for it in range(NEWTON_MAXITER):
        if abs(g) <= tol * R:
            logger.debug("matched eps6=%g after %d Newton steps", eps6_value, it)
            return math.sqrt(m2 / mu2), lam
        step = -g / dg
        # damped Newton: halve until the residual shrinks
        for _ in range(40):
            new = lam + step
            if ToyHamiltonian(1.0, new, eps6_value).normalizable:
                g_new, dg_new, mu2_new = kurtosis_gap(new)
                if abs(g_new) < abs(g):
                    break
            step *= 0.5
        else:
            raise NoSolutionError(
                f"no coupling reproduces kurtosis {R:.6g} at eps6={eps6_value:g} "
                f"(closest residual {g:.3e} at lam={lam:.6g})"
            )
        lam, g, dg, mu2 = new, g_new, dg_new, mu2_new
    raise NoSolutionError(f"Newton did not converge for eps6={eps6_value:g} in {NEWTON_MAXITER} iterations")


@dataclass(frozen=True, eq=False)
class FlowRecord:
    """Running couplings along a regulator sweep with the moments they preserve."""

    lambda_phys: float
    tau_phys: float
    eps6: np.ndarray
    tau: np.ndarray
    lam: np.ndarray
    m2: np.ndarray
    m4: np.ndarray
    m6: np.ndarray
    equivalent: np.ndarray = field(default=None)

    columns = ("eps6", "tau", "lambda", "m2", "m4")

    def rows(self):
        return np.column_stack([self.eps6, self.tau, self.lam, self.m2, self.m4])

    def __len__(self):
        return self.eps6.size


def flow_trace(lambda_phys: float, tau_phys: float, eps6_grid, check_equivalence: bool = True,
               threshold: int = 4, tol: float = 1e-7) -> FlowRecord:
    """Trace ``eps6 -> (tau, lam)`` at fixed second and fourth moments.

    With ``check_equivalence`` each row's grid state is compared with row 0
    on the first ``threshold`` eigenrelevant observables of the Gaussian of
    width ``tau_phys`` blurred at ``sigma = tau_phys``.
    """
    grid = np.asarray(eps6_grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise ValidationError("eps6 grid must be a nonempty vector")
    if np.any(np.diff(grid) <= 0):
        raise ValidationError("eps6 grid must be increasing")
    if grid[0] < 0:
        raise DomainError("eps6 must be nonnegative")
    target = target_moments(tau_phys, lambda_phys)
    rows = []
    lam_prev = None
    for e in grid:
        tau, lam = match_couplings(float(e), target, lam0=lam_prev)
        lam_prev = lam
        mv = moments(ToyHamiltonian(tau, lam, float(e)), 6)
        rows.append((e, tau, lam, mv[2], mv[4], mv[6]))
    a = np.array(rows)
    equivalent = None
    if check_equivalence:
        span = 12.0 * tau_phys
        spectrum = toy_grid_spectrum(tau_phys, tau_phys, count=threshold + 3,
                                     start=-span, stop=span, cells=600)
        g = spectrum.rho.grid
        states = [ToyHamiltonian(t, l, e).grid_state(g) for e, t, l in a[:, :3]]
        equivalent = np.array([bool(equivalent_first_order(spectrum, states[0], s, tol, threshold))
                               for s in states])
    return FlowRecord(lambda_phys, tau_phys, a[:, 0], a[:, 1], a[:, 2], a[:, 3], a[:, 4], a[:, 5],
                      equivalent)


@dataclass(frozen=True)
class RGCoefficients:
    """First-order running-coupling coefficients and the cross term."""

    dlam_deps: float
    dtau_dlam: float
    dtau_deps: float
    cross: float
    h_eps: float
    h_lam: float


def _one_sided(f, h: float, levels: int = 3) -> float:
    """Derivative at 0 from ``f(0), f(h), f(2h)`` stencils, Richardson-extrapolated over ``h/2**j``."""
    f0 = f(0.0)
    table = []
    for j in range(levels):
        s = h / 2**j
        table.append((-3 * f0 + 4 * f(s) - f(2 * s)) / (2 * s))
    # the stencil error series is h**2, h**3, ...
    for order in range(2, 2 + levels - 1):
        table = [(2**order * table[i + 1] - table[i]) / (2**order - 1) for i in range(len(table) - 1)]
    return table[0]


def rg_coefficients(h_eps: float = 5e-4, h_lam: float = 5e-3, tau_phys: float = 1.0) -> RGCoefficients:
    """Finite-difference running-coupling coefficients at ``lam_phys = eps6 = 0``.

    Negative ``eps6``, and negative ``lam_phys`` at zero regulator, are not
    normalisable, so the differences are one-sided and Richardson-extrapolated.
    ``cross`` is ``d^2 lam / d eps6 d lam_phys``.
    """
    cache = {}

    def solve(lp, e):
        key = (lp, e)
        if key not in cache:
            cache[key] = match_couplings(e, target_moments(tau_phys, lp))
        return cache[key]

    dlam = _one_sided(lambda e: solve(0.0, e)[1], h_eps)
    dtau_e = _one_sided(lambda e: solve(0.0, e)[0] / tau_phys, h_eps)
    dtau_l = _one_sided(lambda lp: solve(lp, 0.0)[0] / tau_phys, h_lam)
    cross = _one_sided(lambda lp: _one_sided(lambda e: solve(lp, e)[1], h_eps, 2), h_lam, 2)
    return RGCoefficients(dlam, dtau_l, dtau_e, cross, h_eps, h_lam)
