"""Acceptance criteria, each run at its stated tolerance.

Every test prints one ``criterion N: PASS|FAIL`` line with the measured
numbers and runtime, then asserts.  Running this file as a script prints
the same lines without pytest.
"""

import math
import time

import numpy as np
import pytest

from relevance_lab import DensityMatrix, GaussianChannelSpec, partial_trace_channel, relevance_operator, solve_spectrum
from relevance_lab.gaussian_sector import (
    ClassicalFieldTheory,
    FieldLattice,
    QuantumGaussianState,
    fock_relevance_oracle,
    gaussian_sector_spectrum,
    mass_shell_shift,
    phase_covariant_oracle,
    quantum_particle_relevance,
    scaling_exponent,
    shell_integral,
    shell_integral_closed_form,
)
from relevance_lab.properties import random_density_matrix, run_property_suite
from relevance_lab.toy_rg import hermite_reference, rg_coefficients, toy_grid_spectrum


def criterion_1():
    t0 = time.perf_counter()
    spec = toy_grid_spectrum(1.0, 1.0, count=7, start=-12.0, stop=12.0, cells=600)
    p = spec.rho.probs
    errs, overlaps = [], []
    for n in range(7):
        errs.append(abs(spec.etas[n] * 2**n - 1))
        A = spec.observables[n]
        H = hermite_reference(n, 1.0, spec.rho.grid)
        overlaps.append(abs(np.sum(p * A * H)) / math.sqrt(np.sum(p * A * A) * np.sum(p * H * H)))
    dt = time.perf_counter() - t0
    ok = max(errs) < 0.01 and min(overlaps) >= 0.999 and dt < 30
    return ok, f"max rel err {max(errs):.2e}, min overlap {min(overlaps):.6f}", dt


def criterion_2():
    t0 = time.perf_counter()
    c = rg_coefficients()
    dt = time.perf_counter() - t0
    got = {"dlam/deps": (c.dlam_deps, -15), "dtau/tau dlam": (c.dtau_dlam, 6), "dtau/tau deps": (c.dtau_deps, -45)}
    ok = all(abs(v / ref - 1) <= 0.02 for v, ref in got.values()) and dt < 10
    return ok, ", ".join(f"{k} = {v:.4f}" for k, (v, _) in got.items()), dt


def criterion_3():
    t0 = time.perf_counter()
    spec = solve_spectrum(relevance_operator(DensityMatrix(np.eye(4) / 4), partial_trace_channel((2, 2), [0])))
    expect = np.r_[np.ones(4), np.zeros(12)]
    dev = float(np.max(np.abs(spec.etas - expect)))
    dt = time.perf_counter() - t0
    return dev <= 1e-9 and spec.etas.size == 16, f"max deviation {dev:.1e} over {spec.etas.size} eigenvalues", dt


def _factorized_trial(dA, dB, rng):
    rho = DensityMatrix(np.kron(random_density_matrix(dA, rng).matrix, random_density_matrix(dB, rng).matrix))
    spec = solve_spectrum(relevance_operator(rho, partial_trace_channel((dA, dB), [0])))
    binary = float(np.max(np.minimum(np.abs(spec.etas), np.abs(spec.etas - 1))))
    top = spec.observables[spec.etas > 0.5]
    tensor = 0.0
    for A in top:
        red = np.einsum("iaja->ij", A.reshape(dA, dB, dA, dB)) / dB
        tensor = max(tensor, float(np.max(np.abs(A - np.kron(red, np.eye(dB))))))
    return binary, tensor, len(top) == dA * dA


def criterion_4():
    t0 = time.perf_counter()
    rng = np.random.default_rng(4)
    worst_bin = worst_ten = 0.0
    dims_ok = True
    for dims in ((2, 2), (2, 3)):
        for _ in range(50):
            b, t, n = _factorized_trial(*dims, rng)
            worst_bin, worst_ten, dims_ok = max(worst_bin, b), max(worst_ten, t), dims_ok and n
    dt = time.perf_counter() - t0
    ok = worst_bin <= 1e-8 and worst_ten <= 1e-8 and dims_ok
    return ok, (f"100 states, max distance to {{0,1}} {worst_bin:.1e}, max distance from A(x)1 {worst_ten:.1e}, "
                f"eta=1 dimension {'dA**2' if dims_ok else 'wrong'}"), dt


LATTICES = {1: FieldLattice(1, 0.5, 8192), 2: FieldLattice(2, 1.0, 1024)}


def criterion_5():
    t0 = time.perf_counter()
    theory = ClassicalFieldTheory(1.0, 1.0)
    parts, ok = [], True
    for d, lat in LATTICES.items():
        for kind, ref in (("phi2", -d), ("phi_laplacian_phi", -(d + 2))):
            slope = scaling_exponent(kind, lat, theory, 10.0, (10, 40)).slope
            good = abs(slope / ref - 1) <= 0.05
            ok &= good
            parts.append(f"d={d} {kind} {slope:.3f} (target {ref}{'' if good else ', off'})")
        slope = scaling_exponent("phi2", lat, theory, 0.0, (10, 40), variable="h", sigma=20.0).slope
        good = abs(slope / -4 - 1) <= 0.05
        ok &= good
        parts.append(f"d={d} h {slope:.3f} (target -4{'' if good else ', off'})")
    dt = time.perf_counter() - t0
    return ok and dt < 60, "; ".join(parts), dt


def criterion_6():
    t0 = time.perf_counter()
    m, ir, uv = 1.0, 1.0, 10.0
    quad = shell_integral(m, ir, uv)
    closed = 2 * 0.5 * (math.asinh(uv / m) - math.asinh(ir / m))
    gap = abs(quad - closed)
    assert shell_integral_closed_form(m, ir, uv) == pytest.approx(closed, rel=1e-14)
    mid = 3.7
    add = abs(shell_integral(m, ir, uv) - shell_integral(m, ir, mid) - shell_integral(m, mid, uv))
    identity = mass_shell_shift(0.83, 0.0, uv, ir) == 0.83 * 0.83
    dt = time.perf_counter() - t0
    ok = gap <= 1e-10 and add <= 1e-12 and identity
    return ok, f"quadrature gap {gap:.1e}, additivity {add:.1e}, lambda=0 identity {identity}", dt


PROPERTY_SEED = 0


def criterion_7():
    t0 = time.perf_counter()
    rep = run_property_suite(dims=(2, 3, 4, 6), trials=100, seed=PROPERTY_SEED)
    dt = time.perf_counter() - t0
    v, w = rep.violations, rep.worst()
    ok = rep.ok and dt < 120
    return ok, (f"seed {PROPERTY_SEED}, violations {v}; eta in [{w['eta_min']:.2e}, {w['eta_max']:.12f}], "
                f"adjoint {w['adjoint_err']:.1e}, omega {w['omega_err']:.1e}, min slope {w['slope_min']:.3f} "
                f"(tail {w['slope_tail_min']:.3f})"), dt


def criterion_8():
    t0 = time.perf_counter()
    lo = QuantumGaussianState(math.sqrt(3.0), math.sqrt(3.0))
    fock = fock_relevance_oracle(lo, 10.0, 0.0, n_in=40)
    asym = quantum_particle_relevance(lo, 10.0, 0.0).eta_x
    err_a = abs(fock.eta("x") / asym - 1)

    hi = QuantumGaussianState(math.sqrt(50.0), math.sqrt(50.0))
    pc = phase_covariant_oracle(hi, 40.0, 40.0)
    target = quantum_particle_relevance(hi, 40.0, 40.0).quadratic_pair[0].eta
    quad = [pc.eta("n"), pc.eta("a2")]
    err_b = max(abs(q / target - 1) for q in quad)
    exact = gaussian_sector_spectrum(hi, GaussianChannelSpec(np.eye(2), np.diag([1600.0, 1600.0])))
    dt = time.perf_counter() - t0
    ok = err_a <= 0.05 and err_b <= 0.10
    return ok, (f"uv=3: Fock N=40 eta(x) {fock.eta('x'):.6f} vs asymptotic {asym:.6f} ({err_a:.1%}); "
                f"uv=50: Fock N={pc.n_in}/{pc.n_out} quadratic {quad[0]:.4e}, {quad[1]:.4e} vs v^4 sigma^-4 "
                f"{target:.4e} ({err_b:.1%}), exact sector {exact.quadratic_etas.min():.4e}"), dt


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6, criterion_7, criterion_8]


def _line(n, ok, detail, dt):
    return f"criterion {n}: {'PASS' if ok else 'FAIL'} [{dt:.1f}s] {detail}"


@pytest.mark.parametrize("n", range(1, len(CRITERIA) + 1))
def test_criterion(n, capsys):
    ok, detail, dt = CRITERIA[n - 1]()
    with capsys.disabled():
        print("\n" + _line(n, ok, detail, dt))
    assert ok, detail


if __name__ == "__main__":
    for i, crit in enumerate(CRITERIA, 1):
        print(_line(i, *crit()), flush=True)
