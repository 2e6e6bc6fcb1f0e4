import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from relevance_lab import DomainError, GaussianChannelSpec, ValidationError
from relevance_lab.gaussian_sector import (
    QFieldState,
    QuantumGaussianState,
    SmearingParams,
    fock_relevance_oracle,
    gaussian_sector_spectrum,
    hamiltonian_matrix,
    hermite_functions,
    phase_covariant_oracle,
    product_relevance,
    qfield_mode_relevance,
    qfield_mode_relevance_exact,
    quantum_particle_relevance,
)

widths = st.floats(0.3, 5.0)
noises = st.one_of(st.just(0.0), st.floats(1e-3, 10.0))


def noise(sx, sp):
    return GaussianChannelSpec(np.eye(2), np.diag([sx**2, sp**2]))


class TestState:
    def test_uncertainty_bound(self):
        with pytest.raises(DomainError):
            QuantumGaussianState(0.5, 1.0)
        assert QuantumGaussianState(1.0, 1.0).s == math.inf

    def test_thermal_hamiltonian(self):
        # an oscillator at inverse temperature b has coth(b/2) = uv and M = b I
        b = 0.7
        c = 1 / math.tanh(b / 2)
        st_ = QuantumGaussianState(math.sqrt(c), math.sqrt(c))
        assert np.allclose(st_.hamiltonian_matrix(), b * np.eye(2), rtol=1e-14)
        assert np.allclose(hamiltonian_matrix(st_.gamma), b * np.eye(2), rtol=1e-14)
        assert st_.alpha == pytest.approx(math.log(math.sqrt(c * c - 1)))

    def test_after_noise(self):
        out = QuantumGaussianState(1.5, 2.0).after_noise(3.0, 0.0)
        assert out.v == pytest.approx(math.sqrt(13)) and out.u == 1.5


class TestParticle:
    @given(widths, widths, st.floats(0.1, 20.0), st.floats(0.1, 20.0))
    def test_symmetry_swap(self, u, v, sx, sp):
        if u * v <= 1.01:
            return
        a = quantum_particle_relevance(QuantumGaussianState(u, v), sx, sp)
        b = quantum_particle_relevance(QuantumGaussianState(v, u), sp, sx)
        assert a.eta_x == pytest.approx(b.eta_p, rel=1e-12)
        assert a.eta_x_exact == pytest.approx(b.eta_p_exact, rel=1e-12)

    @pytest.mark.parametrize("u,v", [(1.0, 1.0), (0.5, 2.0)])
    def test_pure_state_rejected(self, u, v):
        with pytest.raises(DomainError):
            quantum_particle_relevance(QuantumGaussianState(u, v), 1.0, 1.0)

    def test_zero_noise(self):
        r = quantum_particle_relevance(QuantumGaussianState(2.0, 2.0), 0.0, 0.0)
        assert r.eta_x == math.inf and r.eta_x_exact == pytest.approx(1.0, rel=1e-14)
        # momentum noise alone still lowers the relevance of x through the change of s
        assert quantum_particle_relevance(QuantumGaussianState(2.0, 2.0), 0.0, 1.0).eta_x_exact < 1.0

    @given(widths, widths, noises, noises)
    def test_exact_matches_sector(self, u, v, sx, sp):
        if u * v <= 1.05:
            return
        state = QuantumGaussianState(u, v)
        r = quantum_particle_relevance(state, sx, sp)
        g = gaussian_sector_spectrum(state, noise(sx, sp))
        assert np.sort(g.linear_etas) == pytest.approx(np.sort([r.eta_x_exact, r.eta_p_exact]), rel=1e-10)

    def test_asymptotic_limit(self):
        state = QuantumGaussianState(math.sqrt(3), math.sqrt(3))
        r = quantum_particle_relevance(state, 1000.0, 0.0)
        assert r.eta_x_exact == pytest.approx(r.eta_x, rel=1e-3)

    def test_quadratic_pair_large_uv(self):
        # v^4 sigma^-4 is the large-uv, large-noise limit of the exact quadratic eigenvalue
        state = QuantumGaussianState(30.0, 30.0)
        r = quantum_particle_relevance(state, 3000.0, 3000.0)
        g = gaussian_sector_spectrum(state, noise(3000.0, 3000.0))
        assert r.quadratic_pair[0].eta == pytest.approx(1e-8)
        assert g.quadratic_etas == pytest.approx([1e-8] * 3, rel=0.01)
        assert r.quadratic_pair[0].offset == pytest.approx(450.0)


class TestSector:
    def test_identity_channel(self):
        g = gaussian_sector_spectrum(QuantumGaussianState(1.3, 2.1), noise(0.0, 0.0))
        assert np.allclose(g.linear_etas, 1.0) and np.allclose(g.quadratic_etas, 1.0, atol=1e-9)

    def test_observable_shapes(self):
        g = gaussian_sector_spectrum(QuantumGaussianState(2.0, 2.0), noise(3.0, 0.0))
        assert g.linear_observables.shape == (2, 2) and g.quadratic_observables.shape == (3, 3)
        assert np.all((g.quadratic_etas > 0) & (g.quadratic_etas <= 1 + 1e-12))

    def test_wrong_size(self):
        ch = GaussianChannelSpec(np.eye(4), np.zeros((4, 4)))
        with pytest.raises(ValidationError):
            gaussian_sector_spectrum(QuantumGaussianState(2.0, 2.0), ch)


class TestFock:
    def test_hermite_functions_orthonormal(self):
        x = np.linspace(-15, 15, 3001)
        H = hermite_functions(12, x, 1.3)
        assert np.allclose(H @ H.T * (x[1] - x[0]), np.eye(12), atol=1e-10)

    def test_small_oracle(self):
        state = QuantumGaussianState(math.sqrt(3), math.sqrt(3))
        res = fock_relevance_oracle(state, 3.0, 0.0, n_in=16)
        exact = quantum_particle_relevance(state, 3.0, 0.0)
        g = gaussian_sector_spectrum(state, noise(3.0, 0.0))
        assert res.eta("x") == pytest.approx(exact.eta_x_exact, rel=2e-3)
        assert res.eta("p") == pytest.approx(exact.eta_p_exact, rel=2e-3)
        assert res.eta("x2") == pytest.approx(g.quadratic_etas[2], rel=2e-2)
        assert res.probes["p"]["overlap"] > 0.99

    def test_pure_rejected(self):
        with pytest.raises(DomainError):
            fock_relevance_oracle(QuantumGaussianState(1.0, 1.0), 1.0)


class TestPhaseCovariant:
    @pytest.mark.parametrize("uv,sigma", [(3.0, 3.0), (3.0, 10.0), (8.0, 5.0)])
    def test_matches_exact_sector(self, uv, sigma):
        state = QuantumGaussianState(math.sqrt(uv), math.sqrt(uv))
        res = phase_covariant_oracle(state, sigma, sigma)
        g = gaussian_sector_spectrum(state, noise(sigma, sigma))
        assert res.eta("a") == pytest.approx(g.linear_etas[0], rel=1e-6)
        assert sorted([res.eta("n"), res.eta("a2"), res.eta("a2")]) == pytest.approx(
            sorted(g.quadratic_etas), rel=1e-5)
        assert res.blocks[0][0] == pytest.approx(1.0, abs=1e-9)
        assert res.probes["n"]["overlap"] > 0.999999

    def test_squeezed_frame(self):
        # u != v is circular in oscillator units when sigma_x u = sigma_p v
        state = QuantumGaussianState(1.0, 4.0)
        res = phase_covariant_oracle(state, 8.0, 2.0)
        exact = quantum_particle_relevance(state, 8.0, 2.0)
        assert res.eta("a") == pytest.approx(exact.eta_x_exact, rel=1e-6)
        assert exact.eta_x_exact == pytest.approx(exact.eta_p_exact, rel=1e-12)

    def test_trace_preserving_blocks(self):
        state = QuantumGaussianState(2.0, 2.0)
        res = phase_covariant_oracle(state, 3.0, 3.0)
        assert 0 <= res.output_tail < 1e-9 and res.input_tail < 1e-8
        for etas in res.blocks.values():
            assert np.all(etas <= 1 + 1e-9) and np.all(etas >= 0)

    def test_noncircular_rejected(self):
        with pytest.raises(DomainError):
            phase_covariant_oracle(QuantumGaussianState(2.0, 2.0), 3.0, 1.0)
        with pytest.raises(DomainError):
            phase_covariant_oracle(QuantumGaussianState(2.0, 2.0), 0.0, 0.0)


class TestQField:
    state = QFieldState(beta=1.0, m=1.0)

    def test_zero_mode_value(self):
        eta_phi, _ = qfield_mode_relevance(0.0, self.state, SmearingParams(2.0, h_phi=10.0, h_pi=10.0))
        assert eta_phi == pytest.approx(1 / (0.5 / math.tanh(0.5) + 100), rel=1e-14)
        assert eta_phi == pytest.approx(9.8934e-3, rel=1e-4)

    def test_h_pi_toggle(self):
        smear = SmearingParams(1.0, h_phi=2.0, h_pi=5.0)
        _, a = qfield_mode_relevance(0.3, self.state, smear)
        _, b = qfield_mode_relevance(0.3, self.state, smear, use_h_pi=True)
        assert b < a

    @pytest.mark.parametrize("field", [0, 1])
    def test_monotone(self, field):
        base = dict(sigma=1.0, h_phi=2.0, h_pi=2.0)
        def eta(k=0.5, **kw):
            return qfield_mode_relevance(k, self.state, SmearingParams(**{**base, **kw}))[field]
        assert eta(sigma=2.0) < eta() < eta(sigma=0.5)
        assert eta(h_phi=3.0) < eta()
        assert eta(k=0.8) < eta() < eta(k=0.2)

    def test_product_rule(self):
        smear = SmearingParams(0.8, h_phi=3.0, h_pi=3.0)
        ks = [0.0, 0.4, -0.9]
        parts = [qfield_mode_relevance(k, self.state, smear) for k in ks]
        got = product_relevance(ks, self.state, smear, fields=["phi", "pi", "phi"])
        assert got == pytest.approx(parts[0][0] * parts[1][1] * parts[2][0], rel=1e-14)
        with pytest.raises(DomainError):
            product_relevance([0.1, 0.1], self.state, smear)
        with pytest.raises(ValidationError):
            product_relevance([0.1], self.state, smear, fields=["chi"])

    def test_exact_approaches_asymptotic(self):
        smear = SmearingParams(0.5, h_phi=30.0, h_pi=30.0)
        ex = qfield_mode_relevance_exact(0.2, self.state, smear)
        asym = qfield_mode_relevance(0.2, self.state, smear, use_h_pi=True)
        assert ex == pytest.approx(asym, rel=1e-2)

    def test_exact_matches_sector(self):
        smear = SmearingParams(0.7, h_phi=0.8, h_pi=0.6)
        k = 0.5
        X = math.exp(-0.5 * k * k * 0.49)
        ch = GaussianChannelSpec(X * np.eye(2), np.diag([2 * 0.64, 2 * 0.36]))
        g = gaussian_sector_spectrum(self.state.mode(k), ch)
        ex = qfield_mode_relevance_exact(k, self.state, smear)
        assert np.sort(g.linear_etas) == pytest.approx(np.sort(ex), rel=1e-10)

    def test_massless_zero_mode(self):
        with pytest.raises(DomainError):
            QFieldState(1.0, 0.0).mode(0.0)
