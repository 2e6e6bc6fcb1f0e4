import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from relevance_lab import DensityMatrix, inner_product, omega_apply
from relevance_lab.properties import (
    EPSILONS,
    PropertyReport,
    entropy_expansion_slope,
    omega_quadrature,
    random_density_matrix,
    random_feature,
    run_property_suite,
)

seeds = st.integers(0, 2**32 - 1)


class TestGenerators:
    @given(seeds, st.integers(2, 6))
    def test_density_matrix(self, seed, dim):
        rho = random_density_matrix(dim, seed)
        assert np.trace(rho.matrix).real == pytest.approx(1.0)
        assert rho.eigenvalues.min() >= 0.05 / dim * (1 - 1e-12)

    @given(seeds, st.integers(2, 6))
    def test_feature(self, seed, dim):
        rho = random_density_matrix(dim, seed)
        X = random_feature(rho, seed + 1)
        assert abs(np.trace(X)) < 1e-12
        assert np.allclose(X, X.conj().T)
        assert inner_product(rho, X, X) == pytest.approx(1.0, rel=1e-12)


class TestOracles:
    @given(seeds)
    def test_omega_quadrature(self, seed):
        rng = np.random.default_rng(seed)
        rho = random_density_matrix(4, rng)
        A = random_feature(rho, rng, normalize=False)
        assert np.max(np.abs(omega_apply(rho, A) - omega_quadrature(rho, A))) < 1e-10

    def test_omega_quadrature_commuting(self):
        rho = DensityMatrix(np.diag([0.1, 0.3, 0.6]))
        A = np.diag([1.0, -2.0, 1.0]).astype(complex)
        assert np.allclose(omega_quadrature(rho, A), rho.matrix @ A, atol=1e-14)

    def test_entropy_slopes(self):
        rng = np.random.default_rng(11)
        rho = random_density_matrix(3, rng)
        X = random_feature(rho, rng)
        assert entropy_expansion_slope(rho, X) == pytest.approx(3.0, abs=0.15)
        assert entropy_expansion_slope(rho, X, factor=1.0) == pytest.approx(2.0, abs=0.01)
        assert len(EPSILONS) == 5 and EPSILONS[0] == pytest.approx(1e-2)


class TestSuite:
    def test_small_run(self):
        rep = run_property_suite(dims=(2, 3), trials=5, seed=3)
        assert len(rep.records) == 10 and isinstance(rep, PropertyReport)
        v = rep.violations
        assert v["eta"] == v["positivity"] == v["adjoint"] == v["omega"] == 0
        w = rep.worst()
        assert 0 <= w["eta_min"] <= w["eta_max"] <= 1 + 1e-12
        assert w["slope_unhalved_max"] < 2.1
        assert rep.rows()[0][:2] == (2, 0) and len(rep.rows()[0]) == len(PropertyReport.COLUMNS)

    def test_deterministic(self):
        a = run_property_suite(dims=(3,), trials=3, seed=5).rows()
        b = run_property_suite(dims=(3,), trials=3, seed=5).rows()
        assert a == b
