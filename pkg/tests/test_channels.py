import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from relevance_lab import (
    ClassicalState,
    ConfigurationError,
    DensityMatrix,
    DimensionError,
    GaussianChannelSpec,
    KrausChannel,
    RecoveryMap,
    StochasticChannel,
    ValidationError,
    adjoint_apply,
    apply,
    build_gaussian_convolution,
    inner_product,
    partial_trace_channel,
    recovery_apply,
)
from relevance_lab.channels import (
    cell_centers,
    channel_from_dict,
    depolarizing_channel,
    identity_channel,
    random_kraus_channel,
    random_stochastic_channel,
)
from relevance_lab.properties import random_density_matrix, random_feature


def hermitian(rng, d):
    G = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return G + G.conj().T


class TestStochastic:
    def test_rejects_bad_matrices(self):
        with pytest.raises(ValidationError):
            StochasticChannel([[0.5, 1.0], [0.6, 0.0]])
        with pytest.raises(ValidationError):
            StochasticChannel([[1.5, 0.0], [-0.5, 1.0]])

    def test_adjoint_duality(self, rng):
        ch = random_stochastic_channel(5, 3, rng)
        x, b = rng.normal(size=5), rng.normal(size=3)
        assert b @ ch.apply(x) == pytest.approx(ch.adjoint(b) @ x, rel=1e-12)
        assert np.allclose(ch.adjoint(np.ones(3)), 1.0)

    def test_output_grid(self, rng):
        p = ClassicalState(np.arange(4.0), rng.dirichlet(np.ones(4)))
        out = random_stochastic_channel(4, 2, rng).apply_state(p)
        assert out.dim == 2 and out.probs.sum() == pytest.approx(1.0, abs=1e-14)


class TestConvolution:
    def test_delta_spreads_into_gaussian(self):
        grid = cell_centers(-12, 12, 2400)
        ch = build_gaussian_convolution(grid, 1.0)
        delta = np.zeros(grid.size)
        i0 = np.argmin(np.abs(grid - 0.005))
        delta[i0] = 1.0
        out = ch.apply(delta)
        dx = grid[1] - grid[0]
        ref = np.exp(-0.5 * (grid - grid[i0]) ** 2) / np.sqrt(2 * np.pi) * dx
        assert np.max(np.abs(out - ref)) < 1e-6

    def test_columns_sum_to_one(self):
        ch = build_gaussian_convolution(cell_centers(-3, 3, 60), 1.0)
        assert np.allclose(ch.matrix.sum(axis=0), 1.0, atol=1e-15)

    def test_near_identity(self):
        grid = cell_centers(-1, 1, 21)
        dx = grid[1] - grid[0]
        ch = build_gaussian_convolution(grid, dx / 100, strict=False)
        off = ch.matrix - np.diag(np.diag(ch.matrix))
        assert off.sum(axis=0).max() < 1e-10

    def test_coarse_grid_rejected(self):
        with pytest.raises(ConfigurationError):
            build_gaussian_convolution(cell_centers(-1, 1, 10), 0.1)
        with pytest.raises(ConfigurationError):
            build_gaussian_convolution(cell_centers(-1, 1, 10), 0.0)

    def test_semigroup(self):
        grid = cell_centers(-20, 20, 800)
        s1, s2 = 1.0, 1.5
        two = build_gaussian_convolution(grid, s2).matrix @ build_gaussian_convolution(grid, s1).matrix
        one = build_gaussian_convolution(grid, np.hypot(s1, s2)).matrix
        interior = np.abs(grid) < 5
        assert np.linalg.norm((two - one)[:, interior], 2) < 1e-6


class TestKraus:
    def test_trace_preservation_checked(self):
        with pytest.raises(ValidationError):
            KrausChannel(np.array([np.eye(2) * 0.5]))
        KrausChannel(np.array([np.eye(2) * 0.5]), check_tp=False)

    @pytest.mark.parametrize("din,dout,n", [(2, 2, 1), (3, 2, 2), (4, 4, 3), (2, 5, 1)])
    def test_trace_and_duality(self, rng, din, dout, n):
        ch = random_kraus_channel(din, dout, n, rng)
        rho = random_density_matrix(din, rng)
        out = ch.apply(rho.matrix)
        assert np.trace(out).real == pytest.approx(1.0, abs=1e-10)
        assert np.allclose(ch.adjoint(np.eye(dout)), np.eye(din), atol=1e-12)
        B = hermitian(rng, dout)
        lhs = np.trace(ch.adjoint(B) @ rho.matrix)
        rhs = np.trace(B @ out)
        assert abs(lhs - rhs) < 1e-12

    def test_isometry_dimension_guard(self):
        with pytest.raises(DimensionError):
            random_kraus_channel(6, 2, 2)

    def test_superoperator_matches_apply(self, rng):
        ch = random_kraus_channel(3, 2, 2, rng)
        S = ch.superoperator()
        X = hermitian(rng, 3)
        vec = (S @ X.reshape(-1)).reshape(2, 2)
        assert np.allclose(vec, ch.apply(X))

    def test_compose(self, rng):
        a = random_kraus_channel(3, 3, 2, rng)
        b = random_kraus_channel(3, 2, 2, rng)
        X = hermitian(rng, 3)
        assert np.allclose(b.compose(a).apply(X), b.apply(a.apply(X)))

    def test_depolarizing(self, rng):
        rho = random_density_matrix(3, rng)
        out = depolarizing_channel(3, 1.0).apply(rho.matrix)
        assert np.allclose(out, np.eye(3) / 3)


class TestPartialTrace:
    def test_keep_everything_is_identity(self, rng):
        ch = partial_trace_channel([2, 3], [0, 1])
        X = hermitian(rng, 6)
        assert np.allclose(ch.apply(X), X)

    def test_bell_marginal(self):
        bell = np.zeros(4)
        bell[[0, 3]] = 1 / np.sqrt(2)
        out = partial_trace_channel([2, 2], [1]).apply(np.outer(bell, bell))
        assert np.allclose(out, np.eye(2) / 2, atol=1e-15)

    @pytest.mark.parametrize("dims", [(2, 2), (2, 3), (3, 2)])
    def test_product_marginals(self, rng, dims):
        a, b = random_density_matrix(dims[0], rng), random_density_matrix(dims[1], rng)
        rho = np.kron(a.matrix, b.matrix)
        assert np.max(np.abs(partial_trace_channel(dims, [0]).apply(rho) - a.matrix)) < 1e-14
        assert np.max(np.abs(partial_trace_channel(dims, [1]).apply(rho) - b.matrix)) < 1e-14

    def test_adjoint_embeds(self, rng):
        B = hermitian(rng, 2)
        assert np.allclose(partial_trace_channel([2, 3], [0]).adjoint(B), np.kron(B, np.eye(3)))

    def test_three_factors_against_einsum(self, rng):
        rho = random_density_matrix(12, rng).matrix
        out = partial_trace_channel([2, 3, 2], [0, 2]).apply(rho)
        t = rho.reshape(2, 3, 2, 2, 3, 2)
        ref = np.einsum("ajbcjd->abcd", t).reshape(4, 4)
        assert np.allclose(out, ref)

    @pytest.mark.parametrize("keep", [[], [2], [-1]])
    def test_invalid_keep(self, keep):
        with pytest.raises(ValidationError):
            partial_trace_channel([2, 2], keep)


class TestRecovery:
    def test_fixes_reference(self, rng):
        rho = random_density_matrix(3, rng)
        ch = random_kraus_channel(3, 2, 3, rng)
        out = ch.apply_state(rho)
        assert np.allclose(recovery_apply(rho, ch, out.matrix), rho.matrix, atol=1e-12)

    def test_identity_channel(self, rng):
        rho = random_density_matrix(3, rng)
        X = random_feature(rho, rng)
        assert np.allclose(recovery_apply(rho, identity_channel(3), X), X, atol=1e-12)

    def test_adjoint_identity_qubit(self, rng):
        rho = random_density_matrix(2, rng)
        ch = random_kraus_channel(2, 2, 2, rng)
        R = RecoveryMap(rho, ch)
        out = R.output_state
        for _ in range(20):
            X = random_feature(rho, rng)
            Y = random_feature(out, rng)
            lhs = inner_product(rho, R(Y), X)
            rhs = inner_product(out, Y, ch.apply(X))
            assert abs(lhs - rhs) < 1e-9 * max(1.0, abs(lhs))

    def test_classical(self, rng):
        p = ClassicalState(np.arange(5.0), rng.dirichlet(np.ones(5)))
        ch = random_stochastic_channel(5, 5, rng)
        q = ch.apply_state(p)
        assert np.allclose(recovery_apply(p, ch, q.probs), p.probs)

    def test_factorized_projector(self, rng):
        a, b = random_density_matrix(2, rng), random_density_matrix(3, rng)
        rho = DensityMatrix(np.kron(a.matrix, b.matrix))
        ch = partial_trace_channel([2, 3], [0])
        A, B = hermitian(rng, 2), hermitian(rng, 3)
        got = RecoveryMap(rho, ch).dual_relevance(np.kron(A, B))
        want = np.kron(A * np.trace(b.matrix @ B).real, np.eye(3))
        assert np.max(np.abs(got - want)) < 1e-9


class TestGaussianSpec:
    def test_noise_channel(self):
        ch = GaussianChannelSpec.quadrature_noise(2.0, 0.5)
        assert np.allclose(ch.act(np.diag([3.0, 3.0])), np.diag([7.0, 3.25]))

    def test_complete_positivity(self):
        with pytest.raises(ValidationError):
            GaussianChannelSpec(np.eye(2) * 2, np.zeros((2, 2)))
        GaussianChannelSpec(np.eye(2) * 2, np.zeros((2, 2)), quantum=False)
        # amplification needs noise (X^T S X = 4 S): Y >= 3 suffices
        GaussianChannelSpec(np.eye(2) * 2, 3 * np.eye(2))

    @given(st.floats(0, 10), st.floats(0, 10))
    def test_additive_noise_is_valid(self, sx, sp):
        ch = GaussianChannelSpec.quadrature_noise(sx, sp)
        assert np.all(np.diag(ch.Y) >= 0)


class TestFromDict:
    def test_kinds(self):
        c = channel_from_dict({"kind": "convolution", "sigma": 1.0, "grid": {"start": -6, "stop": 6, "cells": 60}})
        assert isinstance(c, StochasticChannel) and c.dim_in == 60
        p = channel_from_dict({"kind": "partial_trace", "dims": [2, 2], "keep": [0]})
        assert p.dim_out == 2
        k = channel_from_dict({"kind": "kraus", "ops": [{"real": [[1, 0], [0, 1]], "imag": [[0, 0], [0, 0]]}]})
        assert np.allclose(k.apply(np.eye(2)), np.eye(2))
        g = channel_from_dict({"kind": "gaussian", "X": [[1, 0], [0, 1]], "Y": [[1, 0], [0, 0]]})
        assert g.Y[0, 0] == 1.0

    @pytest.mark.parametrize("spec", [
        {"kind": "convolution", "sigma": 1.0, "grid": [0, 1], "bogus": 1},
        {"kind": "teleport"},
        {"sigma": 1.0},
        {"kind": "partial_trace", "dims": [2, 2]},
    ])
    def test_strict(self, spec):
        with pytest.raises(ConfigurationError):
            channel_from_dict(spec)


def test_module_level_helpers(rng):
    rho = random_density_matrix(2, rng)
    ch = identity_channel(2)
    assert np.allclose(apply(ch, rho).matrix, rho.matrix)
    assert np.allclose(adjoint_apply(ch, np.eye(2)), np.eye(2))
    with pytest.raises(DimensionError):
        StochasticChannel(np.eye(2)).apply_state(rho)
