"""Closed-form relevance results around Gaussian states."""

from .classical_field import (
    ClassicalFieldTheory,
    FieldLattice,
    ScalingFit,
    SmearingParams,
    classical_mode_relevance,
    phi_laplacian_phi_relevance,
    phi_squared_relevance,
    scaling_exponent,
)
from .quantum_gaussian import (
    GaussianSectorSpectrum,
    ParticleRelevance,
    QFieldState,
    QuadraticObservable,
    QuantumGaussianState,
    gaussian_sector_spectrum,
    hamiltonian_matrix,
    product_relevance,
    qfield_mode_relevance,
    qfield_mode_relevance_exact,
    quantum_particle_relevance,
)
from .fock import (
    FockOracleResult,
    PhaseCovariantResult,
    fock_relevance_oracle,
    hermite_functions,
    phase_covariant_oracle,
)
from .wilson import (
    WilsonParams,
    field_exponents,
    mass_shell_shift,
    rescale_quadratic_hamiltonian,
    shell_integral,
    shell_integral_closed_form,
    sphere_factor,
    wilson_rescale,
)
