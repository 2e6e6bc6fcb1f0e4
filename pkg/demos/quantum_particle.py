"""
A quantum particle under phase-space noise
==========================================

The reference state is a mixed Gaussian with widths ``u, v`` and the channel
adds Gaussian noise to position and momentum.  Three independent routes give
the relevances of ``x`` and of the quadratic observables:

* closed forms (exact and large-noise asymptotic),
* the exact covariance-sector pencil,
* a truncated Fock-space pencil.
"""

import math

import numpy as np

from relevance_lab import GaussianChannelSpec
from relevance_lab.gaussian_sector import (
    QuantumGaussianState,
    fock_relevance_oracle,
    gaussian_sector_spectrum,
    phase_covariant_oracle,
    quantum_particle_relevance,
)

# %%
# Moderately mixed state, position noise only.
state = QuantumGaussianState(math.sqrt(3), math.sqrt(3))
r = quantum_particle_relevance(state, sigma_x=10.0, sigma_p=0.0)
fock = fock_relevance_oracle(state, 10.0, 0.0, n_in=40)
print(f"eta(x): exact {r.eta_x_exact:.6f}, asymptotic {r.eta_x:.6f}, Fock {fock.eta('x'):.6f}")
print(f"eta(p): exact {r.eta_p_exact:.6f} (momentum is untouched, but s changes)")

# %%
# A very mixed state needs hundreds of Fock levels.  With circular noise the
# problem splits into blocks of fixed ``n - m``, which keeps it small.
big = QuantumGaussianState(math.sqrt(50), math.sqrt(50))
pc = phase_covariant_oracle(big, 40.0, 40.0)
exact = gaussian_sector_spectrum(big, GaussianChannelSpec(np.eye(2), np.diag([1600.0, 1600.0])))
asym = quantum_particle_relevance(big, 40.0, 40.0).quadratic_pair[0].eta
print(f"cutoffs in/out: {pc.n_in}/{pc.n_out}")
print(f"quadratic relevances: Fock {pc.eta('n'):.5e} {pc.eta('a2'):.5e}; "
      f"covariance sector {np.sort(exact.quadratic_etas)}; v^4/sigma^4 = {asym:.5e}")

# %%
# Cutting the same state at 40 levels drops a fifth of its weight and the
# quadratic relevances come out several times too small.
small = phase_covariant_oracle(big, 40.0, 40.0, n_in=40)
print(f"n_in=40: tail {small.input_tail:.2f}, quadratic {small.eta('n'):.2e}")
