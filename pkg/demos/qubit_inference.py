"""
Forgetting a qubit
==================

Two qubits are in the maximally mixed state, and the observer can only
access the first one.  The relevance spectrum of the partial trace splits
the 16 observables cleanly into those that can still be inferred and those
that cannot.
"""

import numpy as np

from relevance_lab import (
    DensityMatrix,
    partial_trace_channel,
    relevance,
    relevance_operator,
    solve_spectrum,
)
from relevance_lab.properties import random_density_matrix

sz = np.diag([1.0, -1.0])
I2 = np.eye(2)
rho = DensityMatrix(np.eye(4) / 4)
trace_out_second = partial_trace_channel((2, 2), keep=[0])

# %%
# A feature on the kept qubit is fully visible; a correlation is invisible.
print("eta(sz x 1 / 4) =", relevance(rho, trace_out_second, np.kron(sz, I2) / 4))
print("eta(sz x sz / 4) =", relevance(rho, trace_out_second, np.kron(sz, sz) / 4))

# %%
# The full spectrum: four ones (the observables ``A x 1``, including the
# identity) and twelve zeros.
spec = solve_spectrum(relevance_operator(rho, trace_out_second))
print(np.round(spec.etas, 12))

# %%
# The same split holds for any product state ``rho_A x rho_B``: the
# relevance operator is then a projector onto ``{A x 1}``.
rng = np.random.default_rng(1)
prod = DensityMatrix(np.kron(random_density_matrix(2, rng).matrix, random_density_matrix(3, rng).matrix))
spec = solve_spectrum(relevance_operator(prod, partial_trace_channel((2, 3), keep=[0])))
print("distinct eigenvalues:", np.unique(np.round(spec.etas, 10)))

# %%
# A correlated state breaks the projector structure: some observables
# on the discarded qubit become partly inferable through the correlation.
corr = random_density_matrix(4, rng)
spec = solve_spectrum(relevance_operator(corr, trace_out_second))
print("correlated state:", np.round(spec.etas, 4))
