"""Eigenfunctions of a generic non-normal OU operator via the sparse triangular method.

The target index generates a finite basis of psi-monomials.  The operator is
lower triangular on that basis, so the eigenvector comes from substitution.
"""

import numpy as np

from oueigen import (
    assemble_matrix,
    basis_closure,
    full_basis,
    random_stable_system,
    residual,
    solve_eigenfunction,
    spectral_decomposition,
)

print("closure of (2, 3):", sorted(basis_closure((2, 3))))

n = (4, 3, 2, 2, 2, 3)
print(f"closure of {n}: {len(basis_closure(n))} indices, full box: {len(full_basis(n))}")

sys = random_stable_system(6, np.random.default_rng(0), n_pairs=1)
dec = spectral_decomposition(sys)
basis = basis_closure(n)
M = assemble_matrix(sys, dec, basis)
print("matrix:", M.report())

ef = solve_eigenfunction(M, basis, n, dec)
print(f"mu = {ef.eigenvalue:.4f}, expected {dec.eigenvalue_of(n):.4f}")
print(f"monomial terms: {ef.monomial_form.nterms}, oracle residual {residual(sys, ef.monomial_form, ef.eigenvalue):.1e}")
