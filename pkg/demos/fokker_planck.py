"""Fokker-Planck eigenfunctions from Koopman eigenfunctions and the invariant density."""

import numpy as np

from oueigen import (
    GaussianWeightedPolynomial,
    Polynomial,
    adjoint_eigenfunction,
    apply_adjoint,
    special_eigensystem,
    stationary_covariance,
    validate_system,
)

sys = validate_system(np.array([[-0.5, 1.0], [-1.0, -0.5]]), 1.1 * np.eye(2))
cov = stationary_covariance(sys)
print("stationary covariance:\n", cov.Sigma)

p = GaussianWeightedPolynomial(Polynomial.constant(2, 1.0), cov.Sigma)
print(f"|A* p| = {apply_adjoint(sys, p).poly.norm():.1e}")

for ef in special_eigensystem(sys, 2):
    q = adjoint_eigenfunction(ef, cov)
    err = (apply_adjoint(sys, q).poly - ef.eigenvalue * q.poly).norm() / q.poly.norm()
    print(f"n = {ef.index}: mu = {ef.eigenvalue:.2f}, relative residual {err:.1e}")
