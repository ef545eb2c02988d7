"""Closed-form eigenfunctions for symmetric and rotational drifts.

A symmetric drift with commuting diffusion gets products of Hermite
polynomials; a 2D rotation gets Hermite-Laguerre-Ito polynomials.  Each
function is checked against the generator applied symbolically.
"""

import numpy as np

from oueigen import classify, hli, residual, special_eigenfunction, validate_system

# Symmetric drift in 2D, diffusion sharing its eigenvectors
U = np.array([[1.0, 1.0], [-1.0, 1.0]]) / np.sqrt(2)
A = -U @ np.diag([1.0, 2.0]) @ U.T
B = U @ np.diag([0.5, 1.2]) @ U.T
sym = validate_system(A, B)
print("case:", classify(sym).tag)
ef = special_eigenfunction(sym, (2, 1))
print(f"phi_(2,1) eigenvalue {ef.eigenvalue.real:+.3f}, residual {residual(sym, ef.monomial_form, ef.eigenvalue):.1e}")

# Rotation with isotropic noise: eigenvalues -(m+n)a + i(m-n)b
a, b, sigma = 1.0, 2.0, 0.8
rot = validate_system(np.array([[-a, b], [-b, -a]]), sigma * np.eye(2))
print("case:", classify(rot).tag)
for m, n in [(1, 0), (1, 1), (2, 1)]:
    ef = special_eigenfunction(rot, (m, n))
    print(f"J_{m}{n}: mu = {ef.eigenvalue:.3f}, residual {residual(rot, ef.monomial_form, ef.eigenvalue):.1e}")

print("J_11 at rho = 1 in (x, y):", hli(1, 1, 1.0))
