"""Solve the Kolmogorov backward equation for polynomial terminal data.

The terminal function is expanded over eigenfunctions; each mode then decays
with its own exponential.  Far from the horizon only the stationary mean is left.
"""

import numpy as np

from oueigen import (
    KBESolution,
    Polynomial,
    expansion_coefficients,
    gaussian_expectation,
    general_eigensystem,
    random_stable_system,
    stationary_covariance,
)

sys = random_stable_system(2, np.random.default_rng(3))
g = Polynomial(2, {(2, 0): 1.0, (1, 1): -0.5, (0, 1): 2.0})
sol = KBESolution(expansion_coefficients(g, general_eigensystem(sys, 2), sys), horizon=1.0)

for t in (1.0, 0.5, 0.0, -20.0):
    print(f"t = {t:+6.1f}: Phi(t, (1, 1)) = {complex(sol(t)(np.array([1.0, 1.0]))).real:+.6f}, "
          f"PDE residual {sol.residual(sys, t):.1e}")
mean = gaussian_expectation(g, stationary_covariance(sys).Sigma)
print(f"stationary mean of g: {mean.real:+.6f}")
