"""Symbolic application of the OU generator, its drift part, and its adjoint.

Everything here differentiates in the raw coordinates ``x``; nothing depends
on the eigenvectors of ``A``.  That independence is what makes these
functions usable as ground truth for the matrix method in :mod:`.general`.
"""

from __future__ import annotations

import numpy as np

from .errors import DimensionMismatch, ZeroPolynomial
from .poly import GaussianWeightedPolynomial, Polynomial, gaussian_norm
from .system import OUSystem


def _check(p: Polynomial, d: int):
    if p.dim != d:
        raise DimensionMismatch(f"polynomial in {p.dim} variables for a {d}-dimensional system")


def _linear_rows(M: np.ndarray) -> list[Polynomial]:
    """Polynomials ``(M x)_i`` for each row ``i``."""
    return [Polynomial.linear(row) for row in np.asarray(M)]


def apply_drift(A, p: Polynomial) -> Polynomial:
    """``sum_i (A x)_i dp/dx_i``."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    _check(p, A.shape[0])
    d = p.dim
    E, c = p.exponents, p.coefficients
    eye = np.eye(d, dtype=np.int64)
    # term e -> e - e_i + e_j with weight e_i * A_ij
    exps = E[:, None, None, :] - eye[None, :, None, :] + eye[None, None, :, :]
    w = c[:, None, None] * E[:, :, None] * A[None, :, :]
    keep = (np.broadcast_to(E[:, :, None], w.shape) > 0) & (w != 0)
    return Polynomial.from_arrays(d, exps[keep], w[keep])


def apply_diffusion(Q, p: Polynomial) -> Polynomial:
    """``sum_ij Q_ij d^2 p / dx_i dx_j``."""
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    _check(p, Q.shape[0])
    d = p.dim
    E, c = p.exponents, p.coefficients
    eye = np.eye(d, dtype=np.int64)
    exps = E[:, None, None, :] - eye[None, :, None, :] - eye[None, None, :, :]
    # d_j d_i x^e = e_i (e_j - delta_ij) x^(e - e_i - e_j)
    fall = E[:, :, None] * (E[:, None, :] - eye[None, :, :])
    w = c[:, None, None] * fall * Q[None, :, :]
    keep = (fall > 0) & (w != 0)
    return Polynomial.from_arrays(d, exps[keep], w[keep])


def apply_ou(sys: OUSystem, p: Polynomial) -> Polynomial:
    """The generator ``<A x, grad p> + Tr(Q Hess p)``."""
    _check(p, sys.dim)
    drift = apply_drift(sys.A, p)
    diff = apply_diffusion(sys.Q, p)
    return Polynomial.from_arrays(
        p.dim,
        np.vstack([drift.exponents, diff.exponents]),
        np.concatenate([drift.coefficients, diff.coefficients]),
    )


def apply_adjoint(sys: OUSystem, q: GaussianWeightedPolynomial) -> GaussianWeightedPolynomial:
    """Fokker-Planck operator applied to ``u(x) p(x)``, ``p = N(0, Sigma)``.

    With ``grad p = -P x p`` (``P = Sigma^{-1}``) the result is again a
    polynomial times the same Gaussian:

    ``-tr(A) u - (Ax).grad u + u (Ax).(Px)
      + sum_ij Q_ij [u_ij - u_i (Px)_j - u_j (Px)_i - u P_ij + u (Px)_i (Px)_j]``.
    """
    u = q.poly
    _check(u, sys.dim)
    d = sys.dim
    A = np.asarray(sys.A)
    Q = np.asarray(sys.Q)
    P = np.linalg.inv(q.covariance)
    P = 0.5 * (P + P.T)
    Ax = _linear_rows(A)
    Px = _linear_rows(P)
    grad = [u.derivative(i) for i in range(d)]

    out = -np.trace(A) * u
    drift_dot = Polynomial.zero(d)
    for i in range(d):
        out = out - Ax[i] * grad[i]
        drift_dot = drift_dot + Ax[i] * Px[i]
    out = out + u * drift_dot
    for i in range(d):
        for j in range(d):
            if Q[i, j] == 0:
                continue
            term = grad[i].derivative(j) - grad[i] * Px[j] - grad[j] * Px[i] - P[i, j] * u + u * (Px[i] * Px[j])
            out = out + Q[i, j] * term
    return GaussianWeightedPolynomial(out, q.covariance)


def residual(sys: OUSystem, phi: Polynomial, mu: complex) -> float:
    """``||A phi - mu phi|| / ||phi||`` in the coefficient 2-norm."""
    if phi.is_zero():
        raise ZeroPolynomial("residual of the zero polynomial is undefined")
    return (apply_ou(sys, phi) - mu * phi).norm() / phi.norm()


def residual_l2(sys: OUSystem, phi: Polynomial, mu: complex, cov) -> float:
    """Same as :func:`residual` but measured in ``L^2(N(0, cov))``."""
    if phi.is_zero():
        raise ZeroPolynomial("residual of the zero polynomial is undefined")
    return gaussian_norm(apply_ou(sys, phi) - mu * phi, cov) / gaussian_norm(phi, cov)
