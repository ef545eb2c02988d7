"""Eigenexpansions, backward-equation solutions and Fokker-Planck eigenfunctions."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import spsolve_triangular

from .eigenfunction import Eigenfunction, ResonantBundle
from .errors import DimensionMismatch, IncompleteEigensystem, InputError, NumericalBreakdown
from .general import BasisSet
from .oracle import apply_ou
from .poly import GaussianWeightedPolynomial, MultiIndex, Polynomial, gaussian_inner
from .system import OUSystem, stationary_covariance

REAL_TOL = 1e-10


def _flatten(eigensystem: Iterable) -> dict[MultiIndex, Eigenfunction]:
    out: dict[MultiIndex, Eigenfunction] = {}
    for item in eigensystem:
        members = item.members if isinstance(item, ResonantBundle) else [item]
        for ef in members:
            out.setdefault(ef.index, ef)
    return out


def _indices_up_to(d: int, degree: int) -> list[MultiIndex]:
    return [n for n in itertools.product(range(degree + 1), repeat=d) if sum(n) <= degree]


@dataclass(frozen=True, eq=False)
class EigenExpansion:
    """``g = sum_n g_n phi_n`` over a finite set of eigenfunctions."""

    terms: tuple[tuple[MultiIndex, complex, Eigenfunction], ...]
    covariance: np.ndarray
    dim: int
    real_data: bool = False
    method: str = "orthogonal"
    terminal: Polynomial | None = None

    @property
    def coefficients(self) -> dict[MultiIndex, complex]:
        return {n: c for n, c, _ in self.terms}

    def polynomial(self, weights: Sequence[complex] | None = None) -> Polynomial:
        """``sum_n w_n g_n phi_n`` (``w_n = 1`` by default)."""
        exps, coeffs = [np.zeros((0, self.dim), dtype=np.int64)], [np.zeros(0, dtype=complex)]
        for i, (_, c, ef) in enumerate(self.terms):
            w = c if weights is None else c * weights[i]
            if w == 0:
                continue
            p = ef.monomial_form
            exps.append(p.exponents)
            coeffs.append(p.coefficients * w)
        return Polynomial.from_arrays(self.dim, np.vstack(exps), np.concatenate(coeffs))

    def __call__(self, x):
        return self.polynomial()(x)


def _orthogonal_coefficients(g, needed, efs, cov):
    out = []
    for n in needed:
        phi = efs[n].monomial_form
        out.append(gaussian_inner(g, phi, cov) / gaussian_inner(phi, phi, cov))
    return out


def _triangular_coefficients(g, needed, efs):
    """Solve ``g = sum_m g_m phi_m`` in psi-coordinates.

    With ``y_k = <x, f_k>`` the polynomial ``g(C^{-1} y)`` has the psi
    coefficients of ``g`` as its monomial coefficients.  Each ``phi_m`` is
    ``psi_m`` plus lower-degree terms, so the system is unit lower triangular.
    """
    decomp = efs[needed[0]].decomposition
    Cinv = np.linalg.inv(np.asarray(decomp.psi_vectors))
    gy = g.substitute([Polynomial.linear(row) for row in Cinv])
    basis = BasisSet(needed)
    rows, cols, vals = [], [], []
    for m in basis:
        col = basis.position[m]
        psi = efs[m].psi_coefficients
        lead = psi.get(m, 0)
        if lead == 0:
            raise NumericalBreakdown(f"eigenfunction {m} has no leading psi coefficient")
        for p, c in psi.items():
            r = basis.position.get(p)
            if r is None:
                raise NumericalBreakdown(f"psi support of {m} leaves the index set")
            rows.append(r)
            cols.append(col)
            vals.append(c)
    V = sp.csr_matrix((vals, (rows, cols)), shape=(len(basis), len(basis)), dtype=complex)
    rhs = np.array([gy.coefficient(m) for m in basis], dtype=complex)
    sol = spsolve_triangular(V, rhs, lower=True)
    sol = np.atleast_1d(sol)
    by_index = {m: sol[basis.position[m]] for m in basis}
    extra = gy.exponents.sum(axis=1).max() if gy.nterms else -1
    if extra > max(sum(m) for m in needed):
        raise NumericalBreakdown("terminal polynomial has terms above the eigensystem degree")
    return [by_index[n] for n in needed]


def expansion_coefficients(
    g: Polynomial,
    eigensystem: Iterable,
    sys: OUSystem,
    covariance=None,
    method: str = "auto",
) -> EigenExpansion:
    """Expand a polynomial ``g`` over eigenfunctions of the OU generator.

    Parameters
    ----------
    g : Polynomial
        Function to expand.
    eigensystem : iterable of Eigenfunction or ResonantBundle
        Must contain every index of total degree ``<= deg g``.
    sys : OUSystem
    covariance : array_like, optional
        Covariance of the invariant measure; solved for when omitted.
    method : {"auto", "orthogonal", "triangular"}
        ``orthogonal`` uses ``int g conj(phi_n) dnu / int |phi_n|^2 dnu`` and is
        only valid for orthogonal families (the closed-form cases).
        ``triangular`` solves in psi-coordinates and needs eigenfunctions that
        carry psi coefficients.  ``auto`` picks ``triangular`` when possible.
    """
    if g.dim != sys.dim:
        raise DimensionMismatch(f"polynomial in {g.dim} variables for a {sys.dim}-dimensional system")
    cov = np.asarray(stationary_covariance(sys).Sigma if covariance is None else covariance, dtype=float)
    efs = _flatten(eigensystem)
    real = bool(np.all(np.abs(g.coefficients.imag) == 0))
    if g.is_zero():
        return EigenExpansion((), cov, sys.dim, real, "orthogonal", g)
    needed = _indices_up_to(sys.dim, g.degree)
    missing = [n for n in needed if n not in efs]
    if missing:
        raise IncompleteEigensystem(f"{len(missing)} indices missing, e.g. {missing[0]}")
    has_psi = all(efs[n].psi_coefficients is not None for n in needed)
    same = len({id(efs[n].decomposition) for n in needed}) == 1
    if method == "auto":
        method = "triangular" if has_psi and same else "orthogonal"
    if method == "triangular":
        if not (has_psi and same):
            raise InputError("triangular expansion needs psi coefficients from one decomposition")
        coeffs = _triangular_coefficients(g, needed, efs)
    elif method == "orthogonal":
        coeffs = _orthogonal_coefficients(g, needed, efs, cov)
    else:
        raise InputError(f"unknown expansion method {method!r}")
    terms = tuple((n, complex(c), efs[n]) for n, c in zip(needed, coeffs) if c != 0)
    return EigenExpansion(terms, cov, sys.dim, real, method, g)


def _weights(expansion: EigenExpansion, tau: float, derivative: bool = False):
    mu = np.array([ef.eigenvalue for _, _, ef in expansion.terms], dtype=complex)
    w = np.exp(mu * tau)
    return -mu * w if derivative else w


def _realify(p: Polynomial, real: bool) -> Polynomial:
    if not real or p.is_zero():
        return p
    if np.abs(p.coefficients.imag).max() > REAL_TOL * max(p.norm(), 1.0):
        raise NumericalBreakdown("imaginary parts did not cancel for real terminal data")
    return p.real


def kbe_solve(expansion: EigenExpansion, T: float, t: float) -> Polynomial:
    """``Phi(t, x) = sum_n g_n exp(mu_n (T - t)) phi_n(x)``.

    For real terminal data the imaginary parts are checked to cancel and
    then dropped.  At ``t = T`` the stored terminal polynomial is returned as is.
    """
    if t > T:
        raise InputError("t must not exceed the horizon T")
    if t == T and expansion.terminal is not None:
        return expansion.terminal
    if not expansion.terms:
        return Polynomial.zero(expansion.dim)
    return _realify(expansion.polynomial(_weights(expansion, T - t)), expansion.real_data)


@dataclass(frozen=True, eq=False)
class KBESolution:
    """Solution of ``dPhi/dt + A Phi = 0`` with ``Phi(T) = g``."""

    expansion: EigenExpansion
    horizon: float

    def __call__(self, t: float) -> Polynomial:
        return kbe_solve(self.expansion, self.horizon, t)

    def time_derivative(self, t: float) -> Polynomial:
        """``dPhi/dt`` from the exponential factors."""
        if not self.expansion.terms:
            return Polynomial.zero(self.expansion.dim)
        w = _weights(self.expansion, self.horizon - t, derivative=True)
        return _realify(self.expansion.polynomial(w), self.expansion.real_data)

    def residual(self, sys: OUSystem, t: float) -> float:
        """``||dPhi/dt + A Phi|| / ||Phi||`` with ``A Phi`` from the symbolic oracle."""
        phi = self(t)
        if phi.is_zero():
            return 0.0
        return (self.time_derivative(t) + apply_ou(sys, phi)).norm() / phi.norm()


def kbe_solution(
    g: Polynomial, eigensystem: Iterable, sys: OUSystem, horizon: float, covariance=None, method: str = "auto"
) -> KBESolution:
    return KBESolution(expansion_coefficients(g, eigensystem, sys, covariance, method), float(horizon))


def adjoint_eigenfunction(phi: Eigenfunction | Polynomial, covariance, conjugate: bool = True) -> GaussianWeightedPolynomial:
    """Fokker-Planck eigenfunction built from ``phi_n`` and the invariant density ``p``.

    Returns ``conj(phi_n) p``, which satisfies ``A* q = mu_n q`` whenever
    ``phi_n`` comes from a closed form.  For real ``phi_n`` this is simply
    ``phi_n p``.  For complex ``phi_n`` the unconjugated product (``conjugate=False``)
    is an eigenfunction with eigenvalue ``conj(mu_n)`` instead.
    """
    poly = phi.monomial_form if isinstance(phi, Eigenfunction) else phi
    cov = covariance.Sigma if hasattr(covariance, "Sigma") else covariance
    return GaussianWeightedPolynomial(poly.conj() if conjugate else poly, np.asarray(cov, dtype=float))


def invariant_density(covariance, x) -> np.ndarray | float:
    """Density of ``N(0, covariance)`` at one point ``(d,)`` or many ``(N, d)``."""
    cov = np.atleast_2d(np.asarray(covariance.Sigma if hasattr(covariance, "Sigma") else covariance, dtype=float))
    d = cov.shape[0]
    q = GaussianWeightedPolynomial(Polynomial.constant(d, 1.0), cov)
    x = np.asarray(x, dtype=float)
    vals = q.density(x.reshape(-1, d))
    return float(vals[0]) if x.ndim <= 1 else vals
