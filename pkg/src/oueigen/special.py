"""Closed-form eigenfunctions for self-adjoint and normal drifts.

Self-adjoint, simultaneously diagonalizable ``A`` and ``B``: tensorized
Hermite polynomials in the eigen-directions.  Normal ``A`` with ``B`` sharing
its eigenvectors (or ``B`` a scaled orthogonal matrix): Hermite factors on the
real eigenspaces times Hermite-Laguerre-Ito factors on each complex pair.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .eigenfunction import Eigenfunction
from .errors import WrongCase
from .poly import Polynomial, as_multi_index, gaussian_norm, hermite, hli
from .system import OUSystem, SpectralDecomposition, spectral_decomposition, stationary_covariance

SELF_ADJOINT = "SelfAdjointSimultaneous"
NORMAL = "NormalSimultaneous"
GENERAL = "General"


@dataclass(frozen=True, eq=False)
class CaseClassification:
    """Which closed form applies, with the per-direction diffusion scalars.

    ``vectors`` holds orthonormal left eigenvectors (rows, same eigenvalue
    order as the decomposition) that also diagonalize ``Q``.  ``rho`` maps the
    first position of each complex pair to ``sigma_k^2 / a_k``.
    """

    tag: str
    rule: str | None = None
    sigma: np.ndarray | None = None
    rho: dict[int, float] = field(default_factory=dict)
    vectors: np.ndarray | None = None

    @property
    def is_special(self) -> bool:
        return self.tag != GENERAL

    def to_dict(self) -> dict:
        out = {"tag": self.tag, "rule": self.rule}
        if self.sigma is not None:
            out["sigma"] = [float(s) for s in self.sigma]
            out["rho"] = {str(k): v for k, v in self.rho.items()}
        return out


def _rel(x: np.ndarray, scale: float) -> float:
    return float(np.linalg.norm(x)) / max(scale, 1e-300)


def _clusters(lam: np.ndarray, positions) -> list[list[int]]:
    groups: list[list[int]] = []
    for k in positions:
        for g in groups:
            if abs(lam[k] - lam[g[0]]) <= 1e-9 * (1 + abs(lam[g[0]])):
                g.append(k)
                break
        else:
            groups.append([k])
    return groups


def _joint_basis(decomp: SpectralDecomposition, M: np.ndarray | None) -> np.ndarray:
    """Orthonormalize each eigen-cluster and diagonalize the compression of ``M`` on it."""
    lam = np.asarray(decomp.eigenvalues)
    F = np.array(decomp.left_eigenvectors, dtype=complex)
    out = F.copy()
    firsts = [k for k, p in enumerate(decomp.partner) if p is None or p > k]
    for group in _clusters(lam, firsts):
        U = F[group].T
        U, _ = np.linalg.qr(U)
        if M is not None and len(group) > 1:
            H = U.conj().T @ M @ U
            _, W = np.linalg.eigh(0.5 * (H + H.conj().T))
            U = U @ W
        for col, k in enumerate(group):
            f = U[:, col]
            j = int(np.argmax(np.abs(f)))
            f = f * (abs(f[j]) / f[j])
            if decomp.partner[k] is None:
                f = f.real.astype(complex)
            out[k] = f
            if decomp.partner[k] is not None:
                out[decomp.partner[k]] = np.conj(f)
    return out


def classify(sys: OUSystem, decomp: SpectralDecomposition | None = None) -> CaseClassification:
    """Decide which closed form (if any) applies; ``General`` is the fallback."""
    decomp = spectral_decomposition(sys) if decomp is None else decomp
    tol = sys.tolerances.classification
    A = np.asarray(sys.A)
    B = np.asarray(sys.B)
    Q = np.asarray(sys.Q)
    nA, nB = float(np.linalg.norm(A)), float(np.linalg.norm(B))
    square = B.shape[0] == B.shape[1]
    b_sym = square and _rel(B - B.T, nB) <= tol
    a_sym = _rel(A - A.T, nA) <= tol
    a_normal = _rel(A @ A.T - A.T @ A, nA**2) <= tol

    candidates = []
    if a_sym and b_sym and _rel(A @ B - B @ A, nA * nB) <= tol:
        candidates.append((SELF_ADJOINT, "symmetric-commuting", B))
    if a_normal:
        if b_sym:
            candidates.append((NORMAL, "B-eigenvectors", B))
        if square:
            s2 = float(np.trace(B @ B.T)) / B.shape[0]
            if s2 > 0 and _rel(B @ B.T - s2 * np.eye(B.shape[0]), s2 * np.sqrt(B.shape[0])) <= tol:
                candidates.append((NORMAL, "scaled-orthogonal", None))

    d = sys.dim
    for tag, rule, M in candidates:
        V = _joint_basis(decomp, M)
        if _rel(V @ V.conj().T - np.eye(d), np.sqrt(d)) > 1e-8:
            continue
        if rule == "B-eigenvectors":
            sig = np.real(np.einsum("ki,ij,kj->k", V.conj(), B, V))
            if np.any(sig <= 0) or _rel(B @ V.T - V.T * sig[None, :], nB) > tol * 10:
                continue
        C = V.conj()
        G = C @ Q @ C.conj().T  # Gram matrix of Q in the joint basis
        off = G - np.diag(np.diag(G))
        if _rel(off, float(np.linalg.norm(Q))) > 1e-8:
            continue
        if tag == SELF_ADJOINT and np.abs(V.imag).max() > 0:
            continue
        sigma = np.sqrt(2.0 * np.real(np.diag(G)))
        rho = {
            k: float(sigma[k] ** 2 / decomp.eigenvalues[k].real)
            for k, p in enumerate(decomp.partner)
            if p is not None and p > k
        }
        V.setflags(write=False)
        return CaseClassification(tag, rule, sigma, rho, V)
    return CaseClassification(GENERAL)


def _hermite_factor(n: int, direction: np.ndarray, lam: float, sigma: float) -> Polynomial:
    s = np.sqrt(2.0 * lam / sigma**2)
    arg = Polynomial.linear(s * np.conj(direction))
    return hermite(n).substitute([arg])


def _normalize(sys, phi: Polynomial) -> Polynomial:
    cov = stationary_covariance(sys).Sigma
    return phi / gaussian_norm(phi, cov)


def selfadjoint_eigenfunction(
    sys: OUSystem,
    decomp: SpectralDecomposition,
    n,
    classification: CaseClassification | None = None,
    normalized: bool = False,
) -> Eigenfunction:
    """``prod_k He_{n_k}(sqrt(2 lambda_k / sigma_k^2) <x, e_k>)``."""
    case = classify(sys, decomp) if classification is None else classification
    if case.tag != SELF_ADJOINT:
        raise WrongCase(f"system is {case.tag}, not {SELF_ADJOINT}")
    n = as_multi_index(n, sys.dim)
    lam = decomp.eigenvalues.real
    phi = Polynomial.constant(sys.dim, 1.0)
    for k, nk in enumerate(n):
        if nk:
            phi = phi * _hermite_factor(nk, case.vectors[k].real, lam[k], case.sigma[k])
    if normalized:
        phi = _normalize(sys, phi)
    return Eigenfunction(n, decomp.eigenvalue_of(n), phi, method="selfadjoint", meta={"normalized": normalized})


def normal_eigenfunction(
    sys: OUSystem,
    decomp: SpectralDecomposition,
    n,
    classification: CaseClassification | None = None,
    normalized: bool = False,
) -> Eigenfunction:
    """Hermite factors on real eigenspaces times HLI factors on complex pairs.

    On a pair at positions ``(k, k+1)`` the factor is
    ``J_{n_k, n_{k+1}}(z, zbar; rho_k)`` with ``z = sqrt(2) <x, f_k>``.
    """
    case = classify(sys, decomp) if classification is None else classification
    if case.tag not in (NORMAL, SELF_ADJOINT):
        raise WrongCase(f"system is {case.tag}, not {NORMAL}")
    n = as_multi_index(n, sys.dim)
    lam = decomp.eigenvalues
    phi = Polynomial.constant(sys.dim, 1.0)
    for k, p in enumerate(decomp.partner):
        if p is None:
            if n[k]:
                phi = phi * _hermite_factor(n[k], case.vectors[k], lam[k].real, case.sigma[k])
        elif p > k and (n[k] or n[p]):
            c = np.sqrt(2.0) * np.conj(case.vectors[k])
            x_part = Polynomial.linear(c.real)
            y_part = Polynomial.linear(c.imag)
            phi = phi * hli(n[k], n[p], case.rho[k]).substitute([x_part, y_part])
    if normalized:
        phi = _normalize(sys, phi)
    return Eigenfunction(n, decomp.eigenvalue_of(n), phi, method="normal", meta={"normalized": normalized})


def special_eigenfunction(
    sys: OUSystem,
    n,
    decomp: SpectralDecomposition | None = None,
    classification: CaseClassification | None = None,
    normalized: bool = False,
) -> Eigenfunction:
    decomp = spectral_decomposition(sys) if decomp is None else decomp
    case = classify(sys, decomp) if classification is None else classification
    if case.tag == SELF_ADJOINT:
        return selfadjoint_eigenfunction(sys, decomp, n, case, normalized)
    if case.tag == NORMAL:
        return normal_eigenfunction(sys, decomp, n, case, normalized)
    raise WrongCase("no closed form for a general system")


def special_eigensystem(sys: OUSystem, max_degree: int, normalized: bool = False) -> list[Eigenfunction]:
    """Closed-form eigenfunctions for every index of total degree ``<= max_degree``."""
    decomp = spectral_decomposition(sys)
    case = classify(sys, decomp)
    out = []
    for n in itertools.product(range(max_degree + 1), repeat=sys.dim):
        if sum(n) <= max_degree:
            out.append(special_eigenfunction(sys, n, decomp, case, normalized))
    return out
