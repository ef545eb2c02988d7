"""Validated OU systems, spectral data of the drift, and covariances."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, fields, replace
from functools import cached_property
from typing import Mapping

import numpy as np
import scipy.linalg

from .errors import (
    HypoellipticityViolated,
    InputError,
    NotDiagonalizable,
    ShapeMismatch,
    SolverFailure,
    UnstableDrift,
)


@dataclass(frozen=True)
class Tolerances:
    """Numerical thresholds shared by all modules.

    Attributes
    ----------
    condition_threshold
        Largest accepted condition number of the left-eigenvector matrix.
    real_eigenvalue
        ``|Im(lam)| <= real_eigenvalue * (1 + |lam|)`` counts as real.
    hypoellipticity
        ``||B^T f_k|| <= hypoellipticity * max(1, ||B||)`` is a violation.
    classification
        Relative Frobenius tolerance for symmetry, normality and commutation tests.
    resonance
        ``|mu_m - mu_n| <= resonance * (1 + |mu_n|)`` flags coinciding eigenvalues.
    matrix_entry
        Entries ``|<f_j, Q f_k>| <= matrix_entry * ||Q||`` are numeric zeros.
    covariance_psd
        Eigenvalues below ``covariance_psd * trace`` count as zero.
    lyapunov_residual
        Accepted relative residual of the Lyapunov solve.
    """

    condition_threshold: float = 1e8
    real_eigenvalue: float = 1e-10
    hypoellipticity: float = 1e-10
    classification: float = 1e-10
    resonance: float = 1e-9
    matrix_entry: float = 1e-14
    covariance_psd: float = 1e-12
    lyapunov_residual: float = 1e-10

    def updated(self, overrides: Mapping[str, float] | None) -> "Tolerances":
        if not overrides:
            return self
        known = {f.name for f in fields(self)}
        unknown = set(overrides) - known
        if unknown:
            raise InputError(f"unknown tolerance(s): {sorted(unknown)}")
        return replace(self, **{k: float(v) for k, v in overrides.items()})

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


DEFAULT_TOLERANCES = Tolerances()


@dataclass(frozen=True, eq=False)
class OUSystem:
    """Drift ``A`` (d x d), diffusion factor ``B`` (d x r), and ``Q = B B^T / 2``.

    Build instances with :func:`validate_system`; the constructor does not check
    the invariants by itself.
    """

    A: np.ndarray
    B: np.ndarray
    tolerances: Tolerances = field(default=DEFAULT_TOLERANCES)

    @property
    def dim(self) -> int:
        return self.A.shape[0]

    @cached_property
    def Q(self) -> np.ndarray:
        q = 0.5 * self.B @ self.B.T
        q = 0.5 * (q + q.T)
        q.setflags(write=False)
        return q

    def to_dict(self) -> dict:
        return {
            "A": self.A.tolist(),
            "B": self.B.tolist(),
            "tolerances": self.tolerances.to_dict(),
        }


@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    """Eigen-data of the drift matrix.

    ``eigenvalues[k]`` is ``lambda_k`` (so ``A`` has eigenvalue ``-lambda_k``)
    and row ``k`` of ``left_eigenvectors`` is ``f_k`` with
    ``f_k^* A = -lambda_k f_k^*``.  Real eigenvalues come first (ascending),
    followed by conjugate pairs; in each pair the first member has
    ``lambda_k = a_k - i b_k`` with ``b_k > 0``.
    """

    eigenvalues: np.ndarray
    left_eigenvectors: np.ndarray
    partner: tuple[int | None, ...]
    condition_number: float

    @property
    def dim(self) -> int:
        return self.eigenvalues.size

    @property
    def is_real(self) -> tuple[bool, ...]:
        return tuple(p is None for p in self.partner)

    @property
    def classification(self) -> tuple[str, ...]:
        return tuple("real" if p is None else f"complex-pair({p})" for p in self.partner)

    @property
    def l_prime(self) -> int:
        """Number of real eigenvalues (counted with multiplicity)."""
        return sum(p is None for p in self.partner)

    @property
    def l(self) -> int:
        """Eigenspace count with each conjugate pair counted once."""
        return self.l_prime + (self.dim - self.l_prime) // 2

    @property
    def spectral_abscissa(self) -> float:
        """``max_k Re(-lambda_k)``, the largest real part of an eigenvalue of ``A``."""
        return float(np.max(-self.eigenvalues.real))

    def degree_bound(self, gamma: complex) -> int:
        """Upper bound on the degree of an eigenfunction with eigenvalue ``gamma``."""
        return int(np.floor(abs(np.real(gamma)) / abs(self.spectral_abscissa) + 1e-9))

    @cached_property
    def psi_vectors(self) -> np.ndarray:
        """Rows ``c_k = conj(f_k)``, so that ``<x, f_k> = c_k . x`` for real ``x``."""
        c = np.conj(self.left_eigenvectors)
        c.setflags(write=False)
        return c

    @cached_property
    def distinct(self) -> list[tuple[complex, tuple[int, ...]]]:
        """Distinct eigenvalues with the positions sharing each of them."""
        groups: list[tuple[complex, list[int]]] = []
        for k, lam in enumerate(self.eigenvalues):
            for val, members in groups:
                if abs(lam - val) <= 1e-9 * (1 + abs(val)):
                    members.append(k)
                    break
            else:
                groups.append((complex(lam), [k]))
        return [(v, tuple(m)) for v, m in groups]

    def eigenvalue_of(self, n) -> complex:
        """``mu_n = -sum_k n_k lambda_k`` for a length-d multi-index."""
        return complex(-np.dot(np.asarray(n, dtype=float), self.eigenvalues))

    def to_dict(self) -> dict:
        return {
            "lambda": [{"re": float(v.real), "im": float(v.imag)} for v in self.eigenvalues],
            "classification": list(self.classification),
            "l": self.l,
            "l_prime": self.l_prime,
            "spectral_abscissa": self.spectral_abscissa,
            "condition_number": self.condition_number,
        }


@dataclass(frozen=True)
class CovarianceMatrix:
    Sigma: np.ndarray

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.Sigma, dtype=dtype)


def _as_matrix(M, name: str) -> np.ndarray:
    try:
        arr = np.array(M, dtype=float)
    except (TypeError, ValueError) as exc:
        raise InputError(f"{name} is not a real matrix: {exc}") from exc
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2:
        raise ShapeMismatch(f"{name} must be two-dimensional, got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise InputError(f"{name} has non-finite entries")
    return arr


def _decompose(A: np.ndarray, tol: Tolerances) -> SpectralDecomposition:
    d = A.shape[0]
    w, V = np.linalg.eig(A.T)  # A^T c = w c  <=>  f^* A = w f^* with f = conj(c)
    if np.any(w.real >= 0):
        bad = w[w.real >= 0]
        raise UnstableDrift(f"drift eigenvalue(s) with nonnegative real part: {np.round(bad, 12).tolist()}")
    lam = -w
    F = np.conj(V).T  # rows f_k

    def normalized(f):
        f = f / np.linalg.norm(f)
        j = int(np.argmax(np.abs(f)))
        return f * (abs(f[j]) / f[j])

    real_idx, pair_idx = [], []
    for k in range(d):
        if abs(lam[k].imag) <= tol.real_eigenvalue * (1 + abs(lam[k])):
            real_idx.append(k)
        elif lam[k].imag < 0:  # A-eigenvalue with positive imaginary part
            pair_idx.append(k)
    if len(real_idx) + 2 * len(pair_idx) != d:
        raise NotDiagonalizable("eigenvalues are not closed under conjugation")
    real_idx.sort(key=lambda k: (lam[k].real, k))
    pair_idx.sort(key=lambda k: (lam[k].real, -lam[k].imag, k))

    lams, vecs, partner = [], [], []
    for k in real_idx:
        f = normalized(F[k])
        f = f.real / np.linalg.norm(f.real)
        lams.append(complex(lam[k].real, 0.0))
        vecs.append(f.astype(complex))
        partner.append(None)
    for k in pair_idx:
        f = normalized(F[k])
        pos = len(lams)
        lams += [complex(lam[k]), complex(np.conj(lam[k]))]
        vecs += [f, np.conj(f)]
        partner += [pos + 1, pos]
    Fn = np.array(vecs, dtype=complex).reshape(d, d)
    cond = float(np.linalg.cond(Fn))
    if not np.isfinite(cond) or cond > tol.condition_threshold:
        raise NotDiagonalizable(f"eigenvector matrix condition number {cond:.3e} exceeds {tol.condition_threshold:.1e}")
    lams = np.array(lams, dtype=complex)
    resid = np.linalg.norm(np.conj(Fn) @ A + lams[:, None] * np.conj(Fn)) / max(np.linalg.norm(A), 1e-300)
    if resid > 1e-8:
        raise NotDiagonalizable(f"eigen-reconstruction residual {resid:.3e}")
    lams.setflags(write=False)
    Fn.setflags(write=False)
    return SpectralDecomposition(lams, Fn, tuple(partner), cond)


def validate_system(A, B, tolerances: Tolerances | Mapping[str, float] | None = None) -> OUSystem:
    """Check the drift/diffusion pair and return an :class:`OUSystem`.

    Raises
    ------
    ShapeMismatch
        ``A`` not square or ``B`` not ``d x r`` with ``r <= d``.
    UnstableDrift, NotDiagonalizable, HypoellipticityViolated
        When the corresponding assumption fails.
    """
    if tolerances is None:
        tol = DEFAULT_TOLERANCES
    elif isinstance(tolerances, Tolerances):
        tol = tolerances
    else:
        tol = DEFAULT_TOLERANCES.updated(tolerances)
    A = _as_matrix(A, "A")
    B = _as_matrix(B, "B")
    d = A.shape[0]
    if A.shape != (d, d):
        raise ShapeMismatch(f"A must be square, got {A.shape}")
    if B.shape[0] != d:
        raise ShapeMismatch(f"B must have {d} rows, got {B.shape}")
    if B.shape[1] > d:
        raise ShapeMismatch(f"B must be d x r with r <= d, got {B.shape}")
    decomp = _decompose(A, tol)
    scale = max(1.0, float(np.linalg.norm(B)))
    for k, f in enumerate(decomp.left_eigenvectors):
        if np.linalg.norm(B.T @ f) <= tol.hypoellipticity * scale:
            raise HypoellipticityViolated(
                f"left eigenvector {k} (eigenvalue {-decomp.eigenvalues[k]:.6g} of A) lies in ker(B^T)"
            )
    A.setflags(write=False)
    B.setflags(write=False)
    return OUSystem(A, B, tol)


def spectral_decomposition(sys: OUSystem) -> SpectralDecomposition:
    return _decompose(np.asarray(sys.A), sys.tolerances)


def spectrum(decomp: SpectralDecomposition, max_total_degree: int) -> list[tuple[tuple[int, ...], complex]]:
    """Eigenvalues ``-sum_k n_k lambda_k`` over the distinct eigenvalues of ``A``.

    Multi-indices run over the distinct eigenvalues (not the ``d`` positions)
    and are listed by ascending total degree.
    """
    if max_total_degree < 0:
        raise ValueError("max_total_degree must be nonnegative")
    vals = np.array([v for v, _ in decomp.distinct])
    L = vals.size
    out = []
    for deg in range(max_total_degree + 1):
        for combo in itertools.combinations_with_replacement(range(L), deg):
            n = [0] * L
            for k in combo:
                n[k] += 1
            out.append((tuple(n), complex(-np.dot(n, vals))))
    return out


def stationary_covariance(sys: OUSystem) -> CovarianceMatrix:
    """Solve ``A S + S A^T + B B^T = 0`` with the Bartels-Stewart solver."""
    A = np.asarray(sys.A)
    W = sys.B @ sys.B.T
    try:
        S = scipy.linalg.solve_continuous_lyapunov(A, -W)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise SolverFailure(f"Lyapunov solve failed: {exc}") from exc
    if not np.all(np.isfinite(S)):
        raise SolverFailure("Lyapunov solve returned non-finite entries")
    S = 0.5 * (S + S.T)
    resid = np.linalg.norm(A @ S + S @ A.T + W) / max(np.linalg.norm(W), 1e-300)
    if resid > max(sys.tolerances.lyapunov_residual, 1e-10):
        raise SolverFailure(f"Lyapunov residual {resid:.3e} too large")
    return CovarianceMatrix(S)


def finite_time_covariance(sys: OUSystem, t: float) -> CovarianceMatrix:
    """``int_0^t e^{sA} B B^T e^{sA^T} ds`` via the block matrix exponential."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    A = np.asarray(sys.A)
    d = A.shape[0]
    if t == 0:
        return CovarianceMatrix(np.zeros((d, d)))
    W = sys.B @ sys.B.T
    block = np.zeros((2 * d, 2 * d))
    block[:d, :d] = A
    block[:d, d:] = W
    block[d:, d:] = -A.T
    E = scipy.linalg.expm(block * t)
    S = E[:d, d:] @ E[:d, :d].T
    return CovarianceMatrix(0.5 * (S + S.T))


def random_stable_system(
    d: int,
    rng: np.random.Generator,
    n_pairs: int | None = None,
    r: int | None = None,
    coupling: float = 0.4,
    tolerances: Tolerances | None = None,
) -> OUSystem:
    """Draw a stable, diagonalizable, generally non-normal system.

    ``A = V D V^{-1}`` with ``D`` block diagonal (``n_pairs`` rotation blocks,
    the rest real) and ``V = I + coupling * G`` for Gaussian ``G``.
    """
    if n_pairs is None:
        n_pairs = int(rng.integers(0, d // 2 + 1))
    if 2 * n_pairs > d:
        raise ValueError("too many complex pairs for the dimension")
    D = np.zeros((d, d))
    k = 0
    for _ in range(n_pairs):
        a, b = rng.uniform(0.5, 2.0), rng.uniform(0.3, 2.0)
        D[k : k + 2, k : k + 2] = [[-a, b], [-b, -a]]
        k += 2
    for j in range(k, d):
        D[j, j] = -rng.uniform(0.5, 2.5)
    for _ in range(100):
        V = np.eye(d) + coupling * rng.standard_normal((d, d))
        if np.linalg.cond(V) < 50:
            break
    A = V @ D @ np.linalg.inv(V)
    B = rng.standard_normal((d, d if r is None else r))
    return validate_system(A, B, tolerances)
