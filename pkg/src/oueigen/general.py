"""Eigenfunctions for arbitrary diagonalizable drifts by the sparse matrix method.

The generator acts on ``psi_n(x) = prod_k <x, f_k>^{n_k}`` as

    A psi_n = mu_n psi_n
              + sum_k     G_kk n_k (n_k - 1)  psi_{n - 2 e_k}
              + 2 sum_{k<j} G_jk n_k n_j      psi_{n - e_k - e_j}

with ``G_jk = c_j^T Q c_k`` and ``c_k = conj(f_k)``.  Every off-diagonal move
lowers the total degree by two, so in a degree-graded ordering the matrix is
triangular and each eigenvector follows from substitution level by level.
"""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .eigenfunction import Eigenfunction, ResonantBundle
from .errors import BasisNotClosed, IndexNotInBasis, NumericalBreakdown
from .poly import MultiIndex, as_multi_index
from .system import DEFAULT_TOLERANCES, OUSystem, SpectralDecomposition, Tolerances, spectral_decomposition


def _graded_order(idx: np.ndarray) -> np.ndarray:
    """Permutation sorting rows by total degree descending, then lexicographically descending."""
    keys = [-idx[:, j] for j in range(idx.shape[1] - 1, -1, -1)] + [-idx.sum(axis=1)]
    return np.lexsort(keys)


class BasisSet:
    """Ordered set of multi-indices with vectorized position lookup.

    Ordering is graded lexicographic descending, so every index precedes the
    indices its moves reach and the assembled matrix is lower triangular in
    ``(row, col)`` storage (``row >= col`` for every stored entry).
    """

    def __init__(self, indices):
        idx = np.asarray(indices, dtype=np.int64)
        if idx.ndim != 2:
            raise ValueError("indices must be an (N, d) array")
        idx = np.unique(idx, axis=0)
        idx = idx[_graded_order(idx)]
        idx.setflags(write=False)
        self.indices = idx
        self._dims = tuple(int(v) + 1 for v in idx.max(axis=0)) if idx.size else (1,) * idx.shape[1]
        self._keys = np.ravel_multi_index(tuple(idx.T), self._dims)
        self._key_order = np.argsort(self._keys)
        self.discrepancy: str | None = None

    @property
    def dim(self) -> int:
        return self.indices.shape[1]

    def __len__(self) -> int:
        return self.indices.shape[0]

    @property
    def size(self) -> int:
        return len(self)

    def __iter__(self):
        return (tuple(int(v) for v in row) for row in self.indices)

    def __contains__(self, m) -> bool:
        return self.lookup(np.asarray(m, dtype=np.int64).reshape(1, -1))[0] >= 0

    @cached_property
    def position(self) -> dict[MultiIndex, int]:
        return {m: i for i, m in enumerate(self)}

    @cached_property
    def degrees(self) -> np.ndarray:
        return self.indices.sum(axis=1)

    def index_set(self) -> set[MultiIndex]:
        return set(self)

    def lookup(self, rows: np.ndarray) -> np.ndarray:
        """Positions of the given multi-indices, ``-1`` where absent."""
        rows = np.asarray(rows, dtype=np.int64).reshape(-1, self.dim)
        out = np.full(rows.shape[0], -1, dtype=np.int64)
        if rows.shape[0] == 0 or len(self) == 0:
            return out
        inside = (rows >= 0).all(axis=1) & (rows < np.array(self._dims)).all(axis=1)
        if not inside.any():
            return out
        keys = np.ravel_multi_index(tuple(rows[inside].T), self._dims)
        pos = np.searchsorted(self._keys, keys, sorter=self._key_order)
        pos = np.clip(pos, 0, self._keys.size - 1)
        cand = self._key_order[pos]
        hit = self._keys[cand] == keys
        sub = np.full(keys.size, -1, dtype=np.int64)
        sub[hit] = cand[hit]
        out[inside] = sub
        return out

    def __repr__(self):
        return f"BasisSet(size={len(self)}, dim={self.dim})"


def _parity_count(n: MultiIndex) -> int:
    """``#{m <= n : |n| - |m| even}`` from ``(prod (n_k+1) + prod s_k) / 2``."""
    total = int(np.prod([k + 1 for k in n]))
    signed = int(np.prod([1 if k % 2 == 0 else 0 for k in n]))
    return (total + signed) // 2


def _moves(level: np.ndarray) -> np.ndarray:
    d = level.shape[1]
    eye = np.eye(d, dtype=np.int64)
    out = []
    for k in range(d):
        sel = level[:, k] >= 2
        if sel.any():
            out.append(level[sel] - 2 * eye[k])
        for j in range(k + 1, d):
            sel = (level[:, k] >= 1) & (level[:, j] >= 1)
            if sel.any():
                out.append(level[sel] - eye[k] - eye[j])
    if not out:
        return np.zeros((0, d), dtype=np.int64)
    return np.unique(np.vstack(out), axis=0)


def basis_closure(n) -> BasisSet:
    """Smallest index set containing ``n`` and closed under the diffusion moves.

    Built constructively by applying the moves level by level; the result is
    checked against the closed-form count of ``{m <= n : |n| - |m| even}``.
    """
    n = as_multi_index(n)
    level = np.array([n], dtype=np.int64)
    levels = [level]
    while level.shape[0]:
        level = _moves(level)
        if level.shape[0]:
            levels.append(level)
    basis = BasisSet(np.vstack(levels))
    expected = _parity_count(n)
    if len(basis) != expected:
        basis.discrepancy = f"reachable closure has {len(basis)} indices, parity box has {expected}"
        warnings.warn(basis.discrepancy, RuntimeWarning, stacklevel=2)
    return basis


def full_basis(n) -> BasisSet:
    """All ``m <= n`` componentwise (``prod (n_k + 1)`` indices)."""
    n = as_multi_index(n)
    grids = np.indices([k + 1 for k in n]).reshape(len(n), -1).T
    return BasisSet(grids)


def graded_basis(d: int, max_degree: int) -> BasisSet:
    """All multi-indices of length ``d`` with total degree at most ``max_degree``."""
    rows = [
        m for m in itertools.product(range(max_degree + 1), repeat=d) if sum(m) <= max_degree
    ]
    return BasisSet(np.array(rows, dtype=np.int64).reshape(-1, d))


def max_column_nonzeros(d: int) -> int:
    return (d * d + d + 2) // 2


def assemble_matrix(sys: OUSystem, decomp: SpectralDecomposition, basis: BasisSet) -> "SparseOperatorMatrix":
    """Matrix of the generator on the ``psi`` basis; column ``j`` is ``A psi_{basis[j]}``."""
    idx = basis.indices
    N, d = idx.shape
    lam = np.asarray(decomp.eigenvalues)
    C = np.asarray(decomp.psi_vectors)
    Q = np.asarray(sys.Q)
    G = C @ Q @ C.T
    cutoff = sys.tolerances.matrix_entry * max(float(np.linalg.norm(Q)), 1e-300)
    diag = -(idx @ lam)
    rows, cols, vals = [np.arange(N)], [np.arange(N)], [diag.astype(complex)]
    structural = N
    eye = np.eye(d, dtype=np.int64)
    for k in range(d):
        for j in range(k, d):
            if j == k:
                sel = np.nonzero(idx[:, k] >= 2)[0]
                if sel.size == 0:
                    continue
                factor = idx[sel, k] * (idx[sel, k] - 1)
                coef = G[k, k]
                target = idx[sel] - 2 * eye[k]
            else:
                sel = np.nonzero((idx[:, k] >= 1) & (idx[:, j] >= 1))[0]
                if sel.size == 0:
                    continue
                factor = 2 * idx[sel, k] * idx[sel, j]
                coef = G[j, k]
                target = idx[sel] - eye[k] - eye[j]
            structural += sel.size
            pos = basis.lookup(target)
            if (pos < 0).any():
                missing = tuple(int(v) for v in target[np.argmax(pos < 0)])
                raise BasisNotClosed(f"move target {missing} is not in the basis")
            if abs(coef) <= cutoff:
                continue
            rows.append(pos)
            cols.append(sel)
            vals.append(coef * factor)
    return SparseOperatorMatrix(
        size=N,
        rows=np.concatenate(rows),
        cols=np.concatenate(cols),
        values=np.concatenate(vals),
        diagonal=diag.astype(complex),
        structural_nnz=structural,
        tolerances=sys.tolerances,
    )


@dataclass(eq=False)
class SparseOperatorMatrix:
    """Coordinate-list storage of the generator matrix.

    ``structural_nnz`` counts every entry with a nonzero combinatorial
    factor (plus the full diagonal); ``rows/cols/values`` hold only entries
    whose inner product ``G_jk`` is numerically nonzero.
    """

    size: int
    rows: np.ndarray
    cols: np.ndarray
    values: np.ndarray
    diagonal: np.ndarray
    structural_nnz: int
    tolerances: Tolerances = field(default=DEFAULT_TOLERANCES)

    @cached_property
    def csr(self) -> sp.csr_matrix:
        return sp.csr_matrix((self.values, (self.rows, self.cols)), shape=(self.size, self.size))

    @cached_property
    def csc(self) -> sp.csc_matrix:
        return self.csr.tocsc()

    @property
    def numeric_nnz(self) -> int:
        return int(np.count_nonzero(self.values))

    def density(self, numeric: bool = True) -> float:
        nnz = self.numeric_nnz if numeric else self.structural_nnz
        return nnz / float(self.size) ** 2

    def column_counts(self) -> np.ndarray:
        live = self.values != 0
        return np.bincount(self.cols[live], minlength=self.size)

    def toarray(self) -> np.ndarray:
        return self.csr.toarray()

    def report(self) -> dict:
        return {
            "size": self.size,
            "structural_nnz": self.structural_nnz,
            "numeric_nnz": self.numeric_nnz,
            "structural_density": self.density(numeric=False),
            "numeric_density": self.density(numeric=True),
            "max_column_nnz": int(self.column_counts().max()) if self.size else 0,
        }


def _reachable(basis: BasisSet, lead: np.ndarray) -> np.ndarray:
    parity = (lead.sum() - basis.degrees) % 2 == 0
    return np.nonzero((basis.indices <= lead).all(axis=1) & parity)[0]


def _solve_leading(M: SparseOperatorMatrix, basis: BasisSet, pos: int, decomp) -> Eigenfunction:
    lead = basis.indices[pos]
    mu = M.diagonal[pos]
    support = _reachable(basis, lead)
    v = np.zeros(M.size, dtype=complex)
    v[pos] = 1.0
    degs = basis.degrees[support]
    top = int(lead.sum())
    scale_tol = 1e-13 * (1 + abs(mu))
    for deg in range(top - 2, -1, -2):
        rows = support[degs == deg]
        if rows.size == 0:
            continue
        pivots = M.diagonal[rows] - mu
        if np.any(np.abs(pivots) <= scale_tol):
            bad = tuple(int(t) for t in basis.indices[rows[np.argmin(np.abs(pivots))]])
            raise NumericalBreakdown(f"vanishing pivot at index {bad} while solving for {tuple(lead)}")
        v[rows] = -(M.csr[rows] @ v) / pivots
    nz = support[v[support] != 0]
    psi = {tuple(int(t) for t in basis.indices[i]): complex(v[i]) for i in nz}
    return Eigenfunction(tuple(int(t) for t in lead), mu, psi_coefficients=psi, decomposition=decomp, method="general")


def solve_eigenfunction(
    M: SparseOperatorMatrix, basis: BasisSet, n, decomp: SpectralDecomposition
) -> Eigenfunction | ResonantBundle:
    """Nullspace of ``M - mu_n I`` by triangular substitution.

    Normalized so the ``psi_n`` coefficient is one.  If other basis indices
    share ``mu_n`` the whole nullspace is returned as a :class:`ResonantBundle`.
    """
    n = as_multi_index(n, basis.dim)
    pos = int(basis.lookup(np.array([n]))[0])
    if pos < 0:
        raise IndexNotInBasis(f"index {n} is not in the basis")
    mu = M.diagonal[pos]
    tol = M.tolerances.resonance * (1 + abs(mu))
    close = np.nonzero(np.abs(M.diagonal - mu) <= tol)[0]
    if close.size == 1:
        return _solve_leading(M, basis, pos, decomp)
    order = [pos] + [int(p) for p in close if p != pos]
    return ResonantBundle(complex(mu), [_solve_leading(M, basis, p, decomp) for p in order])


def solve_all(M: SparseOperatorMatrix, basis: BasisSet, decomp: SpectralDecomposition) -> list[Eigenfunction]:
    """One eigenfunction per basis index, each with its own index as leading term."""
    return [_solve_leading(M, basis, p, decomp) for p in range(len(basis))]


def general_eigenfunction(sys: OUSystem, n, decomp: SpectralDecomposition | None = None) -> Eigenfunction:
    """Closure, assembly and solve for a single index."""
    decomp = spectral_decomposition(sys) if decomp is None else decomp
    n = as_multi_index(n, sys.dim)
    basis = basis_closure(n)
    M = assemble_matrix(sys, decomp, basis)
    return _solve_leading(M, basis, basis.position[n], decomp)


def general_eigensystem(
    sys: OUSystem, max_degree: int, decomp: SpectralDecomposition | None = None
) -> list[Eigenfunction]:
    """All eigenfunctions with total degree ``<= max_degree``."""
    decomp = spectral_decomposition(sys) if decomp is None else decomp
    basis = graded_basis(sys.dim, max_degree)
    M = assemble_matrix(sys, decomp, basis)
    return solve_all(M, basis, decomp)
