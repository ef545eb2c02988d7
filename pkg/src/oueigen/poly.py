"""Sparse multivariate polynomials with complex coefficients.

A :class:`Polynomial` stores its nonzero terms as two aligned numpy arrays, an
integer exponent table of shape ``(nterms, dim)`` and a complex coefficient
vector.  All ring operations are vectorized and re-collect like terms through
a single integer key per exponent row, which keeps the oracle and the
eigenfunction expansions fast enough for thousands of calls.

Also provided are the classical families used by the closed-form
eigenfunctions (probabilists' Hermite, generalized Laguerre with scale
parameter, Hermite-Laguerre-Ito) and exact Gaussian moments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import AxisOutOfRange, DimensionMismatch, InputError, SingularCovariance

MultiIndex = tuple[int, ...]

#: relative magnitude below which coefficients are pruned on normalization
DROP_TOL = 1e-13

_EVAL_CHUNK = 8192


def as_multi_index(n: Iterable[int], dim: int | None = None) -> MultiIndex:
    """Validate and convert ``n`` to a tuple of nonnegative ints."""
    out = tuple(int(k) for k in n)
    if any(k < 0 for k in out):
        raise ValueError(f"multi-index entries must be nonnegative, got {out}")
    if dim is not None and len(out) != dim:
        raise DimensionMismatch(f"multi-index {out} has length {len(out)}, expected {dim}")
    return out


def _collect(exps: np.ndarray, coeffs: np.ndarray, drop_tol: float):
    """Merge duplicate exponent rows, then prune small coefficients."""
    dim = exps.shape[1]
    if coeffs.size == 0:
        return np.zeros((0, dim), dtype=np.int64), np.zeros(0, dtype=complex)
    dims = exps.max(axis=0) + 1
    if float(np.prod(dims.astype(float))) < 2.0**62:
        keys = np.ravel_multi_index(tuple(exps.T), tuple(int(v) for v in dims))
        uniq, inv = np.unique(keys, return_inverse=True)
        uexps = np.stack(np.unravel_index(uniq, tuple(int(v) for v in dims)), axis=1)
    else:
        uexps, inv = np.unique(exps, axis=0, return_inverse=True)
    inv = inv.reshape(-1)
    n = uexps.shape[0]
    c = np.bincount(inv, weights=coeffs.real, minlength=n) + 1j * np.bincount(
        inv, weights=coeffs.imag, minlength=n
    )
    mag = np.abs(c)
    top = mag.max() if n else 0.0
    keep = mag > (drop_tol * top if drop_tol > 0 else 0.0)
    keep &= mag > 0
    return uexps[keep].astype(np.int64), c[keep]


class Polynomial:
    """Immutable sparse polynomial in ``dim`` real variables.

    Parameters
    ----------
    dim : int
        Number of variables.
    terms : mapping, optional
        ``{exponent tuple: coefficient}``.

    Examples
    --------
    >>> x = Polynomial.variable(1, 0)
    >>> ((x + 1) * (x - 1)).terms
    {(0,): (-1+0j), (2,): (1+0j)}
    """

    __slots__ = ("dim", "exponents", "coefficients")
    __hash__ = None  # type: ignore[assignment]

    def __init__(self, dim: int, terms: Mapping[Sequence[int], complex] | None = None):
        if dim < 1:
            raise ValueError("polynomial dimension must be >= 1")
        exps = np.zeros((0, dim), dtype=np.int64)
        coeffs = np.zeros(0, dtype=complex)
        if terms:
            exps = np.array([tuple(k) for k in terms.keys()], dtype=np.int64).reshape(-1, dim)
            if exps.shape[0] != len(terms) or (exps < 0).any():
                raise InputError("exponents must be nonnegative and of length dim")
            coeffs = np.array(list(terms.values()), dtype=complex)
        exps, coeffs = _collect(exps, coeffs, DROP_TOL)
        self._set(dim, exps, coeffs)

    def _set(self, dim, exps, coeffs):
        object.__setattr__(self, "dim", dim)
        exps.setflags(write=False)
        coeffs.setflags(write=False)
        object.__setattr__(self, "exponents", exps)
        object.__setattr__(self, "coefficients", coeffs)

    def __setattr__(self, name, value):
        raise AttributeError("Polynomial is immutable")

    # ----------------------------------------------------------- constructors
    @classmethod
    def from_arrays(cls, dim: int, exponents, coefficients, drop_tol: float = DROP_TOL) -> "Polynomial":
        exps = np.asarray(exponents, dtype=np.int64).reshape(-1, dim)
        coeffs = np.asarray(coefficients, dtype=complex).reshape(-1)
        if exps.shape[0] != coeffs.shape[0]:
            raise ValueError("exponent rows and coefficients differ in length")
        exps, coeffs = _collect(exps, coeffs, drop_tol)
        obj = cls.__new__(cls)
        obj._set(dim, exps, coeffs)
        return obj

    @classmethod
    def zero(cls, dim: int) -> "Polynomial":
        return cls(dim)

    @classmethod
    def constant(cls, dim: int, value: complex) -> "Polynomial":
        return cls(dim, {(0,) * dim: value})

    @classmethod
    def variable(cls, dim: int, axis: int) -> "Polynomial":
        if not 0 <= axis < dim:
            raise AxisOutOfRange(f"axis {axis} out of range for dimension {dim}")
        e = [0] * dim
        e[axis] = 1
        return cls(dim, {tuple(e): 1.0})

    @classmethod
    def linear(cls, coefficients: Sequence[complex], constant: complex = 0.0) -> "Polynomial":
        """The affine form ``constant + sum_i coefficients[i] * x_i``."""
        c = np.asarray(coefficients, dtype=complex).reshape(-1)
        dim = c.size
        exps = np.vstack([np.zeros((1, dim), dtype=np.int64), np.eye(dim, dtype=np.int64)])
        return cls.from_arrays(dim, exps, np.concatenate([[constant], c]))

    # ------------------------------------------------------------- inspection
    @property
    def nterms(self) -> int:
        return int(self.coefficients.size)

    @property
    def degree(self) -> int:
        """Maximum total degree; ``-1`` for the zero polynomial."""
        if self.nterms == 0:
            return -1
        return int(self.exponents.sum(axis=1).max())

    def is_zero(self) -> bool:
        return self.nterms == 0

    @property
    def terms(self) -> dict[MultiIndex, complex]:
        return {tuple(int(v) for v in e): complex(c) for e, c in zip(self.exponents, self.coefficients)}

    def coefficient(self, exponent: Sequence[int]) -> complex:
        e = np.asarray(exponent, dtype=np.int64)
        hit = np.nonzero((self.exponents == e).all(axis=1))[0]
        return complex(self.coefficients[hit[0]]) if hit.size else 0j

    def coefficients_at(self, exponents) -> np.ndarray:
        """Vectorized coefficient lookup for an ``(m, dim)`` exponent table."""
        exponents = np.asarray(exponents, dtype=np.int64).reshape(-1, self.dim)
        out = np.zeros(exponents.shape[0], dtype=complex)
        if self.nterms == 0 or exponents.shape[0] == 0:
            return out
        dims = np.maximum(self.exponents.max(axis=0), exponents.max(axis=0)) + 1
        if float(np.prod(dims.astype(float))) >= 2.0**62:
            lookup = self.terms
            return np.array([lookup.get(tuple(int(v) for v in e), 0j) for e in exponents])
        dims = tuple(int(v) for v in dims)
        own = np.ravel_multi_index(tuple(self.exponents.T), dims)
        other = np.ravel_multi_index(tuple(exponents.T), dims)
        order = np.argsort(own)
        pos = np.searchsorted(own, other, sorter=order)
        pos = np.clip(pos, 0, own.size - 1)
        found = own[order[pos]] == other
        out[found] = self.coefficients[order[pos[found]]]
        return out

    def norm(self) -> float:
        """Euclidean norm of the coefficient vector."""
        return float(np.linalg.norm(self.coefficients))

    def homogeneous_part(self, degree: int) -> "Polynomial":
        keep = self.exponents.sum(axis=1) == degree
        return Polynomial.from_arrays(self.dim, self.exponents[keep], self.coefficients[keep], 0.0)

    # ------------------------------------------------------------- arithmetic
    def _coerce(self, other) -> "Polynomial":
        if isinstance(other, Polynomial):
            if other.dim != self.dim:
                raise DimensionMismatch(f"dimension {self.dim} vs {other.dim}")
            return other
        if np.isscalar(other):
            return Polynomial.constant(self.dim, complex(other))
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return Polynomial.from_arrays(
            self.dim,
            np.vstack([self.exponents, other.exponents]),
            np.concatenate([self.coefficients, other.coefficients]),
        )

    __radd__ = __add__

    def __neg__(self):
        return Polynomial.from_arrays(self.dim, self.exponents, -self.coefficients, 0.0)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if np.isscalar(other):
            return self.scale(other)
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        if self.nterms == 0 or other.nterms == 0:
            return Polynomial.zero(self.dim)
        exps = (self.exponents[:, None, :] + other.exponents[None, :, :]).reshape(-1, self.dim)
        coeffs = np.outer(self.coefficients, other.coefficients).reshape(-1)
        return Polynomial.from_arrays(self.dim, exps, coeffs)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not np.isscalar(other):
            return NotImplemented
        return self.scale(1.0 / other)

    def __pow__(self, n: int):
        if int(n) != n or n < 0:
            raise ValueError("only nonnegative integer powers are supported")
        result = Polynomial.constant(self.dim, 1.0)
        base = self
        n = int(n)
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    def scale(self, alpha: complex) -> "Polynomial":
        if alpha == 0:
            return Polynomial.zero(self.dim)
        return Polynomial.from_arrays(self.dim, self.exponents, self.coefficients * alpha, 0.0)

    def conj(self) -> "Polynomial":
        """Coefficientwise complex conjugate (the conjugate function for real x)."""
        return Polynomial.from_arrays(self.dim, self.exponents, self.coefficients.conj(), 0.0)

    @property
    def real(self) -> "Polynomial":
        return Polynomial.from_arrays(self.dim, self.exponents, self.coefficients.real)

    @property
    def imag(self) -> "Polynomial":
        return Polynomial.from_arrays(self.dim, self.exponents, self.coefficients.imag)

    def __eq__(self, other):
        if not isinstance(other, Polynomial):
            if np.isscalar(other):
                other = Polynomial.constant(self.dim, other)
            else:
                return NotImplemented
        return (
            self.dim == other.dim
            and self.exponents.shape == other.exponents.shape
            and bool((self.exponents == other.exponents).all())
            and bool((self.coefficients == other.coefficients).all())
        )

    def allclose(self, other: "Polynomial", rtol: float = 1e-10, atol: float = 0.0) -> bool:
        """``||self - other|| <= atol + rtol * max(||self||, ||other||)``."""
        diff = Polynomial.from_arrays(
            self.dim,
            np.vstack([self.exponents, other.exponents]),
            np.concatenate([self.coefficients, -other.coefficients]),
            0.0,
        )
        return diff.norm() <= atol + rtol * max(self.norm(), other.norm())

    # ----------------------------------------------------------------- calculus
    def derivative(self, axis: int) -> "Polynomial":
        if not 0 <= axis < self.dim:
            raise AxisOutOfRange(f"axis {axis} out of range for dimension {self.dim}")
        e = self.exponents[:, axis]
        keep = e > 0
        exps = self.exponents[keep].copy()
        exps[:, axis] -= 1
        return Polynomial.from_arrays(self.dim, exps, self.coefficients[keep] * e[keep], 0.0)

    # --------------------------------------------------------------- evaluation
    def __call__(self, x):
        """Evaluate at a point ``(dim,)`` or a batch of points ``(N, dim)``."""
        x = np.asarray(x)
        single = x.ndim == 1
        pts = x.reshape(-1, self.dim)
        if self.nterms == 0:
            out = np.zeros(pts.shape[0], dtype=complex)
            return out[0] if single else out
        maxe = self.exponents.max(axis=0)
        out = np.empty(pts.shape[0], dtype=complex)
        for start in range(0, pts.shape[0], _EVAL_CHUNK):
            chunk = pts[start : start + _EVAL_CHUNK]
            mono = np.ones((chunk.shape[0], self.nterms), dtype=np.result_type(chunk, complex))
            for i in range(self.dim):
                if maxe[i] == 0:
                    continue
                powers = chunk[:, i : i + 1] ** np.arange(maxe[i] + 1)
                mono *= powers[:, self.exponents[:, i]]
            out[start : start + chunk.shape[0]] = mono @ self.coefficients
        return out[0] if single else out

    def substitute(self, polys: Sequence["Polynomial"]) -> "Polynomial":
        """Composition ``p(polys[0](y), ..., polys[dim-1](y))``."""
        if len(polys) != self.dim:
            raise DimensionMismatch(f"need {self.dim} substitutes, got {len(polys)}")
        target = polys[0].dim
        if any(p.dim != target for p in polys):
            raise DimensionMismatch("substituted polynomials must share a dimension")
        powers: list[list[Polynomial]] = []
        maxe = self.exponents.max(axis=0) if self.nterms else np.zeros(self.dim, dtype=int)
        for p, m in zip(polys, maxe):
            row = [Polynomial.constant(target, 1.0)]
            for _ in range(int(m)):
                row.append(row[-1] * p)
            powers.append(row)
        exps, coeffs = [], []
        for e, c in zip(self.exponents, self.coefficients):
            term = powers[0][e[0]]
            for i in range(1, self.dim):
                if e[i]:
                    term = term * powers[i][e[i]]
            exps.append(term.exponents)
            coeffs.append(term.coefficients * c)
        if not exps:
            return Polynomial.zero(target)
        return Polynomial.from_arrays(target, np.vstack(exps), np.concatenate(coeffs))

    # --------------------------------------------------------------- formatting
    def sorted_terms(self) -> list[tuple[MultiIndex, complex]]:
        """Terms in graded lexicographic order (degree ascending, then lex descending)."""
        items = list(self.terms.items())
        items.sort(key=lambda kv: (sum(kv[0]), tuple(-v for v in kv[0])))
        return items

    def to_dict(self) -> dict:
        return {
            "dimension": self.dim,
            "terms": [
                {"exponents": list(e), "re": c.real, "im": c.imag} for e, c in self.sorted_terms()
            ],
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "Polynomial":
        try:
            dim = int(data["dimension"])
            terms = data["terms"]
            exps = [t["exponents"] for t in terms]
            coeffs = [complex(float(t.get("re", 0.0)), float(t.get("im", 0.0))) for t in terms]
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"malformed polynomial document: {exc}") from exc
        if any(len(e) != dim for e in exps):
            raise InputError("exponent length does not match dimension")
        return cls.from_arrays(dim, np.array(exps, dtype=np.int64).reshape(-1, dim), coeffs, 0.0)

    def __repr__(self):
        if self.nterms == 0:
            return f"Polynomial(dim={self.dim}, 0)"
        parts = []
        for e, c in self.sorted_terms()[:12]:
            mono = "*".join(f"x{i}^{v}" if v > 1 else f"x{i}" for i, v in enumerate(e) if v)
            parts.append(f"({c:.6g})" + (f"*{mono}" if mono else ""))
        more = " + ..." if self.nterms > 12 else ""
        return f"Polynomial(dim={self.dim}, " + " + ".join(parts) + more + ")"


# ---------------------------------------------------------------- free functions
def add(p: Polynomial, q: Polynomial | complex) -> Polynomial:
    return p + q


def mul(p: Polynomial, q: Polynomial | complex) -> Polynomial:
    return p * q


def scale(p: Polynomial, alpha: complex) -> Polynomial:
    return p.scale(alpha)


def partial_derivative(p: Polynomial, axis: int) -> Polynomial:
    return p.derivative(axis)


def _compositions(n: int, d: int) -> np.ndarray:
    """All length-``d`` nonnegative integer vectors summing to ``n``."""
    if d == 1:
        return np.array([[n]], dtype=np.int64)
    rows = []
    for first in range(n, -1, -1):
        rest = _compositions(n - first, d - 1)
        rows.append(np.hstack([np.full((rest.shape[0], 1), first, dtype=np.int64), rest]))
    return np.vstack(rows)


def linear_form_power(f: Sequence[complex], n: int, d: int | None = None) -> Polynomial:
    """Expand ``<x, f>^n = (sum_i conj(f_i) x_i)^n`` by the multinomial theorem."""
    f = np.asarray(f, dtype=complex).reshape(-1)
    d = f.size if d is None else d
    if f.size != d:
        raise DimensionMismatch(f"vector of length {f.size} for dimension {d}")
    if n < 0:
        raise ValueError("power must be nonnegative")
    exps = _compositions(n, d)
    logfact = math.lgamma(n + 1) - np.sum([[math.lgamma(v + 1) for v in row] for row in exps], axis=1)
    multinom = np.rint(np.exp(logfact))
    c = np.conj(f)
    coeffs = multinom * np.prod(c[None, :] ** exps, axis=1)
    return Polynomial.from_arrays(d, exps, coeffs)


def hermite(n: int) -> Polynomial:
    """Probabilists' Hermite polynomial ``He_n`` (univariate)."""
    if n < 0:
        raise ValueError("degree must be nonnegative")
    x = Polynomial.variable(1, 0)
    prev, cur = Polynomial.constant(1, 1.0), x
    if n == 0:
        return prev
    for k in range(1, n):
        prev, cur = cur, x * cur - k * prev
    return cur


def laguerre(n: int, alpha: int, rho: float = 1.0) -> Polynomial:
    """Generalized Laguerre polynomial with scale ``rho``.

    Normalized so that ``L_n^alpha(x, rho) = rho^n L_n^alpha(x / rho)``, i.e.
    the Rodrigues form ``rho^n/n! x^-alpha e^{x/rho} d^n/dx^n (e^{-x/rho} x^{n+alpha})``.
    The coefficient of ``x^i`` is ``(-1)^i C(n+alpha, n-i) rho^{n-i} / i!``.
    """
    if n < 0:
        raise ValueError("degree must be nonnegative")
    if alpha < -n:
        raise ValueError("alpha must be >= -n")
    if rho <= 0:
        raise ValueError("rho must be positive")
    top = n + alpha
    exps, coeffs = [], []
    for i in range(n + 1):
        k = n - i
        if k > top:
            continue
        exps.append([i])
        coeffs.append((-1) ** i * math.comb(top, k) * rho**k / math.factorial(i))
    return Polynomial.from_arrays(1, np.array(exps, dtype=np.int64), coeffs)


def hli(m: int, n: int, rho: float = 1.0, convention: str = "table") -> Polynomial:
    """Hermite-Laguerre-Ito polynomial ``J_{m,n}`` in real variables ``(x, y)``.

    With ``z = x + iy``: ``J_{m,n} = n! z^{m-n} L_n^{m-n}(z zbar, rho)`` for
    ``m >= n`` and the mirrored expression in ``zbar`` otherwise.  This
    ``"table"`` convention reproduces the tabulated low-order members
    (``J_{1,1} = -(x^2+y^2) + rho``).  ``convention="signed"`` multiplies by
    ``(-1)^min(m, n)``, the alternating-sign form for which
    ``dJ/dz = m J_{m-1,n}`` and ``dJ/dzbar = n J_{m,n-1}``.
    """
    if m < 0 or n < 0:
        raise ValueError("indices must be nonnegative")
    if convention not in ("table", "signed"):
        raise ValueError("convention must be 'table' or 'signed'")
    z = Polynomial(2, {(1, 0): 1.0, (0, 1): 1j})
    zbar = z.conj()
    r2 = Polynomial(2, {(2, 0): 1.0, (0, 2): 1.0})
    hi, lo, w = (m, n, z) if m >= n else (n, m, zbar)
    radial = laguerre(lo, hi - lo, rho).substitute([r2])
    if convention == "signed" and lo % 2:
        radial = -1 * radial
    return math.factorial(lo) * (w ** (hi - lo)) * radial


def wirtinger_derivative(p: Polynomial, which: str) -> Polynomial:
    """``d/dz = (d/dx - i d/dy)/2`` or ``d/dzbar = (d/dx + i d/dy)/2`` on a bivariate polynomial."""
    if p.dim != 2:
        raise DimensionMismatch("Wirtinger derivatives need a bivariate polynomial")
    if which == "z":
        return 0.5 * (p.derivative(0) - 1j * p.derivative(1))
    if which in ("zbar", "z̄", "conj"):
        return 0.5 * (p.derivative(0) + 1j * p.derivative(1))
    raise ValueError("which must be 'z' or 'zbar'")


# ------------------------------------------------------------- Gaussian moments
def _check_covariance(cov) -> np.ndarray:
    cov = np.atleast_2d(np.asarray(cov, dtype=float))
    if cov.shape[0] != cov.shape[1]:
        raise DimensionMismatch("covariance must be square")
    return 0.5 * (cov + cov.T)


def gaussian_expectation(p: Polynomial, cov) -> complex:
    """Exact ``E[p(X)]`` for ``X ~ N(0, cov)``.

    Uses ``E[x^a] = a!/k! [t^a] (t^T cov t / 2)^k`` with ``k = |a|/2``,
    i.e. Wick pairing read off the moment generating function.
    """
    cov = _check_covariance(cov)
    if cov.shape[0] != p.dim:
        raise DimensionMismatch(f"covariance of size {cov.shape[0]} for dimension {p.dim}")
    if p.nterms == 0:
        return 0j
    d = p.dim
    qexps, qcoef = [], []
    for i in range(d):
        for j in range(i, d):
            e = [0] * d
            e[i] += 1
            e[j] += 1
            qexps.append(e)
            qcoef.append(0.5 * cov[i, j] * (1 if i == j else 2))
    quad = Polynomial.from_arrays(d, np.array(qexps), qcoef, 0.0)
    total = 0j
    degs = p.exponents.sum(axis=1)
    power = Polynomial.constant(d, 1.0)
    k = 0
    for deg in range(0, int(degs.max()) + 1, 2):
        while k < deg // 2:
            power = Polynomial.from_arrays(
                d,
                (power.exponents[:, None, :] + quad.exponents[None, :, :]).reshape(-1, d),
                np.outer(power.coefficients, quad.coefficients).reshape(-1),
                0.0,
            )
            k += 1
        sel = degs == deg
        if not sel.any():
            continue
        exps = p.exponents[sel]
        afact = np.prod([[math.factorial(int(v)) for v in row] for row in exps], axis=1)
        mgf = power.coefficients_at(exps)
        total += np.sum(p.coefficients[sel] * mgf * afact) / math.factorial(k)
    return complex(total)


def gaussian_inner(p: Polynomial, q: Polynomial, cov) -> complex:
    """``int p conj(q) dN(0, cov)``."""
    return gaussian_expectation(p * q.conj(), cov)


def gaussian_norm(p: Polynomial, cov) -> float:
    return float(np.sqrt(max(gaussian_inner(p, p, cov).real, 0.0)))


@dataclass(frozen=True)
class GaussianWeightedPolynomial:
    """The function ``poly(x) * p(x)`` with ``p`` the ``N(0, covariance)`` density."""

    poly: Polynomial
    covariance: np.ndarray

    def __post_init__(self):
        cov = _check_covariance(self.covariance)
        if cov.shape[0] != self.poly.dim:
            raise DimensionMismatch("covariance and polynomial dimensions differ")
        w = np.linalg.eigvalsh(cov)
        if w.min() <= 1e-12 * max(np.trace(cov), 1e-300):
            raise SingularCovariance(f"covariance is not positive definite (min eigenvalue {w.min():.3e})")
        object.__setattr__(self, "covariance", cov)

    def density(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float).reshape(-1, self.poly.dim)
        chol = np.linalg.cholesky(self.covariance)
        sol = np.linalg.solve(chol, x.T)
        logdet = 2 * np.log(np.diag(chol)).sum()
        return np.exp(-0.5 * (sol**2).sum(axis=0) - 0.5 * (logdet + self.poly.dim * np.log(2 * np.pi)))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        vals = self.poly(x.reshape(-1, self.poly.dim)) * self.density(x)
        return vals[0] if x.ndim == 1 else vals
