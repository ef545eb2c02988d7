"""Eigenfunction containers shared by the closed-form and matrix methods."""

from __future__ import annotations

import weakref
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .errors import InputError
from .poly import MultiIndex, Polynomial, linear_form_power

_EXPANDERS: "weakref.WeakKeyDictionary" = weakref.WeakKeyDictionary()


class PsiExpander:
    """Monomial expansions of ``psi_m(x) = prod_k <x, f_k>^{m_k}``, memoized."""

    def __init__(self, decomp):
        vecs = np.asarray(decomp.left_eigenvectors)
        self.dim = vecs.shape[0]
        self._linear = [linear_form_power(f, 1) for f in vecs]
        self._cache: dict[MultiIndex, Polynomial] = {(0,) * self.dim: Polynomial.constant(self.dim, 1.0)}

    @classmethod
    def for_decomposition(cls, decomp) -> "PsiExpander":
        exp = _EXPANDERS.get(decomp)
        if exp is None:
            exp = cls(decomp)
            _EXPANDERS[decomp] = exp
        return exp

    def psi(self, m: MultiIndex) -> Polynomial:
        m = tuple(int(v) for v in m)
        hit = self._cache.get(m)
        if hit is not None:
            return hit
        k = max(i for i, v in enumerate(m) if v)
        prev = list(m)
        prev[k] -= 1
        out = self.psi(tuple(prev)) * self._linear[k]
        self._cache[m] = out
        return out

    def expand(self, coefficients: Mapping[MultiIndex, complex]) -> Polynomial:
        exps, coeffs = [], []
        for m, c in coefficients.items():
            if c == 0:
                continue
            p = self.psi(m)
            exps.append(p.exponents)
            coeffs.append(p.coefficients * c)
        if not exps:
            return Polynomial.zero(self.dim)
        return Polynomial.from_arrays(self.dim, np.vstack(exps), np.concatenate(coeffs))


class Eigenfunction:
    """An eigenpair ``(phi_n, mu_n)`` of the OU generator.

    ``monomial_form`` is the polynomial in the raw coordinates.  For the
    matrix method it is expanded lazily from ``psi_coefficients`` (the
    coefficients over the ``psi`` basis) because high-dimensional expansions
    can be very large.
    """

    def __init__(
        self,
        index,
        eigenvalue: complex,
        monomial_form: Polynomial | None = None,
        psi_coefficients: Mapping[MultiIndex, complex] | None = None,
        decomposition=None,
        method: str = "general",
        meta: Mapping | None = None,
    ):
        self.index: MultiIndex = tuple(int(v) for v in index)
        self.eigenvalue = complex(eigenvalue)
        self.psi_coefficients = None if psi_coefficients is None else dict(psi_coefficients)
        self.decomposition = decomposition
        self.method = method
        self.meta = dict(meta or {})
        if monomial_form is None and (self.psi_coefficients is None or decomposition is None):
            raise ValueError("need a monomial form or psi coefficients with their decomposition")
        self._poly = monomial_form

    @property
    def monomial_form(self) -> Polynomial:
        if self._poly is None:
            self._poly = PsiExpander.for_decomposition(self.decomposition).expand(self.psi_coefficients)
        return self._poly

    @property
    def dim(self) -> int:
        return len(self.index)

    def __call__(self, x):
        return self.monomial_form(x)

    def scaled(self, alpha: complex) -> "Eigenfunction":
        psi = None if self.psi_coefficients is None else {m: alpha * c for m, c in self.psi_coefficients.items()}
        poly = None if self._poly is None else self._poly.scale(alpha)
        return Eigenfunction(self.index, self.eigenvalue, poly, psi, self.decomposition, self.method, self.meta)

    def to_dict(self, include_monomials: bool = True) -> dict:
        out = {"index": list(self.index), "mu": {"re": self.eigenvalue.real, "im": self.eigenvalue.imag}}
        out["method"] = self.method
        if include_monomials:
            out.update(self.monomial_form.to_dict())
        else:
            out["dimension"] = self.dim
        if self.psi_coefficients is not None:
            items = sorted(self.psi_coefficients.items(), key=lambda kv: (-sum(kv[0]), tuple(-v for v in kv[0])))
            out["psi_coefficients"] = [{"index": list(m), "re": c.real, "im": c.imag} for m, c in items]
        if self.meta:
            out["meta"] = dict(self.meta)
        return out

    @classmethod
    def from_dict(cls, data: Mapping, decomposition=None) -> "Eigenfunction":
        try:
            index = data["index"]
            mu = complex(float(data["mu"]["re"]), float(data["mu"].get("im", 0.0)))
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"malformed eigenfunction document: {exc}") from exc
        poly = Polynomial.from_dict(data) if "terms" in data else None
        psi = None
        if "psi_coefficients" in data:
            psi = {tuple(t["index"]): complex(t["re"], t.get("im", 0.0)) for t in data["psi_coefficients"]}
        if poly is None and (psi is None or decomposition is None):
            raise InputError("eigenfunction document has no monomial terms")
        return cls(index, mu, poly, psi, decomposition, data.get("method", "general"), data.get("meta"))

    def __eq__(self, other):
        if not isinstance(other, Eigenfunction):
            return NotImplemented
        return (
            self.index == other.index
            and self.eigenvalue == other.eigenvalue
            and self.psi_coefficients == other.psi_coefficients
            and self.monomial_form == other.monomial_form
        )

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self):
        return f"Eigenfunction(index={self.index}, mu={self.eigenvalue:.6g}, method={self.method!r})"


@dataclass
class ResonantBundle:
    """Basis of the nullspace of ``M - mu I`` when several indices share ``mu``.

    Each member is tagged by its leading index (``member.index``).
    """

    eigenvalue: complex
    members: list[Eigenfunction]

    def __len__(self):
        return len(self.members)

    def __iter__(self):
        return iter(self.members)


def collinearity_defect(p: Polynomial, q: Polynomial) -> float:
    """``min_alpha ||p - alpha q|| / ||p||``; zero iff ``p`` is a multiple of ``q``."""
    union = np.unique(np.vstack([p.exponents, q.exponents]), axis=0)
    a = p.coefficients_at(union)
    b = q.coefficients_at(union)
    alpha = np.vdot(b, a) / np.vdot(b, b)
    return float(np.linalg.norm(a - alpha * b) / np.linalg.norm(a))
