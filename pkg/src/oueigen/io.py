"""File formats: system and polynomial JSON, Matrix Market, sparsity CSV."""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Any, Mapping

import numpy as np
import scipy.io
import scipy.sparse as sp

from .errors import InputError
from .system import OUSystem, Tolerances, validate_system


def load_json(path) -> Any:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError as exc:
        raise InputError(f"no such file: {path}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: malformed JSON ({exc})") from exc


def dump_json(obj: Any, path=None) -> str:
    text = json.dumps(obj, indent=2, sort_keys=False)
    if path is not None:
        Path(path).write_text(text + "\n", encoding="utf-8")
    return text


def resolve_tolerances(*layers: Mapping[str, float] | None) -> Tolerances:
    """Defaults updated by each mapping in turn (later layers win)."""
    tol = Tolerances()
    for layer in layers:
        if layer:
            tol = tol.updated(layer)
    return tol


def system_from_document(doc: Mapping, overrides: Mapping[str, float] | None = None) -> OUSystem:
    """Build a validated system from ``{"A": ..., "B": ..., "tolerances": {...}}``."""
    if not isinstance(doc, Mapping):
        raise InputError("system document must be a JSON object")
    missing = [k for k in ("A", "B") if k not in doc]
    if missing:
        raise InputError(f"system document lacks {missing}")
    tol = resolve_tolerances(doc.get("tolerances"), overrides)
    return validate_system(doc["A"], doc["B"], tol)


def load_system(path, overrides: Mapping[str, float] | None = None) -> OUSystem:
    return system_from_document(load_json(path), overrides)


def spectrum_document(entries) -> list[dict]:
    return [{"multi_index": list(n), "re": float(mu.real) + 0.0, "im": float(mu.imag) + 0.0} for n, mu in entries]


def write_matrix_market(M, path) -> None:
    """Coordinate complex general format (1-based indices, as the format prescribes)."""
    mat = M.csc if hasattr(M, "csc") else sp.csc_matrix(M)
    scipy.io.mmwrite(str(path), sp.coo_matrix(mat, dtype=complex), field="complex", symmetry="general")


def read_matrix_market(path) -> sp.csr_matrix:
    return sp.csr_matrix(scipy.io.mmread(str(path)))


def write_pattern_csv(M, path) -> int:
    """Nonzero positions as ``row,col`` pairs (0-based), sorted by column; returns the count."""
    coo = sp.coo_matrix(M.csc if hasattr(M, "csc") else M)
    order = np.lexsort((coo.row, coo.col))
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["row", "col"])
        w.writerows(zip(coo.row[order].tolist(), coo.col[order].tolist()))
    return int(order.size)


def read_pattern_csv(path) -> np.ndarray:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    return np.array([[int(r["row"]), int(r["col"])] for r in rows], dtype=np.int64).reshape(-1, 2)
