"""Command line front end.

Every subcommand reads a system JSON document, writes its result as JSON (or
Matrix Market for matrices) and emits a run manifest.  The manifest goes to
``--manifest`` if given, else next to ``--out`` as ``<out>.manifest.json``,
else to stderr.

Exit codes are those of :mod:`oueigen.errors`; 0 means success and 2 is
never used (argument errors map to the input-error code 3).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import fields
from typing import Sequence

from . import __version__
from .eigenfunction import Eigenfunction, ResonantBundle, collinearity_defect
from .errors import EXIT_CODES, InputError, OUError, VerificationFailed
from .general import assemble_matrix, basis_closure, full_basis, general_eigensystem, solve_eigenfunction
from .io import (
    dump_json,
    load_json,
    resolve_tolerances,
    spectrum_document,
    system_from_document,
    write_matrix_market,
    write_pattern_csv,
)
from .mc import RNG_FAMILY, koopman_check
from .oracle import residual
from .pde import KBESolution, expansion_coefficients
from .poly import Polynomial
from .special import GENERAL, classify, special_eigenfunction, special_eigensystem
from .system import Tolerances, spectral_decomposition, spectrum

THREADS_ENV = "OUEIGEN_THREADS"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InputError(f"{self.prog}: {message}")


def _int_list(text: str) -> tuple[int, ...]:
    try:
        vals = tuple(int(v) for v in text.split(",") if v.strip() != "")
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc
    if any(v < 0 for v in vals):
        raise argparse.ArgumentTypeError("multi-index entries must be nonnegative")
    return vals


def _float_list(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.split(",") if v.strip() != "")
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("system", help="system JSON document")
    p.add_argument("--config", help="JSON config with optional 'tolerances' and 'sampler' sections")
    p.add_argument("--out", help="output path (stdout when omitted)")
    p.add_argument("--manifest", help="manifest path")
    for f in fields(Tolerances):
        p.add_argument(f"--tol.{f.name}", dest=f"tol_{f.name}", type=float, metavar="X")
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="oueigen", description="Eigenfunctions of Ornstein-Uhlenbeck operators.")
    parser.add_argument("--version", action="version", version=f"oueigen {__version__}")
    parser.add_argument("--threads", type=int, help=f"worker cap (default: ${THREADS_ENV} or 1)")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    common = _common()

    sub.add_parser("validate", parents=[common], help="check assumptions and report the spectrum of A")

    p = sub.add_parser("spectrum", parents=[common], help="eigenvalues up to a total degree")
    p.add_argument("--max-degree", type=int, required=True)

    p = sub.add_parser("eigenfunction", parents=[common], help="compute one eigenfunction")
    p.add_argument("--index", type=_int_list, required=True, help="comma-separated multi-index")
    p.add_argument("--method", choices=["auto", "special", "general"], default="auto")
    p.add_argument("--normalized", action="store_true", help="L2(nu)-normalize closed forms")
    p.add_argument("--compare", action="store_true", help="also run the other method and report collinearity")
    p.add_argument("--psi-only", action="store_true", help="skip the monomial expansion and residual")
    p.add_argument("--emit-matrix", help="write the operator matrix (Matrix Market)")
    p.add_argument("--emit-pattern", help="write the sparsity pattern (CSV)")

    p = sub.add_parser("matrix", parents=[common], help="assemble the operator matrix for an index")
    p.add_argument("--index", type=_int_list, required=True)
    p.add_argument("--full", action="store_true", help="use the full box instead of the parity closure")
    p.add_argument("--pattern", help="also write the sparsity pattern (CSV)")

    p = sub.add_parser("verify", parents=[common], help="oracle residual of an eigenfunction document")
    p.add_argument("eigenfunction")
    p.add_argument("--threshold", type=float, default=1e-8)

    p = sub.add_parser("kbe", parents=[common], help="backward equation with polynomial terminal data")
    p.add_argument("terminal", help="polynomial JSON document")
    p.add_argument("--horizon", type=float, required=True)
    p.add_argument("--times", type=_float_list, required=True)
    p.add_argument("--method", choices=["auto", "special", "general"], default="auto")

    p = sub.add_parser("simulate", parents=[common], help="Monte Carlo check of the Koopman relation")
    p.add_argument("eigenfunction")
    p.add_argument("--x0", type=_float_list)
    p.add_argument("--time", type=float)
    p.add_argument("--paths", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--block-size", type=int)
    return parser


# ------------------------------------------------------------------ helpers
class _Run:
    def __init__(self, args):
        self.args = args
        self.inputs = [args.system]
        self.outputs: list[str] = []
        self.config = load_json(args.config) if args.config else {}
        if args.config:
            self.inputs.append(args.config)
        if not isinstance(self.config, dict):
            raise InputError("config must be a JSON object")
        flags = {f.name: getattr(args, f"tol_{f.name}") for f in fields(Tolerances)}
        self.overrides = {k: v for k, v in flags.items() if v is not None}
        doc = load_json(args.system)
        if not isinstance(doc, dict):
            raise InputError("system document must be a JSON object")
        self.tolerances = resolve_tolerances(doc.get("tolerances"), self.config.get("tolerances"), self.overrides)
        self._doc = doc
        self.sys = None
        env = os.environ.get(THREADS_ENV)
        threads = args.threads or self.config.get("threads") or (int(env) if env else 1)
        if threads < 1:
            raise InputError("thread count must be positive")
        self.threads = int(threads)

    def load(self) -> None:
        self.sys = system_from_document(dict(self._doc, tolerances=self.tolerances.to_dict()))

    def emit(self, result) -> None:
        text = dump_json(result, self.args.out)
        if self.args.out:
            self.outputs.append(self.args.out)
        else:
            sys.stdout.write(text + "\n")


def _eigenfunction_doc(ef: Eigenfunction, include_monomials=True) -> dict:
    return ef.to_dict(include_monomials=include_monomials)


def _load_eigenfunction(path, decomp) -> Eigenfunction:
    doc = load_json(path)
    if not isinstance(doc, dict):
        raise InputError("eigenfunction document must be a JSON object")
    return Eigenfunction.from_dict(doc, decomp)


def _general(run, n, emit_matrix=None, emit_pattern=None):
    decomp = spectral_decomposition(run.sys)
    basis = basis_closure(n)
    M = assemble_matrix(run.sys, decomp, basis)
    if emit_matrix:
        write_matrix_market(M, emit_matrix)
        run.outputs.append(emit_matrix)
    if emit_pattern:
        write_pattern_csv(M, emit_pattern)
        run.outputs.append(emit_pattern)
    out = solve_eigenfunction(M, basis, n, decomp)
    info = {"basis_size": len(basis), "matrix": M.report()}
    if len(basis) <= 64:
        info["basis"] = [list(m) for m in basis]
    if isinstance(out, ResonantBundle):
        info["resonant_indices"] = [list(m.index) for m in out.members]
        out = out.members[0]
    return out, info


# ----------------------------------------------------------------- commands
def cmd_validate(run):
    decomp = spectral_decomposition(run.sys)
    case = classify(run.sys, decomp)
    return {"valid": True, "dimension": run.sys.dim, "spectral": decomp.to_dict(), "case": case.to_dict()}


def cmd_spectrum(run):
    if run.args.max_degree < 0:
        raise InputError("--max-degree must be nonnegative")
    return spectrum_document(spectrum(spectral_decomposition(run.sys), run.args.max_degree))


def cmd_eigenfunction(run):
    args = run.args
    n = args.index
    if len(n) != run.sys.dim:
        raise InputError(f"index has {len(n)} entries for a {run.sys.dim}-dimensional system")
    decomp = spectral_decomposition(run.sys)
    case = classify(run.sys, decomp)
    method = args.method
    if method == "auto":
        method = "general" if case.tag == GENERAL else "special"
    if method == "special":
        ef = special_eigenfunction(run.sys, n, decomp, case, args.normalized)
        info = {}
    else:
        ef, info = _general(run, n, args.emit_matrix, args.emit_pattern)
    if method == "special" and (args.emit_matrix or args.emit_pattern):
        _general(run, n, args.emit_matrix, args.emit_pattern)
    doc = _eigenfunction_doc(ef, not args.psi_only)
    verification = {"method": method, "case": case.tag, **info}
    if not args.psi_only:
        verification["residual"] = residual(run.sys, ef.monomial_form, ef.eigenvalue)
    if args.compare:
        if case.tag == GENERAL:
            raise InputError("--compare needs a system with a closed form")
        other = _general(run, n)[0] if method == "special" else special_eigenfunction(run.sys, n, decomp, case)
        verification["collinearity"] = 1.0 - collinearity_defect(ef.monomial_form, other.monomial_form)
    doc["verification"] = verification
    return doc


def cmd_matrix(run):
    args = run.args
    if len(args.index) != run.sys.dim:
        raise InputError(f"index has {len(args.index)} entries for a {run.sys.dim}-dimensional system")
    if not args.out:
        raise InputError("matrix requires --out for the Matrix Market file")
    decomp = spectral_decomposition(run.sys)
    basis = full_basis(args.index) if args.full else basis_closure(args.index)
    M = assemble_matrix(run.sys, decomp, basis)
    write_matrix_market(M, args.out)
    run.outputs.append(args.out)
    if args.pattern:
        write_pattern_csv(M, args.pattern)
        run.outputs.append(args.pattern)
    report = M.report()
    report["basis"] = "full" if args.full else "closure"
    sys.stdout.write(dump_json(report) + "\n")
    return None


def cmd_verify(run):
    run.inputs.append(run.args.eigenfunction)
    ef = _load_eigenfunction(run.args.eigenfunction, spectral_decomposition(run.sys))
    if ef.dim != run.sys.dim:
        raise InputError("eigenfunction and system dimensions differ")
    res = residual(run.sys, ef.monomial_form, ef.eigenvalue)
    report = {"index": list(ef.index), "mu": {"re": ef.eigenvalue.real, "im": ef.eigenvalue.imag},
              "residual": res, "threshold": run.args.threshold, "pass": bool(res <= run.args.threshold)}
    if not report["pass"]:
        run.emit(report)
        raise VerificationFailed(f"residual {res:.3e} exceeds {run.args.threshold:.1e}")
    return report


def cmd_kbe(run):
    args = run.args
    run.inputs.append(args.terminal)
    g = Polynomial.from_dict(load_json(args.terminal))
    if g.dim != run.sys.dim:
        raise InputError("terminal polynomial and system dimensions differ")
    degree = max(g.degree, 0)
    case = classify(run.sys)
    method = args.method
    if method == "auto":
        method = "general" if case.tag == GENERAL else "special"
    if method == "special":
        efs = special_eigensystem(run.sys, degree)
    else:
        efs = general_eigensystem(run.sys, degree)
    sol = KBESolution(expansion_coefficients(g, efs, run.sys), args.horizon)
    out = []
    for t in args.times:
        phi = sol(t)
        out.append({"t": t, **phi.to_dict(), "residual": sol.residual(run.sys, t)})
    return {"horizon": args.horizon, "method": method, "expansion": sol.expansion.method, "solutions": out}


def cmd_simulate(run):
    args = run.args
    run.inputs.append(args.eigenfunction)
    cfg = dict(run.config.get("sampler", {}))
    for key, val in (("x0", args.x0), ("time", args.time), ("paths", args.paths),
                     ("seed", args.seed), ("block_size", args.block_size)):
        if val is not None:
            cfg[key] = val
    missing = [k for k in ("x0", "time", "paths", "seed") if k not in cfg]
    if missing:
        raise InputError(f"simulate needs {missing} (flags or config 'sampler' section)")
    ef = _load_eigenfunction(args.eigenfunction, spectral_decomposition(run.sys))
    kwargs = {"block_size": int(cfg["block_size"])} if "block_size" in cfg else {}
    rep = koopman_check(run.sys, ef, list(cfg["x0"]), float(cfg["time"]), int(cfg["paths"]), int(cfg["seed"]),
                        threads=run.threads, **kwargs)
    return rep.to_dict()


COMMANDS = {
    "validate": cmd_validate,
    "spectrum": cmd_spectrum,
    "eigenfunction": cmd_eigenfunction,
    "matrix": cmd_matrix,
    "verify": cmd_verify,
    "kbe": cmd_kbe,
    "simulate": cmd_simulate,
}


def _write_manifest(args, run, argv, wall, status, code):
    manifest = {
        "command": getattr(args, "command", None),
        "argv": list(argv),
        "inputs": run.inputs if run else [getattr(args, "system", None)],
        "tolerances": run.tolerances.to_dict() if run else None,
        "threads": run.threads if run else None,
        "version": __version__,
        "rng": RNG_FAMILY if getattr(args, "command", None) == "simulate" else None,
        "wall_time": wall,
        "outputs": run.outputs if run else [],
        "status": status,
        "exit_code": code,
    }
    if getattr(args, "manifest", None):
        dump_json(manifest, args.manifest)
    elif getattr(args, "out", None):
        dump_json(manifest, f"{args.out}.manifest.json")
    else:
        sys.stderr.write(json.dumps(manifest) + "\n")


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    t0 = time.perf_counter()
    try:
        args = build_parser().parse_args(argv)
    except InputError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return InputError.exit_code
    run = None
    try:
        run = _Run(args)
        run.load()
        result = COMMANDS[args.command](run)
        if result is not None:
            run.emit(result)
        code, status = 0, "ok"
    except OUError as exc:
        code, status = exc.exit_code, f"{type(exc).__name__}: {exc}"
        sys.stderr.write(f"error: {status}\n")
    _write_manifest(args, run, argv, time.perf_counter() - t0, status, code)
    return code


def exit_codes() -> dict[str, int]:
    """Documented exit-code table."""
    return dict(EXIT_CODES)


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(main())
