"""Command line entry point ``pres``.

Exit codes: 0 success or accepted, 1 semantic rejection, 2 usage or parse error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .axioms import (
    BIG,
    SMALL,
    build_prm,
    constant_width_axiom,
    derive_spec,
    parse_fraction,
    parse_family,
    parse_tables,
    serialize_tables,
    standard_family,
    validate_axiom_instance,
)
from .big_refuter import refute_big
from .cnf import CnfFormula, guard_bits, parse_dimacs, serialize_dimacs
from .errors import ArityError, GuardExceeded, InfeasibleConstruction, ParseError, SatisfiableInput, StructureError
from .random_lab import (
    SUBSET_GUARD,
    EtaOracle,
    RandomSpec,
    boundary,
    corpus_text,
    expansion_value,
    is_partially_matchable,
    lower_bound_window,
    parse_corpus_header,
)
from .resolution import PROMISE, check_proof, parse_proof, serialize_proof

REPORT_SCHEMA = "pres-report/1"
OK, REJECT, USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _fraction(text: str) -> Fraction:
    try:
        return parse_fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}") from None


def _nonneg(text: str) -> int:
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError("must be non-negative")
    return v


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as e:
        raise UsageError(f"cannot read {path}: {e.strerror}") from None


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def _emit(obj: dict) -> None:
    print(json.dumps(obj, sort_keys=True))


def _promise(args) -> tuple[str, Fraction] | None:
    if getattr(args, "big", None) is not None:
        return BIG, args.big
    if getattr(args, "small", None) is not None:
        return SMALL, args.small
    return None


def _spec(kind: str, param: Fraction, n: int):
    try:
        return derive_spec(kind, param, n)
    except ValueError as e:
        raise UsageError(str(e)) from None


# --------------------------------------------------------------------------- commands


def cmd_gen_axiom(args) -> int:
    if args.family:
        fam = parse_family(_read(args.family))
        pr = _promise(args)
        if pr is not None and (pr[0], pr[1]) != (fam.spec.kind, fam.spec.param):
            raise UsageError("promise flags disagree with the family header")
        if args.n is not None and args.n != fam.spec.n:
            raise UsageError("-n disagrees with the family header")
        provenance = f"family {Path(args.family).name}"
    else:
        pr = _promise(args)
        if pr is None or args.n is None:
            raise UsageError("without --family give --big/--small and -n")
        spec = _spec(*pr, args.n)
        rng = np.random.Generator(np.random.PCG64(args.seed)) if args.layers else None
        fam = standard_family(spec, rng, args.layers)
        provenance = f"standard family seed {args.seed} layers {args.layers}"
    try:
        fam.check_arity()
        ax = build_prm(fam)
    except ArityError as e:
        print(f"pres: invalid family: {e}", file=sys.stderr)
        return REJECT
    if args.width:
        ax = constant_width_axiom(ax, args.width)
    out = Path(args.output)
    comments = [fam.spec.header(), provenance, f"pres {__version__} gen-axiom"]
    _write(out / f"{args.name}.cnf", serialize_dimacs(ax.cnf, comments))
    _write(out / f"{args.name}.tbl", serialize_tables(ax.tables))
    _emit({"schema": REPORT_SCHEMA, "command": "gen-axiom", "spec": fam.spec.as_dict(),
           "n_total": ax.cnf.n_vars, "clauses": ax.cnf.size, "width": ax.cnf.width,
           "files": [str(out / f"{args.name}.cnf"), str(out / f"{args.name}.tbl")]})
    return OK


def _load_axiom(path: str, validate: bool) -> tuple[CnfFormula, dict | None]:
    cnf = parse_dimacs(_read(path))
    side = Path(path).with_suffix(".tbl")
    if not validate or not side.exists():
        return cnf, None
    tables = parse_tables(side.read_text())
    spec = validate_axiom_instance(cnf, tables)
    return cnf, spec.as_dict()


def cmd_check(args) -> int:
    k = parse_dimacs(_read(args.cnf))
    proof = parse_proof(_read(args.proof))
    cites_promise = any(s.rule == PROMISE for s in proof.steps)
    if cites_promise and not args.axiom:
        raise UsageError("proof cites promise axiom clauses but no --axiom was given")
    axioms, specs = [], []
    for path in args.axiom or ():
        try:
            cnf, spec = _load_axiom(path, not args.no_validate)
        except (StructureError, ArityError) as e:
            _emit({"schema": REPORT_SCHEMA, "command": "check", "accepted": False,
                   "reason": f"axiom {path} failed validation: {e}"})
            return REJECT
        axioms.append(cnf)
        specs.append(spec)
    v = check_proof(k, axioms or None, proof, strict_no_weakening=args.strict_no_weakening)
    out = {"schema": REPORT_SCHEMA, "command": "check", **v.as_dict()}
    if any(specs):
        out["axiom_specs"] = specs
    _emit(out)
    return OK if v.accepted else REJECT


def cmd_refute(args) -> int:
    text = _read(args.cnf)
    k = parse_dimacs(text)
    if args.small is not None:
        raise UsageError("refute handles the big promise only")
    eps = args.eps if args.eps is not None else args.big
    if eps is None:
        raise UsageError("refute needs --eps (or --big)")
    if not 0 < eps < 1:
        raise UsageError("eps must lie in (0, 1)")
    try:
        res = refute_big(k, eps, test_c=args.test_c, guard=args.guard)
    except SatisfiableInput as e:
        _emit({"schema": REPORT_SCHEMA, "command": "refute", "refuted": False,
               "reason": str(e), "model_count": e.model_count})
        return REJECT
    except InfeasibleConstruction as e:
        _emit({"schema": REPORT_SCHEMA, "command": "refute", "refuted": False, "reason": str(e)})
        return REJECT
    out = Path(args.output)
    stem = Path(args.cnf).stem
    e = Fraction(eps)
    prov = [f"input {Path(args.cnf).name} eps {e.numerator}/{e.denominator} test_c {args.test_c}",
            f"pres {__version__} refute"]
    proof_text = serialize_proof(res.proof, prov)
    files = [out / f"{stem}.pres"]
    axiom_cnf = None
    if res.axiom is not None:
        axiom_text = serialize_dimacs(res.axiom.cnf, [res.axiom.spec.header()] + prov)
        _write(out / f"{stem}.axiom.cnf", axiom_text)
        _write(out / f"{stem}.axiom.tbl", serialize_tables(res.axiom.tables))
        files += [out / f"{stem}.axiom.cnf", out / f"{stem}.axiom.tbl"]
        axiom_cnf = parse_dimacs(axiom_text)
    # re-check what was written, not the in-memory object
    v = check_proof(parse_dimacs(text), axiom_cnf, parse_proof(proof_text))
    if not v.accepted:
        print(f"pres: self-check rejected the emitted proof at step {v.failing_step}: {v.reason}", file=sys.stderr)
        return REJECT
    _write(files[0], proof_text)
    stats = dict(res.stats, self_check="accepted")
    _write(out / f"{stem}.stats.json", json.dumps(stats, sort_keys=True, indent=1) + "\n")
    files.append(out / f"{stem}.stats.json")
    _emit({"schema": REPORT_SCHEMA, "command": "refute", "refuted": True,
           "files": [str(f) for f in files], **{k: v for k, v in stats.items() if k != "elapsed"}})
    return OK


def cmd_rand3cnf(args) -> int:
    if args.beta is None:
        raise UsageError("rand3cnf needs --beta")
    try:
        specs = [RandomSpec(args.n, args.beta, args.seed + i) for i in range(args.count)]
    except ValueError as e:
        raise UsageError(str(e)) from None
    if args.output is None:
        if args.count != 1:
            raise UsageError("--count > 1 needs -o <dir>")
        sys.stdout.write(corpus_text(specs[0]))
        return OK
    out = Path(args.output)
    if args.count == 1 and out.suffix == ".cnf":
        _write(out, corpus_text(specs[0]))
        return OK
    for s in specs:
        _write(out / f"rand3_n{s.n}_s{s.seed}.cnf", corpus_text(s))
    return OK


def _measure_one(path: str, args) -> dict:
    text = _read(path)
    k = parse_dimacs(text)
    n = k.space.n_original
    head = parse_corpus_header(text) or {}
    beta = args.beta if args.beta is not None else (
        parse_fraction(head["beta"]) if "beta" in head else Fraction(k.size, max(n, 1))
    )
    rep: dict = {"schema": REPORT_SCHEMA, "command": "measure", "file": path, "n": n, "m": k.size,
                 "beta": str(beta), "provenance": head or None}
    if args.window:
        lo, hi = args.window
        rep["window"] = {"lo": lo, "hi": hi, "source": "override"}
    else:
        if args.eps is None:
            raise UsageError("measure needs --eps or --window")
        try:
            w = lower_bound_window(n, beta, args.eps)
        except ValueError as e:
            raise UsageError(str(e)) from None
        lo, hi = w.lo, w.hi
        rep["window"] = dict(w.as_dict(), source="density")
    want_all = not (args.expansion or args.matchability or args.boundary or args.eta)
    if args.expansion or want_all:
        try:
            r = expansion_value(k, lo, hi, guard=args.subset_guard)
            rep["expansion"] = None if r is None else {"value": r[0], "witness": list(r[1])}
        except GuardExceeded as e:
            rep["expansion"] = {"value": None, "error": str(e)}
    if args.matchability or want_all:
        bound = args.bound if args.bound is not None else hi
        try:
            rep["matchability"] = dict(is_partially_matchable(k, bound, args.mode, args.subset_guard).as_dict(),
                                       bound=bound)
        except GuardExceeded as e:
            rep["matchability"] = {"matchable": "unknown", "method": "exact", "error": str(e), "bound": bound}
    if args.boundary or want_all:
        rep["boundary"] = sorted(boundary(k))
    if args.eta:
        try:
            with EtaOracle(k) as o:
                val, wit = o.witness(())
            rep["eta_empty"] = {"value": "inf" if val == float("inf") else val,
                                "witness": list(wit) if wit else None}
        except GuardExceeded as e:
            rep["eta_empty"] = {"value": None, "error": str(e)}
    return rep


def cmd_measure(args) -> int:
    for path in args.files:
        _emit(_measure_one(path, args))
    return OK


# --------------------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pres", description="Promise resolution toolkit.")
    ap.add_argument("--version", action="version", version=f"pres {__version__}")
    ap.add_argument("--guard", type=_nonneg, default=None,
                    help="enumeration guard in bits (default $PRES_GUARD_BITS or 24)")
    sub = ap.add_subparsers(dest="command", required=True)

    def promise_flags(p, required=False):
        g = p.add_mutually_exclusive_group(required=required)
        g.add_argument("--big", type=_fraction, metavar="P/Q", help="big promise eps * 2^n")
        g.add_argument("--small", type=_fraction, metavar="P/Q", help="small promise 2^(delta n)")

    p = sub.add_parser("gen-axiom", help="emit a promise axiom CNF and its variable tables")
    promise_flags(p)
    p.add_argument("-n", type=int, default=None)
    p.add_argument("--family", help="FAM v1 file; otherwise a standard injective family is built")
    p.add_argument("--seed", type=_nonneg, default=0)
    p.add_argument("--layers", type=_nonneg, default=0, help="random reversible layers in the standard family")
    p.add_argument("--width", type=int, default=0, help="rewrite to this constant clause width (>= 3)")
    p.add_argument("--name", default="axiom")
    p.add_argument("-o", "--output", default=".")
    p.set_defaults(func=cmd_gen_axiom)

    p = sub.add_parser("check", help="check a PRES v1 proof")
    p.add_argument("cnf")
    p.add_argument("proof")
    p.add_argument("--axiom", action="append", help="axiom DIMACS; a sibling .tbl is validated if present")
    p.add_argument("--no-validate", action="store_true", help="skip sidecar table validation")
    p.add_argument("--strict-no-weakening", action="store_true")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("refute", help="refute an unsatisfiable 3CNF under a big promise")
    p.add_argument("cnf")
    promise_flags(p)
    p.add_argument("--eps", type=_fraction, default=None)
    p.add_argument("--test-c", type=int, default=None, help="reduced dichotomy constant (multiple of 3)")
    p.add_argument("-o", "--output", default=".")
    p.set_defaults(func=cmd_refute)

    p = sub.add_parser("rand3cnf", help="sample random 3CNFs")
    p.add_argument("-n", type=int, required=True)
    p.add_argument("--beta", type=_fraction, default=None)
    p.add_argument("--seed", type=_nonneg, default=0)
    p.add_argument("--count", type=int, default=1, help="instances with seeds seed..seed+count-1")
    p.add_argument("-o", "--output", default=None)
    p.set_defaults(func=cmd_rand3cnf)

    p = sub.add_parser("measure", help="expansion, matchability, boundary and eta reports")
    p.add_argument("files", nargs="+")
    p.add_argument("--eps", type=_fraction, default=None)
    p.add_argument("--beta", type=_fraction, default=None)
    p.add_argument("--window", type=int, nargs=2, metavar=("LO", "HI"))
    p.add_argument("--bound", type=int, default=None, help="matchability bound (default: window top)")
    p.add_argument("--mode", choices=("fast", "exact"), default="fast")
    p.add_argument("--subset-guard", type=int, default=SUBSET_GUARD)
    p.add_argument("--expansion", action="store_true")
    p.add_argument("--matchability", action="store_true")
    p.add_argument("--boundary", action="store_true")
    p.add_argument("--eta", action="store_true")
    p.set_defaults(func=cmd_measure)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    if args.guard is not None:
        os.environ["PRES_GUARD_BITS"] = str(args.guard)
    try:
        try:
            guard_bits()
        except ValueError:
            raise UsageError("PRES_GUARD_BITS must be an integer") from None
        return args.func(args)
    except (UsageError, ParseError) as e:
        print(f"pres: {e}", file=sys.stderr)
        return USAGE
    except (StructureError, ArityError, GuardExceeded) as e:
        print(f"pres: {e}", file=sys.stderr)
        return REJECT


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
