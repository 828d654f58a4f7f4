"""Command-line entry point.

Exit codes: 0 success, 1 verification failure, 2 malformed input,
3 internal or solver error.  Diagnostics go to standard error.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

from .assertions import StateSpace
from .axsem import check_derivation, format_derivation, top, try_derive
from .coreivl import IvlTypeError, Program, check_types
from .frontend import FrontendError, annotation_space, parse_pim, translate_program
from .laws import SampleSpace, check_laws
from .oracle import Oracle, OutcomeExplosion
from .prover import SOLVER_ENV, make_prover
from .prover.smtlib import SolverError
from .symexec import CONSOLIDATIONS, verify_method
from .syntax import ParseError, parse_program, show_program
from .testkit import GenConfig, difftest_op_vs_ax, difftest_symexec_vs_oracle

OK, FAILED, MALFORMED, INTERNAL = 0, 1, 2, 3


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    inputs: list = field(default_factory=list)
    backend: str = "symexec"
    smt: Optional[str] = None
    int_range: tuple = (0, 2)
    refs: int = 2
    perm_denoms: tuple = (1, 2, 4)
    emit_derivation: bool = False
    consolidation: str = "merge"
    output: Optional[str] = None

    def space(self, ctx) -> StateSpace:
        return StateSpace(ctx.vars, ctx.fields, int_range=self.int_range, refs=self.refs,
                          perm_denoms=self.perm_denoms)


# ------------------------------------------------------------ flag parsing

def int_range(text: str) -> tuple:
    lo, sep, hi = text.partition("..")
    try:
        if not sep:
            raise ValueError
        a, b = int(lo), int(hi)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected A..B, got {text!r}")
    if a > b:
        raise argparse.ArgumentTypeError(f"empty range {text!r}")
    return a, b


def denominators(text: str) -> tuple:
    try:
        ds = tuple(sorted({int(d) for d in text.strip("{}").split(",") if d.strip()}))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a list such as 1,2,4, got {text!r}")
    if not ds or min(ds) < 1:
        raise argparse.ArgumentTypeError("denominators must be positive")
    return ds


def positive(text: str) -> int:
    n = int(text)
    if n < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return n


def _add_bounds(p: argparse.ArgumentParser):
    p.add_argument("--int-range", type=int_range, default=(0, 2), metavar="A..B")
    p.add_argument("--refs", type=positive, default=2, metavar="N")
    p.add_argument("--perm-denoms", type=denominators, default=(1, 2, 4), metavar="D")


def _add_verify_flags(p: argparse.ArgumentParser):
    p.add_argument("--backend", choices=("symexec", "oracle"), default="symexec")
    p.add_argument("--smt", metavar="CMD",
                   help=f"external SMT-LIB solver command (default: ${SOLVER_ENV} or built-in)")
    p.add_argument("--emit-derivation", action="store_true",
                   help="print a proof trace for each method (uses the bounds flags)")
    p.add_argument("--consolidate", choices=sorted(CONSOLIDATIONS), default="merge")
    _add_bounds(p)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ivlsem", description="inhale/exhale IVL toolkit")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", help="verify every method of an .ivl file")
    p.add_argument("file")
    _add_verify_flags(p)

    p = sub.add_parser("translate", help="translate a .pim file to .ivl")
    p.add_argument("file")
    p.add_argument("-o", "--output")
    _add_bounds(p)

    p = sub.add_parser("frontend-verify", help="translate a .pim file and verify the result")
    p.add_argument("file")
    _add_verify_flags(p)

    p = sub.add_parser("oracle-check", help="check validity by bounded enumeration")
    p.add_argument("file")
    _add_bounds(p)

    p = sub.add_parser("difftest", help="differential testing on generated programs")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--count", type=positive, default=100)
    p.add_argument("--mode", choices=("symexec", "axsem"), default="symexec")
    p.add_argument("--depth", type=positive, default=4)
    p.add_argument("--json", action="store_true")
    _add_bounds(p)

    p = sub.add_parser("axioms-check", help="check the state algebra laws on random states")
    p.add_argument("--samples", type=positive, default=10_000, help="number of random states")
    p.add_argument("--seed", type=int, default=0)
    return ap


# ------------------------------------------------------------ commands

def _read(path: str) -> str:
    try:
        with open(path, encoding="utf-8") as f:
            return f.read()
    except OSError as e:
        raise UsageError(f"{path}: {e.strerror}")


def _load_ivl(path: str) -> Program:
    prog = parse_program(_read(path))
    for m in prog.methods:
        check_types(m.ctx, m.body)
    return prog


def _load_pim(path: str, cfg: RunConfig) -> Program:
    methods = parse_pim(_read(path))
    return translate_program(methods, lambda m: annotation_space(
        m, cfg.int_range, cfg.refs, cfg.perm_denoms))


def _verify_one(cfg: RunConfig, m) -> tuple:
    """(exit status, stdout lines, stderr lines) for one method."""
    out, err = [], []
    solver_trouble = False
    if cfg.backend == "oracle":
        sp = cfg.space(m.ctx)
        bad = Oracle(m.ctx, sp).counterexample(m.body)
        ok = bad is None
        if not ok:
            err.append(f"{m.name}: fails from {bad!r}")
    else:
        with make_prover(cfg.smt) as prover:
            res = verify_method(m.ctx, m.body, prover, m.name, consolidation=cfg.consolidation)
        ok = res.ok
        err.extend(str(d) for d in res.diagnostics)
        diags = getattr(prover, "diagnostics", [])
        err.extend(f"{m.name}: solver: {d}" for d in diags)
        solver_trouble = bool(diags)
    if cfg.emit_derivation:
        sp = cfg.space(m.ctx)
        d, why = try_derive(m.ctx, m.body, top(sp), sp)
        if d is not None and check_derivation(m.ctx, d, sp):
            out.append(f"derivation for {m.name}:\n{format_derivation(d, 1)}")
        else:
            out.append(f"no derivation for {m.name}: {why or 'rejected by the checker'}")
    out.append(f"{m.name}: {'verified' if ok else 'FAILED'}")
    # a failure that the solver may have caused is not a verdict
    status = OK if ok else INTERNAL if solver_trouble else FAILED
    return status, out, err


def _verify_program(prog: Program, cfg: RunConfig) -> int:
    # methods are independent tasks; output is buffered and emitted in order
    with ThreadPoolExecutor(max_workers=min(8, max(1, len(prog.methods)))) as pool:
        results = list(pool.map(lambda m: _verify_one(cfg, m), prog.methods))
    for _, out, err in results:
        for line in err:
            print(line, file=sys.stderr)
        for line in out:
            print(line)
    return max(r[0] for r in results) if results else OK


def cmd_verify(cfg: RunConfig) -> int:
    return _verify_program(_load_ivl(cfg.inputs[0]), cfg)


def cmd_frontend_verify(cfg: RunConfig) -> int:
    try:
        prog = _load_pim(cfg.inputs[0], cfg)
    except FrontendError as e:
        print(f"{cfg.inputs[0]}: rejected: {e}", file=sys.stderr)
        return FAILED
    return _verify_program(prog, cfg)


def cmd_translate(cfg: RunConfig) -> int:
    try:
        prog = _load_pim(cfg.inputs[0], cfg)
    except FrontendError as e:
        print(f"{cfg.inputs[0]}: rejected: {e}", file=sys.stderr)
        return FAILED
    text = show_program(prog)
    if cfg.output:
        with open(cfg.output, "w", encoding="utf-8") as f:
            f.write(text)
    else:
        sys.stdout.write(text)
    return OK


def cmd_oracle_check(cfg: RunConfig) -> int:
    cfg.backend = "oracle"
    return _verify_program(_load_ivl(cfg.inputs[0]), cfg)


def cmd_difftest(args, cfg: RunConfig) -> int:
    gen = GenConfig(seed=args.seed, depth=args.depth, int_range=cfg.int_range, refs=cfg.refs,
                    perm_denoms=cfg.perm_denoms)
    run = difftest_symexec_vs_oracle if args.mode == "symexec" else difftest_op_vs_ax
    rep = run(gen, args.count)
    if args.json:
        print(json.dumps(rep.as_dict(), indent=2, default=str))
    else:
        print(rep.summary())
    for c in rep.counterexamples:
        print(str(c), file=sys.stderr)
    for w in rep.unstable[:5]:
        print(f"unstable oracle state: {w!r}", file=sys.stderr)
    return OK if rep.ok else FAILED


def cmd_axioms_check(args) -> int:
    rep = check_laws(args.samples, args.seed, SampleSpace())
    for line in rep.lines():
        print(line)
    for s in rep.stats:
        if s.example is not None:
            print(f"{s.name} violated by {s.example!r}", file=sys.stderr)
    return OK if rep.ok else FAILED


def run(argv: Optional[list] = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return OK if e.code == 0 else MALFORMED
    cfg = RunConfig(args.command, [getattr(args, "file", None)] if hasattr(args, "file") else [])
    for name in ("backend", "smt", "int_range", "refs", "perm_denoms", "emit_derivation",
                 "output"):
        if hasattr(args, name):
            setattr(cfg, name, getattr(args, name))
    if hasattr(args, "consolidate"):
        cfg.consolidation = args.consolidate
    try:
        if args.command == "verify":
            return cmd_verify(cfg)
        if args.command == "frontend-verify":
            return cmd_frontend_verify(cfg)
        if args.command == "translate":
            return cmd_translate(cfg)
        if args.command == "oracle-check":
            return cmd_oracle_check(cfg)
        if args.command == "difftest":
            return cmd_difftest(args, cfg)
        return cmd_axioms_check(args)
    except (ParseError, IvlTypeError, UsageError) as e:
        print(f"error: {e}", file=sys.stderr)
        return MALFORMED
    except (SolverError, OutcomeExplosion) as e:
        print(f"error: {e}", file=sys.stderr)
        return INTERNAL
    except Exception as e:  # noqa: BLE001 - anything else is an internal error
        print(f"internal error: {type(e).__name__}: {e}", file=sys.stderr)
        return INTERNAL


def main() -> None:
    sys.exit(run())
