"""SMT-LIB2 client for an external solver process.

One process per prover instance; each query runs between ``push`` and
``pop`` so declarations never leak between queries.  Anything other than a
clean ``unsat`` answer, including crashes and timeouts, yields UNKNOWN.
"""

from __future__ import annotations

import select
import subprocess
from typing import Optional

from ..terms import SymBinop, SymLit, SymUnop, SymVar, Term, term_vars
from ..values import Type
from . import Prover, Verdict, _as_list

_SORT = {Type.INT: "Int", Type.BOOL: "Bool", Type.PERM: "Real", Type.REF: "Ref"}
_OPS = {"&&": "and", "||": "or", "==>": "=>", "==": "=", "<": "<", "<=": "<=", ">": ">",
        ">=": ">=", "+": "+", "-": "-", "*": "*", "/": "/"}


class SolverError(RuntimeError):
    pass


class SmtProver(Prover):
    def __init__(self, command: list, timeout: float = 10.0, logic: str = "QF_UFLIRA"):
        self.command = list(command)
        self.timeout = timeout
        self.logic = logic
        self.diagnostics = []
        self._proc: Optional[subprocess.Popen] = None
        self._cache = {}

    # -- process management

    def _start(self):
        self._proc = subprocess.Popen(self.command, stdin=subprocess.PIPE, stdout=subprocess.PIPE,
                                      stderr=subprocess.DEVNULL, text=True, bufsize=1)
        self._send("(set-option :print-success false)")
        self._send(f"(set-logic {self.logic})")
        self._send("(declare-sort Ref 0)")

    def _send(self, line: str):
        try:
            self._proc.stdin.write(line + "\n")
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError, ValueError) as e:
            raise SolverError(f"cannot write to solver: {e}") from e

    def _read_line(self) -> str:
        ready, _, _ = select.select([self._proc.stdout], [], [], self.timeout)
        if not ready:
            raise SolverError("solver timed out")
        line = self._proc.stdout.readline()
        if not line:
            raise SolverError("solver closed its output")
        return line.strip()

    def close(self):
        if self._proc is not None:
            try:
                self._proc.stdin.close()
            except OSError:
                pass
            try:
                self._proc.kill()
                self._proc.wait(timeout=1)
            except (OSError, subprocess.TimeoutExpired):
                pass
            self._proc = None

    # -- queries

    def is_unsat(self, pc) -> Verdict:
        items = tuple(_as_list(pc))
        hit = self._cache.get(items)
        if hit is not None:
            return hit
        try:
            res = self._query(items)
        except (SolverError, OSError) as e:
            self.diagnostics.append(str(e))
            self.close()
            return Verdict.UNKNOWN
        self._cache[items] = res
        return res

    def _query(self, items: tuple) -> Verdict:
        if self._proc is None or self._proc.poll() is not None:
            self._start()
        script = query_script(items)
        self._send("(push 1)")
        for line in script:
            self._send(line)
        self._send("(check-sat)")
        answer = self._read_line()
        self._send("(pop 1)")
        if answer == "unsat":
            return Verdict.VALID
        if answer not in ("sat", "unknown"):
            self.diagnostics.append(f"unexpected solver response: {answer!r}")
        return Verdict.UNKNOWN


def query_script(items) -> list:
    """Declarations and assertions for one query (without check-sat)."""
    vars_ = {}
    refs = set()
    for t in items:
        term_vars(t, vars_)
        _ref_literals(t, refs)
    lines = []
    for r in sorted(refs):
        lines.append(f"(declare-const {_ref_name(r)} Ref)")
    if len(refs) > 1:
        lines.append("(assert (distinct " + " ".join(_ref_name(r) for r in sorted(refs)) + "))")
    for name in sorted(vars_):
        lines.append(f"(declare-const {_symbol(name)} {_SORT[vars_[name].ty]})")
    for t in items:
        lines.append(f"(assert {to_smt(t)})")
    return lines


def _ref_literals(t: Term, acc: set):
    stack = [t]
    while stack:
        x = stack.pop()
        if type(x) is SymLit and x.ty is Type.REF:
            acc.add(x.value.ident)
        elif type(x) is SymUnop:
            stack.append(x.arg)
        elif type(x) is SymBinop:
            stack.extend((x.left, x.right))


def _ref_name(ident: int) -> str:
    return "null" if ident == 0 else f"ref_{ident}"


def _symbol(name: str) -> str:
    return "|" + name.replace("|", "_") + "|"


def _real(t: Term, s: str) -> str:
    return f"(to_real {s})" if t.ty is Type.INT else s


def to_smt(t: Term) -> str:
    tt = type(t)
    if tt is SymVar:
        return _symbol(t.name)
    if tt is SymLit:
        v = t.value
        if t.ty is Type.BOOL:
            return "true" if v else "false"
        if t.ty is Type.REF:
            return _ref_name(v.ident)
        if t.ty is Type.INT:
            return str(v) if v >= 0 else f"(- {-v})"
        num, den = abs(v.numerator), v.denominator
        s = f"(/ {num}.0 {den}.0)" if den != 1 else f"{num}.0"
        return s if v >= 0 else f"(- {s})"
    if tt is SymUnop:
        return f"(not {to_smt(t.arg)})" if t.op == "!" else f"(- {to_smt(t.arg)})"
    a, b = to_smt(t.left), to_smt(t.right)
    if t.op == "!=":
        return f"(not {_cmp('=', t, a, b)})"
    op = _OPS[t.op]
    if t.op in ("&&", "||", "==>"):
        return f"({op} {a} {b})"
    if t.op in ("==", "<", "<=", ">", ">="):
        return _cmp(op, t, a, b)
    if t.ty is Type.PERM:
        a, b = _real(t.left, a), _real(t.right, b)
    return f"({op} {a} {b})"


def _cmp(op: str, t: SymBinop, a: str, b: str) -> str:
    if Type.PERM in (t.left.ty, t.right.ty):
        a, b = _real(t.left, a), _real(t.right, b)
    return f"({op} {a} {b})"
