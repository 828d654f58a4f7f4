"""Abstract syntax of the annotated parallel language."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from ..assertions import TRUE_A, Assertion, assertion_vars
from ..expr import Expr, expr_vars
from ..values import Type

FIELD = "v"


class PStmt:
    pos: Optional[tuple]


def _pos():
    return field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class PSkip(PStmt):
    pos: Optional[tuple] = _pos()


@dataclass(frozen=True)
class PAssign(PStmt):
    """``x := e``; loads ``x := r.v`` are the case where ``e`` reads the heap."""
    var: str
    expr: Expr
    pos: Optional[tuple] = _pos()


@dataclass(frozen=True)
class PStore(PStmt):
    recv: str
    expr: Expr
    pos: Optional[tuple] = _pos()


@dataclass(frozen=True)
class PAlloc(PStmt):
    var: str
    expr: Expr
    pos: Optional[tuple] = _pos()


@dataclass(frozen=True)
class PFree(PStmt):
    var: str
    pos: Optional[tuple] = _pos()


@dataclass(frozen=True)
class PAssert(PStmt):
    """Checks a pure condition; a false condition aborts."""
    cond: Expr
    pos: Optional[tuple] = _pos()


@dataclass(frozen=True)
class PSeq(PStmt):
    first: PStmt
    second: PStmt
    pos: Optional[tuple] = _pos()


@dataclass(frozen=True)
class PIf(PStmt):
    cond: Expr
    then: PStmt
    orelse: PStmt
    pos: Optional[tuple] = _pos()


@dataclass(frozen=True)
class PWhile(PStmt):
    cond: Expr
    invariant: Assertion
    body: PStmt
    pos: Optional[tuple] = _pos()


@dataclass(frozen=True)
class Branch:
    pre: Assertion
    post: Assertion
    body: PStmt


@dataclass(frozen=True)
class PPar(PStmt):
    left: Branch
    right: Branch
    pos: Optional[tuple] = _pos()


@dataclass
class PMethod:
    name: str
    vars: dict
    requires: Assertion = TRUE_A
    ensures: Assertion = TRUE_A
    body: PStmt = PSkip()
    pos: Optional[tuple] = None

    @property
    def field_types(self) -> dict:
        return {FIELD: Type.INT}


def pseq(*stmts: PStmt) -> PStmt:
    parts = [s for s in stmts if not isinstance(s, PSkip)]
    if not parts:
        return PSkip()
    out = parts[-1]
    for s in reversed(parts[:-1]):
        out = PSeq(s, out)
    return out


def mod_vars_parimp(c: PStmt) -> set:
    """Variables assigned by ``c``: assignment, load and allocation targets."""
    if isinstance(c, (PAssign, PAlloc)):
        return {c.var}
    if isinstance(c, PSeq):
        return mod_vars_parimp(c.first) | mod_vars_parimp(c.second)
    if isinstance(c, PIf):
        return mod_vars_parimp(c.then) | mod_vars_parimp(c.orelse)
    if isinstance(c, PWhile):
        return mod_vars_parimp(c.body)
    if isinstance(c, PPar):
        return mod_vars_parimp(c.left.body) | mod_vars_parimp(c.right.body)
    return set()


def free_vars_parimp(c: PStmt) -> set:
    if isinstance(c, (PAssign, PAlloc)):
        return {c.var} | expr_vars(c.expr)
    if isinstance(c, PStore):
        return {c.recv} | expr_vars(c.expr)
    if isinstance(c, PFree):
        return {c.var}
    if isinstance(c, PAssert):
        return expr_vars(c.cond)
    if isinstance(c, PSeq):
        return free_vars_parimp(c.first) | free_vars_parimp(c.second)
    if isinstance(c, PIf):
        return expr_vars(c.cond) | free_vars_parimp(c.then) | free_vars_parimp(c.orelse)
    if isinstance(c, PWhile):
        return expr_vars(c.cond) | assertion_vars(c.invariant) | free_vars_parimp(c.body)
    if isinstance(c, PPar):
        out = set()
        for b in (c.left, c.right):
            out |= assertion_vars(b.pre) | assertion_vars(b.post) | free_vars_parimp(b.body)
        return out
    return set()
