"""Statements of the core intermediate verification language."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional

from .assertions import Assertion, assertion_vars, assertion_fields, type_assertion
from .expr import Expr, IvlTypeError, assignable, expr_vars, expr_fields, type_expr
from .values import Type


class Stmt:
    pos: Optional[tuple]


@dataclass(frozen=True)
class Inhale(Stmt):
    assertion: Assertion
    pos: Optional[tuple] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Exhale(Stmt):
    assertion: Assertion
    pos: Optional[tuple] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Havoc(Stmt):
    var: str
    pos: Optional[tuple] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Seq(Stmt):
    first: Stmt
    second: Stmt
    pos: Optional[tuple] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class If(Stmt):
    cond: Expr
    then: Stmt
    orelse: Stmt
    pos: Optional[tuple] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Assign(Stmt):
    var: str
    expr: Expr
    pos: Optional[tuple] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Skip(Stmt):
    pos: Optional[tuple] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class FieldAssign(Stmt):
    recv: Expr
    field: str
    value: Expr
    pos: Optional[tuple] = field(default=None, compare=False, repr=False)


def seq(*stmts: Stmt) -> Stmt:
    """Sequence statements as a right-nested chain (nested sequences are
    flattened first, so the shape only depends on the statement list)."""
    flat = []
    for s in stmts:
        flat.extend(flatten(s))
    if not flat:
        return Skip()
    out = flat[-1]
    for s in reversed(flat[:-1]):
        out = Seq(s, out)
    return out


def flatten(s: Stmt) -> list:
    if isinstance(s, Seq):
        return flatten(s.first) + flatten(s.second)
    return [s]


def havoc_all(names: Iterable[str]) -> Stmt:
    return seq(*[Havoc(n) for n in names]) if names else Skip()


@dataclass
class TypeContext:
    vars: dict
    fields: dict = field(default_factory=lambda: {"v": Type.INT})

    def __getitem__(self, name: str) -> Type:
        return self.vars[name]


@dataclass
class Method:
    name: str
    ctx: TypeContext
    body: Stmt
    pos: Optional[tuple] = None


@dataclass
class Program:
    methods: list
    fields: dict = field(default_factory=lambda: {"v": Type.INT})

    def method(self, name: str) -> Method:
        for m in self.methods:
            if m.name == name:
                return m
        raise KeyError(name)


# ---------------------------------------------------------------- typing

def check_types(ctx: TypeContext, s: Stmt) -> None:
    """Raise :class:`IvlTypeError` (with a position) on the first problem."""
    vt, ft = ctx.vars, ctx.fields
    if isinstance(s, (Inhale, Exhale)):
        type_assertion(s.assertion, vt, ft)
    elif isinstance(s, Havoc):
        if s.var not in vt:
            raise IvlTypeError(f"undeclared variable {s.var}", s.pos)
    elif isinstance(s, Seq):
        check_types(ctx, s.first)
        check_types(ctx, s.second)
    elif isinstance(s, If):
        if type_expr(s.cond, vt, ft) is not Type.BOOL:
            raise IvlTypeError("if condition is not Bool", s.pos)
        check_types(ctx, s.then)
        check_types(ctx, s.orelse)
    elif isinstance(s, Assign):
        if s.var not in vt:
            raise IvlTypeError(f"undeclared variable {s.var}", s.pos)
        t = type_expr(s.expr, vt, ft)
        if not assignable(vt[s.var], t):
            raise IvlTypeError(f"cannot assign {t} to {s.var}: {vt[s.var]}", s.pos)
    elif isinstance(s, FieldAssign):
        if type_expr(s.recv, vt, ft) is not Type.REF:
            raise IvlTypeError("assignment target is not a Ref", s.pos)
        if s.field not in ft:
            raise IvlTypeError(f"unknown field {s.field}", s.pos)
        t = type_expr(s.value, vt, ft)
        if not assignable(ft[s.field], t):
            raise IvlTypeError(f"cannot store {t} into field {s.field}: {ft[s.field]}", s.pos)
    elif not isinstance(s, Skip):
        raise TypeError(s)


def well_typed(ctx: TypeContext, s: Stmt) -> bool:
    try:
        check_types(ctx, s)
    except IvlTypeError:
        return False
    return True


# ---------------------------------------------------------------- analyses

def mod_vars(s: Stmt) -> set:
    if isinstance(s, (Assign, Havoc)):
        return {s.var}
    if isinstance(s, Seq):
        return mod_vars(s.first) | mod_vars(s.second)
    if isinstance(s, If):
        return mod_vars(s.then) | mod_vars(s.orelse)
    return set()


def free_vars(s: Stmt) -> set:
    if isinstance(s, (Inhale, Exhale)):
        return assertion_vars(s.assertion)
    if isinstance(s, Havoc):
        return {s.var}
    if isinstance(s, Assign):
        return {s.var} | expr_vars(s.expr)
    if isinstance(s, FieldAssign):
        return expr_vars(s.recv) | expr_vars(s.value)
    if isinstance(s, Seq):
        return free_vars(s.first) | free_vars(s.second)
    if isinstance(s, If):
        return expr_vars(s.cond) | free_vars(s.then) | free_vars(s.orelse)
    return set()


def stmt_fields(s: Stmt) -> set:
    if isinstance(s, (Inhale, Exhale)):
        return assertion_fields(s.assertion)
    if isinstance(s, Assign):
        return expr_fields(s.expr)
    if isinstance(s, FieldAssign):
        return {s.field} | expr_fields(s.recv) | expr_fields(s.value)
    if isinstance(s, Seq):
        return stmt_fields(s.first) | stmt_fields(s.second)
    if isinstance(s, If):
        return expr_fields(s.cond) | stmt_fields(s.then) | stmt_fields(s.orelse)
    return set()
