"""Heap-dependent expressions: syntax, typing and partial evaluation."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Optional

from .values import NUMERIC, Ref, Type, Value, format_value, type_of


class IvlTypeError(Exception):
    def __init__(self, msg: str, pos=None):
        self.pos = pos
        where = f"{pos[0]}:{pos[1]}: " if pos else ""
        super().__init__(where + msg)


class Expr:
    """Base class; subclasses are frozen dataclasses."""

    pos: Optional[tuple]


@dataclass(frozen=True)
class Lit(Expr):
    value: Value
    pos: Optional[tuple] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Var(Expr):
    name: str
    pos: Optional[tuple] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class FieldRead(Expr):
    recv: Expr
    field: str
    pos: Optional[tuple] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Unop(Expr):
    op: str  # "!" or "-"
    arg: Expr
    pos: Optional[tuple] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Binop(Expr):
    op: str
    left: Expr
    right: Expr
    pos: Optional[tuple] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Cond(Expr):
    cond: Expr
    then: Expr
    orelse: Expr
    pos: Optional[tuple] = field(default=None, compare=False, repr=False)


TRUE = Lit(True)
FALSE = Lit(False)

ARITH = {"+", "-", "*", "/"}
COMPARE = {"<", "<=", ">", ">="}
EQUALITY = {"==", "!="}
LOGIC = {"&&", "||"}


def conj(*es: Expr) -> Expr:
    out = None
    for e in es:
        out = e if out is None else Binop("&&", out, e)
    return TRUE if out is None else out


# ---------------------------------------------------------------- evaluation

_MISSING = object()


def evaluate(e: Expr, store: Mapping[str, Value], heap: Mapping) -> Optional[Value]:
    """Evaluate ``e``; ``None`` means undefined (unframed read, missing
    variable, null dereference or division by zero)."""
    if isinstance(e, Lit):
        return e.value
    if isinstance(e, Var):
        return store.get(e.name)
    if isinstance(e, FieldRead):
        r = evaluate(e.recv, store, heap)
        if not isinstance(r, Ref) or r.is_null:
            return None
        v = heap.get((r, e.field), _MISSING)
        return None if v is _MISSING else v
    if isinstance(e, Unop):
        v = evaluate(e.arg, store, heap)
        if v is None:
            return None
        return (not v) if e.op == "!" else -v
    if isinstance(e, Cond):
        c = evaluate(e.cond, store, heap)
        if c is None:
            return None
        return evaluate(e.then if c else e.orelse, store, heap)
    if isinstance(e, Binop):
        op = e.op
        a = evaluate(e.left, store, heap)
        if a is None:
            return None
        # lazy connectives behave like the conditionals they abbreviate
        if op == "&&":
            return evaluate(e.right, store, heap) if a else False
        if op == "||":
            return True if a else evaluate(e.right, store, heap)
        b = evaluate(e.right, store, heap)
        if b is None:
            return None
        return apply_binop(op, a, b)
    raise TypeError(f"not an expression: {e!r}")


def apply_binop(op: str, a, b):
    if op == "==":
        return a == b
    if op == "!=":
        return a != b
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    if op == "/":
        if b == 0:
            return None
        return Fraction(a) / Fraction(b)
    if op == "<":
        return a < b
    if op == "<=":
        return a <= b
    if op == ">":
        return a > b
    if op == ">=":
        return a >= b
    raise ValueError(op)


def eval_expr(state, e: Expr) -> Optional[Value]:
    """Evaluate in an :class:`~ivlsem.algebra.IdfState`."""
    return evaluate(e, state.store_map, state.heap_map)


# ---------------------------------------------------------------- analyses

def expr_vars(e: Expr) -> set:
    if isinstance(e, Var):
        return {e.name}
    if isinstance(e, Lit):
        return set()
    if isinstance(e, FieldRead):
        return expr_vars(e.recv)
    if isinstance(e, Unop):
        return expr_vars(e.arg)
    if isinstance(e, Binop):
        return expr_vars(e.left) | expr_vars(e.right)
    if isinstance(e, Cond):
        return expr_vars(e.cond) | expr_vars(e.then) | expr_vars(e.orelse)
    raise TypeError(e)


def expr_fields(e: Expr) -> set:
    if isinstance(e, FieldRead):
        return {e.field} | expr_fields(e.recv)
    if isinstance(e, Unop):
        return expr_fields(e.arg)
    if isinstance(e, Binop):
        return expr_fields(e.left) | expr_fields(e.right)
    if isinstance(e, Cond):
        return expr_fields(e.cond) | expr_fields(e.then) | expr_fields(e.orelse)
    return set()


def reads_heap(e: Expr) -> bool:
    return bool(expr_fields(e))


def desugar_lazy(e: Expr) -> Expr:
    """Rewrite ``&&``/``||`` into conditionals."""
    if isinstance(e, Binop):
        l, r = desugar_lazy(e.left), desugar_lazy(e.right)
        if e.op == "&&":
            return Cond(l, r, FALSE, e.pos)
        if e.op == "||":
            return Cond(l, TRUE, r, e.pos)
        return Binop(e.op, l, r, e.pos)
    if isinstance(e, Unop):
        return Unop(e.op, desugar_lazy(e.arg), e.pos)
    if isinstance(e, FieldRead):
        return FieldRead(desugar_lazy(e.recv), e.field, e.pos)
    if isinstance(e, Cond):
        return Cond(desugar_lazy(e.cond), desugar_lazy(e.then), desugar_lazy(e.orelse), e.pos)
    return e


# ---------------------------------------------------------------- typing

def type_expr(e: Expr, var_types: Mapping[str, Type], field_types: Mapping[str, Type]) -> Type:
    """Structural typing.  Int and Perm mix freely in arithmetic; any
    arithmetic involving a Perm, and every division, yields a Perm."""
    if isinstance(e, Lit):
        return type_of(e.value)
    if isinstance(e, Var):
        if e.name not in var_types:
            raise IvlTypeError(f"undeclared variable {e.name}", e.pos)
        return var_types[e.name]
    if isinstance(e, FieldRead):
        rt = type_expr(e.recv, var_types, field_types)
        if rt is not Type.REF:
            raise IvlTypeError(f"field access on a {rt} expression", e.pos)
        if e.field not in field_types:
            raise IvlTypeError(f"unknown field {e.field}", e.pos)
        return field_types[e.field]
    if isinstance(e, Unop):
        t = type_expr(e.arg, var_types, field_types)
        if e.op == "!":
            if t is not Type.BOOL:
                raise IvlTypeError(f"'!' applied to {t}", e.pos)
            return Type.BOOL
        if t not in NUMERIC:
            raise IvlTypeError(f"'-' applied to {t}", e.pos)
        return t
    if isinstance(e, Cond):
        if type_expr(e.cond, var_types, field_types) is not Type.BOOL:
            raise IvlTypeError("condition is not Bool", e.pos)
        a = type_expr(e.then, var_types, field_types)
        b = type_expr(e.orelse, var_types, field_types)
        return unify(a, b, e.pos)
    if isinstance(e, Binop):
        a = type_expr(e.left, var_types, field_types)
        b = type_expr(e.right, var_types, field_types)
        op = e.op
        if op in LOGIC:
            if a is not Type.BOOL or b is not Type.BOOL:
                raise IvlTypeError(f"'{op}' needs Bool operands", e.pos)
            return Type.BOOL
        if op in EQUALITY:
            unify(a, b, e.pos)
            return Type.BOOL
        if a not in NUMERIC or b not in NUMERIC:
            raise IvlTypeError(f"'{op}' needs numeric operands, got {a} and {b}", e.pos)
        if op in COMPARE:
            return Type.BOOL
        if op == "/" or Type.PERM in (a, b):
            return Type.PERM
        return Type.INT
    raise TypeError(e)


def unify(a: Type, b: Type, pos=None) -> Type:
    if a == b:
        return a
    if a in NUMERIC and b in NUMERIC:
        return Type.PERM
    raise IvlTypeError(f"type mismatch: {a} vs {b}", pos)


def assignable(target: Type, source: Type) -> bool:
    return target == source or (target is Type.PERM and source is Type.INT)


# ---------------------------------------------------------------- printing

_PREC = {"||": 1, "&&": 2, "==": 3, "!=": 3, "<": 4, "<=": 4, ">": 4, ">=": 4,
         "+": 5, "-": 5, "*": 6, "/": 6}


def show_expr(e: Expr, guard: bool = False) -> str:
    """Print ``e`` so that the parser reads it back unchanged.

    With ``guard`` set, multiplication, disjunction and conditionals are
    wrapped in parentheses unless already enclosed, which is what the
    assertion parser needs to tell ``*`` apart from separating conjunction.
    """
    return _show(e, 0, guard)


def _show(e: Expr, ctx: int, guard: bool) -> str:
    if isinstance(e, Lit):
        v = e.value
        if isinstance(v, Fraction) and v.denominator != 1:
            s = format_value(v)
            return f"({s})" if ctx >= 6 or guard else s
        if isinstance(v, (int, Fraction)) and not isinstance(v, bool) and v < 0:
            return f"({format_value(v)})"
        return format_value(v)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, FieldRead):
        return f"{_show(e.recv, 8, guard)}.{e.field}"
    if isinstance(e, Unop):
        return f"{e.op}{_show(e.arg, 7, guard)}"
    if isinstance(e, Cond):
        s = f"{_show(e.cond, 1, False)} ? {_show(e.then, 0, False)} : {_show(e.orelse, 0, False)}"
        return f"({s})" if ctx > 0 or guard else s
    if isinstance(e, Binop):
        p = _PREC[e.op]
        wrap = p < ctx or (guard and e.op in ("*", "||"))
        g = guard and not wrap
        s = f"{_show(e.left, p, g)} {e.op} {_show(e.right, p + 1, g)}"
        return f"({s})" if wrap else s
    raise TypeError(e)
