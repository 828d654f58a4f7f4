"""Symbolic expressions shared by the symbolic executor and the provers.

Terms are immutable, hash-consed by value (hash computed once) and typed.
The ``mk_*`` constructors fold constants and apply a few unit laws; they
never change the meaning of a term.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Mapping, Optional

from .expr import apply_binop
from .values import NUMERIC, Ref, Type, Value, format_value, type_of


class Term:
    __slots__ = ("ty", "_h")

    def __hash__(self) -> int:
        return self._h

    def __repr__(self) -> str:
        return show_term(self)


class SymVar(Term):
    # defining __eq__ would otherwise reset the hash
    __hash__ = Term.__hash__
    __slots__ = ("name",)

    def __init__(self, name: str, ty: Type):
        self.name = name
        self.ty = ty
        self._h = hash(("v", name))

    def __eq__(self, o) -> bool:
        return self is o or (type(o) is SymVar and o.name == self.name and o.ty is self.ty)


class SymLit(Term):
    __hash__ = Term.__hash__
    __slots__ = ("value",)

    def __init__(self, value: Value, ty: Optional[Type] = None):
        self.ty = ty or type_of(value)
        self.value = Fraction(value) if self.ty is Type.PERM else value
        self._h = hash(("l", self.ty, self.value))

    def __eq__(self, o) -> bool:
        return self is o or (type(o) is SymLit and o.ty is self.ty and o.value == self.value)


class SymUnop(Term):
    __hash__ = Term.__hash__
    __slots__ = ("op", "arg")

    def __init__(self, op: str, arg: Term):
        self.op = op
        self.arg = arg
        self.ty = Type.BOOL if op == "!" else arg.ty
        self._h = hash(("u", op, arg._h))

    def __eq__(self, o) -> bool:
        return self is o or (type(o) is SymUnop and o._h == self._h and o.op == self.op
                             and o.arg == self.arg)


_BOOL_OPS = {"==", "!=", "<", "<=", ">", ">=", "&&", "||", "==>"}


class SymBinop(Term):
    __hash__ = Term.__hash__
    __slots__ = ("op", "left", "right")

    def __init__(self, op: str, left: Term, right: Term):
        self.op = op
        self.left = left
        self.right = right
        if op in _BOOL_OPS:
            self.ty = Type.BOOL
        elif op == "/" or Type.PERM in (left.ty, right.ty):
            self.ty = Type.PERM
        else:
            self.ty = Type.INT
        self._h = hash(("b", op, left._h, right._h))

    def __eq__(self, o) -> bool:
        return self is o or (type(o) is SymBinop and o._h == self._h and o.op == self.op
                             and o.left == self.left and o.right == self.right)


TRUE = SymLit(True)
FALSE = SymLit(False)
ZERO = SymLit(Fraction(0))
ONE = SymLit(Fraction(1))
NULL_TERM = SymLit(Ref(0))


def lit(v: Value, ty: Optional[Type] = None) -> SymLit:
    return SymLit(v, ty)


def is_lit(t: Term) -> bool:
    return type(t) is SymLit


# ------------------------------------------------------------ constructors

def mk_not(t: Term) -> Term:
    if is_lit(t):
        return FALSE if t.value else TRUE
    if type(t) is SymUnop and t.op == "!":
        return t.arg
    return SymUnop("!", t)


def mk_neg(t: Term) -> Term:
    if is_lit(t):
        return SymLit(-t.value, t.ty)
    return SymUnop("-", t)


def mk_unop(op: str, t: Term) -> Term:
    return mk_not(t) if op == "!" else mk_neg(t)


def mk_and(*ts: Term) -> Term:
    out = []
    for t in ts:
        if is_lit(t):
            if not t.value:
                return FALSE
            continue
        out.append(t)
    if not out:
        return TRUE
    acc = out[0]
    for t in out[1:]:
        acc = SymBinop("&&", acc, t)
    return acc


def mk_or(*ts: Term) -> Term:
    out = []
    for t in ts:
        if is_lit(t):
            if t.value:
                return TRUE
            continue
        out.append(t)
    if not out:
        return FALSE
    acc = out[0]
    for t in out[1:]:
        acc = SymBinop("||", acc, t)
    return acc


def mk_bin(op: str, a: Term, b: Term) -> Term:
    if op == "&&":
        return mk_and(a, b)
    if op == "||":
        return mk_or(a, b)
    if op == "==>":
        return mk_or(mk_not(a), b)
    if is_lit(a) and is_lit(b):
        v = apply_binop(op, a.value, b.value)
        if v is not None:
            ty = Type.BOOL if op in _BOOL_OPS else (
                Type.PERM if op == "/" or Type.PERM in (a.ty, b.ty) else Type.INT)
            return SymLit(v, ty)
    if op in ("==", "<=", ">=") and a == b:
        return TRUE
    if op in ("!=", "<", ">") and a == b:
        return FALSE
    if a.ty in NUMERIC and b.ty in NUMERIC:
        if op == "+":
            if _is_zero(a) and a.ty is b.ty:
                return b
            if _is_zero(b) and a.ty is b.ty:
                return a
        elif op == "-":
            if _is_zero(b) and a.ty is b.ty:
                return a
        elif op == "*":
            if _is_one(a) and a.ty is b.ty:
                return b
            if _is_one(b) and a.ty is b.ty:
                return a
        elif op == "/":
            if _is_one(b) and a.ty is Type.PERM:
                return a
    return SymBinop(op, a, b)


def _is_zero(t: Term) -> bool:
    return is_lit(t) and t.ty in NUMERIC and t.value == 0


def _is_one(t: Term) -> bool:
    return is_lit(t) and t.ty in NUMERIC and t.value == 1


def mk_eq(a: Term, b: Term) -> Term:
    return mk_bin("==", a, b)


def conjuncts(t: Term) -> list:
    if type(t) is SymBinop and t.op == "&&":
        return conjuncts(t.left) + conjuncts(t.right)
    if is_lit(t) and t.value is True:
        return []
    return [t]


# ------------------------------------------------------------ analyses

def term_vars(t: Term, acc: Optional[dict] = None) -> dict:
    """Symbolic variables of ``t`` (name -> variable)."""
    if acc is None:
        acc = {}
    stack = [t]
    while stack:
        x = stack.pop()
        tx = type(x)
        if tx is SymVar:
            acc[x.name] = x
        elif tx is SymUnop:
            stack.append(x.arg)
        elif tx is SymBinop:
            stack.append(x.left)
            stack.append(x.right)
    return acc


def eval_term(t: Term, env: Mapping[str, Value]) -> Optional[Value]:
    """Evaluate under a valuation; ``None`` on a missing variable or a
    division by zero."""
    tt = type(t)
    if tt is SymLit:
        return t.value
    if tt is SymVar:
        return env.get(t.name)
    if tt is SymUnop:
        v = eval_term(t.arg, env)
        if v is None:
            return None
        return (not v) if t.op == "!" else -v
    a = eval_term(t.left, env)
    if a is None:
        return None
    op = t.op
    if op == "&&" and a is False:
        return False
    if op == "||" and a is True:
        return True
    if op == "==>" and a is False:
        return True
    b = eval_term(t.right, env)
    if b is None:
        return None
    if op in ("&&", "||"):
        return b
    if op == "==>":
        return b
    return apply_binop(op, a, b)


# ------------------------------------------------------------ printing

_PREC = {"==>": 0, "||": 1, "&&": 2, "==": 3, "!=": 3, "<": 4, "<=": 4, ">": 4, ">=": 4,
         "+": 5, "-": 5, "*": 6, "/": 6}


def show_term(t: Term, ctx: int = 0) -> str:
    tt = type(t)
    if tt is SymLit:
        s = format_value(t.value)
        if t.ty in NUMERIC and (t.value < 0 or "/" in s):
            return f"({s})"
        return s
    if tt is SymVar:
        return t.name
    if tt is SymUnop:
        return f"{t.op}{show_term(t.arg, 7)}"
    p = _PREC[t.op]
    s = f"{show_term(t.left, p)} {t.op} {show_term(t.right, p + 1)}"
    return f"({s})" if p < ctx else s


def show_pc(pc: Iterable[Term]) -> str:
    parts = [show_term(t, 3) for t in pc]
    return " && ".join(parts) if parts else "true"
