"""Lexer, parser and printer for the ``.ivl`` text format.

The :class:`Parser` class is shared with the parallel-language front end,
which adds its own statement forms on top.
"""

from __future__ import annotations

import re
from fractions import Fraction
from typing import Callable, Optional

from .assertions import (Acc, Assertion, CondA, Implies, Or, Pure, Star, show_assertion)
from .coreivl import (Assign, Exhale, FieldAssign, Havoc, If, Inhale, Method, Program, Seq,
                      Skip, Stmt, TypeContext, flatten, seq)
from .expr import Binop, Cond, Expr, FieldRead, Lit, Unop, Var, show_expr
from .values import NULL, Type, parse_type


class ParseError(Exception):
    def __init__(self, msg: str, line: int, col: int):
        self.line, self.col = line, col
        super().__init__(f"{line}:{col}: {msg}")


_TOKEN = re.compile(r"""
    (?P<ws>[ \t\r\n]+|//[^\n]*)
  | (?P<num>\d+)
  | (?P<id>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>==>|:=|==|!=|<=|>=|&&|\|\||[-+*/<>!(){},.:;?])
""", re.VERBOSE)

KEYWORDS = {"acc", "true", "false", "null", "wildcard", "inhale", "exhale", "havoc",
            "if", "else", "skip", "method", "field"}


def tokenize(text: str) -> list:
    toks = []
    i, line, col = 0, 1, 1
    while i < len(text):
        m = _TOKEN.match(text, i)
        if not m:
            raise ParseError(f"unexpected character {text[i]!r}", line, col)
        kind = m.lastgroup
        s = m.group()
        if kind != "ws":
            toks.append((kind, s, line, col))
        nl = s.count("\n")
        if nl:
            line += nl
            col = len(s) - s.rfind("\n")
        else:
            col += len(s)
        i = m.end()
    toks.append(("eof", "", line, col))
    return toks


class Parser:
    keywords = KEYWORDS

    def __init__(self, text: str):
        self.toks = tokenize(text)
        self.i = 0
        self.amode = False
        self.furthest: Optional[ParseError] = None

    # token helpers
    def peek(self, k: int = 0):
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def at(self, s: str, k: int = 0) -> bool:
        kind, text, _, _ = self.peek(k)
        return text == s and kind in ("op", "id")

    def pos(self):
        _, _, line, col = self.peek()
        return (line, col)

    def error(self, msg: str) -> ParseError:
        _, text, line, col = self.peek()
        shown = text or "end of input"
        err = ParseError(f"{msg} (found {shown!r})", line, col)
        if self.furthest is None or (line, col) > (self.furthest.line, self.furthest.col):
            self.furthest = err
        return err

    def accept(self, s: str) -> bool:
        if self.at(s):
            self.i += 1
            return True
        return False

    def expect(self, s: str):
        if not self.accept(s):
            raise self.error(f"expected {s!r}")

    def ident(self) -> str:
        kind, text, _, _ = self.peek()
        if kind != "id" or text in self.keywords:
            raise self.error("expected an identifier")
        self.i += 1
        return text

    def attempt(self, fn: Callable):
        """Run ``fn``; on a parse error rewind and return ``None``."""
        saved, amode = self.i, self.amode
        try:
            return fn()
        except ParseError:
            self.i, self.amode = saved, amode
            return None

    def fail(self):
        raise self.furthest if self.furthest is not None else self.error("syntax error")

    # expressions
    def expr(self) -> Expr:
        saved = self.amode
        self.amode = False
        try:
            return self._ternary()
        finally:
            self.amode = saved

    def assertion_expr(self) -> Expr:
        """An expression as it may appear bare inside an assertion:
        top-level ``*``, ``||`` and ``?`` are left to the assertion level."""
        saved = self.amode
        self.amode = True
        try:
            return self._or()
        finally:
            self.amode = saved

    def _ternary(self) -> Expr:
        p = self.pos()
        c = self._or()
        if not self.amode and self.accept("?"):
            a = self._ternary()
            self.expect(":")
            b = self._ternary()
            return Cond(c, a, b, p)
        return c

    def _binary_level(self, ops, nxt) -> Expr:
        left = nxt()
        while True:
            kind, text, line, col = self.peek()
            if kind == "op" and text in ops:
                self.i += 1
                right = nxt()
                left = self._mk_binop(text, left, right, (line, col))
            else:
                return left

    def _mk_binop(self, op, left, right, pos):
        if op == "/" and _int_lit(left) and _int_lit(right) and right.value != 0:
            return Lit(Fraction(left.value, right.value), left.pos)
        return Binop(op, left, right, pos)

    def _or(self):
        if self.amode:
            return self._and()
        return self._binary_level(("||",), self._and)

    def _and(self):
        return self._binary_level(("&&",), self._eq)

    def _eq(self):
        return self._binary_level(("==", "!="), self._cmp)

    def _cmp(self):
        return self._binary_level(("<", "<=", ">", ">="), self._add)

    def _add(self):
        return self._binary_level(("+", "-"), self._mul)

    def _mul(self):
        return self._binary_level(("/",) if self.amode else ("*", "/"), self._unary)

    def _unary(self) -> Expr:
        p = self.pos()
        if self.accept("!"):
            return Unop("!", self._unary(), p)
        if self.accept("-"):
            arg = self._unary()
            if _int_lit(arg):
                return Lit(-arg.value, p)
            return Unop("-", arg, p)
        return self._postfix()

    def _postfix(self) -> Expr:
        e = self._primary()
        while self.at("."):
            p = self.pos()
            self.i += 1
            e = FieldRead(e, self.ident(), p)
        return e

    def _primary(self) -> Expr:
        kind, text, line, col = self.peek()
        p = (line, col)
        if kind == "num":
            self.i += 1
            return Lit(int(text), p)
        if self.accept("true"):
            return Lit(True, p)
        if self.accept("false"):
            return Lit(False, p)
        if self.accept("null"):
            return Lit(NULL, p)
        if self.accept("("):
            e = self.expr()
            self.expect(")")
            return e
        return Var(self.ident(), p)

    # assertions
    def assertion(self) -> Assertion:
        p = self.pos()
        items = [self._implication()]
        while self.accept("||"):
            items.append(self._implication())
        out = items[0]
        for nxt in items[1:]:
            if isinstance(out, Pure) and isinstance(nxt, Pure):
                out = Pure(Binop("||", out.expr, nxt.expr, p), p)
            else:
                out = Or(out, nxt, p)
        return out

    def _implication(self) -> Assertion:
        p = self.pos()
        left = self._separating()
        if self.accept("==>"):
            if not isinstance(left, Pure):
                raise self.error("left side of '==>' must be an expression")
            return Implies(left.expr, self._implication(), p)
        return left

    def _separating(self) -> Assertion:
        p = self.pos()
        out = self._atom()
        while self.accept("*"):
            out = Star(out, self._atom(), p)
        return out

    def _atom(self) -> Assertion:
        p = self.pos()
        if self.accept("acc"):
            self.expect("(")
            loc = self.expr()
            if not isinstance(loc, FieldRead):
                raise self.error("acc expects a field location")
            perm: Optional[Expr] = Lit(1)
            if self.accept(","):
                if self.accept("wildcard") or self.accept("_"):
                    perm = None
                else:
                    perm = self.expr()
            self.expect(")")
            return Acc(loc.recv, loc.field, perm, p)
        if self.at("("):
            start = self.i
            e = self.attempt(self.assertion_expr)
            if e is not None and _arith_on_bool(e):
                # "(b ? P * Q : R)" with pure P, Q is a conjunction, not a product
                self.i, e = start, None
            if e is not None:
                return Pure(e, p)
            a = self.attempt(self._conditional_assertion)
            if a is not None:
                return a
            self.expect("(")
            a = self.assertion()
            self.expect(")")
            return a
        return Pure(self.assertion_expr(), p)

    def _conditional_assertion(self) -> Assertion:
        p = self.pos()
        self.expect("(")
        saved = self.amode
        self.amode = False
        try:
            c = self._or()
        finally:
            self.amode = saved
        self.expect("?")
        a = self.assertion()
        self.expect(":")
        b = self.assertion()
        self.expect(")")
        if isinstance(a, Pure) and isinstance(b, Pure):
            return Pure(Cond(c, a.expr, b.expr, p), p)
        return CondA(c, a, b, p)

    # statements
    def block(self) -> Stmt:
        self.expect("{")
        stmts = []
        while not self.at("}"):
            if self.peek()[0] == "eof":
                raise self.error("unterminated block")
            if self.accept(";"):
                continue
            stmts.extend(self.statement())
        self.expect("}")
        return seq(*stmts)

    def statement(self) -> list:
        p = self.pos()
        if self.accept("inhale"):
            return [Inhale(self.assertion(), p)]
        if self.accept("exhale"):
            return [Exhale(self.assertion(), p)]
        if self.accept("havoc"):
            names = [self.ident()]
            while self.accept(","):
                names.append(self.ident())
            return [Havoc(n, p) for n in names]
        if self.accept("skip"):
            return [Skip(p)]
        if self.accept("if"):
            return [self._if_rest(p)]
        target = self._postfix()
        self.expect(":=")
        rhs = self.expr()
        if isinstance(target, Var):
            return [Assign(target.name, rhs, p)]
        if isinstance(target, FieldRead):
            return [FieldAssign(target.recv, target.field, rhs, p)]
        raise self.error("invalid assignment target")

    def _if_rest(self, p) -> Stmt:
        self.expect("(")
        c = self.expr()
        self.expect(")")
        then = self.block()
        orelse: Stmt = Skip()
        if self.accept("else"):
            if self.at("if"):
                q = self.pos()
                self.i += 1
                orelse = self._if_rest(q)
            else:
                orelse = self.block()
        return If(c, then, orelse, p)

    def typed_params(self) -> dict:
        self.expect("(")
        params = {}
        if not self.at(")"):
            while True:
                name = self.ident()
                self.expect(":")
                params[name] = self.type_name()
                if not self.accept(","):
                    break
        self.expect(")")
        return params

    def type_name(self) -> Type:
        kind, text, _, _ = self.peek()
        try:
            t = parse_type(text)
        except ValueError:
            raise self.error("expected a type (Int, Bool, Ref, Perm)") from None
        self.i += 1
        return t

    def field_decls(self) -> dict:
        fields = {}
        while self.accept("field"):
            name = self.ident()
            self.expect(":")
            fields[name] = self.type_name()
        return fields

    def program(self) -> Program:
        fields = self.field_decls() or {"v": Type.INT}
        methods = []
        names = set()
        while self.at("method"):
            p = self.pos()
            self.i += 1
            name = self.ident()
            if name in names:
                raise self.error(f"duplicate method {name}")
            names.add(name)
            params = self.typed_params()
            body = self.block()
            methods.append(Method(name, TypeContext(params, dict(fields)), body, p))
        if self.peek()[0] != "eof":
            raise self.error("expected 'method'")
        return Program(methods, fields)


def _int_lit(e) -> bool:
    return isinstance(e, Lit) and isinstance(e.value, int) and not isinstance(e.value, bool)


_BOOL_OPS = {"==", "!=", "<", "<=", ">", ">=", "&&", "||", "==>"}


def _bool_shaped(e: Expr) -> bool:
    if isinstance(e, Lit):
        return isinstance(e.value, bool)
    if isinstance(e, Unop):
        return e.op == "!"
    if isinstance(e, Binop):
        return e.op in _BOOL_OPS
    if isinstance(e, Cond):
        return _bool_shaped(e.then) or _bool_shaped(e.orelse)
    return False


def _arith_on_bool(e: Expr) -> bool:
    """Some arithmetic node has a syntactically boolean operand."""
    if isinstance(e, Binop):
        if e.op in ("+", "-", "*", "/") and (_bool_shaped(e.left) or _bool_shaped(e.right)):
            return True
        return _arith_on_bool(e.left) or _arith_on_bool(e.right)
    if isinstance(e, Unop):
        return _arith_on_bool(e.arg)
    if isinstance(e, Cond):
        return any(_arith_on_bool(x) for x in (e.cond, e.then, e.orelse))
    if isinstance(e, FieldRead):
        return _arith_on_bool(e.recv)
    return False


def parse_program(text: str) -> Program:
    return Parser(text).program()


def _parse_whole(text: str, fn: str):
    p = Parser(text)
    try:
        out = getattr(p, fn)()
    except ParseError:
        p.fail()
    if p.peek()[0] != "eof":
        raise p.error("unexpected trailing input")
    return out


def parse_expr(text: str) -> Expr:
    return _parse_whole(text, "expr")


def parse_assertion(text: str) -> Assertion:
    return _parse_whole(text, "assertion")


def parse_stmt(text: str) -> Stmt:
    p = Parser(text)
    stmts = []
    while p.peek()[0] != "eof":
        if not p.accept(";"):
            stmts.extend(p.statement())
    return seq(*stmts)


# ---------------------------------------------------------------- printing

def show_stmt(s: Stmt, indent: int = 0) -> str:
    pad = "  " * indent
    lines = []
    for part in flatten(s):
        if isinstance(part, Inhale):
            lines.append(f"{pad}inhale {show_assertion(part.assertion)}")
        elif isinstance(part, Exhale):
            lines.append(f"{pad}exhale {show_assertion(part.assertion)}")
        elif isinstance(part, Havoc):
            lines.append(f"{pad}havoc {part.var}")
        elif isinstance(part, Assign):
            lines.append(f"{pad}{part.var} := {show_expr(part.expr)}")
        elif isinstance(part, FieldAssign):
            lines.append(f"{pad}{show_expr(FieldRead(part.recv, part.field))} := {show_expr(part.value)}")
        elif isinstance(part, Skip):
            lines.append(f"{pad}skip")
        elif isinstance(part, If):
            lines.append(f"{pad}if ({show_expr(part.cond)}) {{")
            lines.append(show_stmt(part.then, indent + 1))
            lines.append(f"{pad}}} else {{")
            lines.append(show_stmt(part.orelse, indent + 1))
            lines.append(f"{pad}}}")
        else:
            raise TypeError(part)
    return "\n".join(lines)


def show_method(m: Method) -> str:
    params = ", ".join(f"{n}: {t}" for n, t in m.ctx.vars.items())
    return f"method {m.name}({params}) {{\n{show_stmt(m.body, 1)}\n}}"


def show_program(p: Program) -> str:
    head = "".join(f"field {n}: {t}\n" for n, t in p.fields.items())
    return head + "\n" + "\n\n".join(show_method(m) for m in p.methods) + "\n"
