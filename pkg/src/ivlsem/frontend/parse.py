"""Parser for ``.pim`` files.

    method main(p: Ref, q: Ref, tmp: Int)
      requires acc(p.v, wildcard)
      ensures true
    {
      q := alloc(0)
      par { pre A; post B; { q.v := p.v } } { pre C; post D; { tmp := p.v } }
      while (i < n) invariant I { i := i + 1 }
      free(q)
      assert tmp == p.v + p.v
    }
"""

from __future__ import annotations

from ..expr import FieldRead, Var
from ..syntax import KEYWORDS, ParseError, Parser
from .lang import (FIELD, Branch, PAlloc, PAssert, PAssign, PFree, PIf, PMethod, PPar, PSkip,
                   PStmt, PStore, PWhile, pseq)

PIM_KEYWORDS = KEYWORDS | {"par", "pre", "post", "while", "invariant", "alloc", "free",
                           "assert", "requires", "ensures"}


class PimParser(Parser):
    keywords = PIM_KEYWORDS

    def pblock(self) -> PStmt:
        self.expect("{")
        stmts = []
        while not self.at("}"):
            if self.peek()[0] == "eof":
                raise self.error("unterminated block")
            if self.accept(";"):
                continue
            stmts.append(self.pstatement())
        self.expect("}")
        return pseq(*stmts)

    def pstatement(self) -> PStmt:
        p = self.pos()
        if self.accept("skip"):
            return PSkip(p)
        if self.accept("free"):
            self.expect("(")
            r = self.ident()
            self.expect(")")
            return PFree(r, p)
        if self.accept("assert"):
            return PAssert(self.expr(), p)
        if self.accept("if"):
            self.expect("(")
            c = self.expr()
            self.expect(")")
            then = self.pblock()
            orelse = PSkip()
            if self.accept("else"):
                orelse = self.pstatement() if self.at("if") else self.pblock()
            return PIf(c, then, orelse, p)
        if self.accept("while"):
            self.expect("(")
            c = self.expr()
            self.expect(")")
            self.expect("invariant")
            inv = self.assertion()
            return PWhile(c, inv, self.pblock(), p)
        if self.accept("par"):
            left = self.branch()
            self.accept("||")
            return PPar(left, self.branch(), p)
        target = self._postfix()
        self.expect(":=")
        if isinstance(target, Var):
            if self.accept("alloc"):
                self.expect("(")
                e = self.expr()
                self.expect(")")
                return PAlloc(target.name, e, p)
            return PAssign(target.name, self.expr(), p)
        if isinstance(target, FieldRead) and isinstance(target.recv, Var):
            if target.field != FIELD:
                raise ParseError(f"objects have the single field {FIELD!r}", *p)
            return PStore(target.recv.name, self.expr(), p)
        raise ParseError("invalid assignment target", *p)

    def branch(self) -> Branch:
        self.expect("{")
        self.expect("pre")
        pre = self.assertion()
        self.expect(";")
        self.expect("post")
        post = self.assertion()
        self.expect(";")
        body = self.pblock()
        self.accept(";")
        self.expect("}")
        return Branch(pre, post, body)

    def pmethod(self) -> PMethod:
        p = self.pos()
        self.expect("method")
        name = self.ident()
        params = self.typed_params()
        m = PMethod(name, params, pos=p)
        while True:
            if self.accept("requires"):
                m.requires = self.assertion()
            elif self.accept("ensures"):
                m.ensures = self.assertion()
            else:
                break
        m.body = self.pblock()
        return m

    def pprogram(self) -> list:
        methods = [self.pmethod()]
        while self.at("method"):
            methods.append(self.pmethod())
        if self.peek()[0] != "eof":
            raise self.error("expected 'method'")
        return methods


def _run(p: PimParser, fn):
    try:
        return fn()
    except ParseError as e:
        # report whichever error got furthest into the input
        far = p.furthest
        if far is not None and (far.line, far.col) > (e.line, e.col):
            raise far from None
        raise


def parse_pim(text: str) -> list:
    """All methods of a ``.pim`` file."""
    p = PimParser(text)
    return _run(p, p.pprogram)


def parse_pstmt(text: str) -> PStmt:
    p = PimParser("{" + text + "}")
    return _run(p, p.pblock)
