"""Executable checks of the two translation patterns.

exhale-havoc-inhale: if ``[A] exhale P; havoc xs; inhale Q [B]`` is
derivable, inverting the derivation yields a frame ``F`` (the set before
the inhale) that does not depend on ``xs``, with ``B = Q * F`` and
``A ⊨ P * F``.

inhale-translation-exhale: if ``[P] inhale A; C; exhale B [Q]`` is
derivable, the set ``R`` after ``C`` started from ``P * A`` satisfies
``R ⊨ B * Q``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from ..algebra import is_stable
from ..assertions import Assertion, StateSpace, denote, sep_conj
from ..axsem import Builder, DerivationError, _Rules, top
from ..coreivl import Exhale, Havoc, Inhale, Stmt, TypeContext, flatten, seq
from ..syntax import parse_assertion, parse_stmt


@dataclass
class LemmaInstance:
    name: str
    ctx: TypeContext
    sp: StateSpace
    kind: str                # "exhale-havoc-inhale" or "inhale-translation-exhale"
    pre: Stmt                # statement deriving the starting set from true
    first: Assertion         # P (exhaled) or A (inhaled)
    middle: tuple            # havocked variables, or the statement C
    last: Assertion          # Q (inhaled) or B (exhaled)


@dataclass
class LemmaResult:
    name: str
    status: str              # holds | vacuous | violated
    detail: str = ""


def _stable(P) -> frozenset:
    return frozenset(w for w in P if is_stable(w))


def _leaves(d) -> list:
    if d.rule == "seq":
        return [x for c in d.children for x in _leaves(c)]
    return [d]


def _start(inst: LemmaInstance, b: Builder) -> Optional[frozenset]:
    try:
        return b.derive(inst.pre, top(inst.sp)).post
    except DerivationError:
        return None


def check_instance(inst: LemmaInstance) -> LemmaResult:
    b = Builder(inst.ctx, inst.sp)
    rules = _Rules(inst.ctx, inst.sp)
    start = _start(inst, b)
    if start is None:
        return LemmaResult(inst.name, "vacuous", "starting set not derivable")
    if inst.kind == "exhale-havoc-inhale":
        xs = inst.middle
        c = seq(Exhale(inst.first), *[Havoc(x) for x in xs], Inhale(inst.last))
        try:
            d = b.derive(c, start)
        except DerivationError as e:
            return LemmaResult(inst.name, "vacuous", str(e))
        leaves = _leaves(d)
        F = leaves[-1].pre
        for x in xs:
            if rules.havoc_post(F, x) != F:
                return LemmaResult(inst.name, "violated", f"frame depends on {x}")
        QF = sep_conj(F, denote(inst.last, inst.sp))
        if _stable(QF) != _stable(d.post):
            return LemmaResult(inst.name, "violated", "post differs from Q * F")
        try:
            rules.entails_star(start, F, inst.first, "A")
        except DerivationError as e:
            return LemmaResult(inst.name, "violated", f"A does not entail P * F: {e}")
        return LemmaResult(inst.name, "holds")
    body = inst.middle
    c = seq(Inhale(inst.first), body, Exhale(inst.last))
    try:
        d = b.derive(c, start)
    except DerivationError as e:
        return LemmaResult(inst.name, "vacuous", str(e))
    leaves = _leaves(d)
    PA = leaves[0].post
    want = sep_conj(start, denote(inst.first, inst.sp))
    if _stable(PA) != _stable(want):
        return LemmaResult(inst.name, "violated", "set after inhale is not P * A")
    R = leaves[-1].pre
    try:
        rules.entails_star(R, d.post, inst.last, "R")
    except DerivationError as e:
        return LemmaResult(inst.name, "violated", f"R does not entail B * Q: {e}")
    return LemmaResult(inst.name, "holds")


# ------------------------------------------------------------ instance corpus

def _small(vars_: dict, **bounds) -> tuple:
    from ..values import Type
    ctx = TypeContext(dict(vars_), {"v": Type.INT})
    sp = StateSpace(ctx.vars, ctx.fields, **{"int_range": (0, 1), "refs": 2,
                                              "perm_denoms": (1, 2), **bounds})
    return ctx, sp


def _pre(text: str) -> Stmt:
    return parse_stmt(text)


# (name, pre-statement, P, havocs, Q)
_EHI = [
    ("trivial", "", "true", (), "true"),
    ("keep full", "inhale acc(x.v)", "acc(x.v)", (), "acc(x.v)"),
    ("half out half in", "inhale acc(x.v)", "acc(x.v, 1/2)", (), "acc(x.v, 1/2)"),
    ("frame other cell", "inhale acc(x.v) * acc(y.v) * y.v == 1", "acc(x.v)", ("n",),
     "acc(x.v) * x.v == n"),
    ("wildcard read", "inhale acc(x.v, 1/2)", "acc(x.v, wildcard)", ("n",),
     "acc(x.v, wildcard) * n == x.v"),
    ("missing permission", "inhale acc(y.v)", "acc(x.v)", (), "acc(x.v)"),
    ("pure exchange", "inhale n == 0", "n == 0", ("n",), "n == 1"),
    ("store value", "inhale acc(x.v) * x.v == 1 * acc(y.v)", "acc(x.v)", (),
     "acc(x.v) * x.v == 0"),
    ("free", "inhale acc(x.v) * acc(y.v) * y.v == 1", "acc(x.v)", (), "true"),
    ("alloc", "inhale acc(y.v)", "true", ("x",), "acc(x.v) * x.v == n"),
    ("loop exit", "inhale acc(x.v) * n <= 1", "acc(x.v) * n <= 1", ("n",),
     "acc(x.v) * n <= 1 * !(n < 1)"),
    ("guarded permission", "inhale n == 1 ==> acc(x.v)", "n == 1 ==> acc(x.v)", (),
     "n == 1 ==> acc(x.v)"),
    ("two halves", "inhale acc(x.v, 1/2) * acc(x.v, 1/2)", "acc(x.v, 1/2) * acc(x.v, 1/2)",
     ("n",), "acc(x.v) * x.v == n"),
    ("wildcard kept twice", "inhale acc(x.v, wildcard)",
     "acc(x.v, wildcard) * acc(x.v, wildcard)", (), "acc(x.v, wildcard)"),
]

# (name, pre-statement, A, C, B)
_ITE = [
    ("store", "", "acc(x.v)", "x.v := 1", "acc(x.v) * x.v == 1"),
    ("load", "", "acc(x.v, wildcard)", "n := x.v", "acc(x.v, wildcard) * n == x.v"),
    ("skip keeps frame", "inhale acc(y.v)", "acc(x.v)", "skip", "acc(x.v)"),
    ("branch", "", "acc(x.v)", "if (n == 0) { x.v := 0 } else { x.v := 1 }",
     "acc(x.v) * (n == 0 ? x.v == 0 : x.v == 1)"),
    ("loop body", "", "acc(x.v) * n <= 1 * n < 1", "n := n + 1", "acc(x.v) * n <= 1"),
    ("unprovable", "", "acc(x.v)", "skip", "acc(x.v) * x.v == 0"),
]

def _fig2_instances() -> list:
    from ..values import Type
    ctx, sp = _small({"p": Type.REF, "q": Type.REF, "tmp": Type.INT})
    pl = "acc(p.v, wildcard) * acc(q.v)"
    ql = "acc(p.v, wildcard) * acc(q.v) * p.v == q.v"
    pr = "acc(p.v, wildcard)"
    qr = "acc(p.v, wildcard) * tmp == p.v"
    before = _pre("inhale acc(p.v, wildcard); havoc q; inhale acc(q.v) * q.v == 0")
    return [LemmaInstance("running example: parallel segment", ctx, sp, "exhale-havoc-inhale",
                         before, parse_assertion(f"{pl} * {pr}"), ("tmp",),
                         parse_assertion(f"{ql} * ({qr})")),
           LemmaInstance("running example: left branch", ctx, sp, "inhale-translation-exhale",
                         _pre(""), parse_assertion(pl), parse_stmt("q.v := p.v"),
                         parse_assertion(ql)),
           LemmaInstance("running example: right branch", ctx, sp,
                         "inhale-translation-exhale", _pre(""), parse_assertion(pr),
                         parse_stmt("tmp := p.v"), parse_assertion(qr))]


def lemma_corpus(sp: Optional[StateSpace] = None) -> list:
    """The fixed instance corpus; ``sp`` overrides the bounds of the
    generic instances (the running example keeps its reduced bounds)."""
    from ..values import Type
    vars_ = {"x": Type.REF, "y": Type.REF, "n": Type.INT}
    if sp is None:
        ctx, space = _small(vars_)
    else:
        ctx = TypeContext(dict(vars_), dict(sp.field_types))
        space = StateSpace(vars_, sp.field_types, int_range=sp.int_range, refs=sp.refs,
                           perm_denoms=sp.perm_denoms)
    out = []
    for name, pre, p, xs, q in _EHI:
        out.append(LemmaInstance(name, ctx, space, "exhale-havoc-inhale", _pre(pre),
                                 parse_assertion(p), xs, parse_assertion(q)))
    for name, pre, a, c, b in _ITE:
        out.append(LemmaInstance(name, ctx, space, "inhale-translation-exhale", _pre(pre),
                                 parse_assertion(a), parse_stmt(c), parse_assertion(b)))
    return out + _fig2_instances()


def check_pattern_lemmas(sp: Optional[StateSpace] = None) -> list:
    return [check_instance(i) for i in lemma_corpus(sp)]
