"""Translation of annotated parallel programs into the core language.

Parallel composition and loops follow the exhale-havoc-inhale shape in the
main statement and get one auxiliary method per premise, shaped
inhale-translation-exhale.  Auxiliary names are derived from the method
name and a pre-order counter, so the output is deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from ..assertions import (TRUE_A, Acc, Assertion, Pure, StateSpace, assertion_vars, denote,
                          self_framing_witness, star)
from ..coreivl import (Assign, Exhale, FieldAssign, Havoc, If, Inhale, Method, Program, Skip,
                       Stmt, TypeContext, seq)
from ..expr import Binop, FieldRead, Unop, Var, expr_vars
from ..values import Type
from .lang import (FIELD, PAlloc, PAssert, PAssign, PFree, PIf, PMethod, PPar, PSeq, PSkip,
                   PStmt, PStore, PWhile, free_vars_parimp, mod_vars_parimp)


class FrontendError(Exception):
    def __init__(self, msg: str, pos=None):
        self.pos = pos
        where = f"{pos[0]}:{pos[1]}: " if pos else ""
        super().__init__(where + msg)


@dataclass
class TranslationResult:
    main: Stmt
    auxiliaries: dict = field(default_factory=dict)  # name -> Stmt, in creation order


class _Namer:
    def __init__(self, prefix: str):
        self.prefix = prefix
        self.par = 0
        self.loop = 0

    def par_names(self) -> tuple:
        self.par += 1
        return f"{self.prefix}_par{self.par}_left", f"{self.prefix}_par{self.par}_right"

    def loop_name(self) -> str:
        self.loop += 1
        return f"{self.prefix}_loop{self.loop}"


def _havocs(names) -> list:
    return [Havoc(x) for x in sorted(names)]


def translate(c: PStmt, prefix: str = "aux", _namer: Optional[_Namer] = None) -> TranslationResult:
    """The pair (main statement, auxiliary statements) for ``c``."""
    namer = _namer or _Namer(prefix)
    if isinstance(c, PSkip):
        return TranslationResult(Skip(c.pos))
    if isinstance(c, PAssign):
        return TranslationResult(Assign(c.var, c.expr, c.pos))
    if isinstance(c, PStore):
        return TranslationResult(FieldAssign(Var(c.recv), FIELD, c.expr, c.pos))
    if isinstance(c, PAlloc):
        if c.var in expr_vars(c.expr):
            raise FrontendError(f"allocated variable {c.var} occurs in its initial value", c.pos)
        inh = star(Acc(Var(c.var), FIELD), Pure(Binop("==", FieldRead(Var(c.var), FIELD), c.expr)))
        return TranslationResult(seq(Havoc(c.var, c.pos), Inhale(inh, c.pos)))
    if isinstance(c, PFree):
        return TranslationResult(Exhale(Acc(Var(c.var), FIELD), c.pos))
    if isinstance(c, PAssert):
        return TranslationResult(Exhale(Pure(c.cond), c.pos))
    if isinstance(c, PSeq):
        a = translate(c.first, _namer=namer)
        b = translate(c.second, _namer=namer)
        return TranslationResult(seq(a.main, b.main), {**a.auxiliaries, **b.auxiliaries})
    if isinstance(c, PIf):
        a = translate(c.then, _namer=namer)
        b = translate(c.orelse, _namer=namer)
        return TranslationResult(If(c.cond, a.main, b.main, c.pos),
                                 {**a.auxiliaries, **b.auxiliaries})
    if isinstance(c, PWhile):
        name = namer.loop_name()
        inner = translate(c.body, _namer=namer)
        inv = c.invariant
        main = seq(Exhale(inv, c.pos), *_havocs(mod_vars_parimp(c.body)),
                   Inhale(star(inv, Pure(Unop("!", c.cond))), c.pos))
        aux = seq(Inhale(star(inv, Pure(c.cond))), inner.main, Exhale(inv))
        return TranslationResult(main, {name: aux, **inner.auxiliaries})
    if isinstance(c, PPar):
        check_par_side_conditions(c)
        lname, rname = namer.par_names()
        l, r = c.left, c.right
        tl = translate(l.body, _namer=namer)
        tr = translate(r.body, _namer=namer)
        mods = mod_vars_parimp(l.body) | mod_vars_parimp(r.body)
        main = seq(Exhale(star(l.pre, r.pre), c.pos), *_havocs(mods),
                   Inhale(star(l.post, r.post), c.pos))
        aux = {lname: seq(Inhale(l.pre), tl.main, Exhale(l.post)),
               rname: seq(Inhale(r.pre), tr.main, Exhale(r.post))}
        return TranslationResult(main, {**aux, **tl.auxiliaries, **tr.auxiliaries})
    raise TypeError(c)


def check_par_side_conditions(c: PPar):
    """Variables modified by one branch may not be mentioned by the other
    branch or its postcondition."""
    l, r = c.left, c.right
    for mine, other, post, side in ((l.body, r.body, r.post, "left"),
                                    (r.body, l.body, l.post, "right")):
        clash = mod_vars_parimp(mine) & (free_vars_parimp(other) | assertion_vars(post))
        if clash:
            raise FrontendError(f"{side} branch modifies {', '.join(sorted(clash))}, "
                                "which the other branch uses", c.pos)


def annotations(c: PStmt) -> list:
    """``(what, assertion, pos)`` for every annotation inside ``c``."""
    out = []
    if isinstance(c, PSeq):
        out += annotations(c.first) + annotations(c.second)
    elif isinstance(c, PIf):
        out += annotations(c.then) + annotations(c.orelse)
    elif isinstance(c, PWhile):
        out.append(("loop invariant", c.invariant, c.pos))
        out += annotations(c.body)
    elif isinstance(c, PPar):
        for side, b in (("left", c.left), ("right", c.right)):
            out.append((f"{side} precondition", b.pre, c.pos))
            out.append((f"{side} postcondition", b.post, c.pos))
            out += annotations(b.body)
    return out


def annotation_space(m: PMethod, int_range=(0, 2), refs: int = 2,
                     perm_denoms=(1, 2, 4)) -> StateSpace:
    return StateSpace(m.vars, m.field_types, int_range=int_range, refs=refs,
                      perm_denoms=perm_denoms)


def check_self_framing(m: PMethod, sp: StateSpace):
    """Raise on the first annotation that is not self-framing, naming a
    state that shows it."""
    items = [("precondition", m.requires, m.pos), ("postcondition", m.ensures, m.pos)]
    items += annotations(m.body)
    for what, a, pos in items:
        if a == TRUE_A:
            continue
        w = self_framing_witness(denote(a, sp), sp)
        if w is not None:
            raise FrontendError(f"{what} is not self-framing; witness state {w!r}", pos)


def translate_method(m: PMethod, sp: Optional[StateSpace] = None,
                     check_framing: bool = True) -> Program:
    """The wrapped main method plus one method per auxiliary statement."""
    for x, t in m.vars.items():
        if t not in (Type.INT, Type.REF, Type.BOOL):
            raise FrontendError(f"variable {x} has unsupported type {t}", m.pos)
    if check_framing:
        check_self_framing(m, sp or annotation_space(m))
    res = translate(m.body, prefix=m.name)
    parts = []
    if m.requires != TRUE_A:
        parts.append(Inhale(m.requires))
    parts.append(res.main)
    if m.ensures != TRUE_A:
        parts.append(Exhale(m.ensures))
    ctx = TypeContext(dict(m.vars), dict(m.field_types))
    methods = [Method(m.name, ctx, seq(*parts), m.pos)]
    for name, body in res.auxiliaries.items():
        methods.append(Method(name, TypeContext(dict(m.vars), dict(m.field_types)), body))
    return Program(methods, dict(m.field_types))


def translate_program(methods: list, sp_for=None, check_framing: bool = True) -> Program:
    out = Program([], {FIELD: Type.INT})
    names = set()
    for m in methods:
        sp = sp_for(m) if sp_for else None
        p = translate_method(m, sp, check_framing)
        for meth in p.methods:
            if meth.name in names:
                raise FrontendError(f"duplicate method name {meth.name}", m.pos)
            names.add(meth.name)
        out.methods.extend(p.methods)
    return out
