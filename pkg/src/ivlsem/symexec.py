"""Symbolic execution in continuation-passing style.

Every function takes a continuation and returns the conjunction of the
verdicts of all branches it explores.  The symbolic heap is an ordered
list of chunks; ``extract`` takes the first chunk whose receiver and
permission requirement the prover can establish.

Two refinements over the textbook rules keep the engine sound against the
reference semantics:

* expressions inside an exhaled assertion are evaluated against the heap
  as it was when the exhale started, so ``acc(x.f) * x.f == 1`` can be
  consumed even though the chunk's permission drops to zero midway;
* produced chunks assume a non-null receiver and a permission in [0, 1],
  and consumed amounts must be provably non-negative.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Callable, Iterable, Optional

from .algebra import HeapLoc, IdfState
from .assertions import Acc, Assertion, CondA, Implies, Or, Pure, StateSpace, Star
from .coreivl import (Assign, Exhale, FieldAssign, Havoc, If, Inhale, Method, Program, Seq,
                      Skip, Stmt, TypeContext, check_types)
from .expr import Binop, Cond, Expr, FieldRead, IvlTypeError, Lit, Unop, Var
from .prover import BuiltinProver, Prover, Verdict
from .terms import (FALSE, NULL_TERM, ONE, TRUE, ZERO, SymLit, SymVar, Term, eval_term, lit, mk_and,
                    mk_bin, mk_eq, mk_not, mk_or, mk_unop, show_pc, show_term, term_vars)
from .values import Ref, Type


@dataclass(frozen=True)
class Chunk:
    recv: Term
    field: str
    perm: Term
    val: Term

    def __str__(self) -> str:
        return (f"{show_term(self.recv)}.{self.field} "
                f"[{show_term(self.perm)}] = {show_term(self.val)}")


class SymState:
    __slots__ = ("store", "pc", "heap")

    def __init__(self, store: dict, pc: tuple = (), heap: tuple = ()):
        self.store = store
        self.pc = pc
        self.heap = heap

    def add(self, t: Term) -> "SymState":
        if t is TRUE or t == TRUE:
            return self
        return SymState(self.store, self.pc + (t,), self.heap)

    def assign(self, x: str, t: Term) -> "SymState":
        st = dict(self.store)
        st[x] = t
        return SymState(st, self.pc, self.heap)

    def with_heap(self, heap: tuple) -> "SymState":
        return SymState(self.store, self.pc, heap)

    def __repr__(self) -> str:
        st = ", ".join(f"{k}={show_term(v)}" for k, v in sorted(self.store.items()))
        hp = "; ".join(str(c) for c in self.heap)
        return f"<{st} | {show_pc(self.pc)} | {hp}>"


class FreshSupply:
    """Deterministic source of fresh symbolic variables for one task."""

    def __init__(self):
        self._next = itertools.count(1)

    def __call__(self, base: str, ty: Type) -> SymVar:
        return SymVar(f"{base}@{next(self._next)}", ty)


def as_perm(t: Term) -> Term:
    # integer literals written as permission amounts
    if type(t) is SymLit and t.ty is Type.INT:
        return lit(Fraction(t.value), Type.PERM)
    return t


# permission requirements for extract
READ = "read"
WILDCARD = "wildcard"


@dataclass
class Diagnostic:
    method: str
    pos: Optional[tuple]
    kind: str  # entailment | missing-chunk | type
    message: str
    pc: str

    def __str__(self) -> str:
        where = f"{self.pos[0]}:{self.pos[1]}" if self.pos else "?"
        return f"{self.method}@{where}: {self.kind}: {self.message}\n    under: {self.pc}"


@dataclass
class VerifyResult:
    method: str
    ok: bool
    diagnostics: list = field(default_factory=list)
    queries: int = 0


# ------------------------------------------------------------ consolidation

Consolidation = Callable[["SymExec", SymState], SymState]


def no_consolidation(ex: "SymExec", s: SymState) -> SymState:
    return s


def merge_consolidation(ex: "SymExec", s: SymState) -> SymState:
    """Merge the newest chunk with an older one for the syntactically same
    location, when one of them provably carries permission."""
    if len(s.heap) < 2:
        return s
    head, rest = s.heap[0], s.heap[1:]
    for i, c in enumerate(rest):
        if c.field != head.field or c.recv != head.recv:
            continue
        pos_head = ex.provable(s, mk_bin(">", head.perm, ZERO))
        pos_old = ex.provable(s, mk_bin(">", c.perm, ZERO))
        if not (pos_head or pos_old):
            continue
        total = mk_bin("+", c.perm, head.perm)
        val = c.val if pos_old else head.val
        merged = Chunk(head.recv, head.field, total, val)
        out = SymState(s.store, s.pc, (merged,) + rest[:i] + rest[i + 1:])
        out = out.add(mk_bin("<=", total, ONE))
        if pos_head and pos_old:
            out = out.add(mk_eq(head.val, c.val))
        return out
    return s


CONSOLIDATIONS = {"none": no_consolidation, "merge": merge_consolidation}


# ------------------------------------------------------------ the engine

class SymExec:
    """One verification task: a fresh supply, a prover and settings.

    ``bounds`` switches on the bounded mode used when comparing against
    the reference semantics: fresh integers and permissions are assumed
    to lie in the space's domains and assignments must stay inside them.
    """

    def __init__(self, ctx: TypeContext, prover: Optional[Prover] = None,
                 consolidation: str | Consolidation = "none", prune: bool = True,
                 bounds: Optional[StateSpace] = None, method: str = "main"):
        self.ctx = ctx
        self.prover = prover or BuiltinProver()
        self.consolidate_fn = (CONSOLIDATIONS[consolidation] if isinstance(consolidation, str)
                               else consolidation)
        self.prune = prune
        self.bounds = bounds
        self.method = method
        self.fresh = FreshSupply()
        self.diagnostics = []
        self.wildcard_log = []

    # -- prover helpers

    def provable(self, s: SymState, goal: Term) -> bool:
        if goal is TRUE or goal == TRUE:
            return True
        return self.prover.entails(s.pc, goal) is Verdict.VALID

    def infeasible(self, s: SymState) -> bool:
        return self.prover.is_unsat(s.pc) is Verdict.VALID

    def fail(self, s: SymState, kind: str, msg: str, at) -> bool:
        # an unreachable path cannot fail
        if kind != "type" and self.infeasible(s):
            return True
        self.diagnostics.append(Diagnostic(self.method, getattr(at, "pos", None), kind, msg,
                                           show_pc(s.pc)))
        return False

    def obligation(self, s: SymState, goal: Term, what: str, at) -> bool:
        if self.provable(s, goal):
            return True
        return self.fail(s, "entailment", f"{what}: cannot prove {show_term(goal)}", at)

    def branch(self, s: SymState, cond: Term, K) -> bool:
        s2 = s.add(cond)
        if self.prune and cond is not TRUE and self.infeasible(s2):
            return True
        return K(s2)

    # -- typing of fresh values

    def domain(self, t: Term, ty: Type) -> Term:
        """What is known about a value of type ``ty``."""
        if ty is Type.INT and self.bounds is not None:
            lo, hi = self.bounds.int_range
            return mk_and(mk_bin("<=", lit(lo), t), mk_bin("<=", t, lit(hi)))
        if ty is Type.PERM:
            if self.bounds is not None:
                return mk_or(*[mk_eq(t, lit(p, Type.PERM)) for p in self.bounds.perms])
        return TRUE

    def fresh_value(self, s: SymState, base: str, ty: Type) -> tuple:
        v = self.fresh(base, ty)
        return s.add(self.domain(v, ty)), v

    # -- initial state

    def initial_state(self) -> SymState:
        s = SymState({})
        for name in sorted(self.ctx.vars):
            s, v = self.fresh_value(s, name, self.ctx.vars[name])
            s = s.assign(name, v)
        return s

    # -- statements

    def sexec(self, s: SymState, c: Stmt, K) -> bool:
        if isinstance(c, Skip):
            return K(s)
        if isinstance(c, Seq):
            return self.sexec(s, c.first, lambda s1: self.sexec(s1, c.second, K))
        if isinstance(c, Inhale):
            return self.sproduce(s, c.assertion, K, c)
        if isinstance(c, Exhale):
            return self.sconsume(s, c.assertion, lambda s1: self.scleanup(s1, K), c, s.heap)
        if isinstance(c, If):
            return self.sexp(s, c.cond, lambda s1, t: (
                self.branch(s1, t, lambda s2: self.sexec(s2, c.then, K))
                and self.branch(s1, mk_not(t), lambda s2: self.sexec(s2, c.orelse, K))), c)
        if isinstance(c, Assign):
            if c.var not in s.store:
                return self.fail(s, "type", f"unknown variable {c.var}", c)
            ty = self.ctx.vars[c.var]

            def assigned(s1, t):
                if not self.obligation(s1, self.domain(t, ty), f"value of {c.var} within its type", c):
                    return False
                return K(s1.assign(c.var, t))
            return self.sexp(s, c.expr, assigned, c)
        if isinstance(c, Havoc):
            if c.var not in s.store:
                return self.fail(s, "type", f"unknown variable {c.var}", c)
            s1, v = self.fresh_value(s, c.var, self.ctx.vars[c.var])
            return K(s1.assign(c.var, v))
        if isinstance(c, FieldAssign):
            ty = self.ctx.fields[c.field]

            def write(s1, tr, tv):
                if not self.obligation(s1, self.domain(tv, ty), f"value of field {c.field} within its type", c):
                    return False
                return self.extract(s1, tr, c.field, ONE, lambda s2, ch: self.scleanup(
                    s2, lambda s3: self.chunk_add(s3, replace(ch, val=tv), K)), c)
            return self.sexp(s, c.recv, lambda s1, tr: self.sexp(
                s1, c.value, lambda s2, tv: write(s2, tr, tv), c), c)
        raise TypeError(c)

    # -- expressions

    def sexp(self, s: SymState, e: Expr, K, at, snapshot: Optional[tuple] = None) -> bool:
        """Evaluate ``e``; field reads consult ``snapshot`` when given."""
        if isinstance(e, Lit):
            return K(s, lit(e.value))
        if isinstance(e, Var):
            if e.name not in s.store:
                return self.fail(s, "type", f"unknown variable {e.name}", at)
            return K(s, s.store[e.name])
        if isinstance(e, Unop):
            return self.sexp(s, e.arg, lambda s1, t: K(s1, mk_unop(e.op, t)), at, snapshot)
        if isinstance(e, Binop):
            if e.op == "&&":
                return self.sexp(s, Cond(e.left, e.right, Lit(False), e.pos), K, at, snapshot)
            if e.op == "||":
                return self.sexp(s, Cond(e.left, Lit(True), e.right, e.pos), K, at, snapshot)

            def right(s1, t1):
                def done(s2, t2):
                    if e.op == "/" and not self.obligation(
                            s2, mk_bin("!=", t2, ZERO), "divisor is non-zero", at):
                        return False
                    return K(s2, mk_bin(e.op, t1, t2))
                return self.sexp(s1, e.right, done, at, snapshot)
            return self.sexp(s, e.left, right, at, snapshot)
        if isinstance(e, Cond):
            return self.sexp(s, e.cond, lambda s1, t: (
                self.branch(s1, t, lambda s2: self.sexp(s2, e.then, K, at, snapshot))
                and self.branch(s1, mk_not(t), lambda s2: self.sexp(s2, e.orelse, K, at, snapshot))),
                at, snapshot)
        if isinstance(e, FieldRead):
            if snapshot is not None:
                return self.sexp(s, e.recv, lambda s1, tr: self._read_snapshot(
                    s1, tr, e.field, snapshot, K, at), at, snapshot)
            return self.sexp(s, e.recv, lambda s1, tr: self.extract(
                s1, tr, e.field, READ,
                lambda s2, ch: self.chunk_add(s2, ch, lambda s3: K(s3, ch.val)), at), at)
        raise TypeError(e)

    def _read_snapshot(self, s: SymState, tr: Term, fld: str, snapshot: tuple, K, at) -> bool:
        ch = self._find(s, snapshot, tr, fld, READ)
        if ch is None:
            return self.fail(s, "missing-chunk", f"no readable chunk for {show_term(tr)}.{fld}", at)
        return K(s, snapshot[ch].val)

    # -- assertions

    def sproduce(self, s: SymState, a: Assertion, K, at) -> bool:
        if isinstance(a, Pure):
            return self.sexp(s, a.expr, lambda s1, t: K(s1.add(t)), at)
        if isinstance(a, Acc):
            ty = self.ctx.fields[a.field]

            def produce(s1, tr, tp):
                s2 = s1.add(mk_bin("!=", tr, NULL_TERM))
                s2, v = self.fresh_value(s2, a.field, ty)
                return self.chunk_add(s2, Chunk(tr, a.field, tp, v), K)
            if a.perm is None:
                def wild(s1, tr):
                    tp = self.fresh("wc", Type.PERM)
                    s2 = s1.add(mk_bin("<", ZERO, tp)).add(mk_bin("<=", tp, ONE))
                    return produce(s2, tr, tp)
                return self.sexp(s, a.recv, wild, at)
            return self.sexp(s, a.recv, lambda s1, tr: self.sexp(
                s1, a.perm, lambda s2, tp: produce(
                    s2.add(mk_bin("<=", ZERO, tp)).add(mk_bin("<=", tp, ONE)), tr, as_perm(tp)),
                at), at)
        if isinstance(a, Star):
            return self.sproduce(s, a.left, lambda s1: self.sproduce(s1, a.right, K, at), at)
        if isinstance(a, Implies):
            return self.sexp(s, a.cond, lambda s1, t: (
                self.branch(s1, t, lambda s2: self.sproduce(s2, a.body, K, at))
                and self.branch(s1, mk_not(t), K)), at)
        if isinstance(a, CondA):
            return self.sexp(s, a.cond, lambda s1, t: (
                self.branch(s1, t, lambda s2: self.sproduce(s2, a.then, K, at))
                and self.branch(s1, mk_not(t), lambda s2: self.sproduce(s2, a.orelse, K, at))), at)
        if isinstance(a, Or):
            return self.fail(s, "type", "disjunctive assertions are not supported symbolically", at)
        raise TypeError(a)

    def sconsume(self, s: SymState, a: Assertion, K, at, snapshot: tuple) -> bool:
        if isinstance(a, Pure):
            return self.sexp(s, a.expr, lambda s1, t: (
                self.obligation(s1, t, "assertion", at) and K(s1)), at, snapshot)
        if isinstance(a, Acc):
            if a.perm is None:
                def take_wild(s1, tr):
                    def halve(s2, ch):
                        half = mk_bin("/", ch.perm, lit(Fraction(2)))
                        kept = replace(ch, perm=half)

                        def logged(s3):
                            self.wildcard_log.append((s3, kept, half))
                            return K(s3)
                        return self.chunk_add(s2, kept, logged)
                    return self.extract(s1, tr, a.field, WILDCARD, halve, at)
                return self.sexp(s, a.recv, take_wild, at, snapshot)

            def take(s1, tr, tp):
                tp = as_perm(tp)
                if not self.obligation(s1, mk_bin("<=", ZERO, tp), "permission amount is non-negative", at):
                    return False
                return self.extract(s1, tr, a.field, tp, lambda s2, ch: self.chunk_add(
                    s2, replace(ch, perm=mk_bin("-", ch.perm, tp)), K), at)
            return self.sexp(s, a.recv, lambda s1, tr: self.sexp(
                s1, a.perm, lambda s2, tp: take(s2, tr, tp), at, snapshot), at, snapshot)
        if isinstance(a, Star):
            return self.sconsume(s, a.left, lambda s1: self.sconsume(
                s1, a.right, K, at, snapshot), at, snapshot)
        if isinstance(a, Implies):
            return self.sexp(s, a.cond, lambda s1, t: (
                self.branch(s1, t, lambda s2: self.sconsume(s2, a.body, K, at, snapshot))
                and self.branch(s1, mk_not(t), K)), at, snapshot)
        if isinstance(a, CondA):
            return self.sexp(s, a.cond, lambda s1, t: (
                self.branch(s1, t, lambda s2: self.sconsume(s2, a.then, K, at, snapshot))
                and self.branch(s1, mk_not(t), lambda s2: self.sconsume(s2, a.orelse, K, at, snapshot))),
                at, snapshot)
        if isinstance(a, Or):
            return self.fail(s, "type", "disjunctive assertions are not supported symbolically", at)
        raise TypeError(a)

    # -- heap management

    def _find(self, s: SymState, heap: tuple, tr: Term, fld: str, req) -> Optional[int]:
        for i, ch in enumerate(heap):
            if ch.field != fld:
                continue
            if ch.recv != tr and not self.provable(s, mk_eq(ch.recv, tr)):
                continue
            if req is READ or req is WILDCARD:
                goal = mk_bin(">", ch.perm, ZERO)
            else:
                goal = mk_bin(">=", ch.perm, req)
            if self.provable(s, goal):
                return i
        return None

    def extract(self, s: SymState, tr: Term, fld: str, req, K, at) -> bool:
        """Remove the first chunk for ``tr.fld`` meeting ``req`` (an amount,
        ``WILDCARD`` or ``READ``) and pass it on."""
        i = self._find(s, s.heap, tr, fld, req)
        if i is None:
            need = req if isinstance(req, str) else show_term(req)
            return self.fail(s, "missing-chunk",
                             f"no chunk for {show_term(tr)}.{fld} with permission {need}", at)
        ch = s.heap[i]
        return K(s.with_heap(s.heap[:i] + s.heap[i + 1:]), ch)

    def chunk_add(self, s: SymState, ch: Chunk, K) -> bool:
        return self.consolidate(s.with_heap((ch,) + s.heap), K)

    def consolidate(self, s: SymState, K) -> bool:
        return K(self.consolidate_fn(self, s))

    def scleanup(self, s: SymState, K) -> bool:
        """Drop chunks whose permission is provably zero."""
        keep = tuple(ch for ch in s.heap if not self.provable(s, mk_eq(ch.perm, ZERO)))
        return K(s.with_heap(keep) if len(keep) != len(s.heap) else s)

    # -- entry point

    def verify(self, body: Stmt) -> bool:
        return self.sexec(self.initial_state(), body, lambda s: True)


def verify_method(ctx: TypeContext, body: Stmt, prover: Optional[Prover] = None,
                  name: str = "main", consolidation="merge", **options) -> VerifyResult:
    """Verify one method body from an arbitrary initial state.

    Unlike the bare engine this merges chunks by default: separately
    produced chunks for one location otherwise keep unrelated values.
    """
    try:
        check_types(ctx, body)
    except IvlTypeError as e:
        return VerifyResult(name, False, [Diagnostic(name, e.pos, "type", str(e), "true")])
    ex = SymExec(ctx, prover, consolidation=consolidation, method=name, **options)
    ok = ex.verify(body)
    queries = getattr(ex.prover, "queries", 0)
    return VerifyResult(name, ok, ex.diagnostics, queries)


def verify_program(prog: Program, prover: Optional[Prover] = None, **options) -> list:
    return [verify_method(m.ctx, m.body, prover, m.name, **options) for m in prog.methods]


# ------------------------------------------------------------ relation to concrete states

def _valuations(names: dict, sp: StateSpace, extra_perms: Iterable[Fraction]):
    perms = sorted(set(sp.perms) | set(extra_perms))
    doms = []
    for name in sorted(names):
        ty = names[name].ty
        doms.append(perms if ty is Type.PERM else sp.domain(ty))
    keys = sorted(names)
    for vals in itertools.product(*doms):
        yield dict(zip(keys, vals))


def related(w: IdfState, s: SymState, sp: StateSpace,
            extra_perms: Iterable[Fraction] = ()) -> bool:
    """``ω ∼ σ``: some valuation of the symbolic variables satisfies the
    path condition, maps the store onto ``ω``'s store and the chunks onto
    ``ω``'s permissions (summed per location) and values (for chunks with
    positive permission)."""
    names = {}
    for t in list(s.store.values()) + list(s.pc):
        term_vars(t, names)
    for ch in s.heap:
        for t in (ch.recv, ch.perm, ch.val):
            term_vars(t, names)
    for env in _valuations(names, sp, extra_perms):
        if _related_under(w, s, env):
            return True
    return False


def _related_under(w: IdfState, s: SymState, env: dict) -> bool:
    for t in s.pc:
        if eval_term(t, env) is not True:
            return False
    store = w.store_map
    if set(store) != set(s.store):
        return False
    for k, t in s.store.items():
        if eval_term(t, env) != store[k]:
            return False
    sums = {}
    heap = w.heap_map
    for ch in s.heap:
        r = eval_term(ch.recv, env)
        p = eval_term(ch.perm, env)
        v = eval_term(ch.val, env)
        if not isinstance(r, Ref) or r.is_null or p is None or v is None or p < 0:
            return False
        loc = HeapLoc(r, ch.field)
        sums[loc] = sums.get(loc, 0) + p
        if p > 0 and heap.get(loc) != v:
            return False
    mask = w.mask_map
    for loc in set(sums) | set(mask):
        if sums.get(loc, 0) != mask.get(loc, 0):
            return False
    return True
