"""Reference operational semantics over a bounded state space.

A statement relates a stable state to *sets* of states.  Inhale, havoc and
the two branches of a sequence are demonic (every state of the set must
go on to succeed); exhale chooses angelically among decompositions, so a
statement may relate one state to several alternative sets.  No related
set at all means failure; the empty set is the "magic" outcome of an
inconsistent inhale.
"""

from __future__ import annotations

import itertools
from fractions import Fraction
from typing import Callable, Iterable, Optional

from .algebra import HeapLoc, IdfState, is_stable, stabilize
from .assertions import (ONE, ZERO, Assertion, StateSpace, denotation, footprints,
                         is_self_framing, remainders, sep_conj, wildcard_amounts)
from .coreivl import (Assign, Exhale, FieldAssign, Havoc, If, Inhale, Seq, Skip, Stmt,
                      TypeContext)
from .expr import eval_expr
from .values import Ref, Type


class OutcomeExplosion(RuntimeError):
    pass


def coerce(t: Type, v):
    if t is Type.PERM and isinstance(v, int) and not isinstance(v, bool):
        return Fraction(v)
    return v


class Oracle:
    """Executes statements of one type context over one state space.

    ``check_inhale_framing=False`` drops the framing premise of inhale; it
    exists only so that the differential harness can be shown to catch
    such a bug.
    """

    def __init__(self, ctx: TypeContext, sp: StateSpace, check_inhale_framing: bool = True,
                 max_outcomes: int = 20000):
        self.ctx = ctx
        self.sp = sp
        self.check_inhale_framing = check_inhale_framing
        self.max_outcomes = max_outcomes
        self._inhale_cache = {}
        self._exhale_cache = {}
        self._ordered_cache = {}
        self._memo = {}
        self.states_seen = 0
        self.unstable_states = []

    # -- primitive steps

    def _watch(self, states: Iterable[IdfState]):
        for w in states:
            self.states_seen += 1
            if not is_stable(w):
                self.unstable_states.append(w)

    def inhale(self, w: IdfState, a: Assertion) -> Optional[frozenset]:
        """The single outcome set of ``inhale a`` or ``None`` when stuck."""
        key = (a, w)
        if key in self._inhale_cache:
            return self._inhale_cache[key]
        combos = sep_conj((w,), denotation(a, self.sp).for_store(w.store))
        if self.check_inhale_framing and not is_self_framing(combos, self.sp):
            out = None
        else:
            out = frozenset(x for x in combos if is_stable(x))
            if any(m not in self.sp.perms for m in w.mask_map.values()):
                out |= self._offgrid_wildcards(w, a)
            self._watch(out)
        self._inhale_cache[key] = out
        return out

    def _offgrid_wildcards(self, w: IdfState, a: Assertion) -> frozenset:
        """Extra stable outcomes of inhaling wildcards into an off-grid mask.

        An earlier wildcard exhale may leave an amount such as 1 - 2^-20
        whose headroom no positive grid amount fits into; the grid
        denotation alone would then make the inhale vacuous.  Offer the
        same headroom-relative amounts that exhale uses for its removals.
        """
        store, heap, mask = w.store_map, w.heap_map, w.mask_map
        out = set()
        for h, _ in self.sp.heaps():
            if any(heap.get(l, v) != v for l, v in h.items()):
                continue
            forms = footprints(a, store, h)
            if not forms:
                continue
            both = {**heap, **h}
            for exact, wild in forms:
                if not wild:
                    continue
                base = dict(mask)
                for l, q in exact.items():
                    base[l] = base.get(l, ZERO) + q
                if any(l not in both for l in (*exact, *wild)) or \
                        any(q > ONE for q in base.values()):
                    continue
                choices = []
                for l in sorted(wild):
                    room = ONE - base.get(l, ZERO)
                    amounts = {p for p in self.sp.wild_sums(wild[l]) if 0 < p <= room}
                    if room > 0 and room not in self.sp.perms:
                        amounts.update(wildcard_amounts(room, None))
                    choices.append([(l, q) for q in sorted(amounts)])
                for pick in itertools.product(*choices):
                    m = dict(base)
                    for l, q in pick:
                        m[l] = m.get(l, ZERO) + q
                    if all(m.get(l, ZERO) > 0 for l in both):
                        out.add(IdfState._raw(store, both, {l: q for l, q in m.items() if q}))
        return frozenset(out)

    def _inhale_in_order(self, w: IdfState, a: Assertion) -> Optional[tuple]:
        key = (a, w)
        out = self._ordered_cache.get(key, False)
        if out is False:
            s = self.inhale(w, a)
            out = None if s is None else tuple(sorted(s, key=lambda x: (x.heap, x.mask)))
            self._ordered_cache[key] = out
        return out

    def exhale(self, w: IdfState, a: Assertion) -> list:
        """Stable remainders, one per angelic alternative."""
        key = (a, w)
        out = self._exhale_cache.get(key)
        if out is None:
            out = list(dict.fromkeys(stabilize(r) for r in remainders(w, a, self.sp)))
            self._watch(out)
            self._exhale_cache[key] = out
        return out

    def havoc(self, w: IdfState, x: str) -> frozenset:
        return frozenset(self._havoc_in_order(w, x))

    def _havoc_in_order(self, w: IdfState, x: str) -> tuple:
        out = tuple(w.with_var(x, v) for v in self.sp.var_domain(x))
        self._watch(out)
        return out

    def assign(self, w: IdfState, x: str, e) -> Optional[IdfState]:
        v = eval_expr(w, e)
        t = self.ctx.vars[x]
        if v is None:
            return None
        v = coerce(t, v)
        if not self.sp.contains_value(t, v):
            return None
        out = w.with_var(x, v)
        self._watch((out,))
        return out

    def field_assign(self, w: IdfState, s: FieldAssign) -> Optional[IdfState]:
        r = eval_expr(w, s.recv)
        v = eval_expr(w, s.value)
        if not isinstance(r, Ref) or r.is_null or v is None:
            return None
        loc = HeapLoc(r, s.field)
        t = self.ctx.fields[s.field]
        v = coerce(t, v)
        if w.perm(loc) != 1 or not self.sp.contains_value(t, v):
            return None
        out = w.with_heap_value(loc, v)
        self._watch((out,))
        return out

    # -- full multirelation

    def exec_outcomes(self, c: Stmt, w: IdfState) -> set:
        """Every set ``S`` with ``⟨c, w⟩ ↝ S``."""
        if isinstance(c, Skip):
            return {frozenset((w,))}
        if isinstance(c, Inhale):
            s = self.inhale(w, c.assertion)
            return set() if s is None else {s}
        if isinstance(c, Exhale):
            return {frozenset((r,)) for r in self.exhale(w, c.assertion)}
        if isinstance(c, Havoc):
            return {self.havoc(w, c.var)}
        if isinstance(c, Assign):
            r = self.assign(w, c.var, c.expr)
            return set() if r is None else {frozenset((r,))}
        if isinstance(c, FieldAssign):
            r = self.field_assign(w, c)
            return set() if r is None else {frozenset((r,))}
        if isinstance(c, If):
            b = eval_expr(w, c.cond)
            if b is None:
                return set()
            return self.exec_outcomes(c.then if b else c.orelse, w)
        if isinstance(c, Seq):
            out = set()
            for s1 in self.exec_outcomes(c.first, w):
                # one choice of continuation outcome per intermediate state
                acc = {frozenset()}
                for mid in s1:
                    opts = self.exec_outcomes(c.second, mid)
                    if not opts:
                        acc = set()
                        break
                    acc = {a | o for a in acc for o in opts}
                    if len(acc) > self.max_outcomes:
                        raise OutcomeExplosion(f"more than {self.max_outcomes} outcome sets")
                out |= acc
            return out
        raise TypeError(c)

    # -- correctness by backtracking search

    def correct(self, c: Stmt, w: IdfState,
                post: Optional[Callable[[IdfState], bool]] = None) -> bool:
        """Some outcome set of ``c`` from ``w`` exists (and lies inside
        ``post`` when given)."""
        return self.correct_seq((c,), w, post)

    def correct_seq(self, stmts: tuple, w: IdfState, post=None) -> bool:
        entry = self._memo.get(id(post))
        if entry is None or entry[0] is not post:
            # the predicate is kept alive with its table so its id stays unique
            entry = self._memo[id(post)] = (post, {})
        return self._ok(tuple(stmts), w, post, entry[1])

    def _ok(self, stmts: tuple, w: IdfState, post, memo) -> bool:
        if not stmts:
            return True if post is None else bool(post(w))
        key = (tuple(map(id, stmts)), w)
        hit = memo.get(key)
        # the stored statements guard against ids reused after collection
        if hit is not None and all(a is b for a, b in zip(hit[0], stmts)):
            return hit[1]
        c, rest = stmts[0], stmts[1:]
        if isinstance(c, Seq):
            res = self._ok((c.first, c.second) + rest, w, post, memo)
        elif isinstance(c, Skip):
            res = self._ok(rest, w, post, memo)
        elif isinstance(c, Inhale):
            s = self._inhale_in_order(w, c.assertion)
            res = s is not None and all(self._ok(rest, x, post, memo) for x in s)
        elif isinstance(c, Exhale):
            res = any(self._ok(rest, r, post, memo) for r in self.exhale(w, c.assertion))
        elif isinstance(c, Havoc):
            # fixed orders (here and for inhale) keep the statistics reproducible
            res = all(self._ok(rest, x, post, memo) for x in self._havoc_in_order(w, c.var))
        elif isinstance(c, Assign):
            r = self.assign(w, c.var, c.expr)
            res = r is not None and self._ok(rest, r, post, memo)
        elif isinstance(c, FieldAssign):
            r = self.field_assign(w, c)
            res = r is not None and self._ok(rest, r, post, memo)
        elif isinstance(c, If):
            b = eval_expr(w, c.cond)
            res = b is not None and self._ok((c.then if b else c.orelse,) + rest, w, post, memo)
        else:
            raise TypeError(c)
        memo[key] = (stmts, res)
        return res

    def counterexample(self, c: Stmt) -> Optional[IdfState]:
        """The first stable initial state from which ``c`` fails."""
        for w in self.sp.stable_states():
            if not self.correct(c, w):
                return w
        return None

    def is_valid(self, c: Stmt) -> bool:
        return self.counterexample(c) is None


def is_correct(ctx: TypeContext, c: Stmt, w: IdfState, sp: StateSpace) -> bool:
    return Oracle(ctx, sp).correct(c, w)


def is_valid(ctx: TypeContext, c: Stmt, sp: StateSpace) -> bool:
    return Oracle(ctx, sp).is_valid(c)


def exec_outcomes(ctx: TypeContext, c: Stmt, w: IdfState, sp: StateSpace) -> set:
    return Oracle(ctx, sp).exec_outcomes(c, w)


def space_for(ctx: TypeContext, **bounds) -> StateSpace:
    return StateSpace(ctx.vars, ctx.fields, **bounds)
