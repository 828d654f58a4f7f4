"""Assertions, bounded state spaces, and the semantic operations on sets
of states (denotation, separating conjunction, framing).

Satisfaction uses exact masks: ``acc(x.f, p)`` holds in states whose mask
is exactly ``{x.f ↦ p}``; a pure assertion holds in zero-mask states whose
heap makes it true.  Satisfaction is computed from *footprint forms*: for a
fixed store and heap, an assertion describes a finite list of pairs
``(exact, wild)`` where ``exact`` maps locations to required amounts and
``wild`` counts wildcard permissions per location.  A mask matches a form
when it equals ``exact`` plus some positive amount at each wildcard
location.  Extra heap values never falsify an assertion, so decomposing a
state never needs to split its heap, only its mask.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Mapping, Optional, Sequence

from .algebra import ONE, ZERO, HeapLoc, IdfState, combine, is_stable, stabilize
from .expr import (Expr, IvlTypeError, Lit, Binop, Unop, conj, evaluate, expr_vars,
                   expr_fields, show_expr, type_expr)
from .values import NULL, NUMERIC, Ref, Type, Value


# ---------------------------------------------------------------- syntax

class Assertion:
    pos: Optional[tuple]


@dataclass(frozen=True)
class Pure(Assertion):
    expr: Expr
    pos: Optional[tuple] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Acc(Assertion):
    """``acc(recv.field, perm)``; ``perm`` is ``None`` for a wildcard."""
    recv: Expr
    field: str
    perm: Optional[Expr] = Lit(1)
    pos: Optional[tuple] = field(default=None, compare=False, repr=False)

    @property
    def wildcard(self) -> bool:
        return self.perm is None


@dataclass(frozen=True)
class Star(Assertion):
    left: Assertion
    right: Assertion
    pos: Optional[tuple] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Implies(Assertion):
    cond: Expr
    body: Assertion
    pos: Optional[tuple] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class CondA(Assertion):
    cond: Expr
    then: Assertion
    orelse: Assertion
    pos: Optional[tuple] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Or(Assertion):
    left: Assertion
    right: Assertion
    pos: Optional[tuple] = field(default=None, compare=False, repr=False)


TRUE_A = Pure(Lit(True))


def star(*parts: Assertion) -> Assertion:
    """Left-nested separating conjunction; ``true`` when empty."""
    parts = [p for p in parts if p is not None]
    if not parts:
        return TRUE_A
    out = parts[0]
    for p in parts[1:]:
        out = Star(out, p)
    return out


def wacc(recv: Expr, fld: str) -> Acc:
    return Acc(recv, fld, None)


def assertion_vars(a: Assertion) -> set:
    if isinstance(a, Pure):
        return expr_vars(a.expr)
    if isinstance(a, Acc):
        return expr_vars(a.recv) | (expr_vars(a.perm) if a.perm is not None else set())
    if isinstance(a, (Star, Or)):
        return assertion_vars(a.left) | assertion_vars(a.right)
    if isinstance(a, Implies):
        return expr_vars(a.cond) | assertion_vars(a.body)
    if isinstance(a, CondA):
        return expr_vars(a.cond) | assertion_vars(a.then) | assertion_vars(a.orelse)
    raise TypeError(a)


def assertion_fields(a: Assertion) -> set:
    if isinstance(a, Pure):
        return expr_fields(a.expr)
    if isinstance(a, Acc):
        return {a.field} | expr_fields(a.recv) | (expr_fields(a.perm) if a.perm is not None else set())
    if isinstance(a, (Star, Or)):
        return assertion_fields(a.left) | assertion_fields(a.right)
    if isinstance(a, Implies):
        return expr_fields(a.cond) | assertion_fields(a.body)
    if isinstance(a, CondA):
        return expr_fields(a.cond) | assertion_fields(a.then) | assertion_fields(a.orelse)
    raise TypeError(a)


def has_disjunction(a: Assertion) -> bool:
    if isinstance(a, Or):
        return True
    if isinstance(a, Star):
        return has_disjunction(a.left) or has_disjunction(a.right)
    if isinstance(a, Implies):
        return has_disjunction(a.body)
    if isinstance(a, CondA):
        return has_disjunction(a.then) or has_disjunction(a.orelse)
    return False


def type_assertion(a: Assertion, var_types, field_types) -> None:
    if isinstance(a, Pure):
        if type_expr(a.expr, var_types, field_types) is not Type.BOOL:
            raise IvlTypeError("pure assertion is not Bool", a.pos)
    elif isinstance(a, Acc):
        if type_expr(a.recv, var_types, field_types) is not Type.REF:
            raise IvlTypeError("acc receiver is not a Ref", a.pos)
        if a.field not in field_types:
            raise IvlTypeError(f"unknown field {a.field}", a.pos)
        if a.perm is not None and type_expr(a.perm, var_types, field_types) not in NUMERIC:
            raise IvlTypeError("permission amount is not numeric", a.pos)
    elif isinstance(a, (Star, Or)):
        type_assertion(a.left, var_types, field_types)
        type_assertion(a.right, var_types, field_types)
    elif isinstance(a, Implies):
        if type_expr(a.cond, var_types, field_types) is not Type.BOOL:
            raise IvlTypeError("implication guard is not Bool", a.pos)
        type_assertion(a.body, var_types, field_types)
    elif isinstance(a, CondA):
        if type_expr(a.cond, var_types, field_types) is not Type.BOOL:
            raise IvlTypeError("condition is not Bool", a.pos)
        type_assertion(a.then, var_types, field_types)
        type_assertion(a.orelse, var_types, field_types)
    else:
        raise TypeError(a)


_APREC = {Or: 1, Implies: 2, Star: 3}


def show_assertion(a: Assertion, ctx: int = 0) -> str:
    if isinstance(a, Pure):
        return show_expr(a.expr, guard=True)
    if isinstance(a, Acc):
        perm = "wildcard" if a.perm is None else show_expr(a.perm)
        if a.perm is not None and a.perm == Lit(1):
            return f"acc({show_expr(a.recv)}.{a.field})"
        return f"acc({show_expr(a.recv)}.{a.field}, {perm})"
    if isinstance(a, CondA):
        return (f"({show_expr(a.cond)} ? {show_assertion(a.then)} : "
                f"{show_assertion(a.orelse)})")
    p = _APREC[type(a)]
    if isinstance(a, Implies):
        s = f"{show_expr(a.cond, guard=True)} ==> {show_assertion(a.body, p)}"
    elif isinstance(a, Star):
        s = f"{_star_operand(a.left, p)} * {_star_operand(a.right, p + 1)}"
    else:
        s = f"{show_assertion(a.left, p)} || {show_assertion(a.right, p + 1)}"
    return f"({s})" if p < ctx or (p == ctx and isinstance(a, Implies)) else s


def _star_operand(a: Assertion, ctx: int) -> str:
    # a bracketed pure conjunct cannot be read as a factor of a product
    if isinstance(a, Pure) and isinstance(a.expr, Binop):
        return f"({show_expr(a.expr)})"
    return show_assertion(a, ctx)


# ---------------------------------------------------------------- state spaces

def perm_grid(denoms: Iterable[int]) -> tuple:
    return tuple(sorted({Fraction(k, d) for d in denoms for k in range(d + 1)}))


class StateSpace:
    """A finite universe of well-typed states.

    ``var_types`` and ``field_types`` fix the shape; ``int_range``,
    ``refs`` and ``perm_denoms`` fix the finite value domains.
    """

    def __init__(self, var_types: Mapping[str, Type], field_types: Mapping[str, Type] | None = None,
                 int_range: tuple = (0, 2), refs: int = 2, perm_denoms: Sequence[int] = (1, 2, 4)):
        self.var_types = dict(var_types)
        self.field_types = dict(field_types) if field_types is not None else {"v": Type.INT}
        self.int_range = tuple(int_range)
        self.refs = refs
        self.perm_denoms = tuple(perm_denoms)
        self.perms = perm_grid(self.perm_denoms)
        self.positive_perms = tuple(p for p in self.perms if p > 0)
        self.ref_values = tuple(Ref(i) for i in range(refs + 1))
        self.locations = tuple(HeapLoc(Ref(i), f) for i in range(1, refs + 1)
                               for f in sorted(self.field_types))
        self._stores = None
        self._heaps = None
        self._sums = {}

    def __repr__(self):
        return (f"StateSpace(vars={self.var_types}, ints={self.int_range}, refs={self.refs}, "
                f"denoms={self.perm_denoms})")

    def domain(self, t: Type) -> tuple:
        if t is Type.INT:
            lo, hi = self.int_range
            return tuple(range(lo, hi + 1))
        if t is Type.BOOL:
            return (False, True)
        if t is Type.REF:
            return self.ref_values
        return self.perms

    def var_domain(self, name: str) -> tuple:
        return self.domain(self.var_types[name])

    def field_domain(self, fld: str) -> tuple:
        return self.domain(self.field_types[fld])

    def contains_value(self, t: Type, v: Value) -> bool:
        if t is Type.INT:
            return isinstance(v, int) and not isinstance(v, bool) and \
                self.int_range[0] <= v <= self.int_range[1]
        if t is Type.PERM:
            return v in self.perms
        return v in self.domain(t)

    def stores(self) -> list:
        if self._stores is None:
            names = sorted(self.var_types)
            doms = [self.var_domain(n) for n in names]
            self._stores = [dict(zip(names, vals)) for vals in itertools.product(*doms)]
        return self._stores

    def heaps(self) -> list:
        """All ``(heap, masks)`` pairs: each heap with every mask over it."""
        if self._heaps is None:
            per_loc = []
            for loc in self.locations:
                per_loc.append([None] + list(self.field_domain(loc.field)))
            out = []
            for vals in itertools.product(*per_loc):
                heap = {loc: v for loc, v in zip(self.locations, vals) if v is not None}
                locs = list(heap)
                masks = []
                for ps in itertools.product(self.perms, repeat=len(locs)):
                    masks.append({l: p for l, p in zip(locs, ps) if p})
                out.append((heap, masks))
            self._heaps = out
        return self._heaps

    def states_for_store(self, store: Mapping) -> Iterable[IdfState]:
        for heap, masks in self.heaps():
            for m in masks:
                yield IdfState._raw(store, heap, m)

    def all_states(self) -> Iterable[IdfState]:
        for s in self.stores():
            yield from self.states_for_store(s)

    def stable_states(self) -> Iterable[IdfState]:
        for s in self.stores():
            for heap, masks in self.heaps():
                for m in masks:
                    if len(m) == len(heap):
                        yield IdfState._raw(s, heap, m)

    def junk_extensions(self, w: IdfState) -> Iterable[IdfState]:
        """Every state whose stabilization is the stable state ``w``."""
        free = [l for l in self.locations if l not in w.mask_map]
        opts = [[None] + list(self.field_domain(l.field)) for l in free]
        for vals in itertools.product(*opts):
            heap = dict(w.heap_map)
            for l, v in zip(free, vals):
                if v is not None:
                    heap[l] = v
            yield IdfState._raw(w.store_map, heap, w.mask_map)

    def junk_count(self, w: IdfState) -> int:
        n = 1
        for l in self.locations:
            if l not in w.mask_map:
                n *= len(self.field_domain(l.field)) + 1
        return n

    def wild_sums(self, k: int) -> frozenset:
        """Amounts expressible as a sum of ``k`` positive grid amounts."""
        if k not in self._sums:
            cur = {ZERO}
            for _ in range(k):
                cur = {a + p for a in cur for p in self.positive_perms if a + p <= ONE}
            self._sums[k] = frozenset(cur)
        return self._sums[k]


# ---------------------------------------------------------------- footprints

_Form = tuple  # (exact: dict loc -> Fraction, wild: dict loc -> int)
_NO_FORMS: list = []


def footprints(a: Assertion, store: Mapping, heap: Mapping) -> Optional[list]:
    """Footprint forms of ``a`` for a fixed store and heap, or ``None`` if
    some needed sub-expression is undefined."""
    if isinstance(a, Pure):
        v = evaluate(a.expr, store, heap)
        if v is None:
            return None
        return [({}, {})] if v else _NO_FORMS
    if isinstance(a, Acc):
        r = evaluate(a.recv, store, heap)
        if r is None:
            return None
        loc = HeapLoc(r, a.field) if isinstance(r, Ref) and not r.is_null else None
        if a.perm is None:
            return [({}, {loc: 1})] if loc is not None else _NO_FORMS
        p = evaluate(a.perm, store, heap)
        if p is None:
            return None
        if loc is None or p < 0 or p > 1:
            return _NO_FORMS
        return [({loc: Fraction(p)} if p else {}, {})]
    if isinstance(a, Star):
        fa = footprints(a.left, store, heap)
        if fa is None:
            return None
        fb = footprints(a.right, store, heap)
        if fb is None:
            return None
        out = []
        for ea, wa in fa:
            for eb, wb in fb:
                e = dict(ea)
                ok = True
                for l, p in eb.items():
                    s = e.get(l, ZERO) + p
                    if s > ONE:
                        ok = False
                        break
                    e[l] = s
                if not ok:
                    continue
                w = dict(wa)
                for l, k in wb.items():
                    w[l] = w.get(l, 0) + k
                out.append((e, w))
        return out
    if isinstance(a, Implies):
        c = evaluate(a.cond, store, heap)
        if c is None:
            return None
        return footprints(a.body, store, heap) if c else [({}, {})]
    if isinstance(a, CondA):
        c = evaluate(a.cond, store, heap)
        if c is None:
            return None
        return footprints(a.then if c else a.orelse, store, heap)
    if isinstance(a, Or):
        fa = footprints(a.left, store, heap)
        fb = footprints(a.right, store, heap)
        if fa is None or fb is None:
            return None
        return fa + fb
    raise TypeError(a)


def _matches(mask: Mapping, form: _Form, sp: Optional[StateSpace]) -> bool:
    exact, wild = form
    for l in set(mask) | set(exact) | set(wild):
        r = mask.get(l, ZERO) - exact.get(l, ZERO)
        k = wild.get(l, 0)
        if k == 0:
            if r != 0:
                return False
        elif sp is None:
            if r <= 0:
                return False
        elif r not in sp.wild_sums(k):
            return False
    return True


def sat(w: IdfState, a: Assertion, sp: Optional[StateSpace] = None) -> Optional[bool]:
    """Three-valued satisfaction.

    With ``sp`` given, wildcard amounts range over that space's positive
    permission grid; otherwise over all positive rationals.
    """
    forms = footprints(a, w.store_map, w.heap_map)
    if forms is None:
        return None
    m = w.mask_map
    return any(_matches(m, f, sp) for f in forms)


# Smallest share of the available permission offered when a wildcard is
# exhaled.  Keeping less can never hurt later statements, so this choice
# stands in for "an arbitrarily small positive amount".
TINY_SHARE = Fraction(1, 2 ** 20)


def wildcard_amounts(avail: Fraction, sp: Optional[StateSpace]) -> list:
    amounts = {avail, avail / 2, avail * TINY_SHARE}
    if sp is not None:
        amounts.update(p for p in sp.positive_perms if p <= avail)
    return sorted(amounts)


def removable_masks(w: IdfState, a: Assertion, sp: Optional[StateSpace] = None) -> list:
    """Masks ``m_A`` such that ``(store, heap, m_A)`` satisfies ``a`` and
    ``m_A`` fits into ``w``'s mask.  ``None`` entries never occur; an
    undefined assertion yields the empty list."""
    forms = footprints(a, w.store_map, w.heap_map)
    if not forms:
        return []
    mask = w.mask_map
    out = []
    seen = set()
    for exact, wild in forms:
        if any(p > mask.get(l, ZERO) for l, p in exact.items()):
            continue
        choices = []
        ok = True
        for l in sorted(wild):
            avail = mask.get(l, ZERO) - exact.get(l, ZERO)
            if avail <= 0:
                ok = False
                break
            choices.append([(l, q) for q in wildcard_amounts(avail, sp)])
        if not ok:
            continue
        for pick in itertools.product(*choices):
            m = dict(exact)
            for l, q in pick:
                m[l] = m.get(l, ZERO) + q
            key = tuple(sorted(m.items()))
            if key not in seen:
                seen.add(key)
                out.append(m)
    return out


def remainders(w: IdfState, a: Assertion, sp: Optional[StateSpace] = None) -> list:
    """All ``w'`` (keeping ``w``'s whole heap) with ``w = w' ⊕ w_A`` for
    some ``w_A`` satisfying ``a``.  Stabilize the result to obtain the
    stable remainders used by exhale."""
    out = []
    mask = w.mask_map
    for m in removable_masks(w, a, sp):
        rest = dict(mask)
        for l, q in m.items():
            r = rest[l] - q
            if r:
                rest[l] = r
            else:
                del rest[l]
        out.append(IdfState._raw(w.store_map, w.heap_map, rest))
    return out


# ---------------------------------------------------------------- denotations

class Denotation:
    """``denote(a)`` over a space, indexed by store for fast lookups."""

    def __init__(self, a: Assertion, sp: StateSpace):
        self.assertion = a
        self.sp = sp
        self.by_store = {}
        for s in sp.stores():
            key = tuple(sorted(s.items()))
            found = []
            for heap, masks in sp.heaps():
                forms = footprints(a, s, heap)
                if not forms:
                    continue
                for m in masks:
                    if any(_matches(m, f, sp) for f in forms):
                        found.append(IdfState._raw(s, heap, m))
            self.by_store[key] = found
        self.states = frozenset(x for xs in self.by_store.values() for x in xs)

    def for_store(self, store_key: tuple) -> list:
        return self.by_store.get(store_key, [])


_DENOTE_CACHE: dict = {}


def denotation(a: Assertion, sp: StateSpace) -> Denotation:
    key = (a, id(sp))
    d = _DENOTE_CACHE.get(key)
    if d is None or d.sp is not sp:
        if len(_DENOTE_CACHE) > 4096:
            _DENOTE_CACHE.clear()
        d = Denotation(a, sp)
        _DENOTE_CACHE[key] = d
    return d


def denote(a: Assertion, sp: StateSpace) -> frozenset:
    return denotation(a, sp).states


def is_self_framing(P, sp: StateSpace) -> bool:
    """``ω ∈ P ⇔ stabilize(ω) ∈ P`` for every state of the universe."""
    return self_framing_witness(P, sp) is None


def self_framing_witness(P, sp: StateSpace) -> Optional[IdfState]:
    """A state showing that ``P`` is not self-framing, or ``None``."""
    P = P if isinstance(P, (set, frozenset)) else set(P)
    counts = {}
    for w in P:
        s = stabilize(w)
        if s is not w and s not in P:
            return w
        if _junk_in_domain(w, sp):
            counts[s] = counts.get(s, 0) + 1
    for s, n in counts.items():
        if n != sp.junk_count(s):
            for x in sp.junk_extensions(s):
                if x not in P:
                    return x
    return None


def _junk_in_domain(w: IdfState, sp: StateSpace) -> bool:
    mask = w.mask_map
    for l, v in w.heap_map.items():
        if l not in mask and not sp.contains_value(sp.field_types[l.field], v):
            return False
    return True


def sep_conj(P, Q) -> frozenset:
    """``{p ⊕ q | p ∈ P, q ∈ Q, defined}``."""
    by_store = {}
    for q in Q:
        by_store.setdefault(q.store, []).append(q)
    out = set()
    for p in P:
        for q in by_store.get(p.store, ()):
            c = combine(p, q)
            if c is not None:
                out.add(c)
    return frozenset(out)


def stabilize_closure(states: Iterable[IdfState], sp: StateSpace) -> frozenset:
    """The least self-framing set containing the stabilizations of ``states``."""
    out = set()
    for w in {stabilize(x) for x in states}:
        out.update(sp.junk_extensions(w))
    return frozenset(out)


def state_frames_assertion(w: IdfState, a: Assertion, sp: StateSpace) -> bool:
    """``ω frames A``: ``{ω} * denote(A)`` is self-framing."""
    cands = denotation(a, sp).for_store(w.store)
    return is_self_framing(sep_conj((w,), cands), sp)


def state_frames(w: IdfState, P, sp: StateSpace) -> bool:
    return is_self_framing(sep_conj((w,), P), sp)


def assertion_frames(B, P, sp: StateSpace) -> bool:
    """``B`` frames ``P``: every stable member of ``B`` frames ``P``."""
    return all(state_frames(w, P, sp) for w in B if is_stable(w))


def set_frames_assertion(B, a: Assertion, sp: StateSpace) -> Optional[IdfState]:
    """First stable state of ``B`` that does not frame ``a``, else ``None``."""
    for w in B:
        if is_stable(w) and not state_frames_assertion(w, a, sp):
            return w
    return None


def expr_framed_by(P, e: Expr) -> bool:
    return all(evaluate(e, w.store_map, w.heap_map) is not None for w in P)


def entails(P, Q) -> bool:
    return all(w in Q for w in P)
