"""Small-step interleaving interpreter with abort and race detection."""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional

from ..algebra import HeapLoc, IdfState
from ..assertions import Assertion, remainders
from ..expr import Binop, Cond, Expr, FieldRead, Unop, evaluate
from ..values import Ref, Type
from .lang import (FIELD, PAlloc, PAssert, PAssign, PFree, PIf, PMethod, PPar, PSeq, PSkip,
                   PStmt, PStore, PWhile, Branch)

ABORT = "abort"
RACE = "race"


@dataclass(frozen=True)
class ParState:
    store: tuple  # sorted (name, value) pairs
    heap: tuple   # sorted (address, value) pairs

    @staticmethod
    def make(store: dict, heap: dict) -> "ParState":
        return ParState(tuple(sorted(store.items())), tuple(sorted(heap.items())))

    @property
    def store_map(self) -> dict:
        return dict(self.store)

    @property
    def heap_map(self) -> dict:
        return dict(self.heap)

    def loc_map(self) -> dict:
        return {HeapLoc(Ref(a), FIELD): v for a, v in self.heap}

    def __str__(self) -> str:
        st = ", ".join(f"{k}={v}" for k, v in self.store)
        hp = ", ".join(f"#{a}.v={v}" for a, v in self.heap)
        return f"{{{st} | {hp}}}"


def _eval(e: Expr, s: ParState) -> Optional[object]:
    return evaluate(e, s.store_map, s.loc_map())


def _reads(e: Expr, s: ParState) -> set:
    """Heap locations ``e`` reads, as ``(address, False)`` access pairs."""
    out = set()
    stack = [e]
    while stack:
        x = stack.pop()
        if isinstance(x, FieldRead):
            r = _eval(x.recv, s)
            if isinstance(r, Ref) and not r.is_null:
                out.add((r.ident, False))
            stack.append(x.recv)
        elif isinstance(x, Unop):
            stack.append(x.arg)
        elif isinstance(x, Binop):
            stack += [x.left, x.right]
        elif isinstance(x, Cond):
            stack += [x.cond, x.then, x.orelse]
    return out


def _addr(r) -> Optional[int]:
    return r.ident if isinstance(r, Ref) and not r.is_null else None


class Machine:
    """One step relation over a bounded address universe."""

    def __init__(self, max_addr: int = 4):
        self.max_addr = max_addr
        self.alloc_exhausted = False

    def steps(self, c: PStmt, s: ParState, races: list) -> Iterator[tuple]:
        """``(accesses, outcome)`` per atomic step; ``outcome`` is a
        configuration or ``ABORT``.  Races found on the way go to ``races``."""
        if isinstance(c, PSkip):
            return
        if isinstance(c, PSeq):
            if isinstance(c.first, PSkip):
                yield frozenset(), (c.second, s)
                return
            for acc, out in self.steps(c.first, s, races):
                yield acc, out if out == ABORT else (PSeq(out[0], c.second), out[1])
            return
        if isinstance(c, PWhile):
            unfolded = PIf(c.cond, PSeq(c.body, c), PSkip(), c.pos)
            yield frozenset(), (unfolded, s)
            return
        if isinstance(c, PIf):
            b = _eval(c.cond, s)
            acc = frozenset(_reads(c.cond, s))
            yield acc, ABORT if not isinstance(b, bool) else ((c.then if b else c.orelse), s)
            return
        if isinstance(c, PAssert):
            b = _eval(c.cond, s)
            yield frozenset(_reads(c.cond, s)), (PSkip(), s) if b is True else ABORT
            return
        if isinstance(c, PAssign):
            v = _eval(c.expr, s)
            acc = frozenset(_reads(c.expr, s))
            if v is None:
                yield acc, ABORT
            else:
                st = s.store_map
                st[c.var] = v
                yield acc, (PSkip(), ParState.make(st, s.heap_map))
            return
        if isinstance(c, PStore):
            a = _addr(s.store_map.get(c.recv))
            v = _eval(c.expr, s)
            acc = frozenset(_reads(c.expr, s) | ({(a, True)} if a is not None else set()))
            heap = s.heap_map
            if a is None or a not in heap or v is None:
                yield acc, ABORT
            else:
                heap[a] = v
                yield acc, (PSkip(), ParState.make(s.store_map, heap))
            return
        if isinstance(c, PFree):
            a = _addr(s.store_map.get(c.var))
            heap = s.heap_map
            if a is None or a not in heap:
                yield frozenset(), ABORT
            else:
                del heap[a]
                yield frozenset({(a, True)}), (PSkip(), ParState.make(s.store_map, heap))
            return
        if isinstance(c, PAlloc):
            v = _eval(c.expr, s)
            acc = frozenset(_reads(c.expr, s))
            if v is None:
                yield acc, ABORT
                return
            heap = s.heap_map
            free = [a for a in range(1, self.max_addr + 1) if a not in heap]
            if not free:
                self.alloc_exhausted = True
            for a in free:
                st = s.store_map
                st[c.var] = Ref(a)
                yield acc, (PSkip(), ParState.make(st, {**heap, a: v}))
            return
        if isinstance(c, PPar):
            l, r = c.left.body, c.right.body
            if isinstance(l, PSkip) and isinstance(r, PSkip):
                yield frozenset(), (PSkip(), s)
                return
            ls = list(self.steps(l, s, races))
            rs = list(self.steps(r, s, races))
            if ls and rs and _conflict(ls, rs):
                races.append((c, s))
            for acc, out in ls:
                yield acc, out if out == ABORT else (
                    PPar(Branch(c.left.pre, c.left.post, out[0]), c.right, c.pos), out[1])
            for acc, out in rs:
                yield acc, out if out == ABORT else (
                    PPar(c.left, Branch(c.right.pre, c.right.post, out[0]), c.pos), out[1])
            return
        raise TypeError(c)


def _conflict(ls: list, rs: list) -> bool:
    la = set().union(*(a for a, _ in ls))
    ra = set().union(*(a for a, _ in rs))
    for loc, w in la:
        if (loc, True) in ra or (w and (loc, False) in ra):
            return True
    return False


def interp_step(c: PStmt, s: ParState, max_addr: int = 4) -> set:
    """Successor configurations of ``⟨c, s⟩``, plus ``ABORT`` and ``RACE``
    markers when they apply."""
    races = []
    m = Machine(max_addr)
    out = {o for _, o in m.steps(c, s, races)}
    if races:
        out.add(RACE)
    return out


@dataclass
class ExploreReport:
    abort: bool = False
    race: bool = False
    terminals: set = field(default_factory=set)
    states: int = 0
    truncated: bool = False  # frontier cut by the depth or state bound
    alloc_exhausted: bool = False
    abort_example: Optional[tuple] = None
    race_example: Optional[tuple] = None

    @property
    def bounded(self) -> bool:
        return self.truncated or self.alloc_exhausted


def explore(c: PStmt, s0: ParState, max_depth: int = 200, max_states: int = 10 ** 5,
            max_addr: int = 4) -> ExploreReport:
    """Breadth-first closure of the step relation from ``⟨c, s0⟩``."""
    rep = ExploreReport()
    m = Machine(max_addr)
    start = (c, s0)
    seen = {start}
    frontier = deque([(start, 0)])
    while frontier:
        (cc, s), depth = frontier.popleft()
        rep.states += 1
        if isinstance(cc, PSkip):
            rep.terminals.add(s)
            continue
        if depth >= max_depth:
            rep.truncated = True
            continue
        races = []
        for _, out in m.steps(cc, s, races):
            if out == ABORT:
                rep.abort = True
                rep.abort_example = rep.abort_example or (cc, s)
                continue
            if out not in seen:
                if len(seen) >= max_states:
                    rep.truncated = True
                    continue
                seen.add(out)
                frontier.append((out, depth + 1))
        if races:
            rep.race = True
            rep.race_example = rep.race_example or races[0]
    rep.alloc_exhausted = m.alloc_exhausted
    return rep


# ------------------------------------------------------------ assertions on plain states

def as_idf(s: ParState) -> IdfState:
    """Full ownership of every allocated location."""
    heap = s.loc_map()
    return IdfState(s.store_map, heap, {l: 1 for l in heap})


def satisfies(s: ParState, a: Assertion) -> bool:
    """Some part of the fully owned state satisfies ``a``."""
    return bool(remainders(as_idf(s), a))


def initial_states(m: PMethod, int_range=(0, 2), refs: int = 2) -> Iterable[ParState]:
    """Every store over the declared variables and every heap over
    addresses ``1..refs`` that satisfies the method's precondition."""
    lo, hi = int_range
    ints = list(range(lo, hi + 1))
    names = sorted(m.vars)
    doms = []
    for n in names:
        t = m.vars[n]
        doms.append(ints if t is Type.INT else [False, True] if t is Type.BOOL
                    else [Ref(i) for i in range(refs + 1)])
    heaps = []
    for vals in itertools.product([None] + ints, repeat=refs):
        heaps.append({a + 1: v for a, v in enumerate(vals) if v is not None})
    for vals in itertools.product(*doms):
        store = dict(zip(names, vals))
        for h in heaps:
            s = ParState.make(store, h)
            if satisfies(s, m.requires):
                yield s
