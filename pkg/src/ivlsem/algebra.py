"""Concrete states of the implicit-dynamic-frames algebra.

A state is a store, a partial heap and a permission mask.  Locations with
a positive permission must carry a value; a state whose heap holds values
*only* at such locations is called stable.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Mapping, NamedTuple, Optional

from .values import Ref, Value, format_value

ZERO = Fraction(0)
ONE = Fraction(1)


class HeapLoc(NamedTuple):
    ref: Ref
    field: str

    def __str__(self) -> str:
        return f"{self.ref}.{self.field}"


class InvalidState(ValueError):
    pass


def _perm(p) -> Fraction:
    q = p if isinstance(p, Fraction) else Fraction(p)
    if q < 0 or q > 1:
        raise InvalidState(f"permission {q} outside [0, 1]")
    return q


class IdfState:
    """Immutable (store, heap, mask) triple with structural equality.

    Internally the three maps are kept as sorted tuples so that equality
    and hashing are cheap.  The mask omits zero entries.
    """

    __slots__ = ("_hash", "_hd", "_md", "_sd", "_sorted")

    def __init__(self, store: Mapping[str, Value] | Iterable = (),
                 heap: Mapping[HeapLoc, Value] | Iterable = (),
                 mask: Mapping[HeapLoc, Fraction] | Iterable = ()):
        sd = dict(store)
        hd = {HeapLoc(*k): v for k, v in dict(heap).items()}
        md = {}
        for k, p in dict(mask).items():
            q = _perm(p)
            if q:
                md[HeapLoc(*k)] = q
        for loc in md:
            if loc.ref.is_null:
                raise InvalidState(f"permission at null location {loc}")
            if loc not in hd:
                raise InvalidState(f"positive permission at {loc} without a heap value")
        self._init(sd, hd, md)

    def _init(self, sd, hd, md):
        self._sd, self._hd, self._md = sd, hd, md
        self._hash = None
        self._sorted = None

    @classmethod
    def _raw(cls, sd, hd, md) -> "IdfState":
        # trusted constructor: caller guarantees the invariants
        st = cls.__new__(cls)
        st._init(sd, hd, md)
        return st

    # sorted tuple views, built on first use
    def _tuples(self) -> tuple:
        if self._sorted is None:
            self._sorted = (tuple(sorted(self._sd.items())), tuple(sorted(self._hd.items())),
                            tuple(sorted(self._md.items())))
        return self._sorted

    @property
    def store(self) -> tuple:
        return self._tuples()[0]

    @property
    def heap(self) -> tuple:
        return self._tuples()[1]

    @property
    def mask(self) -> tuple:
        return self._tuples()[2]

    @property
    def store_map(self) -> dict:
        return self._sd

    @property
    def heap_map(self) -> dict:
        return self._hd

    @property
    def mask_map(self) -> dict:
        return self._md

    def perm(self, loc: HeapLoc) -> Fraction:
        return self._md.get(loc, ZERO)

    def __eq__(self, other) -> bool:
        if not isinstance(other, IdfState):
            return NotImplemented
        if self is other:
            return True
        if (self._hash is not None and other._hash is not None
                and self._hash != other._hash):
            return False
        return self._md == other._md and self._hd == other._hd and self._sd == other._sd

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(self._tuples())
        return self._hash

    def __repr__(self) -> str:
        s = ", ".join(f"{k}={format_value(v)}" for k, v in self.store)
        h = ", ".join(
            f"{loc}={format_value(v)}@{format_value(self.perm(loc))}" for loc, v in self.heap)
        return f"<{s} | {h}>"

    # functional updates
    def with_var(self, name: str, value: Value) -> "IdfState":
        sd = dict(self._sd)
        sd[name] = value
        return IdfState._raw(sd, self._hd, self._md)

    def with_heap_value(self, loc: HeapLoc, value: Value) -> "IdfState":
        hd = dict(self._hd)
        hd[loc] = value
        return IdfState._raw(self._sd, hd, self._md)


def combine(a: IdfState, b: IdfState) -> Optional[IdfState]:
    """The partial addition ``a ⊕ b``; ``None`` when undefined."""
    if a.store_map != b.store_map:
        return None
    ha, hb = a.heap_map, b.heap_map
    if len(hb) > len(ha):
        ha, hb = hb, ha
    heap = dict(ha)
    for loc, v in hb.items():
        w = heap.get(loc, heap)
        if w is heap:
            heap[loc] = v
        elif w != v:
            return None
    mask = dict(a.mask_map)
    for loc, p in b.mask_map.items():
        s = mask.get(loc, ZERO) + p
        if s > ONE:
            return None
        mask[loc] = s
    return IdfState._raw(a.store_map, heap, mask)


def core(a: IdfState) -> IdfState:
    return IdfState._raw(a.store_map, a.heap_map, {})


def stabilize(a: IdfState) -> IdfState:
    md = a.mask_map
    if len(md) == len(a.heap_map):
        return a
    return IdfState._raw(a.store_map, {l: v for l, v in a.heap_map.items() if l in md}, md)


def is_stable(a: IdfState) -> bool:
    # the invariant already gives mask-support ⊆ heap domain
    return len(a.heap_map) == len(a.mask_map)


def unit(store: Mapping[str, Value] | IdfState) -> IdfState:
    """The neutral element for states over the given store."""
    sd = store.store_map if isinstance(store, IdfState) else dict(store)
    return IdfState._raw(sd, {}, {})


def subtract(a: IdfState, b: IdfState) -> Optional[IdfState]:
    """The largest remainder ``r`` with ``a = b ⊕ r``, if any.

    The remainder keeps all of ``a``'s heap, which is the most informative
    choice; every other remainder is smaller in the heap component.
    """
    if a.store_map != b.store_map:
        return None
    ha = a.heap_map
    for loc, v in b.heap_map.items():
        if ha.get(loc, ha) != v:
            return None
    mask = dict(a.mask_map)
    for loc, p in b.mask_map.items():
        r = mask.get(loc, ZERO) - p
        if r < 0:
            return None
        if r:
            mask[loc] = r
        else:
            del mask[loc]
    return IdfState._raw(a.store_map, ha, mask)


def greater_eq(a: IdfState, b: IdfState) -> bool:
    """``a ⪰ b``: some ``r`` satisfies ``a = b ⊕ r``."""
    return subtract(a, b) is not None
