"""Values and value types shared by every layer.

Ints are Python ints, booleans are Python bools, permissions are
``Fraction`` and references are :class:`Ref`.  Because ``bool`` is a
subclass of ``int`` in Python, :func:`type_of` checks booleans first.
"""

from __future__ import annotations

import enum
from fractions import Fraction
from typing import NamedTuple, Union


class Ref(NamedTuple):
    """A reference identifier. ``Ref(0)`` is null."""

    ident: int

    @property
    def is_null(self) -> bool:
        return self.ident == 0

    def __str__(self) -> str:
        return "null" if self.ident == 0 else f"r{self.ident}"

    __repr__ = __str__


NULL = Ref(0)

Value = Union[int, bool, Ref, Fraction]


class Type(enum.Enum):
    INT = "Int"
    BOOL = "Bool"
    REF = "Ref"
    PERM = "Perm"

    def __str__(self) -> str:
        return self.value


NUMERIC = (Type.INT, Type.PERM)


def type_of(v: Value) -> Type:
    if isinstance(v, bool):
        return Type.BOOL
    if isinstance(v, int):
        return Type.INT
    if isinstance(v, Fraction):
        return Type.PERM
    if isinstance(v, Ref):
        return Type.REF
    raise TypeError(f"not a value: {v!r}")


def value_key(v: Value) -> tuple:
    """Sort key that keeps values of different tags apart."""
    t = type_of(v)
    if t is Type.REF:
        return (t.value, v.ident)
    if t is Type.BOOL:
        return (t.value, int(v))
    return (t.value, v)


def format_value(v: Value) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, Fraction):
        if v.denominator == 1:
            return str(v.numerator)
        return f"{v.numerator}/{v.denominator}"
    return str(v)


def parse_type(name: str) -> Type:
    for t in Type:
        if t.value == name:
            return t
    raise ValueError(f"unknown type {name!r}")
