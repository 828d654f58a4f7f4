"""A small, incomplete, sound refutation procedure.

The path condition is put in negation normal form and split on
disjunctions (up to a leaf budget).  Each branch is a conjunction of
literals checked by three cooperating theories:

* boolean atoms, by polarity;
* references, by union-find with disequalities and distinct literals;
* numbers, by Fourier-Motzkin elimination over the rationals, after
  tightening constraints whose atoms are all integers.

Products of non-constant terms are treated as uninterpreted atoms, so the
procedure stays sound on nonlinear goals but may fail to prove them.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Optional

from ..terms import SymBinop, SymLit, SymUnop, SymVar, Term
from ..values import NUMERIC, Type
from . import Prover, Verdict, _as_list


class _GiveUp(Exception):
    pass


_TRUE = ("const", True)
_FALSE = ("const", False)


class BuiltinProver(Prover):
    def __init__(self, max_leaves: int = 4096, max_constraints: int = 600):
        self.max_leaves = max_leaves
        self.max_constraints = max_constraints
        self.queries = 0
        self._cache = {}

    def is_unsat(self, pc) -> Verdict:
        items = tuple(_as_list(pc))
        hit = self._cache.get(items)
        if hit is not None:
            return hit
        self.queries += 1
        try:
            self._leaves = 0
            todo = [_nnf(t, True) for t in items]
            res = Verdict.VALID if self._refute([], todo) else Verdict.UNKNOWN
        except _GiveUp:
            res = Verdict.UNKNOWN
        if len(self._cache) > 50000:
            self._cache.clear()
        self._cache[items] = res
        return res

    # -- case splitting

    def _refute(self, lits: list, todo: list) -> bool:
        lits = list(lits)
        ors = []
        stack = list(todo)
        while stack:
            f = stack.pop()
            tag = f[0]
            if tag == "const":
                if not f[1]:
                    return True
            elif tag == "and":
                stack.extend(f[1])
            elif tag == "or":
                ors.append(f)
            else:
                lits.append(f)
        if _theory_unsat(lits, self.max_constraints):
            return True
        if not ors:
            return False
        first, rest = ors[0], ors[1:]
        for d in first[1]:
            self._leaves += 1
            if self._leaves > self.max_leaves:
                raise _GiveUp
            if not self._refute(lits, rest + [d]):
                return False
        return True


# ------------------------------------------------------------ normal form

def _nnf(t: Term, pos: bool):
    tt = type(t)
    if tt is SymLit:
        return _TRUE if bool(t.value) == pos else _FALSE
    if tt is SymVar:
        return ("bool", t, pos)
    if tt is SymUnop:
        if t.op == "!":
            return _nnf(t.arg, not pos)
        return ("bool", t, pos)
    op = t.op
    if op == "&&" or op == "||" or op == "==>":
        a = _nnf(t.left, not pos if op == "==>" else pos)
        b = _nnf(t.right, pos)
        conj = (op == "&&") == pos
        if op == "==>":
            conj = not pos
        return ("and", [a, b]) if conj else ("or", [a, b])
    if op in ("==", "!="):
        eq = (op == "==") == pos
        lt, rt = t.left.ty, t.right.ty
        if lt is Type.BOOL:
            a, b = t.left, t.right
            if eq:
                return ("or", [("and", [_nnf(a, True), _nnf(b, True)]),
                               ("and", [_nnf(a, False), _nnf(b, False)])])
            return ("or", [("and", [_nnf(a, True), _nnf(b, False)]),
                           ("and", [_nnf(a, False), _nnf(b, True)])])
        if lt in NUMERIC and rt in NUMERIC:
            d = _sub(_linear(t.left), _linear(t.right))
            if eq:
                return ("lin", d, "eq")
            return ("or", [("lin", d, "lt"), ("lin", _scale(d, -1), "lt")])
        return ("ref", t.left, t.right, eq)
    if op in ("<", "<=", ">", ">="):
        a, b = _linear(t.left), _linear(t.right)
        if op in (">", ">="):
            a, b = b, a
            op = "<" if op == ">" else "<="
        # a op b, i.e. a - b op 0
        d = _sub(a, b)
        if pos:
            return ("lin", d, "lt" if op == "<" else "le")
        # not (a < b) is b - a <= 0 ; not (a <= b) is b - a < 0
        return ("lin", _scale(d, -1), "le" if op == "<" else "lt")
    return ("bool", t, pos)


# A linear form is (coeffs: dict atom -> Fraction, const: Fraction).

def _linear(t: Term):
    tt = type(t)
    if tt is SymLit:
        return {}, Fraction(t.value)
    if tt is SymVar:
        return {t: Fraction(1)}, Fraction(0)
    if tt is SymUnop and t.op == "-":
        return _scale(_linear(t.arg), -1)
    if tt is SymBinop:
        op = t.op
        if op == "+":
            return _add(_linear(t.left), _linear(t.right))
        if op == "-":
            return _sub(_linear(t.left), _linear(t.right))
        if op == "*":
            a, b = _linear(t.left), _linear(t.right)
            if not a[0]:
                return _scale(b, a[1])
            if not b[0]:
                return _scale(a, b[1])
        if op == "/":
            b = _linear(t.right)
            if not b[0] and b[1] != 0:
                return _scale(_linear(t.left), 1 / b[1])
    return {_canonical_atom(t): Fraction(1)}, Fraction(0)


def _canonical_atom(t: Term) -> Term:
    # commutative products are ordered so that x*y and y*x coincide
    if type(t) is SymBinop and t.op == "*":
        a, b = _canonical_atom(t.left), _canonical_atom(t.right)
        if repr(b) < repr(a):
            a, b = b, a
        return SymBinop("*", a, b)
    return t


def _add(a, b):
    c = dict(a[0])
    for k, v in b[0].items():
        s = c.get(k, 0) + v
        if s:
            c[k] = s
        else:
            c.pop(k, None)
    return c, a[1] + b[1]


def _scale(a, k):
    k = Fraction(k)
    if k == 0:
        return {}, Fraction(0)
    return {x: v * k for x, v in a[0].items()}, a[1] * k


def _sub(a, b):
    return _add(a, _scale(b, -1))


# ------------------------------------------------------------ theories

def _theory_unsat(lits: list, max_constraints: int) -> bool:
    bools = {}
    parent = {}
    diseqs = []
    numeric = []
    for l in lits:
        tag = l[0]
        if tag == "bool":
            prev = bools.get(l[1])
            if prev is not None and prev != l[2]:
                return True
            bools[l[1]] = l[2]
        elif tag == "ref":
            if l[3]:
                _union(parent, l[1], l[2])
            else:
                diseqs.append((l[1], l[2]))
        else:
            numeric.append((dict(l[1][0]), l[1][1], l[2]))
    if parent or diseqs:
        reps = {}
        for t in list(parent):
            if type(t) is SymLit:
                r = _find(parent, t)
                if reps.setdefault(r, t) != t:
                    return True
        for a, b in diseqs:
            if a == b or _find(parent, a) == _find(parent, b):
                return True
    return _fm_unsat(numeric, max_constraints) if numeric else False


def _find(parent: dict, x):
    parent.setdefault(x, x)
    root = x
    while parent[root] != root:
        root = parent[root]
    while parent[x] != root:
        parent[x], x = root, parent[x]
    return root


def _union(parent: dict, a, b):
    ra, rb = _find(parent, a), _find(parent, b)
    if ra != rb:
        parent[ra] = rb


def _is_int_atom(x: Term) -> bool:
    return x.ty is Type.INT


def _tighten(coeffs: dict, const: Fraction, kind: str):
    """Integer rounding of ``sum + const kind 0``; ``None`` if infeasible."""
    if not coeffs or not all(_is_int_atom(x) for x in coeffs):
        return coeffs, const, kind
    lcm = 1
    for v in coeffs.values():
        lcm = lcm * v.denominator // math.gcd(lcm, v.denominator)
    ints = {x: int(v * lcm) for x, v in coeffs.items()}
    g = 0
    for v in ints.values():
        g = math.gcd(g, abs(v))
    rhs = -const * lcm  # sum(ints) kind rhs
    if kind == "eq":
        if rhs.denominator != 1 or rhs.numerator % g:
            return None
        return {x: Fraction(v, g) for x, v in ints.items()}, -rhs / g, "eq"
    bound = math.floor(rhs) if kind == "le" else math.ceil(rhs) - 1
    return {x: Fraction(v, g) for x, v in ints.items()}, -Fraction(bound // g), "le"


def _fm_unsat(cons: list, max_constraints: int) -> bool:
    work = []
    for c, k, kind in cons:
        t = _tighten(c, k, kind)
        if t is None:
            return True
        work.append(t)
    # eliminate equalities by substitution
    while True:
        eq = next((w for w in work if w[2] == "eq" and w[0]), None)
        if eq is None:
            break
        work.remove(eq)
        coeffs, const, _ = eq
        x = min(coeffs, key=repr)
        a = coeffs[x]
        # x = -(rest + const) / a
        rest = {y: -v / a for y, v in coeffs.items() if y != x}
        rconst = -const / a
        new = []
        for c, k, kind in work:
            if x in c:
                m = c[x]
                c2 = dict(c)
                del c2[x]
                for y, v in rest.items():
                    s = c2.get(y, 0) + m * v
                    if s:
                        c2[y] = s
                    else:
                        c2.pop(y, None)
                new.append((c2, k + m * rconst, kind))
            else:
                new.append((c, k, kind))
        work = new
    for c, k, kind in work:
        if not c and _violated(k, kind):
            return True
    work = [w for w in work if w[0]]
    seen = set()
    while work:
        if len(work) > max_constraints:
            return False
        counts = {}
        for c, _, _ in work:
            for x, v in c.items():
                p, n = counts.get(x, (0, 0))
                counts[x] = (p + 1, n) if v > 0 else (p, n + 1)
        x = min(counts, key=lambda y: (counts[y][0] * counts[y][1] - sum(counts[y]), repr(y)))
        pos = [w for w in work if w[0].get(x, 0) > 0]
        neg = [w for w in work if w[0].get(x, 0) < 0]
        keep = [w for w in work if x not in w[0]]
        for pc, pk, pkind in pos:
            a = pc[x]
            for nc, nk, nkind in neg:
                b = -nc[x]
                c = {}
                for y, v in pc.items():
                    if y != x:
                        c[y] = v * b
                for y, v in nc.items():
                    if y != x:
                        s = c.get(y, 0) + v * a
                        if s:
                            c[y] = s
                        else:
                            c.pop(y, None)
                k = pk * b + nk * a
                kind = "lt" if "lt" in (pkind, nkind) else "le"
                if not c:
                    if _violated(k, kind):
                        return True
                    continue
                key = _normal_key(c, k, kind)
                if key in seen:
                    continue
                seen.add(key)
                keep.append((c, k, kind))
        work = keep
    return False


def _violated(k: Fraction, kind: str) -> bool:
    if kind == "eq":
        return k != 0
    if kind == "lt":
        return k >= 0
    return k > 0


def _normal_key(c: dict, k: Fraction, kind: str):
    m = max(abs(v) for v in c.values())
    return (frozenset((x, v / m) for x, v in c.items()), k / m, kind)
