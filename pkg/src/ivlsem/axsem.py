"""Derivations of the axiomatic semantics over bounded semantic assertions.

Assertions here are plain sets of states.  A derivation node records the
rule applied to one statement together with its pre- and post-set; the
checker re-validates every side condition by enumeration, and the builder
constructs derivations with canonical choices (the post of the left half
of a sequence becomes the intermediate set of the right half).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .algebra import HeapLoc, IdfState, combine, is_stable, stabilize
from .assertions import (Assertion, StateSpace, denotation, remainders, self_framing_witness,
                         stabilize_closure, state_frames_assertion)
from .coreivl import (Assign, Exhale, FieldAssign, Havoc, If, Inhale, Seq, Skip, Stmt,
                      TypeContext)
from .expr import evaluate
from .oracle import Oracle, coerce
from .syntax import show_stmt
from .values import Ref


@dataclass(eq=False)
class Derivation:
    rule: str
    stmt: Stmt
    pre: frozenset
    post: frozenset
    children: tuple = ()

    @property
    def intermediate(self) -> Optional[frozenset]:
        """The set ``R`` threaded through a sequence node."""
        return self.children[0].post if self.rule == "seq" else None

    def nodes(self):
        yield self
        for c in self.children:
            yield from c.nodes()


class DerivationError(Exception):
    def __init__(self, path: str, msg: str):
        self.path = path
        super().__init__(f"{path}: {msg}")


def top(sp: StateSpace) -> frozenset:
    """The assertion ``true``: every state of the space."""
    return frozenset(sp.all_states())


def restrict(P, b, truth: bool) -> frozenset:
    return frozenset(w for w in P if evaluate(b, w.store_map, w.heap_map) is truth)


# ------------------------------------------------------------ shared helpers

class _Rules:
    """Side conditions and canonical posts, shared by builder and checker."""

    def __init__(self, ctx: TypeContext, sp: StateSpace):
        self.ctx = ctx
        self.sp = sp
        self._frames = {}

    def self_framing(self, P, path: str, what: str):
        w = self_framing_witness(P, self.sp)
        if w is not None:
            raise DerivationError(path, f"{what} is not self-framing (witness {w!r})")

    def frames(self, w: IdfState, a: Assertion) -> bool:
        key = (a, w)
        r = self._frames.get(key)
        if r is None:
            r = self._frames[key] = state_frames_assertion(w, a, self.sp)
        return r

    def inhale_post(self, P, a: Assertion, path: str) -> frozenset:
        for w in P:
            if is_stable(w) and not self.frames(w, a):
                raise DerivationError(path, f"precondition state {w!r} does not frame the assertion")
        # P * A restricted to stable states; the full product is the
        # closure of these because P is self-framing and frames A
        den = denotation(a, self.sp)
        out = set()
        for w in P:
            if not is_stable(w):
                continue
            for x in den.for_store(w.store):
                c = combine(w, x)
                if c is not None and is_stable(c):
                    out.add(c)
        return stabilize_closure(out, self.sp)

    def entails_star(self, P, Q, a: Assertion, path: str):
        """``P ⊨ Q * A``, witnessed through the candidate splits of each state."""
        for w in P:
            if not any(r in Q or stabilize(r) in Q and self._junk_ok(r)
                       for r in remainders(w, a, self.sp)):
                raise DerivationError(path, f"state {w!r} has no split into the post and the assertion")

    def _junk_ok(self, r: IdfState) -> bool:
        sp = self.sp
        m = r.mask_map
        return all(l in m or sp.contains_value(sp.field_types[l.field], v)
                   for l, v in r.heap_map.items())

    def framed_expr(self, P, e, path: str):
        for w in P:
            if evaluate(e, w.store_map, w.heap_map) is None:
                raise DerivationError(path, f"expression undefined in {w!r}")

    def havoc_post(self, P, x: str) -> frozenset:
        dom = self.sp.var_domain(x)
        return frozenset(w.with_var(x, v) for w in P for v in dom)

    def assign_post(self, P, x: str, e, path: str) -> frozenset:
        t = self.ctx.vars[x]
        out = set()
        for w in P:
            v = evaluate(e, w.store_map, w.heap_map)
            if v is None:
                raise DerivationError(path, f"expression undefined in {w!r}")
            v = coerce(t, v)
            if not self.sp.contains_value(t, v):
                raise DerivationError(path, f"value {v} outside the type of {x}")
            out.add(w.with_var(x, v))
        return frozenset(out)

    def field_assign_post(self, P, c: FieldAssign, path: str) -> frozenset:
        t = self.ctx.fields[c.field]
        out = set()
        for w in P:
            r = evaluate(c.recv, w.store_map, w.heap_map)
            v = evaluate(c.value, w.store_map, w.heap_map)
            if r is None or v is None:
                raise DerivationError(path, f"expression undefined in {w!r}")
            loc = HeapLoc(r, c.field) if isinstance(r, Ref) and not r.is_null else None
            if loc is None or w.perm(loc) != 1:
                raise DerivationError(path, f"no full permission to {r}.{c.field} in {w!r}")
            v = coerce(t, v)
            if not self.sp.contains_value(t, v):
                raise DerivationError(path, f"value {v} outside the type of field {c.field}")
            out.add(w.with_heap_value(loc, v))
        return frozenset(out)


# ------------------------------------------------------------ builder

class Builder:
    """Builds derivations; exhale posts are chosen with the help of the
    reference semantics so that the remaining statements can succeed."""

    def __init__(self, ctx: TypeContext, sp: StateSpace, oracle: Optional[Oracle] = None):
        self.rules = _Rules(ctx, sp)
        self.sp = sp
        self.oracle = oracle or Oracle(ctx, sp)

    def derive(self, c: Stmt, P, rest: tuple = (), path: str = "root") -> Derivation:
        R = self.rules
        P = frozenset(P)
        if isinstance(c, Seq):
            d1 = self.derive(c.first, P, (c.second,) + rest, path + ".1")
            d2 = self.derive(c.second, d1.post, rest, path + ".2")
            return Derivation("seq", c, P, d2.post, (d1, d2))
        R.self_framing(P, path, "precondition")
        if isinstance(c, Skip):
            return Derivation("skip", c, P, P)
        if isinstance(c, Inhale):
            return Derivation("inhale", c, P, R.inhale_post(P, c.assertion, path))
        if isinstance(c, Exhale):
            return Derivation("exhale", c, P, self._exhale_post(P, c.assertion, rest, path))
        if isinstance(c, Havoc):
            return Derivation("havoc", c, P, R.havoc_post(P, c.var))
        if isinstance(c, Assign):
            R.framed_expr(P, c.expr, path)
            return Derivation("assign", c, P, R.assign_post(P, c.var, c.expr, path))
        if isinstance(c, If):
            R.framed_expr(P, c.cond, path)
            d1 = self.derive(c.then, restrict(P, c.cond, True), rest, path + ".then")
            d2 = self.derive(c.orelse, restrict(P, c.cond, False), rest, path + ".else")
            return Derivation("if", c, P, d1.post | d2.post, (d1, d2))
        if isinstance(c, FieldAssign):
            return Derivation("field_assign", c, P, R.field_assign_post(P, c, path))
        raise TypeError(c)

    def _exhale_post(self, P, a: Assertion, rest: tuple, path: str) -> frozenset:
        chosen = []
        for w in P:
            if not is_stable(w):
                continue
            rems = list(dict.fromkeys(stabilize(r) for r in remainders(w, a, self.sp)))
            if not rems:
                raise DerivationError(path, f"state {w!r} does not hold the exhaled assertion")
            good = [r for r in rems if self.oracle.correct_seq(rest, r)] if rest else rems
            chosen.extend(good or rems)
        return stabilize_closure(chosen, self.sp)


def try_derive(ctx: TypeContext, c: Stmt, P, sp: StateSpace,
               oracle: Optional[Oracle] = None) -> tuple:
    """``(derivation, None)`` or ``(None, error message)``."""
    try:
        return Builder(ctx, sp, oracle).derive(c, P), None
    except DerivationError as e:
        return None, str(e)


def derive(ctx: TypeContext, c: Stmt, P, sp: StateSpace,
           oracle: Optional[Oracle] = None) -> Optional[Derivation]:
    return try_derive(ctx, c, P, sp, oracle)[0]


# ------------------------------------------------------------ checker

def find_derivation_error(ctx: TypeContext, d: Derivation, sp: StateSpace) -> Optional[str]:
    """The first violated side condition, prefixed with the node path."""
    try:
        _check(_Rules(ctx, sp), d, "root")
    except DerivationError as e:
        return str(e)
    return None


def check_derivation(ctx: TypeContext, d: Derivation, sp: StateSpace) -> bool:
    return find_derivation_error(ctx, d, sp) is None


_RULE_OF = {Skip: "skip", Inhale: "inhale", Exhale: "exhale", Havoc: "havoc", Assign: "assign",
            If: "if", Seq: "seq", FieldAssign: "field_assign"}


def _check(R: _Rules, d: Derivation, path: str):
    c, P, Q = d.stmt, d.pre, d.post
    want = _RULE_OF.get(type(c))
    if want != d.rule:
        raise DerivationError(path, f"rule {d.rule} does not apply to {type(c).__name__}")
    if isinstance(c, Seq):
        d1, d2 = d.children
        if d1.stmt != c.first or d2.stmt != c.second:
            raise DerivationError(path, "premises do not match the sequence")
        if d1.pre != P or d2.pre != d1.post or d2.post != Q:
            raise DerivationError(path, "pre, intermediate and post sets do not chain")
        _check(R, d1, path + ".1")
        _check(R, d2, path + ".2")
        return
    R.self_framing(P, path, "precondition")
    if isinstance(c, Skip):
        if P != Q:
            raise DerivationError(path, "skip changes the set")
    elif isinstance(c, Inhale):
        R.self_framing(Q, path, "postcondition")
        # both sides are self-framing, so comparing stable parts suffices
        want_q = R.inhale_post(P, c.assertion, path)
        if _stable_part(Q) != _stable_part(want_q):
            raise DerivationError(path, "post is not the precondition joined with the assertion")
    elif isinstance(c, Exhale):
        R.self_framing(Q, path, "postcondition")
        R.entails_star(P, Q, c.assertion, path)
    elif isinstance(c, Havoc):
        if Q != R.havoc_post(P, c.var):
            raise DerivationError(path, f"post is not the projection over {c.var}")
    elif isinstance(c, Assign):
        R.framed_expr(P, c.expr, path)
        if Q != R.assign_post(P, c.var, c.expr, path):
            raise DerivationError(path, "post does not match the assignment")
    elif isinstance(c, FieldAssign):
        if Q != R.field_assign_post(P, c, path):
            raise DerivationError(path, "post does not match the heap update")
    elif isinstance(c, If):
        R.framed_expr(P, c.cond, path)
        d1, d2 = d.children
        if d1.stmt != c.then or d2.stmt != c.orelse:
            raise DerivationError(path, "premises do not match the branches")
        if d1.pre != restrict(P, c.cond, True) or d2.pre != restrict(P, c.cond, False):
            raise DerivationError(path, "branch preconditions are not the guarded sets")
        if Q != d1.post | d2.post:
            raise DerivationError(path, "post is not the union of the branch posts")
        _check(R, d1, path + ".then")
        _check(R, d2, path + ".else")


def _stable_part(P) -> frozenset:
    return frozenset(w for w in P if is_stable(w))


# ------------------------------------------------------------ theorem instances

def check_soundness_instance(ctx: TypeContext, c: Stmt, sp: StateSpace,
                             oracle: Optional[Oracle] = None) -> bool:
    """A statement valid in the reference semantics is derivable from
    ``true`` (vacuously holds for invalid statements)."""
    oracle = oracle or Oracle(ctx, sp)
    if not oracle.is_valid(c):
        return True
    d = derive(ctx, c, top(sp), sp, oracle)
    return d is not None and check_derivation(ctx, d, sp)


def completeness_counterexample(ctx: TypeContext, d: Derivation, sp: StateSpace,
                                oracle: Optional[Oracle] = None) -> Optional[IdfState]:
    """A stable state of the pre-set from which no execution ends inside
    the post-set."""
    oracle = oracle or Oracle(ctx, sp)
    post = d.post
    inside = post.__contains__
    for w in d.pre:
        if is_stable(w) and not oracle.correct(d.stmt, w, inside):
            return w
    return None


def check_completeness_instance(ctx: TypeContext, d: Derivation, sp: StateSpace,
                                oracle: Optional[Oracle] = None) -> bool:
    return completeness_counterexample(ctx, d, sp, oracle) is None


# ------------------------------------------------------------ proof traces

def _states(P) -> str:
    stable = sum(1 for w in P if is_stable(w))
    return f"{len(P)} states, {stable} stable"


def format_derivation(d: Derivation, indent: int = 0) -> str:
    """One line per rule application, children indented below their parent."""
    pad = "  " * indent
    head = show_stmt(d.stmt).splitlines()[0] if d.rule not in ("seq", "if") else ""
    if d.rule == "if":
        head = "if"
    line = f"{pad}[{d.rule}] {head}".rstrip() + f"    pre: {_states(d.pre)}; post: {_states(d.post)}"
    out = [line]
    for c in d.children:
        out.append(format_derivation(c, indent + 1))
    return "\n".join(out)
