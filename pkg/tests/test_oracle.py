from fractions import Fraction as F

from ivlsem.algebra import HeapLoc, IdfState, is_stable
from ivlsem.assertions import StateSpace
from ivlsem.coreivl import Exhale, Inhale, Skip, TypeContext
from ivlsem.oracle import Oracle, exec_outcomes, is_correct, is_valid
from ivlsem.syntax import parse_assertion, parse_stmt
from ivlsem.values import Ref, Type

X = Ref(1)
XF = HeapLoc(X, "f")
CTX = TypeContext({"x": Type.REF}, {"f": Type.INT})
SP = StateSpace(CTX.vars, CTX.fields, int_range=(5, 7), refs=1, perm_denoms=(1, 2))


def w(heap=(), mask=()):
    return IdfState({"x": X}, dict(heap), dict(mask))


def test_inhale_known_value_is_singleton():
    s = w({XF: 5}, {XF: F(1, 2)})
    assert exec_outcomes(CTX, Inhale(parse_assertion("x.f == 5")), s, SP) == {frozenset({s})}


def test_inhale_contradiction_is_magic():
    s = w({XF: 7}, {XF: 1})
    assert exec_outcomes(CTX, Inhale(parse_assertion("x.f == 5")), s, SP) == {frozenset()}


def test_inhale_unframed_is_stuck():
    assert exec_outcomes(CTX, Inhale(parse_assertion("x.f == 5")), w(), SP) == set()


def test_exhale_disjunction_offers_both_choices():
    ctx = TypeContext({"a": Type.REF, "b": Type.REF}, {"v": Type.INT})
    sp = StateSpace(ctx.vars, ctx.fields, int_range=(0, 0), refs=2, perm_denoms=(1,))
    la, lb = HeapLoc(Ref(1), "v"), HeapLoc(Ref(2), "v")
    s = IdfState({"a": Ref(1), "b": Ref(2)}, {la: 0, lb: 0}, {la: 1, lb: 1})
    out = exec_outcomes(ctx, Exhale(parse_assertion("acc(a.v) || acc(b.v)")), s, sp)
    assert out == {frozenset({IdfState(s.store_map, {lb: 0}, {lb: 1})}),
                   frozenset({IdfState(s.store_map, {la: 0}, {la: 1})})}


def test_exhale_from_unit_fails():
    assert not is_correct(CTX, Exhale(parse_assertion("acc(x.f)")), w(), SP)


def test_skip():
    s = w({XF: 6}, {XF: 1})
    assert is_correct(CTX, Skip(), s, SP)
    assert exec_outcomes(CTX, Skip(), s, SP) == {frozenset({s})}


def test_inhale_then_exhale_is_valid():
    assert is_valid(CTX, parse_stmt("inhale acc(x.f); exhale acc(x.f)"), SP)


def test_exhale_twice_is_invalid():
    assert not is_valid(CTX, parse_stmt("inhale acc(x.f); exhale acc(x.f); exhale acc(x.f)"), SP)


def test_havoc_is_demonic():
    ctx = TypeContext({"n": Type.INT}, {"f": Type.INT})
    sp = StateSpace(ctx.vars, ctx.fields, int_range=(0, 2), refs=1, perm_denoms=(1,))
    assert not is_valid(ctx, parse_stmt("havoc n; exhale n == 1"), sp)
    assert is_valid(ctx, parse_stmt("havoc n; exhale n >= 0"), sp)


def test_exhale_is_angelic_in_wildcards():
    # a wildcard exhale must leave some permission behind for the second one
    assert is_valid(CTX, parse_stmt(
        "inhale acc(x.f, 1/2); exhale acc(x.f, wildcard); exhale acc(x.f, wildcard)"), SP)


def test_wildcard_inhale_fits_an_off_grid_remainder():
    # keeping almost everything after a wildcard exhale must not make a
    # later wildcard inhale vacuous
    s = w({XF: 5}, {XF: 1 - F(1, 2 ** 20)})
    (out,) = exec_outcomes(CTX, Inhale(parse_assertion("acc(x.f, wildcard)")), s, SP)
    assert out and all(0 < x.perm(XF) - s.perm(XF) <= F(1, 2 ** 20) for x in out)
    bad = parse_stmt("inhale acc(x.f) * x.f == 5; exhale acc(x.f, wildcard); "
                     "inhale acc(x.f, wildcard); exhale x.f == 6")
    assert not is_valid(CTX, bad, SP)


def test_field_write_needs_full_permission():
    assert not is_valid(CTX, parse_stmt("inhale acc(x.f, 1/2); x.f := 5"), SP)
    assert is_valid(CTX, parse_stmt("inhale acc(x.f); x.f := 5; exhale acc(x.f) * x.f == 5"), SP)


def test_outcomes_are_stable():
    orc = Oracle(CTX, SP)
    c = parse_stmt("inhale acc(x.f, 1/2); exhale acc(x.f, wildcard); havoc x")
    for s in SP.stable_states():
        orc.exec_outcomes(c, s)
    assert orc.states_seen > 0 and not orc.unstable_states
    assert all(is_stable(x) for s in SP.stable_states() for S in orc.exec_outcomes(c, s)
               for x in S)
