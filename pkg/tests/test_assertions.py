from fractions import Fraction as F

from hypothesis import given, strategies as st

from ivlsem.algebra import HeapLoc, IdfState, stabilize, is_stable
from ivlsem.assertions import (StateSpace, assertion_frames, denote, entails, expr_framed_by,
                               is_self_framing, remainders, sat, sep_conj,
                               state_frames_assertion)
from ivlsem.expr import evaluate
from ivlsem.syntax import parse_assertion, parse_expr
from ivlsem.values import Ref, Type

X = Ref(1)
XF = HeapLoc(X, "f")
SP = StateSpace({"x": Type.REF}, {"f": Type.INT}, int_range=(4, 5), refs=1, perm_denoms=(1, 2))
A = parse_assertion


def w(heap=(), mask=()):
    return IdfState({"x": X}, dict(heap), dict(mask))


class TestExpressions:
    def test_direct_read(self):
        assert evaluate(parse_expr("x.f == 5"), {"x": X}, {XF: 5}) is True

    def test_read_outside_heap_is_undefined(self):
        assert evaluate(parse_expr("x.f == 5"), {"x": X}, {}) is None

    def test_arithmetic(self):
        assert evaluate(parse_expr("2 + 3"), {}, {}) == 5


class TestSatisfaction:
    def test_acc_and_value(self):
        assert sat(w({XF: 5}, {XF: 1}), A("acc(x.f, 1) * x.f == 5")) is True

    def test_value_without_permission(self):
        s = w({XF: 5})
        assert sat(s, A("x.f == 5")) is True
        assert sat(stabilize(s), A("x.f == 5")) is None

    def test_unit_lacks_permission(self):
        assert sat(w(), A("acc(x.f, 1)")) is False

    def test_acc_is_exact(self):
        assert sat(w({XF: 5}, {XF: 1}), A("acc(x.f, 1/2)")) is False


class TestDenotation:
    def test_half_permission_states(self):
        P = denote(A("acc(x.f, 1/2)"), SP)
        expected = {s for s in SP.all_states()
                    if s.mask_map == {HeapLoc(s.store_map["x"], "f"): F(1, 2)}}
        assert P == expected

    def test_self_framing_examples(self):
        assert is_self_framing(denote(A("acc(x.f, 1) * x.f == 5"), SP), SP)
        assert not is_self_framing(denote(A("x.f == 5"), SP), SP)
        assert is_self_framing(denote(A("true"), SP), SP)

    def test_state_frames(self):
        assert state_frames_assertion(w({XF: 4}, {XF: F(1, 2)}), A("x.f == 5"), SP)
        assert not state_frames_assertion(w(), A("x.f == 5"), SP)
        assert state_frames_assertion(w(), A("true"), SP)

    def test_set_frames(self):
        P = denote(A("acc(x.f, 1)"), SP)
        assert assertion_frames(P, denote(A("x.f == 5"), SP), SP)
        assert assertion_frames(denote(A("true"), SP), denote(A("true"), SP), SP)
        assert expr_framed_by(P, parse_expr("x.f"))

    def test_dropping_an_equality_weakens(self):
        sp = StateSpace({"a": Type.REF, "b": Type.REF}, {"v": Type.INT}, int_range=(0, 1),
                        refs=2, perm_denoms=(1,))
        strong = denote(A("acc(a.v) * acc(b.v) * a.v == b.v"), sp)
        weak = sep_conj(denote(A("acc(b.v)"), sp), denote(A("acc(a.v)"), sp))
        assert strong and entails(strong, weak)


SMALL = StateSpace({"x": Type.REF, "y": Type.REF}, {"f": Type.INT}, int_range=(0, 1), refs=2,
                   perm_denoms=(1, 2))
ASSERTIONS = [A(t) for t in (
    "acc(x.f, 1/2)", "acc(x.f) * x.f == 1", "acc(x.f, wildcard)", "x != null ==> acc(x.f)",
    "(x == y ? acc(x.f) : acc(x.f, 1/2) * acc(y.f, 1/2))", "acc(x.f, 1/2) * acc(y.f, 1/2)",
    "true", "x == null")]
STATES = list(SMALL.all_states())


@given(st.sampled_from(ASSERTIONS), st.sampled_from(STATES))
def test_remainders_recombine(a, s):
    # every remainder plus some satisfying part gives back the state
    for r in remainders(s, a, SMALL):
        assert r.heap_map == s.heap_map
        part = {l: s.perm(l) - r.perm(l) for l in s.heap_map}
        piece = IdfState(s.store_map, s.heap_map, part)
        assert sat(piece, a)


@given(st.sampled_from(ASSERTIONS[:3] + ASSERTIONS[5:]))
def test_self_framing_assertions_denote_self_framing_sets(a):
    P = denote(a, SMALL)
    assert all((s in P) == (stabilize(s) in P) for s in STATES)


def test_stable_states_are_stable():
    assert all(is_stable(s) for s in SMALL.stable_states())
