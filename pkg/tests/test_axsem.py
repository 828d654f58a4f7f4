from fractions import Fraction as F

import pytest

from ivlsem.assertions import StateSpace, denote, is_self_framing
from ivlsem.axsem import (Derivation, check_completeness_instance, check_derivation,
                          check_soundness_instance, derive, find_derivation_error,
                          format_derivation, top)
from ivlsem.coreivl import Exhale, Inhale, Skip, TypeContext
from ivlsem.syntax import parse_assertion, parse_program, parse_stmt
from ivlsem.values import Type

A = parse_assertion
CTX = TypeContext({"x": Type.REF}, {"f": Type.INT})
SP = StateSpace(CTX.vars, CTX.fields, int_range=(0, 1), refs=1, perm_denoms=(1, 2))
PQ = TypeContext({"p": Type.REF, "q": Type.REF}, {"v": Type.INT})
PQ_SP = StateSpace(PQ.vars, PQ.fields, int_range=(0, 1), refs=2, perm_denoms=(1, 2))


def test_inhale_rejected_when_unframed():
    P = denote(A("acc(p.v, 1/2)"), PQ_SP)
    c = Inhale(A("q.v == 0"))
    d = Derivation("inhale", c, P, P)
    assert "frame" in find_derivation_error(PQ, d, PQ_SP)


def test_exhale_may_drop_an_equality():
    ab = TypeContext({"a": Type.REF, "b": Type.REF}, {"v": Type.INT})
    sp = StateSpace(ab.vars, ab.fields, int_range=(0, 1), refs=2, perm_denoms=(1,))
    P = denote(A("acc(a.v) * acc(b.v) * a.v == b.v"), sp)
    Q = denote(A("acc(b.v)"), sp)
    assert check_derivation(ab, Derivation("exhale", Exhale(A("acc(a.v)")), P, Q), sp)


def test_skip_needs_self_framing_pre():
    P = denote(A("x.f == 1"), SP)
    assert not is_self_framing(P, SP)
    assert not check_derivation(CTX, Derivation("skip", Skip(), P, P), SP)


def test_inhale_from_true():
    d = derive(CTX, Inhale(A("acc(x.f)")), top(SP), SP)
    assert d is not None and check_derivation(CTX, d, SP)
    assert {w for w in d.post if w.mask_map} == {w for w in denote(A("acc(x.f)"), SP)
                                               if w.mask_map}
    assert is_self_framing(d.post, SP)


def test_exhale_leaves_empty_masks():
    d = derive(CTX, Exhale(A("acc(x.f)")), denote(A("acc(x.f)"), SP), SP)
    assert d is not None and check_derivation(CTX, d, SP)
    assert d.post and all(not w.mask_map for w in d.post)


def test_exhale_from_true_is_not_derivable():
    assert derive(CTX, Exhale(A("acc(x.f)")), top(SP), SP) is None


@pytest.mark.parametrize("text", ["skip", "inhale acc(x.f); exhale acc(x.f)"])
def test_theorem_instances(text):
    c = parse_stmt(text)
    assert check_soundness_instance(CTX, c, SP)
    d = derive(CTX, c, top(SP), SP)
    assert d is not None and check_completeness_instance(CTX, d, SP)


def test_wrong_rule_rejected():
    c = parse_stmt("inhale acc(x.f)")
    T = top(SP)
    assert not check_derivation(CTX, Derivation("skip", c, T, T), SP)


def test_tampered_post_rejected():
    d = derive(CTX, parse_stmt("inhale acc(x.f); exhale acc(x.f)"), top(SP), SP)
    d2 = d.children[1]
    wrong = Derivation("exhale", d2.stmt, d2.pre, d2.pre)
    bad = Derivation(d.rule, d.stmt, d.pre, wrong.post, (d.children[0], wrong))
    assert find_derivation_error(CTX, bad, SP).startswith("root.2")


def test_running_example_soundness_instance(corpus):
    prog = parse_program((corpus / "fig2.ivl").read_text())
    for m in prog.methods:
        sp = StateSpace(m.ctx.vars, m.ctx.fields, int_range=(0, 1), refs=2, perm_denoms=(1, 2))
        assert check_soundness_instance(m.ctx, m.body, sp), m.name


def test_trace_format():
    d = derive(CTX, parse_stmt("inhale acc(x.f); exhale acc(x.f)"), top(SP), SP)
    lines = format_derivation(d).splitlines()
    assert lines[0].startswith("[seq]")
    assert lines[1].lstrip().startswith("[inhale] inhale acc(x.f")
    assert lines[2].lstrip().startswith("[exhale]")
