from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

from ivlsem.assertions import StateSpace
from ivlsem.coreivl import TypeContext
from ivlsem.oracle import Oracle
from ivlsem.prover import BuiltinProver
from ivlsem.symexec import (Chunk, SymExec, SymState, WILDCARD, merge_consolidation,
                            related, verify_method, verify_program)
from ivlsem.syntax import parse_assertion, parse_expr, parse_program, parse_stmt
from ivlsem.terms import ONE, SymVar, lit, mk_bin, mk_eq, show_term
from ivlsem.testkit import GenConfig, gen_assertion, gen_stmt
from ivlsem.values import Type

A = parse_assertion
CTX = TypeContext({"x": Type.REF, "y": Type.REF, "b": Type.BOOL, "n": Type.INT},
                  {"f": Type.INT})
HALF = lit(F(1, 2))


def run(stmt: str, **kw) -> bool:
    return SymExec(CTX, **kw).verify(parse_stmt(stmt))


def produce(ex, s, text):
    out = []
    ex.sproduce(s, A(text), lambda s1: out.append(s1) or True, None)
    (s1,) = out
    return s1


def consume(ex, s, text):
    out = []
    ok = ex.sconsume(s, A(text), lambda s1: out.append(s1) or True, None, s.heap)
    return ok, (out[0] if out else None)


@pytest.fixture
def ex():
    return SymExec(CTX)


class TestStatements:
    def test_running_example(self, corpus):
        res = verify_program(parse_program((corpus / "fig2.ivl").read_text()))
        assert [(r.method, r.ok) for r in res] == [("main", True), ("left", True),
                                                   ("right", True)]

    def test_mutant_fails_with_entailment(self, corpus):
        res = verify_program(parse_program((corpus / "fig2_mutated.ivl").read_text()))
        (main,) = [r for r in res if r.method == "main"]
        assert not main.ok and main.diagnostics[0].kind == "entailment"

    def test_read_after_free_fails(self, corpus):
        res = verify_program(parse_program((corpus / "fig2_read_after_free.ivl").read_text()))
        (main,) = [r for r in res if r.method == "main"]
        assert not main.ok and main.diagnostics[0].kind == "missing-chunk"

    def test_exhale_from_empty_heap(self):
        assert not run("exhale acc(x.f)")

    def test_branches(self):
        c = parse_stmt("if (b) { n := 1 } else { n := 2 }; exhale n > 0")
        assert SymExec(CTX).verify(c)
        sp = StateSpace(CTX.vars, CTX.fields, int_range=(0, 2), refs=1, perm_denoms=(1,))
        assert Oracle(CTX, sp).is_valid(c)

    def test_skip(self):
        assert verify_method(CTX, parse_stmt("skip")).ok

    def test_inconsistent_inhale_is_magic(self):
        assert run("inhale false; exhale acc(x.f) * n == 7")

    def test_field_write_needs_full_permission(self):
        assert not run("inhale acc(x.f, 1/2); x.f := 1")
        assert run("inhale acc(x.f); x.f := 1; exhale acc(x.f) * (x.f == 1)")

    def test_type_error_is_reported(self):
        res = verify_method(CTX, parse_stmt("n := true"))
        assert not res.ok and res.diagnostics[0].kind == "type"

    def test_disjunction_is_rejected(self):
        res = verify_method(CTX, parse_stmt("inhale acc(x.f) || acc(y.f)"))
        assert not res.ok and res.diagnostics[0].kind == "type"


class TestProduceConsume:
    def test_produce_chunk_then_value(self, ex):
        s = produce(ex, ex.initial_state(), "acc(x.f) * (x.f == 0)")
        (ch,) = s.heap
        assert ex.provable(s, mk_eq(ch.val, lit(0)))

    def test_produce_wildcard(self, ex):
        s = produce(ex, ex.initial_state(), "acc(x.f, wildcard)")
        (ch,) = s.heap
        assert isinstance(ch.perm, SymVar)
        assert ex.provable(s, mk_bin("<", lit(F(0)), ch.perm))

    def test_consume_wildcard_halves(self, ex):
        s = produce(ex, ex.initial_state(), "acc(x.f)")
        ok, s1 = consume(ex, s, "acc(x.f, wildcard)")
        (ch,) = s1.heap
        assert ok and ex.provable(s1, mk_eq(ch.perm, HALF))

    def test_two_halves_then_wildcard(self):
        assert run("inhale acc(x.f); exhale acc(x.f, 1/2); exhale acc(x.f, 1/2)")
        assert not run("inhale acc(x.f); exhale acc(x.f, 1/2); exhale acc(x.f, 1/2); "
                       "exhale acc(x.f, wildcard)")

    def test_two_halves_leave_no_chunk(self, ex):
        s = produce(ex, ex.initial_state(), "acc(x.f)")
        out = []
        ex.sexec(s, parse_stmt("exhale acc(x.f, 1/2); exhale acc(x.f, 1/2)"),
                 lambda s1: out.append(s1) or True)
        assert out[0].heap == ()

    def test_consume_pure(self, ex):
        s = ex.initial_state()
        ok, s1 = consume(ex, s, "2 + 3 == 5")
        assert ok and s1.heap == s.heap and s1.pc == s.pc


class TestExpressions:
    def test_arithmetic(self, ex):
        s = ex.initial_state()
        got = []
        ex.sexp(s, parse_expr("n + 1"), lambda s1, t: got.append(t) or True, None)
        assert show_term(got[0]) == f"{show_term(s.store['n'])} + 1"

    def test_read_through_wildcard(self, ex):
        s = produce(ex, ex.initial_state(), "acc(x.f, wildcard)")
        got = []
        assert ex.sexp(s, parse_expr("x.f"), lambda s1, t: got.append(t) or True, None)
        assert got == [s.heap[0].val]

    def test_read_without_chunk(self, ex):
        assert not ex.sexp(ex.initial_state(), parse_expr("x.f"), lambda s1, t: True, None)


class TestHeap:
    def test_no_consolidation_keeps_chunks(self, ex):
        s = produce(ex, ex.initial_state(), "acc(x.f, 1/2)")
        s2 = produce(ex, s, "acc(x.f, 1/2)")
        assert len(s2.heap) == 2 and s2.pc == s.pc + s2.pc[len(s.pc):]
        assert len(s2.pc) - len(s.pc) == len(s.pc) - len(ex.initial_state().pc)

    def test_merge_two_halves(self):
        ex = SymExec(CTX, consolidation="merge")
        s = produce(ex, produce(ex, ex.initial_state(), "acc(x.f, 1/2)"), "acc(x.f, 1/2)")
        (ch,) = s.heap
        assert ex.provable(s, mk_eq(ch.perm, lit(F(1))))
        assert run("inhale acc(x.f, 1/2); inhale acc(x.f, 1/2); x.f := 1", consolidation="merge")
        assert not run("inhale acc(x.f, 1/2); inhale acc(x.f, 1/2); x.f := 1")

    def test_merge_records_value_equality(self):
        assert run("inhale acc(x.f, 1/2); n := x.f; inhale acc(x.f, 1/2); exhale x.f == n",
                   consolidation="merge")

    def test_consolidate_empty(self, ex):
        s = SymState({})
        assert merge_consolidation(ex, s) is s

    def test_extract_skips_other_receiver(self, ex):
        s = produce(ex, ex.initial_state(), "acc(x.f) * acc(y.f)")
        got = []
        assert ex.extract(s, s.store["x"], "f", ONE, lambda s1, ch: got.append(ch) or True, None)
        assert got[0].recv == s.store["x"]

    def test_extract_too_much(self, ex):
        s = produce(ex, ex.initial_state(), "acc(x.f, 1/2)")
        assert not ex.extract(s, s.store["x"], "f", ONE, lambda s1, ch: True, None)

    def test_extract_wildcard(self, ex):
        s = produce(ex, ex.initial_state(), "acc(x.f, wildcard)")
        assert ex.extract(s, s.store["x"], "f", WILDCARD, lambda s1, ch: True, None)


class TestWildcards:
    @pytest.mark.parametrize("pre", ["acc(x.f)", "acc(x.f, 1/2)", "acc(x.f, wildcard)"])
    def test_positivity_survives_halving(self, pre):
        ex = SymExec(CTX)
        prog = f"inhale {pre}; exhale acc(x.f, wildcard); exhale acc(x.f, wildcard); " \
               "exhale acc(x.f, wildcard)"
        assert ex.verify(parse_stmt(prog))
        assert len(ex.wildcard_log) == 3
        for s, ch, half in ex.wildcard_log:
            assert ex.provable(s, mk_bin(">", half, lit(F(0))))
            assert ex.extract(s, ch.recv, ch.field, WILDCARD, lambda s1, c: True, None)

    def test_follow_up_wildcard(self, ex):
        s = produce(ex, ex.initial_state(), "acc(x.f, wildcard)")
        for _ in range(5):
            ok, s = consume(ex, s, "acc(x.f, wildcard)")
            assert ok
        (ch,) = s.heap
        assert ex.provable(s, mk_bin(">", ch.perm, lit(F(0))))

    def test_wildcard_then_exact_fails(self):
        assert not run("inhale acc(x.f); exhale acc(x.f, wildcard); exhale acc(x.f)")

    def test_wildcard_is_enough_to_read(self):
        assert run("inhale acc(x.f, wildcard) * (x.f == 1); exhale acc(x.f, wildcard); n := x.f; "
                   "exhale n == 1")


# ------------------------------------------------------------ properties

SMALL = GenConfig(seed=0, depth=3)
SP = SMALL.space()
STABLE = list(SP.stable_states())


class Recorder:
    """A merging strategy that remembers every state it was given."""

    def __init__(self):
        self.seen = []

    def __call__(self, ex, s):
        out = merge_consolidation(ex, s)
        self.seen.append((s, out))
        return out


@settings(max_examples=25)
@given(st.integers(0, 10 ** 6))
def test_merging_preserves_the_relation(seed):
    rec = Recorder()
    ex = SymExec(SMALL.ctx, consolidation=rec, bounds=SP)
    cfg = GenConfig(seed=seed)
    a, b = gen_assertion(cfg, cfg.rng(0)), gen_assertion(cfg, cfg.rng(1))
    ex.sproduce(ex.initial_state(), a,
                lambda s: ex.sproduce(s, b, lambda s2: True, None), None)
    for before, after in rec.seen[:4]:
        if len(before.heap) < 2:
            continue
        for w in STABLE:
            if related(w, before, SP):
                assert related(w, after, SP), (w, before, after)


@settings(max_examples=25)
@given(st.integers(0, 10 ** 6))
def test_cleanup_preserves_the_relation(seed):
    ex = SymExec(SMALL.ctx, bounds=SP)
    cfg = GenConfig(seed=seed)
    seen = []
    ex.sproduce(ex.initial_state(), A("acc(x.v, 1/2) * acc(y.v, 1/2)"), lambda s: ex.sconsume(
        s, gen_assertion(cfg, cfg.rng(0)),
        lambda s1: seen.append(s1) or True, None, s.heap), None)
    for s in seen[:2]:
        cleaned = []
        ex.scleanup(s, lambda s1: cleaned.append(s1) or True)
        for w in STABLE:
            if related(w, s, SP):
                assert related(w, cleaned[0], SP)


@settings(max_examples=60)
@given(st.integers(0, 10 ** 6))
def test_pruning_does_not_change_verdicts(seed):
    cfg = GenConfig(seed=seed)
    c = gen_stmt(cfg)
    assert SymExec(cfg.ctx, prune=True).verify(c) == SymExec(cfg.ctx, prune=False).verify(c)


@settings(max_examples=30)
@given(st.integers(0, 10 ** 6))
def test_havoc_order_is_irrelevant(seed):
    cfg = GenConfig(seed=seed)
    c = gen_stmt(cfg)
    one = parse_stmt("havoc x; havoc n")
    two = parse_stmt("havoc n; havoc x")
    from ivlsem.coreivl import seq
    assert SymExec(cfg.ctx).verify(seq(one, c)) == SymExec(cfg.ctx).verify(seq(two, c))


def test_diagnostics_are_deterministic(corpus):
    prog = parse_program((corpus / "fig2_mutated.ivl").read_text())
    runs = [[str(d) for r in verify_program(prog) for d in r.diagnostics] for _ in range(3)]
    assert runs[0] == runs[1] == runs[2] and runs[0]
