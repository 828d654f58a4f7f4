import itertools
import random
import shutil
from fractions import Fraction as F

import pytest

from ivlsem.prover import BuiltinProver, SmtProver, Verdict, make_prover
from ivlsem.prover.smtlib import query_script
from ivlsem.terms import (FALSE, NULL_TERM, TRUE, SymVar, eval_term, lit, mk_and, mk_bin,
                          mk_not, mk_or)
from ivlsem.values import Ref, Type

P = SymVar("p", Type.PERM)
X = SymVar("x", Type.INT)
T = SymVar("t", Type.BOOL)


@pytest.fixture
def prover():
    return BuiltinProver()


class TestBuiltin:
    def test_arithmetic_fact(self, prover):
        assert prover.entails(TRUE, mk_bin("==", mk_bin("+", lit(2), lit(3)), lit(5)))

    def test_inconsistent_pc(self, prover):
        assert prover.entails([T, mk_not(T)], FALSE)

    def test_halving_keeps_positive(self, prover):
        half = mk_bin("/", P, lit(F(2)))
        assert prover.entails([mk_bin(">", P, lit(F(0)))], mk_bin(">", half, lit(F(0))))

    def test_distinct_values(self, prover):
        assert prover.is_unsat([mk_bin("==", X, lit(1)), mk_bin("==", X, lit(2))]) is Verdict.VALID

    def test_satisfiable_is_unknown(self, prover):
        assert prover.is_unsat([mk_bin(">", X, lit(0))]) is Verdict.UNKNOWN

    def test_permission_bound(self, prover):
        pc = [mk_bin("<=", P, lit(F(1))), mk_bin(">", mk_bin("+", P, P), lit(F(2))),
              mk_bin(">=", P, lit(F(0)))]
        assert prover.is_unsat(pc)

    def test_integer_tightening(self, prover):
        # 0 < 2x < 2 has rational but no integer solutions
        two_x = mk_bin("*", lit(2), X)
        assert prover.is_unsat([mk_bin("<", lit(0), two_x), mk_bin("<", two_x, lit(2))])

    def test_reference_reasoning(self, prover):
        r, s = SymVar("r", Type.REF), SymVar("s", Type.REF)
        assert prover.is_unsat([mk_bin("==", r, s), mk_bin("!=", s, r)])
        assert prover.is_unsat([mk_bin("==", r, NULL_TERM), mk_bin("==", r, lit(Ref(1)))])
        assert not prover.is_unsat([mk_bin("!=", r, NULL_TERM)])

    def test_disjunction_split(self, prover):
        pc = [mk_or(mk_bin("==", X, lit(1)), mk_bin("==", X, lit(2))), mk_bin(">", X, lit(5))]
        assert prover.is_unsat(pc)


# ------------------------------------------------------------ random differential

INTS = [SymVar(n, Type.INT) for n in ("a", "b")]
PERMS = [SymVar(n, Type.PERM) for n in ("p", "q")]
REFS = [SymVar(n, Type.REF) for n in ("r", "s")]
BOOLS = [SymVar("t", Type.BOOL)]
GRID = {Type.INT: range(-2, 3), Type.PERM: [F(k, 4) for k in range(-2, 7)],
        Type.REF: [Ref(0), Ref(1), Ref(2)], Type.BOOL: [False, True]}


def _num(rng, vs, ty):
    r = rng.random()
    if r < 0.3:
        return lit(F(rng.randint(-1, 4), rng.choice([1, 2, 4])) if ty is Type.PERM
                   else rng.randint(-2, 2), ty)
    if r < 0.7:
        return rng.choice(vs)
    if r < 0.85:
        return mk_bin(rng.choice("+-"), _num(rng, vs, ty), _num(rng, vs, ty))
    if ty is Type.PERM and r < 0.93:
        return mk_bin("/", _num(rng, vs, ty), lit(F(rng.choice([2, 4]))))
    return mk_bin("*", lit(rng.randint(-2, 2), ty), _num(rng, vs, ty))


def _atom(rng):
    k = rng.random()
    if k < 0.35:
        return mk_bin(rng.choice(["==", "!=", "<", "<=", ">", ">="]),
                      _num(rng, INTS, Type.INT), _num(rng, INTS, Type.INT))
    if k < 0.7:
        return mk_bin(rng.choice(["==", "!=", "<", "<=", ">", ">="]),
                      _num(rng, PERMS, Type.PERM), _num(rng, PERMS, Type.PERM))
    if k < 0.9:
        other = rng.choice(REFS + [NULL_TERM, lit(Ref(1))])
        return mk_bin(rng.choice(["==", "!="]), rng.choice(REFS), other)
    return BOOLS[0] if rng.random() < 0.5 else mk_not(BOOLS[0])


def _formula(rng, depth=2):
    if depth == 0 or rng.random() < 0.5:
        return _atom(rng)
    op = rng.choice(["&&", "||", "==>", "!"])
    if op == "!":
        return mk_not(_formula(rng, depth - 1))
    return mk_bin(op, _formula(rng, depth - 1), _formula(rng, depth - 1))


def random_query(rng) -> list:
    return [_formula(rng) for _ in range(rng.randint(1, 4))]


def has_grid_model(pc) -> bool:
    from ivlsem.terms import term_vars
    vs = {}
    for t in pc:
        term_vars(t, vs)
    names = sorted(vs)
    for vals in itertools.product(*(GRID[vs[n].ty] for n in names)):
        env = dict(zip(names, vals))
        if all(eval_term(t, env) is True for t in pc):
            return True
    return False


def test_never_refutes_a_satisfiable_query():
    rng = random.Random(2024)
    prover = BuiltinProver()
    refuted = 0
    for i in range(10_000):
        pc = random_query(rng)
        if prover.is_unsat(pc):
            refuted += 1
            assert not has_grid_model(pc), (i, pc)
    # the check must not be vacuous
    assert refuted > 500


# ------------------------------------------------------------ SMT client

@pytest.mark.parametrize("mode,verdict", [("unsat", Verdict.VALID), ("sat", Verdict.UNKNOWN),
                                          ("unknown", Verdict.UNKNOWN)])
def test_solver_answers(fake_solver, mode, verdict):
    with SmtProver(fake_solver(mode)) as sp:
        assert sp.is_unsat([mk_bin(">", X, lit(0))]) is verdict
        assert not sp.diagnostics


def test_unexpected_answer_is_unknown_with_diagnostic(fake_solver):
    with SmtProver(fake_solver("banana")) as sp:
        assert sp.is_unsat([T]) is Verdict.UNKNOWN
        assert "banana" in sp.diagnostics[0]


def test_crash_is_unknown(fake_solver):
    with SmtProver(fake_solver("crash")) as sp:
        assert sp.is_unsat([T]) is Verdict.UNKNOWN
        assert sp.diagnostics


def test_timeout_is_unknown(fake_solver):
    with SmtProver(fake_solver("hang"), timeout=0.3) as sp:
        assert sp.is_unsat([T]) is Verdict.UNKNOWN
        assert "timed out" in sp.diagnostics[0]


def test_script_shape():
    lines = query_script([mk_bin("<", P, lit(F(1, 2))), mk_bin("==", REFS[0], lit(Ref(1)))])
    assert "(declare-const |p| Real)" in lines
    assert "(declare-const |r| Ref)" in lines
    assert "(assert (< |p| (/ 1.0 2.0)))" in lines


def test_environment_selects_solver(monkeypatch, fake_solver):
    monkeypatch.setenv("IVLSEM_SMT", " ".join(fake_solver("unsat")))
    assert isinstance(make_prover(), SmtProver)
    monkeypatch.delenv("IVLSEM_SMT")
    assert isinstance(make_prover(), BuiltinProver)


@pytest.mark.skipif(shutil.which("z3") is None, reason="z3 not installed")
def test_z3_agrees_with_builtin_refutations():
    rng = random.Random(7)
    builtin = BuiltinProver()
    with SmtProver(["z3", "-in"]) as z3:
        for _ in range(400):
            pc = random_query(rng)
            if builtin.is_unsat(pc):
                assert z3.is_unsat(pc) is Verdict.VALID, pc
        assert not z3.diagnostics
