from ivlsem.algebra import is_stable
from ivlsem.coreivl import well_typed
from ivlsem.syntax import show_stmt
from ivlsem.testkit import (GenConfig, SymExecKeepingPermission, difftest_op_vs_ax,
                            difftest_symexec_vs_oracle, gen_state, gen_stmt,
                            oracle_without_inhale_framing)


def test_generation_is_deterministic():
    a = [show_stmt(gen_stmt(GenConfig(seed=7), GenConfig(seed=7).rng(i))) for i in range(20)]
    b = [show_stmt(gen_stmt(GenConfig(seed=7), GenConfig(seed=7).rng(i))) for i in range(20)]
    assert a == b and len(set(a)) > 10


def test_generated_states_are_valid():
    cfg = GenConfig(seed=1)
    rng = cfg.rng()
    sp = cfg.space()
    for _ in range(10_000):
        w = gen_state(cfg, rng)
        assert all(0 <= p <= 1 for p in w.mask_map.values())
        assert set(w.store_map) == set(sp.var_types)
    assert any(is_stable(gen_state(cfg, rng)) for _ in range(50))


def test_generated_statements_are_well_typed():
    cfg = GenConfig(seed=2, depth=5)
    for i in range(1000):
        assert well_typed(cfg.ctx, gen_stmt(cfg, cfg.rng(i)))


def test_empty_run():
    rep = difftest_symexec_vs_oracle(GenConfig(), 0)
    assert rep.trials == 0 and rep.ok
    assert difftest_op_vs_ax(GenConfig(), 0).trials == 0


def test_small_difftests_agree():
    rep = difftest_symexec_vs_oracle(GenConfig(seed=3), 40)
    assert rep.ok, rep.counterexamples
    assert rep.verified > 5 and rep.valid >= rep.verified
    rep = difftest_op_vs_ax(GenConfig(seed=3, depth=3), 15)
    assert rep.ok, rep.counterexamples
    assert rep.completeness_checked == rep.verified > 0


def test_symexec_mutant_is_caught():
    rep = difftest_symexec_vs_oracle(GenConfig(seed=0), 100,
                                     make_symexec=SymExecKeepingPermission)
    assert rep.counterexamples
    assert all("verified but not valid" in c.reason for c in rep.counterexamples)


def test_framing_mutant_is_caught():
    cfg = GenConfig(seed=4, prelude=0.3, depth=3)
    rep = difftest_op_vs_ax(cfg, 200, make_oracle=oracle_without_inhale_framing)
    assert any("valid but not derivable" in c.reason for c in rep.counterexamples)


def test_workers_do_not_change_results():
    cfg = GenConfig(seed=5)
    one = difftest_symexec_vs_oracle(cfg, 12)
    two = difftest_symexec_vs_oracle(cfg, 12, workers=2)
    strip = lambda d: {k: v for k, v in d.items() if k != "seconds"}  # noqa: E731
    assert strip(one.as_dict()) == strip(two.as_dict())


def test_report_rendering():
    rep = difftest_symexec_vs_oracle(GenConfig(seed=6), 5)
    assert rep.summary().startswith("symexec: 5 trials, 0 counterexamples")
    assert rep.as_dict()["trials"] == 5
