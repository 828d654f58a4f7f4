"""Random programs and differential harnesses.

Every trial draws from its own generator seeded by ``(master seed, trial
index)``, so a failing trial can be replayed alone.
"""

from __future__ import annotations

import random
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import partial
from typing import Callable, Optional

from .algebra import HeapLoc, IdfState
from .assertions import (Acc, Assertion, CondA, Implies, Pure, StateSpace, Star)
from .axsem import check_derivation, completeness_counterexample, top, try_derive
from .coreivl import (Assign, Exhale, FieldAssign, Havoc, If, Inhale, Skip, Stmt, TypeContext,
                      seq, well_typed)
from .expr import Binop, Cond, Expr, FieldRead, Lit, Unop, Var
from .oracle import OutcomeExplosion, Oracle
from .prover import BuiltinProver
from .symexec import SymExec
from .syntax import show_stmt
from .terms import ZERO
from .values import NULL, Ref, Type

DEFAULT_WEIGHTS = {
    "inhale": 4, "exhale": 4, "havoc": 1, "assign": 2, "field_assign": 2, "if": 1,
}
ASSERTION_WEIGHTS = {"acc": 4, "pure": 3, "star": 3, "implies": 1, "cond": 1}


@dataclass
class GenConfig:
    seed: int = 0
    depth: int = 4                 # statements per program (top-level sequence length)
    ref_vars: tuple = ("x", "y")
    int_vars: tuple = ("n",)
    refs: int = 2
    int_range: tuple = (0, 1)
    perm_denoms: tuple = (1, 2)
    assertion_depth: int = 2
    echo: float = 0.7              # chance that an exhale gives back an earlier inhale
    prelude: float = 0.7           # chance that a program starts by inhaling permissions
    weights: dict = field(default_factory=lambda: dict(DEFAULT_WEIGHTS))
    assertion_weights: dict = field(default_factory=lambda: dict(ASSERTION_WEIGHTS))

    def __post_init__(self):
        if min(self.depth, self.refs, self.assertion_depth, len(self.ref_vars)) < 1:
            raise ValueError("generator bounds must be at least 1")

    @property
    def ctx(self) -> TypeContext:
        vs = {x: Type.REF for x in self.ref_vars}
        vs.update({x: Type.INT for x in self.int_vars})
        return TypeContext(vs, {"v": Type.INT})

    def space(self) -> StateSpace:
        ctx = self.ctx
        return StateSpace(ctx.vars, ctx.fields, int_range=self.int_range, refs=self.refs,
                          perm_denoms=self.perm_denoms)

    def rng(self, trial: int = 0) -> random.Random:
        return random.Random(f"{self.seed}:{trial}")


def _pick(rng: random.Random, weights: dict) -> str:
    keys = sorted(weights)
    return rng.choices(keys, [weights[k] for k in keys])[0]


# ------------------------------------------------------------ expressions

def _int_expr(rng, cfg: GenConfig, heap: bool = True) -> Expr:
    lo, hi = cfg.int_range
    r = rng.random()
    if r < 0.3:
        return Lit(rng.randint(lo, hi))
    if r < 0.55 and cfg.int_vars:
        return Var(rng.choice(cfg.int_vars))
    if r < 0.8 and heap:
        return FieldRead(Var(rng.choice(cfg.ref_vars)), "v")
    a = Var(rng.choice(cfg.int_vars)) if cfg.int_vars else Lit(lo)
    return Binop(rng.choice(["+", "-"]), a, Lit(1))


def _bool_expr(rng, cfg: GenConfig, heap: bool = True) -> Expr:
    r = rng.random()
    if r < 0.2:
        x, y = rng.choice(cfg.ref_vars), rng.choice(cfg.ref_vars)
        other = Lit(NULL) if x == y or rng.random() < 0.5 else Var(y)
        return Binop(rng.choice(["==", "!="]), Var(x), other)
    if r < 0.3:
        return Unop("!", _bool_expr(rng, cfg, heap))
    return Binop(rng.choice(["==", "!=", "<", "<="]), _int_expr(rng, cfg, heap),
                 _int_expr(rng, cfg, heap))


def _perm_expr(rng, cfg: GenConfig) -> Optional[Expr]:
    r = rng.random()
    if r < 0.3:
        return None
    if r < 0.7:
        return Lit(1)
    d = rng.choice([d for d in cfg.perm_denoms if d > 1] or [1])
    return Lit(Fraction(rng.randint(1, d), d))


# ------------------------------------------------------------ assertions

def gen_assertion(cfg: GenConfig, rng: Optional[random.Random] = None,
                  depth: Optional[int] = None) -> Assertion:
    rng = rng or cfg.rng()
    depth = cfg.assertion_depth if depth is None else depth
    kind = _pick(rng, cfg.assertion_weights) if depth > 0 else rng.choice(["acc", "pure"])
    if kind == "acc":
        return Acc(Var(rng.choice(cfg.ref_vars)), "v", _perm_expr(rng, cfg))
    if kind == "pure":
        return Pure(_bool_expr(rng, cfg))
    if kind == "star":
        return Star(gen_assertion(cfg, rng, depth - 1), gen_assertion(cfg, rng, depth - 1))
    cond = _bool_expr(rng, cfg, heap=rng.random() < 0.3)
    if kind == "implies":
        return Implies(cond, gen_assertion(cfg, rng, depth - 1))
    a, b = gen_assertion(cfg, rng, depth - 1), gen_assertion(cfg, rng, depth - 1)
    if isinstance(a, Pure) and isinstance(b, Pure):
        # the canonical form the parser produces for pure branches
        return Pure(Cond(cond, a.expr, b.expr))
    return CondA(cond, a, b)


# ------------------------------------------------------------ statements

def _parts(a: Assertion) -> list:
    if isinstance(a, Star):
        return _parts(a.left) + _parts(a.right)
    return [a]


def _gen_one(cfg: GenConfig, rng: random.Random, nest: int, held: list) -> Stmt:
    kind = _pick(rng, cfg.weights)
    if kind == "if" and nest > 0:
        return If(_bool_expr(rng, cfg), _gen_block(cfg, rng, nest - 1, 2, list(held)),
                  _gen_block(cfg, rng, nest - 1, 2, list(held)))
    if kind == "inhale":
        a = gen_assertion(cfg, rng)
        held.append(a)
        return Inhale(a)
    if kind == "exhale":
        # giving back something inhaled earlier keeps many programs valid
        if held and rng.random() < cfg.echo:
            a = held.pop(rng.randrange(len(held)))
            parts = _parts(a)
            if len(parts) > 1 and rng.random() < 0.5:
                parts = rng.sample(parts, rng.randint(1, len(parts)))
            out = parts[0]
            for q in parts[1:]:
                out = Star(out, q)
            return Exhale(out)
        return Exhale(gen_assertion(cfg, rng))
    if kind == "havoc":
        return Havoc(rng.choice(cfg.ref_vars + cfg.int_vars))
    if kind == "assign" and cfg.int_vars:
        return Assign(rng.choice(cfg.int_vars), _int_expr(rng, cfg))
    if kind == "field_assign":
        return FieldAssign(Var(rng.choice(cfg.ref_vars)), "v", _int_expr(rng, cfg))
    return Inhale(gen_assertion(cfg, rng))


def _gen_block(cfg: GenConfig, rng: random.Random, nest: int, length: int,
               held: Optional[list] = None) -> Stmt:
    held = [] if held is None else held
    n = rng.randint(1, length)
    return seq(*[_gen_one(cfg, rng, nest, held) for _ in range(n)])


def gen_stmt(cfg: GenConfig, rng: Optional[random.Random] = None) -> Stmt:
    """A well-typed statement: a sequence of up to ``cfg.depth`` steps,
    with conditionals nested at most one level."""
    rng = rng or cfg.rng()
    held = []
    head = []
    if rng.random() < cfg.prelude:
        # most programs start by acquiring some cells
        parts = []
        for x in rng.sample(cfg.ref_vars, rng.randint(1, len(cfg.ref_vars))):
            parts.append(Acc(Var(x), "v", _perm_expr(rng, cfg)))
            if rng.random() < 0.3:
                lo, hi = cfg.int_range
                parts.append(Pure(Binop("==", FieldRead(Var(x), "v"), Lit(rng.randint(lo, hi)))))
        a = parts[0]
        for q in parts[1:]:
            a = Star(a, q)
        held.append(a)
        head.append(Inhale(a))
    return seq(*head, _gen_block(cfg, rng, 1, cfg.depth, held))


def gen_state(cfg: GenConfig, rng: Optional[random.Random] = None) -> IdfState:
    """A random state of the configured space; sometimes unstable."""
    rng = rng or cfg.rng()
    lo, hi = cfg.int_range
    store = {x: Ref(rng.randint(0, cfg.refs)) for x in cfg.ref_vars}
    store.update({x: rng.randint(lo, hi) for x in cfg.int_vars})
    grid = sorted({Fraction(k, d) for d in cfg.perm_denoms for k in range(1, d + 1)})
    heap, mask = {}, {}
    for i in range(1, cfg.refs + 1):
        loc = HeapLoc(Ref(i), "v")
        r = rng.random()
        if r < 0.6:
            heap[loc] = rng.randint(lo, hi)
            mask[loc] = rng.choice(grid)
        elif r < 0.8:
            heap[loc] = rng.randint(lo, hi)
    return IdfState(store, heap, mask)


# ------------------------------------------------------------ harnesses

@dataclass
class Counterexample:
    trial: int
    seed: str
    program: str
    state: Optional[str]
    reason: str

    def __str__(self) -> str:
        prog = self.program.replace("\n", "; ")
        where = f" from {self.state}" if self.state else ""
        return f"trial {self.trial} (seed {self.seed}): {self.reason}{where}\n    {prog}"


@dataclass
class DiffReport:
    mode: str
    trials: int = 0
    counterexamples: list = field(default_factory=list)
    verified: int = 0              # symexec true / derivation accepted
    valid: int = 0                 # oracle valid
    incomplete: int = 0            # oracle valid but symexec false
    completeness_checked: int = 0
    skipped: int = 0               # outcome explosion in the oracle
    oracle_states: int = 0
    unstable: list = field(default_factory=list)
    seconds: float = 0.0

    @property
    def ok(self) -> bool:
        return not self.counterexamples and not self.unstable

    def summary(self) -> str:
        head = (f"{self.mode}: {self.trials} trials, {len(self.counterexamples)} counterexamples, "
                f"{self.valid} valid, {self.verified} verified")
        if self.mode == "symexec":
            head += f", {self.incomplete} incomplete"
        else:
            head += f", {self.completeness_checked} completeness checks"
        head += (f", {self.skipped} skipped, {self.oracle_states} oracle states "
                 f"({len(self.unstable)} unstable), {self.seconds:.1f}s")
        return head

    def as_dict(self) -> dict:
        return {"mode": self.mode, "trials": self.trials, "verified": self.verified,
                "valid": self.valid, "incomplete": self.incomplete,
                "completeness_checked": self.completeness_checked, "skipped": self.skipped,
                "oracle_states": self.oracle_states, "unstable": len(self.unstable),
                "seconds": round(self.seconds, 3),
                "counterexamples": [vars(c) for c in self.counterexamples]}


def _program(cfg: GenConfig, i: int) -> Stmt:
    c = gen_stmt(cfg, cfg.rng(i))
    assert well_typed(cfg.ctx, c)
    return c


@dataclass
class _Trial:
    skipped: bool = False
    verified: bool = False
    valid: bool = False
    completeness_checked: bool = False
    oracle_states: int = 0
    unstable: list = field(default_factory=list)
    counterexamples: list = field(default_factory=list)


def _symexec_trial(cfg: GenConfig, i: int, make_symexec=None, make_oracle=None) -> _Trial:
    sp, ctx = cfg.space(), cfg.ctx
    c = _program(cfg, i)
    out = _Trial()
    out.verified = (make_symexec or SymExec)(ctx, BuiltinProver(), bounds=sp).verify(c)
    orc = (make_oracle or Oracle)(ctx, sp)
    try:
        bad = orc.counterexample(c)
    except OutcomeExplosion:
        return _Trial(skipped=True)
    out.valid = bad is None
    out.oracle_states = orc.states_seen
    out.unstable = orc.unstable_states[:3]
    if out.verified and bad is not None:
        out.counterexamples.append(Counterexample(
            i, f"{cfg.seed}:{i}", show_stmt(c), repr(bad), "verified but not valid"))
    return out


def _axsem_trial(cfg: GenConfig, i: int, make_oracle=None) -> _Trial:
    sp, ctx = cfg.space(), cfg.ctx
    c = _program(cfg, i)
    seed = f"{cfg.seed}:{i}"
    out = _Trial()
    orc = (make_oracle or Oracle)(ctx, sp)
    try:
        bad = orc.counterexample(c)
    except OutcomeExplosion:
        return _Trial(skipped=True)
    out.valid = bad is None
    d, err = try_derive(ctx, c, top(sp), sp, Oracle(ctx, sp))
    out.verified = d is not None and check_derivation(ctx, d, sp)
    if out.valid != out.verified:
        why = ("valid but not derivable: " + (err or "derivation rejected by checker")
               if out.valid else "derivable but not valid")
        out.counterexamples.append(Counterexample(
            i, seed, show_stmt(c), repr(bad) if bad is not None else None, why))
    if out.verified:
        out.completeness_checked = True
        w = completeness_counterexample(ctx, d, sp, orc)
        if w is not None:
            out.counterexamples.append(Counterexample(
                i, seed, show_stmt(c), repr(w), "no execution ends inside the derived post"))
    out.oracle_states = orc.states_seen
    out.unstable = orc.unstable_states[:3]
    return out


def _run_trials(rep: DiffReport, trial: Callable, n: int, workers: int) -> DiffReport:
    t0 = time.perf_counter()
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            results = list(pool.map(trial, range(n), chunksize=max(1, n // (4 * workers))))
    else:
        results = map(trial, range(n))
    for r in results:
        rep.trials += 1
        if r.skipped:
            rep.skipped += 1
            continue
        rep.verified += r.verified
        rep.valid += r.valid
        rep.completeness_checked += r.completeness_checked
        if rep.mode == "symexec" and r.valid and not r.verified:
            rep.incomplete += 1
        rep.oracle_states += r.oracle_states
        rep.unstable.extend(r.unstable)
        rep.counterexamples.extend(r.counterexamples)
    rep.seconds = time.perf_counter() - t0
    return rep


def difftest_symexec_vs_oracle(cfg: GenConfig, n: int,
                               make_symexec: Optional[Callable] = None,
                               make_oracle: Optional[Callable] = None,
                               workers: int = 1) -> DiffReport:
    """Soundness of symbolic execution against the reference semantics:
    a verified program must be valid.  Trials are independent; with
    ``workers > 1`` they run in a process pool (factories must pickle)."""
    trial = partial(_symexec_trial, cfg, make_symexec=make_symexec, make_oracle=make_oracle)
    return _run_trials(DiffReport("symexec"), trial, n, workers)


def difftest_op_vs_ax(cfg: GenConfig, n: int, make_oracle: Optional[Callable] = None,
                      workers: int = 1) -> DiffReport:
    """Validity agrees with derivability from ``true``, and every derived
    triple is complete with respect to the reference semantics."""
    trial = partial(_axsem_trial, cfg, make_oracle=make_oracle)
    return _run_trials(DiffReport("axsem"), trial, n, workers)


# ------------------------------------------------------------ mutants

def oracle_without_inhale_framing(ctx, sp, **kw) -> Oracle:
    """Reference semantics that forgets the framing premise of inhale."""
    return Oracle(ctx, sp, check_inhale_framing=False, **kw)


class SymExecKeepingPermission(SymExec):
    """Symbolic execution whose exact consume forgets to subtract."""

    def sconsume(self, s, a, K, at, snapshot):
        if isinstance(a, Acc) and a.perm is not None:
            return self.sexp(s, a.recv, lambda s1, tr: self.extract(
                s1, tr, a.field, ZERO, lambda s2, ch: self.chunk_add(s2, ch, K), at),
                at, snapshot)
        return super().sconsume(s, a, K, at, snapshot)

