"""Executable algebra laws, checked on seeded random states.

Independent random states are rarely compatible, so the sampler draws
small *families* of states that share a store and agree on a base heap,
with masks obtained by splitting a common total.  A fraction of families
is deliberately perturbed (different store, clashing value, overflowing
mask, core-only member) so that the partiality of ``⊕`` is exercised too.

Each law reports how often its premise actually held; a conditional law
that never fires proves nothing, and the report makes that visible.
"""

from __future__ import annotations

import random
import time
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import permutations
from typing import Callable, Optional

from .algebra import HeapLoc, IdfState, combine, core, greater_eq, is_stable, stabilize
from .values import Ref


@dataclass(frozen=True)
class SampleSpace:
    int_range: tuple = (0, 3)
    refs: int = 2
    denoms: tuple = (1, 2, 4)
    fields: tuple = ("f", "g")
    vars: tuple = ("n", "x")

    def grid(self) -> list:
        return sorted({Fraction(k, d) for d in self.denoms for k in range(d + 1)})

    def locations(self) -> list:
        return [HeapLoc(Ref(i), f) for i in range(1, self.refs + 1) for f in self.fields]

    def value(self, rng: random.Random):
        lo, hi = self.int_range
        return rng.randint(lo, hi)

    def store(self, rng: random.Random) -> dict:
        return {"n": self.value(rng), "x": Ref(rng.randint(0, self.refs))}


def _split(rng: random.Random, total: Fraction, k: int, grid: list) -> list:
    parts = []
    left = total
    for _ in range(k - 1):
        p = rng.choice([g for g in grid if g <= left])
        parts.append(p)
        left -= p
    parts.append(left)
    rng.shuffle(parts)
    return parts


def random_family(rng: random.Random, k: int, sp: SampleSpace = SampleSpace()) -> list:
    """``k`` states, compatible with each other most of the time."""
    grid = sp.grid()
    store = sp.store(rng)
    base = {loc: sp.value(rng) for loc in sp.locations()}
    heaps = [{} for _ in range(k)]
    masks = [{} for _ in range(k)]
    overflow = rng.random() < 0.1
    for loc in base:
        total = rng.choice(grid)
        parts = ([rng.choice(grid) for _ in range(k)] if overflow
                 else _split(rng, total, k, grid))
        for i in range(k):
            if parts[i] or rng.random() < 0.4:
                heaps[i][loc] = base[loc]
                masks[i][loc] = parts[i]
    if rng.random() < 0.1:
        i = rng.randrange(k)
        loc = rng.choice(list(base))
        heaps[i][loc] = (base[loc] + 1) % (sp.int_range[1] + 1)
        masks[i].setdefault(loc, Fraction(0))
    stores = [store] * k
    if rng.random() < 0.05:
        i = rng.randrange(k)
        stores = list(stores)
        stores[i] = dict(store, n=(store["n"] + 1) % (sp.int_range[1] + 1))
    out = [IdfState(stores[i], heaps[i], masks[i]) for i in range(k)]
    if rng.random() < 0.15:
        i = rng.randrange(k)
        out[i] = core(out[i])
    if k >= 3 and rng.random() < 0.2:
        # same core, possibly different mask: feeds cancellativity
        a = out[1]
        m = {loc: rng.choice(grid) for loc in a.mask_map}
        out[2] = IdfState(a.store_map, a.heap_map, m)
    return out


# -------------------------------------------------------------- the laws
#
# Each law takes a triple and returns None when its premise does not hold,
# True when it holds, False on a violation.

def _same(x: Optional[IdfState], y: Optional[IdfState]) -> bool:
    return x == y


def commutativity(a, b, c):
    return _same(combine(a, b), combine(b, a))


def associativity(a, b, c):
    ab, bc = combine(a, b), combine(b, c)
    left = None if ab is None else combine(ab, c)
    right = None if bc is None else combine(a, bc)
    return _same(left, right)


def positivity(a, b, c):
    ab = combine(a, b)
    if ab is None or combine(ab, ab) != ab:
        return None
    return combine(a, a) == a


def core_neutral(a, b, c):
    return combine(a, core(a)) == a


def core_duplicable(a, b, c):
    ca = core(a)
    return combine(ca, ca) == ca


def core_maximal(a, b, c):
    if combine(a, b) != a:
        return None
    return greater_eq(core(a), b)


def core_additive(a, b, c):
    ab = combine(a, b)
    if ab is None:
        return None
    return core(ab) == combine(core(a), core(b))


def cancellative(a, b, c):
    # x ⊕ a = x ⊕ b and |a| = |b| imply a = b, with x := first argument
    xb, xc = combine(a, b), combine(a, c)
    if xb is None or xb != xc or core(b) != core(c):
        return None
    return b == c


def stable_fixed(a, b, c):
    if not is_stable(a):
        return None
    return stabilize(a) == a


def stabilize_stable(a, b, c):
    return is_stable(stabilize(a))


def stabilize_additive(a, b, c):
    ab = combine(a, b)
    if ab is None:
        return None
    return stabilize(ab) == combine(stabilize(a), stabilize(b))


def stable_core_split(a, b, c):
    return combine(stabilize(a), core(a)) == a


def stable_core_unit(a, b, c):
    sc = stabilize(core(c))
    if combine(b, sc) != a:
        return None
    return a == b


def antisymmetry(a, b, c):
    if not (greater_eq(a, b) and greater_eq(b, a)):
        return None
    return a == b


@dataclass(frozen=True)
class Law:
    name: str
    check: Callable
    arity: int


LAWS = (
    Law("commutativity", commutativity, 2),
    Law("associativity", associativity, 3),
    Law("positivity", positivity, 2),
    Law("core-neutral", core_neutral, 1),
    Law("core-duplicable", core_duplicable, 1),
    Law("core-maximal", core_maximal, 2),
    Law("core-additive", core_additive, 2),
    Law("cancellative", cancellative, 3),
    Law("stable-fixed", stable_fixed, 1),
    Law("stabilize-stable", stabilize_stable, 1),
    Law("stabilize-additive", stabilize_additive, 2),
    Law("stable-core-split", stable_core_split, 1),
    Law("stable-core-unit", stable_core_unit, 3),
)

EXTRA_LAWS = (Law("antisymmetry", antisymmetry, 2),)


@dataclass
class LawStats:
    name: str
    checked: int = 0
    fired: int = 0
    violations: int = 0
    example: Optional[tuple] = None


@dataclass
class LawReport:
    samples: int
    seed: int
    states: int
    seconds: float
    stats: list = field(default_factory=list)

    @property
    def violations(self) -> int:
        return sum(s.violations for s in self.stats)

    @property
    def ok(self) -> bool:
        return self.violations == 0

    def lines(self) -> list:
        out = [f"{s.name:20s} checked={s.checked:7d} fired={s.fired:7d} "
               f"violations={s.violations}" for s in self.stats]
        out.append(f"{self.samples} samples, {self.states} states, seed {self.seed}, "
                   f"{self.seconds:.2f}s, {self.violations} violations")
        return out


def check_laws(states: int = 10_000, seed: int = 0, sp: SampleSpace = SampleSpace(),
               laws=LAWS + EXTRA_LAWS) -> LawReport:
    """Draw at least ``states`` random states, as triples, and evaluate every
    law on every ordering of each triple."""
    samples = -(-states // 3)
    rng = random.Random(seed)
    stats = {l.name: LawStats(l.name) for l in laws}
    started = time.perf_counter()
    states = 0
    for _ in range(samples):
        fam = random_family(rng, 3, sp)
        states += 3
        for order in permutations(fam):
            for law in laws:
                st = stats[law.name]
                st.checked += 1
                res = law.check(*order)
                if res is None:
                    continue
                st.fired += 1
                if not res:
                    st.violations += 1
                    if st.example is None:
                        st.example = order
    return LawReport(samples, seed, states, time.perf_counter() - started,
                     list(stats.values()))
