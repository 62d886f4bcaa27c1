"""Stable measures, outer measures and the extension theorem.

A stable measure assigns one classical measure per atom, stored as
exact masses on the blocks of its domain.  Localization and additivity
then hold by construction; the behavioral checker still verifies the
whole axiom list on any measure-shaped object, so deliberately broken
evaluators can be caught.  Pre-measures live on stable rings; their
outer measures are computed by exact enumeration of finite ring covers
and extend to the generated sigma-algebra.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations, islice
from typing import Iterable, Iterator, Mapping, Sequence

from .algebra import (
    INF,
    Event,
    ExtValue,
    Field,
    ext_add,
    ext_mul,
    ext_sub,
    ext_sum,
    format_value,
    is_finite,
)
from .condsets import (
    ConditionalSet,
    PointFun,
    cond_difference,
    cond_intersection,
    cond_le,
    cond_union,
)
from .sigma import SetRing, StableRing, StableSigmaAlgebra, generate_sigma


class StableMeasure:
    """Exact extended-valued masses on the blocks of a stable domain.

    The domain is a stable sigma-algebra, or a stable ring for
    pre-measures; either way each atom carries a block partition and
    the measure stores one nonnegative (possibly infinite) mass per
    block.  Evaluation localizes to the support and sums blocks.
    """

    __slots__ = ("domain", "block_mass")

    def __init__(self, domain, block_mass: Mapping[str, Mapping[frozenset, ExtValue]]):
        self.domain = domain
        table: dict[str, dict[frozenset, ExtValue]] = {}
        for a in domain.algebra.atoms:
            blocks = domain.ring_at(a).blocks
            given = dict(block_mass.get(a, {}))
            if set(given) != set(blocks):
                raise ValueError(f"masses at atom {a!r} must cover exactly the domain blocks")
            for b, m in given.items():
                if m is not INF and m < 0:
                    raise ValueError(f"negative mass {format_value(m)} at atom {a!r}")
            table[a] = given
        self.block_mass = table

    @classmethod
    def from_point_masses(cls, domain, point_mass: Mapping[str, Mapping]) -> "StableMeasure":
        """Sum per-point masses into block masses; finer input is allowed."""
        table = {}
        for a in domain.algebra.atoms:
            pm = point_mass[a]
            table[a] = {b: ext_sum(pm[p] for p in b) for b in domain.ring_at(a).blocks}
        return cls(domain, table)

    @classmethod
    def dirac(cls, domain, x: PointFun) -> "StableMeasure":
        """Unit mass at one chosen point per atom."""
        table = {}
        for a in domain.algebra.atoms:
            table[a] = {b: Fraction(1 if x[a] in b else 0) for b in domain.ring_at(a).blocks}
        return cls(domain, table)

    @classmethod
    def zero(cls, domain) -> "StableMeasure":
        return cls(domain, {a: {b: Fraction(0) for b in domain.ring_at(a).blocks} for a in domain.algebra.atoms})

    @property
    def algebra(self):
        return self.domain.algebra

    def eval(self, v: ConditionalSet) -> Field:
        """Mass of a conditional set, atom by atom; zero off the support."""
        if not self.domain.contains(v):
            raise ValueError(f"not measurable: {v!r}")
        values: dict[str, ExtValue] = {}
        for a in self.algebra.atoms:
            if a in v.support:
                fiber = v.fibers[a]
                values[a] = ext_sum(m for b, m in self.block_mass[a].items() if b <= fiber)
            else:
                values[a] = Fraction(0)
        return Field(self.algebra, values)

    def total(self) -> Field:
        """Mass of the whole covered region at every atom."""
        return Field(self.algebra, {a: ext_sum(self.block_mass[a].values()) for a in self.algebra.atoms})

    def is_probability(self) -> bool:
        t = self.total()
        return all(t[a] == 1 for a in self.algebra.atoms)

    def is_finite(self) -> bool:
        return self.total().is_finite()

    def scale(self, r: "Field | Fraction | int") -> "StableMeasure":
        table = {}
        for a in self.algebra.atoms:
            factor = r[a] if isinstance(r, Field) else Fraction(r)
            if factor is not INF and factor < 0:
                raise ValueError("negative scaling of a measure")
            table[a] = {b: ext_mul(factor, m) for b, m in self.block_mass[a].items()}
        return StableMeasure(self.domain, table)

    def add(self, other: "StableMeasure") -> "StableMeasure":
        if self.domain != other.domain:
            raise ValueError("measures live on different domains")
        table = {
            a: {b: ext_add(m, other.block_mass[a][b]) for b, m in self.block_mass[a].items()}
            for a in self.algebra.atoms
        }
        return StableMeasure(self.domain, table)

    def __repr__(self) -> str:
        parts = []
        for a in self.algebra.atoms:
            inner = ", ".join(
                "{" + ",".join(map(str, sorted(b, key=str))) + "}=" + format_value(m)
                for b, m in sorted(self.block_mass[a].items(), key=lambda kv: sorted(map(str, kv[0])))
            )
            parts.append(f"{a}: {inner}")
        return "StableMeasure(" + "; ".join(parts) + ")"


def sample_members(domain, cap: int, seed: int = 0) -> list[ConditionalSet]:
    """A deterministic spread of domain members, exhaustive when small."""
    if domain.member_count() <= cap:
        return list(domain.members())
    rng = random.Random(seed)
    atoms = domain.algebra.atoms
    out = {next(iter(islice(domain.members(), 1)))}
    per_atom_options = {}
    for a in atoms:
        opts = [None] + [m for m in domain.ring_at(a).members() if m]
        per_atom_options[a] = opts
    while len(out) < cap:
        fibers = {}
        for a in atoms:
            choice = rng.choice(per_atom_options[a])
            if choice is not None:
                fibers[a] = choice
        out.add(ConditionalSet(fibers.keys(), fibers))
    return sorted(out, key=repr)


@dataclass(frozen=True)
class AxiomReport:
    ok: bool
    axiom: str | None = None
    witness: str | None = None

    def __bool__(self) -> bool:
        return self.ok


def check_measure_axioms(mu, *, cap: int = 200, seed: int = 0) -> AxiomReport:
    """Behavioral check of the measure axiom list on sampled members.

    Verifies localization, additivity on disjoint unions, modularity,
    monotonicity, guarded subtraction, subadditivity and continuity
    along increasing and decreasing chains.  Returns the first
    violation found, with a witness.
    """
    algebra = mu.domain.algebra
    members = sample_members(mu.domain, cap, seed)

    def fail(axiom: str, witness: str) -> AxiomReport:
        return AxiomReport(False, axiom, witness)

    events: list[Event] = [frozenset((a,)) for a in algebra.atoms]
    events.append(frozenset(algebra.atoms))
    for v in members:
        mv = mu.eval(v)
        for ev in events:
            if mu.eval(v.restrict(ev)) != mv.restrict(ev):
                return fail("localization", f"{v!r} restricted to {sorted(ev)}")
        if any(mv[a] != 0 for a in algebra.atoms if a not in v.support):
            return fail("localization", f"{v!r} carries mass off its support")

    pairs = [(v, w) for i, v in enumerate(members) for w in members[i:]]
    for v, w in pairs:
        mv, mw = mu.eval(v), mu.eval(w)
        u = cond_union([v, w])
        i = cond_intersection([v, w])
        if not mu.domain.contains(u) or not mu.domain.contains(i):
            continue
        mu_u, mu_i = mu.eval(u), mu.eval(i)
        if i.is_bottom and mu_u != mv + mw:
            return fail("additivity", f"{v!r} and {w!r}")
        if mu_u + mu_i != mv + mw:
            return fail("modularity", f"{v!r} and {w!r}")
        if not mu_u.le(mv + mw):
            return fail("subadditivity", f"{v!r} and {w!r}")
        for lo, hi, mlo, mhi in ((v, w, mv, mw), (w, v, mw, mv)):
            if cond_le(lo, hi):
                if not mlo.le(mhi):
                    return fail("monotonicity", f"{lo!r} inside {hi!r}")
                diff = cond_difference(hi, lo)
                if mu.domain.contains(diff):
                    mdiff = mu.eval(diff)
                    for a in algebra.atoms:
                        if is_finite(mlo[a]) and mdiff[a] != ext_sub(mhi[a], mlo[a]):
                            return fail("subtraction", f"{hi!r} minus {lo!r} at atom {a}")

    rng = random.Random(seed + 1)
    for _ in range(min(20, len(members))):
        chain_members = rng.sample(members, min(len(members), 4))
        acc = chain_members[0]
        chain = [acc]
        for v in chain_members[1:]:
            acc = cond_union([acc, v])
            chain.append(acc)
        if not all(mu.domain.contains(c) for c in chain):
            continue
        values = [mu.eval(c) for c in chain]
        for lo, hi in zip(values, values[1:]):
            if not lo.le(hi):
                return fail("continuity-below", f"chain {chain!r} is not monotone in mass")
        if values[-1] != mu.eval(chain[-1]):
            return fail("continuity-below", f"chain {chain!r} misses its limit")
        dec = chain_members[0]
        dchain = [dec]
        for v in chain_members[1:]:
            dec = cond_intersection([dec, v])
            dchain.append(dec)
        if not all(mu.domain.contains(c) for c in dchain):
            continue
        dvalues = [mu.eval(c) for c in dchain]
        if dvalues[0].is_finite():
            for hi, lo in zip(dvalues, dvalues[1:]):
                if not lo.le(hi):
                    return fail("continuity-above", f"chain {dchain!r} is not monotone in mass")
            if dvalues[-1] != mu.eval(dchain[-1]):
                return fail("continuity-above", f"chain {dchain!r} misses its limit")
    return AxiomReport(True)


class OuterMeasure:
    """Outer measure induced by a pre-measure on a stable ring.

    Evaluation works on every conditional set: on the coverable part it
    is the exact infimum over finite ring covers, found by enumerating
    irredundant cover combinations; off the coverable part it is
    infinite, and off the support it is zero.
    """

    __slots__ = ("premeasure", "_member_masses")

    def __init__(self, premeasure: StableMeasure):
        if not isinstance(premeasure.domain, StableRing):
            raise ValueError("outer measures are built from pre-measures on stable rings")
        self.premeasure = premeasure
        self._member_masses = {}
        for a in premeasure.algebra.atoms:
            ring = premeasure.domain.ring_at(a)
            table = {}
            for m in ring.members():
                if m:
                    table[m] = ext_sum(premeasure.block_mass[a][b] for b in ring.blocks if b <= m)
            self._member_masses[a] = table

    @property
    def algebra(self):
        return self.premeasure.algebra

    @property
    def cspace(self):
        return self.premeasure.domain.cspace

    def coverable_event(self, v: ConditionalSet) -> Event:
        """Largest event on which the set can be covered by ring members."""
        ring = self.premeasure.domain

        def coverable(ev: Event) -> bool:
            return all(a not in v.support or v.fibers[a] <= ring.ring_at(a).covered for a in ev)

        return self.algebra.largest_event(coverable)

    def evaluate(self, v: ConditionalSet) -> Field:
        values: dict[str, ExtValue] = {}
        for a in self.algebra.atoms:
            if a not in v.support:
                values[a] = Fraction(0)
                continue
            fiber = v.fibers[a]
            table = self._member_masses[a]
            if not fiber <= self.premeasure.domain.ring_at(a).covered:
                values[a] = INF
                continue
            best: ExtValue | None = None
            candidates = list(table)
            for k in range(1, len(fiber) + 1):
                for combo in combinations(candidates, k):
                    if fiber <= frozenset().union(*combo):
                        total = ext_sum(table[m] for m in combo)
                        if best is None or total < best:
                            best = total
            values[a] = INF if best is None else best
        return Field(self.algebra, values)


def outer_from_premeasure(premeasure: StableMeasure) -> OuterMeasure:
    return OuterMeasure(premeasure)


def is_caratheodory_measurable(
    outer: OuterMeasure,
    v: ConditionalSet,
    tests: Iterable[ConditionalSet] | None = None,
    *,
    cap: int = 4096,
) -> bool:
    """Exact splitting test: the set cuts every test set additively."""
    if tests is None:
        cspace = outer.cspace
        if cspace.count_sets() <= cap:
            tests = cspace.all_sets()
        else:
            tests = sample_members(outer.premeasure.domain, cap)
    for w in tests:
        whole = outer.evaluate(w)
        inner = outer.evaluate(cond_intersection([w, v]))
        rest = outer.evaluate(cond_difference(w, v))
        if whole != inner + rest:
            return False
    return True


def caratheodory_extend(premeasure: StableMeasure) -> StableMeasure:
    """Extension of a ring pre-measure to the generated sigma-algebra.

    The domain is generated on the stable side from single-atom block
    sets; each block of the result gets its outer mass, which agrees
    with the pre-measure on the ring.
    """
    ring = premeasure.domain
    cspace = ring.cspace
    generator = []
    for a in cspace.algebra.atoms:
        for b in ring.ring_at(a).blocks:
            generator.append(ConditionalSet((a,), {a: b}))
    sigma = generate_sigma(cspace, generator)
    outer = outer_from_premeasure(premeasure)
    table: dict[str, dict[frozenset, ExtValue]] = {}
    for a in cspace.algebra.atoms:
        table[a] = {}
        for b in sigma.ring_at(a).blocks:
            table[a][b] = outer.evaluate(ConditionalSet((a,), {a: b}))[a]
    return StableMeasure(sigma, table)


def uniqueness_check(mu: StableMeasure, nu: StableMeasure, generator: Sequence[ConditionalSet]) -> bool:
    """Two measures agreeing on a good generator agree on what it generates.

    Premises checked: the generator is closed under pairwise meets and
    contains the whole space with finite mass under both measures (the
    finite form of an exhausting sequence).  Violated premises raise.
    """
    generator = list(generator)
    domain = mu.domain
    if not isinstance(domain, StableSigmaAlgebra) or domain != nu.domain:
        raise ValueError("uniqueness needs two measures on one sigma-algebra")
    gen_set = frozenset(generator)
    for v in generator:
        for w in generator:
            if cond_intersection([v, w]) not in gen_set:
                raise ValueError("generator is not closed under pairwise meets")
    top = domain.cspace.top
    if top not in gen_set:
        raise ValueError("generator has no exhausting sequence: the whole space is missing")
    if not (mu.eval(top).is_finite() and nu.eval(top).is_finite()):
        raise ValueError("exhausting sequence does not have finite mass")
    for v in generator:
        if mu.eval(v) != nu.eval(v):
            return False
    sigma = generate_sigma(domain.cspace, generator)
    return all(mu.eval(v) == nu.eval(v) for v in sigma.members())
