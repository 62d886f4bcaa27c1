"""Stable collections of conditional sets: rings, Dynkin systems, sigma-algebras.

A collection is stable when it is closed under concatenation along
partitions; in a finite atomic algebra that means closed under all
atomwise mixes of its members.  Stable sigma-algebras then factor into
one classical field of sets per atom, which gives a compact block
representation next to the extensional member view.  Generation is a
least-fixpoint closure; an independent fiberwise route recomputes it
through classical signature partitions for cross-checking.
"""

from __future__ import annotations

from itertools import product
from typing import Callable, Iterable, Iterator, Mapping, Sequence

from . import classical
from .algebra import Event, MeasureAlgebra
from .condsets import (
    BOTTOM,
    CondSpace,
    ConditionalSet,
    GroundSpace,
    Point,
    PointFun,
    cond_intersection,
    cond_union,
)


class SetRing:
    """A classical ring of subsets of a finite point set, stored by its blocks.

    The blocks are the minimal nonempty members; they partition the
    covered part of the universe and every member is a union of blocks.
    A ring whose blocks cover the whole universe is a field.
    """

    __slots__ = ("blocks", "covered")

    def __init__(self, blocks: Iterable[frozenset]):
        blocks = [frozenset(b) for b in blocks]
        seen: set = set()
        for b in blocks:
            if not b:
                raise ValueError("empty block")
            if seen & b:
                raise ValueError("blocks must be disjoint")
            seen |= b
        self.blocks = tuple(sorted(blocks, key=lambda b: sorted(map(str, b))))
        self.covered = frozenset(seen)

    @classmethod
    def generated(cls, sets: Iterable[frozenset]) -> "SetRing":
        """Ring generated by arbitrary subsets: signature blocks on their union."""
        sets = [frozenset(s) for s in sets]
        covered = frozenset().union(*sets) if sets else frozenset()
        return cls(classical.blocks_from_sets(covered, sets))

    @classmethod
    def from_members(cls, members: Iterable[frozenset]) -> "SetRing":
        """Recover the blocks of an explicitly listed ring, validating closure."""
        ms = {frozenset(m) for m in members}
        ms.add(frozenset())
        for a in ms:
            for b in ms:
                if a | b not in ms or a - b not in ms:
                    raise ValueError("member list is not closed under union and difference")
        covered = frozenset().union(*ms)
        blocks = classical.blocks_from_sets(covered, list(ms))
        return cls(blocks)

    def is_field_on(self, universe: frozenset) -> bool:
        return self.covered == frozenset(universe)

    def contains(self, s: frozenset) -> bool:
        if not s <= self.covered:
            return False
        return all(not (b & s) or b <= s for b in self.blocks)

    def members(self) -> Iterator[frozenset]:
        for mask in range(1 << len(self.blocks)):
            yield frozenset().union(*(b for i, b in enumerate(self.blocks) if mask >> i & 1))

    def member_count(self) -> int:
        return 1 << len(self.blocks)

    def blocks_inside(self, s: frozenset) -> tuple:
        if not self.contains(s):
            raise ValueError("not a member of this ring")
        return tuple(b for b in self.blocks if b <= s)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SetRing):
            return NotImplemented
        return frozenset(self.blocks) == frozenset(other.blocks)

    def __hash__(self) -> int:
        return hash(frozenset(self.blocks))

    def __repr__(self) -> str:
        inner = ", ".join("{" + ",".join(map(str, sorted(b, key=str))) + "}" for b in self.blocks)
        return f"SetRing({inner})"


class _PerAtomFamily:
    """Shared behavior of stable rings and stable sigma-algebras.

    Membership of a conditional set is atom-local: each supported fiber
    must belong to that atom's classical collection.
    """

    __slots__ = ("cspace", "per_atom")

    def __init__(self, cspace: CondSpace, per_atom: Mapping[str, SetRing]):
        if set(per_atom) != set(cspace.algebra.atoms):
            raise ValueError("per-atom collections must cover every atom")
        self.cspace = cspace
        self.per_atom = dict(per_atom)

    @property
    def algebra(self) -> MeasureAlgebra:
        return self.cspace.algebra

    @property
    def space(self) -> GroundSpace:
        return self.cspace.space

    def ring_at(self, atom: str) -> SetRing:
        return self.per_atom[atom]

    def contains(self, v: ConditionalSet) -> bool:
        if not v.support <= set(self.algebra.atoms):
            return False
        return all(self.per_atom[a].contains(v.fibers[a]) for a in v.support)

    def members(self) -> Iterator[ConditionalSet]:
        """All members, by mixing per-atom options (exponential; small use only)."""
        options = []
        for a in self.algebra.atoms:
            opts: list[frozenset | None] = [None]
            opts.extend(m for m in self.per_atom[a].members() if m)
            options.append(opts)
        for combo in product(*options):
            fibers = {a: f for a, f in zip(self.algebra.atoms, combo) if f is not None}
            yield ConditionalSet(fibers.keys(), fibers)

    def member_count(self) -> int:
        n = 1
        for a in self.algebra.atoms:
            n *= self.per_atom[a].member_count()
        return n

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, _PerAtomFamily):
            return NotImplemented
        return self.algebra.atoms == other.algebra.atoms and self.per_atom == other.per_atom

    def __hash__(self) -> int:
        return hash((self.algebra.atoms, tuple(self.per_atom[a] for a in self.algebra.atoms)))


class StableRing(_PerAtomFamily):
    """A stable ring: per atom a classical ring of fibers, any support allowed."""

    @classmethod
    def from_fiber_sets(cls, cspace: CondSpace, per_atom_sets: Mapping[str, Iterable[frozenset]]) -> "StableRing":
        per_atom = {a: SetRing.generated(list(per_atom_sets.get(a, ()))) for a in cspace.algebra.atoms}
        return cls(cspace, per_atom)

    @classmethod
    def from_member_lists(cls, cspace: CondSpace, per_atom_members: Mapping[str, Iterable[frozenset]]) -> "StableRing":
        per_atom = {a: SetRing.from_members(list(per_atom_members[a])) for a in cspace.algebra.atoms}
        return cls(cspace, per_atom)

    def __repr__(self) -> str:
        inner = "; ".join(f"{a}:{self.per_atom[a]!r}" for a in self.algebra.atoms)
        return f"StableRing({inner})"


class StableSigmaAlgebra(_PerAtomFamily):
    """A stable sigma-algebra: per atom a classical field on the ground points."""

    def __init__(self, cspace: CondSpace, per_atom: Mapping[str, SetRing]):
        super().__init__(cspace, per_atom)
        for a, ring in self.per_atom.items():
            if not ring.is_field_on(cspace.space.point_set):
                raise ValueError(f"collection at atom {a!r} is not a field on the ground points")

    @classmethod
    def discrete(cls, cspace: CondSpace) -> "StableSigmaAlgebra":
        blocks = [frozenset((p,)) for p in cspace.space.points]
        return cls(cspace, {a: SetRing(blocks) for a in cspace.algebra.atoms})

    @classmethod
    def trivial(cls, cspace: CondSpace) -> "StableSigmaAlgebra":
        blocks = [cspace.space.point_set]
        return cls(cspace, {a: SetRing(blocks) for a in cspace.algebra.atoms})

    @classmethod
    def from_blocks(cls, cspace: CondSpace, blocks_per_atom: Mapping[str, Iterable[frozenset]]) -> "StableSigmaAlgebra":
        return cls(cspace, {a: SetRing(list(bs)) for a, bs in blocks_per_atom.items()})

    @classmethod
    def from_members(cls, cspace: CondSpace, members: Iterable[ConditionalSet]) -> "StableSigmaAlgebra":
        """Recover the per-atom fields from an extensional member list.

        Validates that the member list really is the full mix of its
        per-atom fields, which is exactly the stable-closure property.
        """
        members = frozenset(members)
        per_atom: dict[str, SetRing] = {}
        for a in cspace.algebra.atoms:
            fibers = {v.fibers[a] for v in members if a in v.support}
            fibers.add(cspace.space.point_set)
            fibers.add(frozenset())
            per_atom[a] = SetRing.from_members(fibers)
        out = cls(cspace, per_atom)
        if out.member_count() != len(members) or not all(out.contains(v) for v in members):
            raise ValueError("member list is not stably closed (not a product of per-atom fields)")
        return out

    def blocks(self, atom: str) -> tuple:
        return self.per_atom[atom].blocks

    def __repr__(self) -> str:
        inner = "; ".join(f"{a}:{self.per_atom[a]!r}" for a in self.algebra.atoms)
        return f"StableSigmaAlgebra({inner})"


def _mix_options(algebra: MeasureAlgebra, members: Iterable[ConditionalSet]) -> list[list]:
    options: dict[str, set] = {a: set() for a in algebra.atoms}
    for v in members:
        for a in algebra.atoms:
            options[a].add(v.fibers.get(a))
    return [sorted(options[a], key=lambda f: (f is None, sorted(map(str, f or ())))) for a in algebra.atoms]


def mix_closure(cspace: CondSpace, members: Iterable[ConditionalSet]) -> frozenset:
    """Closure under concatenation along partitions: all atomwise mixes."""
    members = list(members)
    if not members:
        return frozenset()
    out = set()
    for combo in product(*_mix_options(cspace.algebra, members)):
        fibers = {a: f for a, f in zip(cspace.algebra.atoms, combo) if f is not None}
        out.add(ConditionalSet(fibers.keys(), fibers))
    return frozenset(out)


def is_stable_collection(cspace: CondSpace, members: Iterable[ConditionalSet]) -> bool:
    """Nonempty and closed under every concatenation of its own members."""
    ms = frozenset(members)
    if not ms:
        return False
    if not all(cspace.contains(v) for v in ms):
        raise ValueError("members outside the conditional power set")
    for combo in product(*_mix_options(cspace.algebra, ms)):
        fibers = {a: f for a, f in zip(cspace.algebra.atoms, combo) if f is not None}
        if ConditionalSet(fibers.keys(), fibers) not in ms:
            return False
    return True


def classify(cspace: CondSpace, members: Iterable[ConditionalSet]) -> str:
    """Strongest applicable label: 'sigma', 'dynkin', 'ring' or 'none'."""
    ms = frozenset(members)
    if not ms or not is_stable_collection(cspace, ms):
        return "none"
    listed = list(ms)
    has_top = cspace.top in ms
    complements = all(cspace.complement(v) in ms for v in listed)
    all_unions = all(cond_union([v, w]) in ms for v in listed for w in listed)
    if has_top and complements and all_unions:
        return "sigma"
    disjoint_unions = all(
        cond_union([v, w]) in ms
        for v in listed
        for w in listed
        if cond_intersection([v, w]).is_bottom
    )
    if has_top and complements and disjoint_unions:
        return "dynkin"
    relative = all(cond_intersection([v, cspace.complement(w)]) in ms for v in listed for w in listed)
    if relative and all_unions:
        return "ring"
    return "none"


def _member_closure(cspace: CondSpace, seeds: Iterable[ConditionalSet], *, disjoint_unions: bool) -> frozenset:
    """Least fixpoint of complement, (disjoint) pairwise union and concatenation."""
    family: set[ConditionalSet] = set(seeds)
    family.add(cspace.top)
    fresh = list(family)
    while fresh:
        additions: set[ConditionalSet] = set()

        def offer(v: ConditionalSet) -> None:
            if v not in family and v not in additions:
                additions.add(v)

        snapshot = list(family)
        for v in fresh:
            offer(cspace.complement(v))
            for w in snapshot:
                if disjoint_unions and not cond_intersection([v, w]).is_bottom:
                    continue
                offer(cond_union([v, w]))
        family |= additions
        for v in mix_closure(cspace, family):
            if v not in family:
                additions.add(v)
                family.add(v)
        fresh = list(additions)
    return frozenset(family)


def generate_sigma_extensional(cspace: CondSpace, generator: Iterable[ConditionalSet]) -> frozenset:
    """Member-level closure; the reference path for small instances."""
    return _member_closure(cspace, generator, disjoint_unions=False)


def generate_sigma(cspace: CondSpace, generator: Iterable[ConditionalSet]) -> StableSigmaAlgebra:
    """Least stable sigma-algebra containing the generator.

    Computed per atom: the option set (absent marker plus fibers) is
    closed under the lifted complement and union, which is the same
    fixpoint as the member-level closure but without re-enumerating
    cross-atom pairs.
    """
    e = cspace.space.point_set
    options: dict[str, set] = {a: {e} for a in cspace.algebra.atoms}
    for v in generator:
        if not cspace.contains(v):
            raise ValueError("generator member outside the conditional power set")
        for a in cspace.algebra.atoms:
            options[a].add(v.fibers.get(a))
    per_atom: dict[str, SetRing] = {}
    for a in cspace.algebra.atoms:
        opts = set(options[a])
        while True:
            fresh = set()
            for o in opts:
                c = e if o is None else (e - o if o != e else None)
                if c not in opts:
                    fresh.add(c)
            listed = list(opts)
            for o1 in listed:
                for o2 in listed:
                    u = o2 if o1 is None else (o1 if o2 is None else o1 | o2)
                    if u not in opts and u not in fresh:
                        fresh.add(u)
            if not fresh:
                break
            opts |= fresh
        members = {frozenset()} | {o for o in opts if o is not None}
        per_atom[a] = SetRing.from_members(members)
    return StableSigmaAlgebra(cspace, per_atom)


def generate_dynkin(cspace: CondSpace, generator: Iterable[ConditionalSet]) -> frozenset:
    """Least stable Dynkin system containing the generator, extensionally.

    Disjointness of a pair is a cross-atom condition, so this closure
    has to stay at the member level.
    """
    return _member_closure(cspace, generator, disjoint_unions=True)


def pi_lambda_check(cspace: CondSpace, generator: Iterable[ConditionalSet]) -> bool:
    """Generated sigma-algebra and generated Dynkin system coincide.

    Guaranteed for stable generators closed under pairwise meets; may
    genuinely fail otherwise.
    """
    gen = list(generator)
    sigma_members = frozenset(generate_sigma(cspace, gen).members())
    return sigma_members == generate_dynkin(cspace, gen)


def fiberwise_sigma_oracle(cspace: CondSpace, generator: Iterable[ConditionalSet]) -> StableSigmaAlgebra:
    """Independent route: classical signature-partition field generation per atom."""
    e = cspace.space.point_set
    per_atom: dict[str, SetRing] = {}
    for a in cspace.algebra.atoms:
        gens = [v.fibers[a] for v in generator if a in v.support]
        gens.append(e)
        per_atom[a] = SetRing(classical.blocks_from_sets(e, gens))
    return StableSigmaAlgebra(cspace, per_atom)


class StableFunction:
    """A stable point map between ground spaces: one classical map per atom."""

    __slots__ = ("maps",)

    def __init__(self, maps: Mapping[str, Mapping[Point, Point]]):
        self.maps = {a: dict(m) for a, m in maps.items()}

    @classmethod
    def same_on_all_atoms(cls, atoms: Sequence[str], m: Mapping[Point, Point]) -> "StableFunction":
        return cls({a: m for a in atoms})

    def apply(self, x: PointFun) -> dict:
        return {a: self.maps[a][x[a]] for a in self.maps}

    def __repr__(self) -> str:
        return f"StableFunction(atoms={sorted(self.maps)})"


def cond_preimage(f: StableFunction, w: ConditionalSet) -> ConditionalSet:
    """Preimage of a conditional set: supported where some point maps in."""
    fibers: dict[str, frozenset] = {}
    for a in w.support:
        pre = frozenset(p for p, q in f.maps[a].items() if q in w.fibers[a])
        if pre:
            fibers[a] = pre
    return ConditionalSet(fibers.keys(), fibers)


def is_stably_measurable(
    f: StableFunction,
    domain: StableSigmaAlgebra,
    targets: Iterable[ConditionalSet],
) -> bool:
    """Every target preimage lands in the domain sigma-algebra.

    Passing only generators of the target sigma-algebra suffices.
    """
    return all(domain.contains(cond_preimage(f, w)) for w in targets)
