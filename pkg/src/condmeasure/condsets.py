"""Conditional sets over a finite ground space and their complete lattice.

A conditional set is a region that may live only on part of the measure
algebra: a support event together with one nonempty fiber of ground
points per supported atom.  The empty-support object is the bottom
element and is shared by all spaces.  Union, intersection, complement
and concatenation along partitions make the collection of conditional
sets a complete Boolean algebra; the operations here compute each of
them exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Hashable, Iterable, Iterator, Mapping, Sequence

from .algebra import Event, MeasureAlgebra

Point = Hashable
#: A total choice of one ground point per atom.
PointFun = Mapping[str, Point]


@dataclass(frozen=True)
class GroundSpace:
    """A finite set of ground points, optionally with rational coordinates.

    Coordinates are only needed when a space has to be read as a subset
    of the real line (the cumulative-distribution construction); plain
    set-level work ignores them.
    """

    points: tuple
    coords: Mapping[Point, Fraction] | None = None

    def __post_init__(self):
        if not self.points:
            raise ValueError("ground space needs at least one point")
        if len(set(self.points)) != len(self.points):
            raise ValueError("duplicate ground points")
        if self.coords is not None:
            if set(self.coords) != set(self.points):
                raise ValueError("coords must cover exactly the ground points")
            if len(set(self.coords.values())) != len(self.points):
                raise ValueError("coords must be injective")

    @property
    def point_set(self) -> frozenset:
        return frozenset(self.points)

    def sort_key(self):
        order = {p: i for i, p in enumerate(self.points)}
        return lambda p: order[p]


class ConditionalSet:
    """A support event with one nonempty fiber per supported atom.

    Pure data: equality and hashing look only at the support and the
    fibers, so the same object can be tested for membership in any
    compatible collection.
    """

    __slots__ = ("support", "fibers", "_key")

    def __init__(self, support: Iterable[str], fibers: Mapping[str, Iterable[Point]]):
        supp = frozenset(support)
        fib = {a: frozenset(ps) for a, ps in fibers.items()}
        if set(fib) != set(supp):
            raise ValueError("fibers must be given exactly on the support")
        for a, ps in fib.items():
            if not ps:
                raise ValueError(f"empty fiber at atom {a!r}; shrink the support instead")
        object.__setattr__(self, "support", supp)
        object.__setattr__(self, "fibers", fib)
        object.__setattr__(self, "_key", (supp, frozenset(fib.items())))

    def __setattr__(self, name, value):
        raise AttributeError("ConditionalSet is immutable")

    def fiber(self, atom: str) -> frozenset:
        return self.fibers[atom]

    @property
    def is_bottom(self) -> bool:
        return not self.support

    def restrict(self, event: Event) -> "ConditionalSet":
        """The same set conditioned on a smaller event: V|A restricted to B is V|(A and B)."""
        keep = self.support & frozenset(event)
        return ConditionalSet(keep, {a: self.fibers[a] for a in keep})

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ConditionalSet):
            return NotImplemented
        return self._key == other._key

    def __hash__(self) -> int:
        return hash(self._key)

    def __repr__(self) -> str:
        if self.is_bottom:
            return "ConditionalSet(bottom)"
        atoms = sorted(self.support, key=str)
        inner = "; ".join(f"{a}:{{{','.join(map(str, sorted(self.fibers[a], key=str)))}}}" for a in atoms)
        return f"ConditionalSet({inner})"


#: The distinguished bottom element, shared by every conditional power set.
BOTTOM = ConditionalSet(frozenset(), {})


def cond_le(v: ConditionalSet, w: ConditionalSet) -> bool:
    """Conditional inclusion: the support shrinks and fibers are contained on it."""
    if not v.support <= w.support:
        return False
    return all(v.fibers[a] <= w.fibers[a] for a in v.support)


def cond_union(sets: Iterable[ConditionalSet]) -> ConditionalSet:
    support: set[str] = set()
    fibers: dict[str, set] = {}
    for s in sets:
        for a in s.support:
            fibers.setdefault(a, set()).update(s.fibers[a])
        support |= s.support
    return ConditionalSet(support, fibers)


def cond_intersection(sets: Sequence[ConditionalSet]) -> ConditionalSet:
    """Meet of a family: keeps exactly the atoms where all fibers overlap."""
    sets = list(sets)
    if not sets:
        raise ValueError("empty intersection has no meaning without the ambient space")
    support = set(sets[0].support)
    for s in sets[1:]:
        support &= s.support
    fibers: dict[str, frozenset] = {}
    for a in support:
        common = sets[0].fibers[a]
        for s in sets[1:]:
            common = common & s.fibers[a]
        if common:
            fibers[a] = common
    return ConditionalSet(fibers.keys(), fibers)


def cond_difference(w: ConditionalSet, v: ConditionalSet) -> ConditionalSet:
    """Relative complement w minus v, which never needs the ambient space."""
    fibers: dict[str, frozenset] = {}
    for a in w.support:
        rest = w.fibers[a] - v.fibers[a] if a in v.support else w.fibers[a]
        if rest:
            fibers[a] = rest
    return ConditionalSet(fibers.keys(), fibers)


def membership_event(x: PointFun, v: ConditionalSet) -> Event:
    """The largest event on which the point choice x falls inside v."""
    return frozenset(a for a in v.support if x[a] in v.fibers[a])


def cartesian_product(v: ConditionalSet, w: ConditionalSet) -> ConditionalSet:
    """Pairwise rectangle: supported where both are, fibers are point pairs."""
    support = v.support & w.support
    fibers = {a: frozenset((p, q) for p in v.fibers[a] for q in w.fibers[a]) for a in support}
    return ConditionalSet(support, fibers)


class CondSpace:
    """A conditional power set: all conditional subsets of one ground space.

    Bundles the measure algebra with the ground space and provides the
    operations that need both: complement, concatenation, stable hulls
    and exhaustive enumeration.
    """

    __slots__ = ("algebra", "space", "_top")

    def __init__(self, algebra: MeasureAlgebra, space: GroundSpace):
        self.algebra = algebra
        self.space = space
        self._top = ConditionalSet(algebra.atoms, {a: space.point_set for a in algebra.atoms})

    @property
    def top(self) -> ConditionalSet:
        return self._top

    @property
    def bottom(self) -> ConditionalSet:
        return BOTTOM

    def make(self, support: Iterable[str], fibers: Mapping[str, Iterable[Point]]) -> ConditionalSet:
        supp = self.algebra.event(support)
        out = ConditionalSet(supp, fibers)
        for a in out.support:
            stray = out.fibers[a] - self.space.point_set
            if stray:
                raise ValueError(f"fiber at {a!r} uses unknown points {sorted(map(str, stray))}")
        return out

    def full_on(self, event: Event) -> ConditionalSet:
        """The whole ground space conditioned on an event: X restricted to A."""
        ev = self.algebra.event(event)
        return ConditionalSet(ev, {a: self.space.point_set for a in ev})

    def singleton(self, x: PointFun) -> ConditionalSet:
        return ConditionalSet(self.algebra.atoms, {a: frozenset((x[a],)) for a in self.algebra.atoms})

    def contains(self, v: ConditionalSet) -> bool:
        if not v.support <= set(self.algebra.atoms):
            return False
        return all(v.fibers[a] <= self.space.point_set for a in v.support)

    def complement(self, v: ConditionalSet) -> ConditionalSet:
        """Boolean complement: flip fibers where they are proper, go full off-support.

        On the support the complement keeps exactly the atoms whose
        fiber misses some point; off the support it is the whole space.
        """
        e = self.space.point_set
        fibers: dict[str, frozenset] = {}
        for a in v.support:
            rest = e - v.fibers[a]
            if rest:
                fibers[a] = rest
        for a in self.algebra.atoms:
            if a not in v.support:
                fibers[a] = e
        return ConditionalSet(fibers.keys(), fibers)

    def concatenate(self, sets: Sequence[ConditionalSet], partition: Sequence[Event]) -> ConditionalSet:
        """Paste one conditional set per partition block into a single set."""
        if len(sets) != len(partition):
            raise ValueError("concatenate: one set per partition block required")
        if not self.algebra.is_partition(partition):
            raise ValueError("not a partition")
        pieces = [s.restrict(ev) for s, ev in zip(sets, partition)]
        return cond_union(pieces)

    def stable_hull(self, xs: Iterable[PointFun]) -> ConditionalSet:
        """Smallest full-support conditional set containing every choice in xs."""
        fibers: dict[str, set] = {a: set() for a in self.algebra.atoms}
        for x in xs:
            for a in self.algebra.atoms:
                fibers[a].add(x[a])
        if any(not ps for ps in fibers.values()):
            raise ValueError("stable_hull needs at least one point choice")
        return ConditionalSet(self.algebra.atoms, fibers)

    def _atom_options(self) -> list[tuple]:
        """Per atom: None for 'atom outside the support' plus every nonempty fiber."""
        opts: list[frozenset | None] = [None]
        pts = list(self.space.points)
        for mask in range(1, 1 << len(pts)):
            opts.append(frozenset(p for i, p in enumerate(pts) if mask >> i & 1))
        return [tuple(opts) for _ in self.algebra.atoms]

    def all_sets(self) -> Iterator[ConditionalSet]:
        """Enumerate the whole conditional power set (exponential; small spaces only)."""
        for combo in product(*self._atom_options()):
            fibers = {a: f for a, f in zip(self.algebra.atoms, combo) if f is not None}
            yield ConditionalSet(fibers.keys(), fibers)

    def count_sets(self) -> int:
        per_atom = (1 << len(self.space.points))  # nonempty fibers plus the 'absent' option
        return per_atom ** len(self.algebra.atoms)

    def point_funs(self) -> Iterator[PointFun]:
        for combo in product(self.space.points, repeat=len(self.algebra.atoms)):
            yield dict(zip(self.algebra.atoms, combo))


def product_space(left: GroundSpace, right: GroundSpace) -> GroundSpace:
    """Ground space of ordered pairs, in lexicographic point order."""
    pts = tuple((p, q) for p in left.points for q in right.points)
    return GroundSpace(pts)
