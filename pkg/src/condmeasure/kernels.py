"""Kernels, sub-algebras, conditional distributions and expectations.

In the finite model a kernel is one classical measure on a shared
ground field per atom, which is the same data as a stable measure read
sideways; the two translation maps here make that identification
explicit and exactly invertible.  Conditioning on a sub-algebra
coarsens the atoms into blocks; conditional distributions then live
over the quotient algebra and conditional expectations are integrals
against them.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .algebra import ExtValue, Field, INF, MeasureAlgebra, ext_sum, format_value
from .condsets import CondSpace, ConditionalSet, GroundSpace, PointFun
from .integral import Integrand, integrate
from .measure import StableMeasure
from .sigma import SetRing, StableSigmaAlgebra


class Kernel:
    """One classical measure per atom on a single shared field of ground sets."""

    __slots__ = ("cspace", "field", "block_mass")

    def __init__(self, cspace: CondSpace, field: SetRing, block_mass: Mapping[str, Mapping[frozenset, ExtValue]]):
        if not field.is_field_on(cspace.space.point_set):
            raise ValueError("kernel target collection must be a field on the ground points")
        table: dict[str, dict[frozenset, ExtValue]] = {}
        for a in cspace.algebra.atoms:
            given = dict(block_mass[a])
            if set(given) != set(field.blocks):
                raise ValueError(f"kernel masses at atom {a!r} must cover exactly the field blocks")
            for b, m in given.items():
                if m is not INF and m < 0:
                    raise ValueError("kernel masses must be nonnegative")
            table[a] = given
        self.cspace = cspace
        self.field = field
        self.block_mass = table

    def mass(self, atom: str, subset: frozenset) -> ExtValue:
        if not self.field.contains(frozenset(subset)):
            raise ValueError(f"not measurable: {sorted(map(str, subset))}")
        return ext_sum(m for b, m in self.block_mass[atom].items() if b <= subset)

    def is_probability(self) -> bool:
        return all(ext_sum(self.block_mass[a].values()) == 1 for a in self.cspace.algebra.atoms)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Kernel):
            return NotImplemented
        return self.field == other.field and self.block_mass == other.block_mass

    def __repr__(self) -> str:
        parts = []
        for a in self.cspace.algebra.atoms:
            inner = ", ".join(
                "{" + ",".join(map(str, sorted(b, key=str))) + "}=" + format_value(m)
                for b, m in sorted(self.block_mass[a].items(), key=lambda kv: sorted(map(str, kv[0])))
            )
            parts.append(f"{a}: {inner}")
        return "Kernel(" + "; ".join(parts) + ")"


def kernel_to_measure(kappa: Kernel) -> StableMeasure:
    """Read a kernel as a stable measure on the induced stable sigma-algebra."""
    sigma = StableSigmaAlgebra(kappa.cspace, {a: kappa.field for a in kappa.cspace.algebra.atoms})
    return StableMeasure(sigma, kappa.block_mass)


def _cdf_grid(coords_sorted: Sequence[Fraction]) -> list[Fraction]:
    """Rational thresholds straddling the coordinates densely enough.

    Between consecutive coordinates the grid holds two interior points,
    so every one-sided infimum is realized on the grid itself.
    """
    grid = [coords_sorted[0] - 1, coords_sorted[0] - Fraction(1, 2)]
    for lo, hi in zip(coords_sorted, coords_sorted[1:]):
        gap = hi - lo
        grid.extend([lo, lo + gap / 2, lo + 3 * gap / 4])
    grid.extend([coords_sorted[-1], coords_sorted[-1] + 1])
    return grid


def measure_to_kernel(mu: StableMeasure) -> Kernel:
    """Recover a kernel from a stable probability on the discrete sigma-algebra.

    The cumulative distribution is evaluated at rational grid points,
    the value at each coordinate is the one-sided infimum over larger
    grid points, and the point masses are the jumps.
    """
    domain = mu.domain
    if not isinstance(domain, StableSigmaAlgebra):
        raise ValueError("kernel recovery needs a measure on a sigma-algebra")
    space = domain.space
    if space.coords is None:
        raise ValueError("kernel recovery needs ground coordinates")
    if any(len(b) != 1 for a in domain.algebra.atoms for b in domain.blocks(a)):
        raise ValueError("kernel recovery needs the discrete sigma-algebra")
    if not mu.is_probability():
        raise ValueError("kernel recovery needs a probability measure")
    point_mass = {
        a: {next(iter(b)): m for b, m in mu.block_mass[a].items()}
        for a in domain.algebra.atoms
    }
    by_coord = sorted(space.points, key=lambda p: space.coords[p])
    coords_sorted = [space.coords[p] for p in by_coord]
    grid = _cdf_grid(coords_sorted)

    def cumulative(a: str, q: Fraction) -> Fraction:
        return sum((point_mass[a][p] for p in space.points if space.coords[p] <= q), Fraction(0))

    def cdf(a: str, x: Fraction) -> Fraction:
        return min(cumulative(a, q) for q in grid if q > x)

    blocks = [frozenset((p,)) for p in space.points]
    table: dict[str, dict[frozenset, ExtValue]] = {}
    for a in domain.algebra.atoms:
        masses: dict[frozenset, ExtValue] = {}
        prev = coords_sorted[0] - 1
        for p, c in zip(by_coord, coords_sorted):
            masses[frozenset((p,))] = cdf(a, c) - cdf(a, prev)
            prev = c
        table[a] = masses
    cspace = CondSpace(domain.algebra, space)
    return Kernel(cspace, SetRing(blocks), table)


class SubAlgebra:
    """A coarsening of the measure algebra into blocks of atoms.

    Each block becomes one atom of the quotient algebra, labeled by the
    joined member ids, with the summed weight.
    """

    __slots__ = ("algebra", "blocks", "labels", "quotient", "_label_of")

    def __init__(self, algebra: MeasureAlgebra, blocks: Sequence[Iterable[str]]):
        blocks = [tuple(sorted(b, key=algebra.index)) for b in blocks]
        if not algebra.is_partition([frozenset(b) for b in blocks]):
            raise ValueError("sub-algebra blocks must partition the atoms")
        blocks.sort(key=lambda b: algebra.index(b[0]))
        self.algebra = algebra
        self.blocks = tuple(frozenset(b) for b in blocks)
        self.labels = tuple("+".join(b) for b in blocks)
        self.quotient = MeasureAlgebra(
            [(label, sum((algebra.weights[a] for a in block), Fraction(0)))
             for label, block in zip(self.labels, self.blocks)]
        )
        self._label_of = {}
        for label, block in zip(self.labels, self.blocks):
            for a in block:
                self._label_of[a] = label

    def label_of(self, atom: str) -> str:
        return self._label_of[atom]

    def is_coarser_than(self, other: "SubAlgebra") -> bool:
        """Every block of self is a union of blocks of other."""
        return all(
            any(b <= c for c in self.blocks) for b in other.blocks
        )

    def spread_to_atoms(self, g: Field) -> Field:
        """Copy a quotient-level field back onto the original atoms."""
        return Field(self.algebra, {a: g[self._label_of[a]] for a in self.algebra.atoms})


def conditional_distribution(
    sub: SubAlgebra,
    xi: PointFun,
    space: GroundSpace,
    field: SetRing | None = None,
) -> StableMeasure:
    """The distribution of an observation conditioned on a sub-algebra.

    Over each quotient atom the mass of a ground set is the joint
    probability of landing in it, renormalized by the block weight.
    """
    algebra = sub.algebra
    if field is None:
        field = SetRing([frozenset((p,)) for p in space.points])
    qspace = CondSpace(sub.quotient, space)
    domain = StableSigmaAlgebra(qspace, {label: field for label in sub.labels})
    table: dict[str, dict[frozenset, ExtValue]] = {}
    for label, block in zip(sub.labels, sub.blocks):
        total = sum((algebra.weights[a] for a in block), Fraction(0))
        table[label] = {
            b: sum((algebra.weights[a] for a in block if xi[a] in b), Fraction(0)) / total
            for b in field.blocks
        }
    return StableMeasure(domain, table)


def lift_function(sigma: StableSigmaAlgebra, f: Mapping) -> Integrand:
    """Read a classical scalar function on ground points as an integrand."""
    return Integrand.from_point_map(sigma, f)


def conditional_expectation(
    sub: SubAlgebra,
    xi: PointFun,
    space: GroundSpace,
    f: Mapping,
    field: SetRing | None = None,
) -> Field:
    """Expected value of f at the observation, given the sub-algebra.

    Returned over the quotient atoms; integrate the lifted function
    against the conditional distribution.
    """
    dist = conditional_distribution(sub, xi, space, field)
    return integrate(lift_function(dist.domain, f), dist)


def pushforward(algebra: MeasureAlgebra, xi: PointFun, space: GroundSpace) -> dict:
    """The classical law of the observation: total weight per ground point."""
    out = {p: Fraction(0) for p in space.points}
    for a in algebra.atoms:
        out[xi[a]] += algebra.weights[a]
    return out


def field_as_observation(h: Field) -> tuple[GroundSpace, dict]:
    """Repackage a finite scalar field as a ground space plus observation map.

    The points are the distinct values with themselves as coordinates;
    useful for conditioning on an already-computed scalar quantity.
    """
    if not h.is_finite():
        raise ValueError("only finite fields can be observed")
    values = sorted({h[a] for a in h.algebra.atoms})
    space = GroundSpace(tuple(values), {v: v for v in values})
    xi = {a: h[a] for a in h.algebra.atoms}
    return space, xi
