"""Classical finite measure theory on one fiber.

Everything here speaks the ordinary language: subsets of a finite point
set, set rings and set fields, outer measures, Hahn decompositions and
plain weighted sums.  The conditional machinery is checked atom by atom
against these routines, so this module intentionally avoids importing
any of it; the only shared vocabulary is the extended value type.
"""

from __future__ import annotations

from fractions import Fraction
from itertools import combinations
from typing import Iterable, Mapping, Sequence

from .algebra import INF, ExtValue, ext_add, ext_mul, ext_sub, ext_sum


def mass_of(point_masses: Mapping, subset: Iterable) -> ExtValue:
    """Total mass of a subset under pointwise masses."""
    return ext_sum(point_masses[p] for p in subset)


def blocks_from_sets(universe: frozenset, sets: Iterable[frozenset]) -> frozenset:
    """Atoms of the generated field: classes of points with equal membership signature."""
    gens = list(sets)
    by_sig: dict[tuple, set] = {}
    for p in universe:
        sig = tuple(p in s for s in gens)
        by_sig.setdefault(sig, set()).add(p)
    return frozenset(frozenset(b) for b in by_sig.values())


def field_members(universe: frozenset, sets: Iterable[frozenset]) -> frozenset:
    """The field of sets generated by the given subsets: all unions of blocks."""
    blocks = sorted(blocks_from_sets(universe, sets), key=lambda b: sorted(map(str, b)))
    members = set()
    for mask in range(1 << len(blocks)):
        members.add(frozenset().union(*(b for i, b in enumerate(blocks) if mask >> i & 1)))
    return frozenset(members)


def ring_close(sets: Iterable[frozenset]) -> frozenset:
    """Closure under union and difference, always containing the empty set."""
    members = set(map(frozenset, sets))
    members.add(frozenset())
    while True:
        fresh = set()
        pairs = list(members)
        for a in pairs:
            for b in pairs:
                for c in (a | b, a - b):
                    if c not in members:
                        fresh.add(c)
        if not fresh:
            return frozenset(members)
        members |= fresh


def is_ring(members: Iterable[frozenset]) -> bool:
    ms = set(map(frozenset, members))
    if frozenset() not in ms:
        return False
    return all(a | b in ms and a - b in ms for a in ms for b in ms)


def outer_mass(ring_masses: Mapping[frozenset, ExtValue], target: frozenset) -> ExtValue:
    """Infimum over finite ring covers of the target, or INF when no cover exists.

    Any cover has an irredundant subcover of at most |target| members,
    so enumerating small combinations is exact.
    """
    if not target:
        return Fraction(0)
    members = [m for m in ring_masses if m]
    best: ExtValue | None = None
    for k in range(1, len(target) + 1):
        for combo in combinations(members, k):
            if target <= frozenset().union(*combo):
                total = ext_sum(ring_masses[m] for m in combo)
                if best is None or total < best:
                    best = total
    return INF if best is None else best


def caratheodory_blocks(universe: frozenset, ring_masses: Mapping[frozenset, ExtValue]) -> dict[frozenset, ExtValue]:
    """Extension to the generated field, by outer mass on each block."""
    blocks = blocks_from_sets(universe, list(ring_masses))
    return {b: outer_mass(ring_masses, b) for b in blocks}


def hahn_positive(blocks: Iterable[frozenset], signed_masses: Mapping[frozenset, Fraction]) -> frozenset:
    """Union of the blocks with nonnegative signed mass."""
    out: set = set()
    for b in blocks:
        if signed_masses[b] >= 0:
            out |= b
    return frozenset(out)


def integral(point_masses: Mapping, g: Mapping) -> ExtValue:
    """Plain weighted sum of a nonnegative-or-signed integrand.

    Positive and negative parts are summed separately; a signed
    integrand with an infinite part raises, mirroring non-integrability.
    """
    pos = ext_sum(ext_mul(Fraction(g[p]), point_masses[p]) for p in g if g[p] > 0)
    neg = ext_sum(ext_mul(-Fraction(g[p]), point_masses[p]) for p in g if g[p] < 0)
    return ext_sub(pos, neg)


def product_point_masses(mx: Mapping, my: Mapping) -> dict:
    return {(p, q): ext_mul(mx[p], my[q]) for p in mx for q in my}


def conditional_expectation(
    weights: Mapping[str, Fraction],
    xi: Mapping[str, object],
    blocks: Sequence[frozenset],
    f: Mapping,
) -> dict[str, Fraction]:
    """Blockwise weighted average of f at the observed points, spread back to atoms."""
    out: dict[str, Fraction] = {}
    for block in blocks:
        total = sum((weights[a] for a in block), Fraction(0))
        if total == 0:
            raise ValueError("conditioning block with zero probability")
        avg = sum((weights[a] * Fraction(f[xi[a]]) for a in block), Fraction(0)) / total
        for a in block:
            out[a] = avg
    return out


def radon_nikodym_density(
    blocks: Iterable[frozenset],
    mu_masses: Mapping[frozenset, Fraction],
    nu_masses: Mapping[frozenset, Fraction],
) -> dict:
    """Pointwise density: block ratio on mu-positive blocks, zero on mu-null ones."""
    density: dict = {}
    for b in blocks:
        if mu_masses[b] == 0:
            if nu_masses[b] != 0:
                raise ValueError("not absolutely continuous on a null block")
            ratio = Fraction(0)
        else:
            ratio = Fraction(nu_masses[b]) / mu_masses[b]
        for p in b:
            density[p] = ratio
    return density
