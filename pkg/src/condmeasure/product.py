"""Products of stable measures, iterated integrals and exact densities.

Product sigma-algebras carry rectangle blocks per atom; product
measures are defined the stable way, by integrating the section-mass
integrand, and agree with the classical product fiber by fiber.  On
top of that sit the swap of iterated integrals, products against
Markov kernels, the positive-set construction for differences of
measures, exact density recovery with a full certificate, one
improvement step of the density-climbing argument, and the finite
representation of positive stable linear functionals as integrals.
"""

from __future__ import annotations

import random
from fractions import Fraction
from typing import Callable, Mapping

from .algebra import Field, ext_mul, ext_sum
from .condsets import CondSpace, ConditionalSet, PointFun, product_space
from .integral import Integrand, concatenate_integrands, indicator, integrate
from .measure import StableMeasure
from .sigma import SetRing, StableSigmaAlgebra


def product_sigma(sx: StableSigmaAlgebra, sy: StableSigmaAlgebra) -> StableSigmaAlgebra:
    """Rectangle blocks: one block per pair of factor blocks, per atom."""
    if sx.algebra != sy.algebra:
        raise ValueError("factors live over different measure algebras")
    pspace = CondSpace(sx.algebra, product_space(sx.space, sy.space))
    per_atom = {}
    for a in sx.algebra.atoms:
        blocks = [
            frozenset((p, q) for p in bx for q in by)
            for bx in sx.blocks(a)
            for by in sy.blocks(a)
        ]
        per_atom[a] = SetRing(blocks)
    return StableSigmaAlgebra(pspace, per_atom)


def section_at(z: ConditionalSet, x: PointFun) -> ConditionalSet:
    """Slice of a product set along a left point choice, supported where nonempty."""
    fibers = {}
    for a in z.support:
        ys = frozenset(q for (p, q) in z.fibers[a] if p == x[a])
        if ys:
            fibers[a] = ys
    return ConditionalSet(fibers.keys(), fibers)


def integrand_section(f: Integrand, x: PointFun, sy: StableSigmaAlgebra) -> Integrand:
    """Slice of a product integrand along a left point choice."""
    values = {a: {q: f.values[a][(x[a], q)] for q in sy.space.points} for a in sy.algebra.atoms}
    return Integrand(sy, values)


def section_mass_integrand(z: ConditionalSet, nu: StableMeasure, sx: StableSigmaAlgebra) -> Integrand:
    """The function x -> mass of the x-section under the right measure."""
    if not nu.is_finite():
        raise ValueError("section masses need a finite right factor")
    sy = nu.domain
    values: dict[str, dict] = {}
    for a in sx.algebra.atoms:
        row = {}
        for p in sx.space.points:
            if a in z.support:
                ys = frozenset(q for (pp, q) in z.fibers[a] if pp == p)
                row[p] = ext_sum(m for b, m in nu.block_mass[a].items() if b <= ys) if ys else Fraction(0)
            else:
                row[p] = Fraction(0)
        values[a] = row
    return Integrand(sx, values)


def product_measure(mu: StableMeasure, nu: StableMeasure) -> StableMeasure:
    """Product of two finite stable measures, built by section integration."""
    sx, sy = mu.domain, nu.domain
    if not isinstance(sx, StableSigmaAlgebra) or not isinstance(sy, StableSigmaAlgebra):
        raise ValueError("product factors must live on sigma-algebras")
    if not (mu.is_finite() and nu.is_finite()):
        raise ValueError("product needs finite factors")
    psigma = product_sigma(sx, sy)
    table: dict[str, dict[frozenset, Fraction]] = {}
    for a in psigma.algebra.atoms:
        table[a] = {}
        for b in psigma.blocks(a):
            z = ConditionalSet((a,), {a: b})
            s = section_mass_integrand(z, nu, sx)
            table[a][b] = integrate(s, mu)[a]
    return StableMeasure(psigma, table)


def fubini(f: Integrand, mu: StableMeasure, nu: StableMeasure) -> tuple[Field, Field, Field]:
    """Iterated-left, iterated-right and joint integrals of a product integrand."""
    sx, sy = mu.domain, nu.domain
    joint = integrate(f, product_measure(mu, nu))
    left_values: dict[str, dict] = {a: {} for a in sx.algebra.atoms}
    for p in sx.space.points:
        inner = integrate(integrand_section(f, {a: p for a in sx.algebra.atoms}, sy), nu)
        for a in sx.algebra.atoms:
            left_values[a][p] = inner[a]
    left = integrate(Integrand(sx, left_values), mu)
    right_values: dict[str, dict] = {a: {} for a in sy.algebra.atoms}
    for q in sy.space.points:
        values = {a: {p: f.values[a][(p, q)] for p in sx.space.points} for a in sx.algebra.atoms}
        inner = integrate(Integrand(sx, values), mu)
        for a in sy.algebra.atoms:
            right_values[a][q] = inner[a]
    right = integrate(Integrand(sy, right_values), nu)
    return left, right, joint


class StableMarkovKernel:
    """A transition rule: per atom and left point, a probability row on the right points.

    Rows must be constant on the left factor's blocks and are stored
    pointwise on the right, so any right sigma-algebra refines them.
    """

    __slots__ = ("sx", "sy", "rows")

    def __init__(self, sx: StableSigmaAlgebra, sy: StableSigmaAlgebra, rows: Mapping[str, Mapping]):
        for a in sx.algebra.atoms:
            for p in sx.space.points:
                row = rows[a][p]
                if set(row) != sy.space.point_set:
                    raise ValueError("kernel rows must cover the right points")
                if any(Fraction(v) < 0 for v in row.values()):
                    raise ValueError("kernel rows must be nonnegative")
                if sum(map(Fraction, row.values())) != 1:
                    raise ValueError("kernel rows must sum to one")
            for bx in sx.blocks(a):
                reference = {q: Fraction(rows[a][next(iter(bx))][q]) for q in sy.space.points}
                for p in bx:
                    if {q: Fraction(rows[a][p][q]) for q in sy.space.points} != reference:
                        raise ValueError("kernel rows must be constant on left blocks")
        self.sx = sx
        self.sy = sy
        self.rows = {a: {p: {q: Fraction(v) for q, v in rows[a][p].items()} for p in rows[a]} for a in rows}

    def row_mass(self, atom: str, p, ys: frozenset) -> Fraction:
        return sum((self.rows[atom][p][q] for q in ys), Fraction(0))


def markov_product(kernel: StableMarkovKernel, mu: StableMeasure) -> StableMeasure:
    """Joint measure of source and transition: integrate the kernel over sections."""
    sx = mu.domain
    if sx != kernel.sx:
        raise ValueError("kernel left factor must match the measure domain")
    if not mu.is_finite():
        raise ValueError("joint construction needs a finite source")
    psigma = product_sigma(sx, kernel.sy)
    table: dict[str, dict[frozenset, Fraction]] = {}
    for a in psigma.algebra.atoms:
        table[a] = {}
        for b in psigma.blocks(a):
            values: dict[str, dict] = {}
            for aa in sx.algebra.atoms:
                row = {}
                for p in sx.space.points:
                    if aa == a:
                        ys = frozenset(q for (pp, q) in b if pp == p)
                        row[p] = kernel.row_mass(aa, p, ys)
                    else:
                        row[p] = Fraction(0)
                values[aa] = row
            table[a][b] = integrate(Integrand(sx, values), mu)[a]
    return StableMeasure(psigma, table)


def hahn_positive_set(mu1: StableMeasure, mu2: StableMeasure) -> ConditionalSet:
    """The largest region where mu2 dominates mu1.

    Iterates the exhaustion argument: find the event where the current
    candidate is already nonnegative for the difference, carve the
    worst-mass culprit set out everywhere else, repeat.  Ends with the
    union of the difference-nonnegative blocks on each atom.
    """
    domain = mu1.domain
    if not isinstance(domain, StableSigmaAlgebra) or domain != mu2.domain:
        raise ValueError("both measures must live on one sigma-algebra")
    if not (mu1.is_finite() and mu2.is_finite()):
        raise ValueError("signed comparison needs finite measures")
    algebra = domain.algebra
    diff = {
        a: {b: Fraction(mu2.block_mass[a][b]) - Fraction(mu1.block_mass[a][b]) for b in domain.blocks(a)}
        for a in algebra.atoms
    }
    candidate: dict[str, set] = {a: set(domain.blocks(a)) for a in algebra.atoms}
    while True:
        def settled(ev) -> bool:
            return all(
                all(diff[a][b] >= 0 for b in candidate[a]) for a in ev
            )

        done = algebra.largest_event(settled)
        rest = [a for a in algebra.atoms if a not in done]
        if not rest:
            break
        # Worst culprit inside the candidate: the union of its negative blocks.
        for a in rest:
            candidate[a] = {b for b in candidate[a] if diff[a][b] >= 0}
    fibers = {}
    for a in algebra.atoms:
        pts = frozenset().union(*candidate[a]) if candidate[a] else frozenset()
        if pts:
            fibers[a] = pts
    return ConditionalSet(fibers.keys(), fibers)


def radon_nikodym(mu: StableMeasure, nu: StableMeasure) -> Integrand:
    """Exact density of nu against a stable probability mu, fully certified.

    Requires absolute continuity; the witness of a violation is named.
    The returned integrand reproduces nu by integration over every
    measurable conditional set, and that identity is checked by
    enumeration before returning.
    """
    domain = mu.domain
    if not isinstance(domain, StableSigmaAlgebra) or domain != nu.domain:
        raise ValueError("both measures must live on one sigma-algebra")
    if not mu.is_probability():
        raise ValueError("density recovery needs a probability base measure")
    if not nu.is_finite():
        raise ValueError("density recovery needs a finite numerator measure")
    algebra = domain.algebra
    null_witness = {}
    for a in algebra.atoms:
        bad = [b for b in domain.blocks(a) if mu.block_mass[a][b] == 0 and nu.block_mass[a][b] != 0]
        if bad:
            null_witness[a] = frozenset().union(*bad)
    if null_witness:
        witness = ConditionalSet(null_witness.keys(), null_witness)
        raise ValueError(f"not absolutely continuous: witness {witness!r}")
    values: dict[str, dict] = {}
    for a in algebra.atoms:
        row = {}
        for b in domain.blocks(a):
            m = mu.block_mass[a][b]
            ratio = Fraction(0) if m == 0 else Fraction(nu.block_mass[a][b]) / Fraction(m)
            for p in b:
                row[p] = ratio
        values[a] = row
    density = Integrand(domain, values)
    cap = 20000
    if domain.member_count() <= cap:
        for v in domain.members():
            if integrate(density * indicator(v, domain), mu) != nu.eval(v):
                raise ValueError(f"density certificate failed on {v!r}")
    else:
        for a in algebra.atoms:
            for m in domain.ring_at(a).members():
                if not m:
                    continue
                got = ext_sum(
                    ext_mul(values[a][next(iter(b))], mu.block_mass[a][b])
                    for b in domain.blocks(a)
                    if b <= m
                )
                if got != nu.eval(ConditionalSet((a,), {a: m}))[a]:
                    raise ValueError("density certificate failed")
    return density


def rn_improvement_step(f: Integrand, mu: StableMeasure, nu: StableMeasure) -> Integrand:
    """One climb of the density search: add a slab on the dominated region.

    Given a candidate with integrals below nu everywhere, the remaining
    gap picks a threshold (half the gap), the positive set of the
    thresholded comparison picks the region, and the candidate rises by
    the threshold there.  Strictly increases the integral on every atom
    with a positive gap.
    """
    domain = mu.domain
    if f.sigma != domain or domain != nu.domain:
        raise ValueError("candidate and measures must share one sigma-algebra")
    if not f.is_nonnegative():
        raise ValueError("density candidates are nonnegative")
    algebra = domain.algebra
    lam_blocks: dict[str, dict[frozenset, Fraction]] = {}
    for a in algebra.atoms:
        lam_blocks[a] = {}
        for b in domain.blocks(a):
            gap = Fraction(nu.block_mass[a][b]) - f.values[a][next(iter(b))] * Fraction(mu.block_mass[a][b])
            if gap < 0:
                raise ValueError("candidate already exceeds the target on a block")
            lam_blocks[a][b] = gap
    lam = StableMeasure(domain, lam_blocks)
    total_gap = lam.total()
    live = total_gap.support()
    if not live:
        return f
    s = Field(algebra, {a: (total_gap[a] / 2 if a in live else Fraction(0)) for a in algebra.atoms})
    region = hahn_positive_set(mu.scale(s), lam)
    slab = indicator(region.restrict(live), domain) * s
    return f + slab


def daniell_stone_finite(
    cspace: CondSpace,
    functional: Callable[[Integrand], Field],
    *,
    probes: int = 8,
    seed: int = 0,
) -> StableMeasure:
    """Represent a positive stable linear functional as an integral.

    Probes positivity, linearity over scalar fields and concatenation
    stability with seeded random integrands, then reads the measure off
    the indicator values of single-atom point sets and verifies the
    integral identity on further probes.  Any failed premise or failed
    identity raises with the premise named.
    """
    sigma = StableSigmaAlgebra.discrete(cspace)
    algebra = cspace.algebra
    rng = random.Random(seed)

    def random_integrand(nonneg: bool) -> Integrand:
        lo = 0 if nonneg else -3
        return Integrand(
            sigma,
            {
                a: {p: Fraction(rng.randint(lo, 4), rng.randint(1, 3)) for p in cspace.space.points}
                for a in algebra.atoms
            },
        )

    for _ in range(probes):
        g = random_integrand(nonneg=True)
        if any(functional(g)[a] < 0 for a in algebra.atoms):
            raise ValueError("functional violates positivity")
        f1, f2 = random_integrand(False), random_integrand(False)
        r = Field(algebra, {a: Fraction(rng.randint(-2, 3)) for a in algebra.atoms})
        if functional(f1 + f2 * r) != functional(f1) + functional(f2) * r:
            raise ValueError("functional violates linearity over scalar fields")
        if len(algebra.atoms) > 1:
            pivot = rng.randint(1, len(algebra.atoms) - 1)
            ev = frozenset(algebra.atoms[:pivot])
            parts = [ev, algebra.complement_event(ev)]
            mixed = concatenate_integrands([f1, f2], parts)
            expected = algebra.concatenate_field([functional(f1), functional(f2)], parts)
            if functional(mixed) != expected:
                raise ValueError("functional violates concatenation stability")
    table: dict[str, dict[frozenset, Fraction]] = {a: {} for a in algebra.atoms}
    for a in algebra.atoms:
        for p in cspace.space.points:
            value = functional(indicator(ConditionalSet((a,), {a: frozenset((p,))}), sigma))[a]
            if value < 0:
                raise ValueError("functional violates positivity")
            table[a][frozenset((p,))] = value
    measure = StableMeasure(sigma, table)
    for _ in range(probes):
        g = random_integrand(False)
        if functional(g) != integrate(g, measure):
            raise ValueError("functional is not the integral of its indicator measure")
    return measure
