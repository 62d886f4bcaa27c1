from fractions import Fraction

import pytest

from condmeasure import (
    BOTTOM,
    CondSpace,
    GroundSpace,
    INF,
    MeasureAlgebra,
    StableMeasure,
    StableRing,
    StableSigmaAlgebra,
    caratheodory_extend,
    check_measure_axioms,
    is_caratheodory_measurable,
    outer_from_premeasure,
    uniqueness_check,
)
from condmeasure.measure import sample_members
from condmeasure.sigma import SetRing, mix_closure


def mk(space, fibers):
    return space.make(fibers.keys(), fibers)


@pytest.fixture
def trio():
    algebra = MeasureAlgebra([("a1", Fraction(2, 3)), ("a2", Fraction(1, 3))])
    return CondSpace(algebra, GroundSpace((1, 2, 3)))


@pytest.fixture
def partial_ring(trio):
    """Covers {1,2} at a1 with an infinite block, only {1,2} at a2; point 3 is
    out of reach everywhere."""
    return StableRing(
        trio,
        {
            "a1": SetRing([frozenset({1}), frozenset({2})]),
            "a2": SetRing([frozenset({1, 2})]),
        },
    )


@pytest.fixture
def premeasure(partial_ring):
    return StableMeasure(
        partial_ring,
        {
            "a1": {frozenset({1}): Fraction(1, 2), frozenset({2}): INF},
            "a2": {frozenset({1, 2}): Fraction(3, 4)},
        },
    )


class TestStableMeasure:
    def test_masses_must_cover_domain_blocks(self, trio):
        sig = StableSigmaAlgebra.trivial(trio)
        with pytest.raises(ValueError):
            StableMeasure(sig, {"a1": {frozenset({1, 2, 3}): Fraction(1)}, "a2": {}})
        with pytest.raises(ValueError):
            StableMeasure(sig, {a: {frozenset({1, 2, 3}): Fraction(-1)} for a in ("a1", "a2")})

    def test_eval_sums_blocks_and_localizes(self, trio):
        sig = StableSigmaAlgebra.discrete(trio)
        mu = StableMeasure.from_point_masses(
            sig, {a: {1: Fraction(1, 6), 2: Fraction(1, 3), 3: Fraction(1, 2)} for a in ("a1", "a2")}
        )
        got = mu.eval(mk(trio, {"a1": {1, 2}}))
        assert got.as_dict() == {"a1": Fraction(1, 2), "a2": 0}
        assert mu.eval(BOTTOM).is_zero()
        assert mu.is_probability() and mu.is_finite()

    def test_eval_rejects_non_measurable(self, trio):
        sig = StableSigmaAlgebra.trivial(trio)
        mu = StableMeasure(sig, {a: {frozenset({1, 2, 3}): Fraction(1)} for a in ("a1", "a2")})
        with pytest.raises(ValueError, match="not measurable"):
            mu.eval(mk(trio, {"a1": {1}}))

    def test_dirac_is_membership_indicator(self, trio):
        sig = StableSigmaAlgebra.discrete(trio)
        x = {"a1": 2, "a2": 3}
        delta = StableMeasure.dirac(sig, x)
        v = mk(trio, {"a1": {1, 2}, "a2": {1}})
        assert delta.eval(v).as_dict() == {"a1": 1, "a2": 0}
        assert delta.is_probability()

    def test_scale_and_add(self, trio):
        sig = StableSigmaAlgebra.trivial(trio)
        mu = StableMeasure(sig, {a: {frozenset({1, 2, 3}): Fraction(1)} for a in ("a1", "a2")})
        combo = mu.scale(Fraction(1, 2)).add(mu)
        assert combo.eval(trio.top).as_dict() == {"a1": Fraction(3, 2), "a2": Fraction(3, 2)}

    def test_axioms_hold_for_block_measures(self, trio):
        sig = StableSigmaAlgebra.discrete(trio)
        mu = StableMeasure.from_point_masses(
            sig, {a: {1: Fraction(1, 4), 2: INF, 3: Fraction(0)} for a in ("a1", "a2")}
        )
        report = check_measure_axioms(mu, cap=80)
        assert report.ok, (report.axiom, report.witness)

    def test_axiom_checker_catches_broken_eval(self, trio):
        sig = StableSigmaAlgebra.discrete(trio)
        mu = StableMeasure.from_point_masses(
            sig, {a: {1: Fraction(1), 2: Fraction(2), 3: Fraction(4)} for a in ("a1", "a2")}
        )

        class Clamped(StableMeasure):
            def eval(self, v):
                capped = super().eval(v)
                return capped.map2(capped, lambda x, _: min(x, Fraction(3)))

        broken = Clamped(sig, mu.block_mass)
        report = check_measure_axioms(broken, cap=80)
        assert not report.ok
        assert report.axiom is not None

    def test_sample_members_is_deterministic(self, trio):
        sig = StableSigmaAlgebra.discrete(trio)
        assert sample_members(sig, 10, seed=3) == sample_members(sig, 10, seed=3)
        small = StableSigmaAlgebra.trivial(trio)
        assert len(sample_members(small, 100)) == small.member_count()


class TestOuterMeasure:
    def test_agrees_with_premeasure_on_ring(self, trio, partial_ring, premeasure):
        outer = outer_from_premeasure(premeasure)
        v = mk(trio, {"a1": {1}})
        assert outer.evaluate(v)["a1"] == Fraction(1, 2)
        assert outer.evaluate(trio.bottom).is_zero()

    def test_cheapest_cover_wins(self, trio, premeasure):
        outer = outer_from_premeasure(premeasure)
        # {1} at a2 is not a ring member; its only cover is the block {1,2}
        assert outer.evaluate(mk(trio, {"a2": {1}}))["a2"] == Fraction(3, 4)

    def test_uncoverable_region_is_infinite(self, trio, premeasure):
        outer = outer_from_premeasure(premeasure)
        v = mk(trio, {"a1": {1, 3}, "a2": {1}})
        assert outer.evaluate(v)["a1"] is INF
        assert outer.coverable_event(v) == frozenset({"a2"})

    def test_localization_and_subadditivity(self, trio, premeasure):
        outer = outer_from_premeasure(premeasure)
        v = mk(trio, {"a1": {1}, "a2": {1, 2}})
        w = mk(trio, {"a1": {2}, "a2": {2}})
        assert outer.evaluate(v.restrict(frozenset({"a1"}))) == outer.evaluate(v).restrict(frozenset({"a1"}))
        union = outer.evaluate(mk(trio, {"a1": {1, 2}, "a2": {1, 2}}))
        assert union.le(outer.evaluate(v) + outer.evaluate(w))

    def test_splitting_detects_non_measurable_set(self, trio, premeasure):
        outer = outer_from_premeasure(premeasure)
        member = mk(trio, {"a1": {1}})
        half_block = mk(trio, {"a2": {1}})
        assert is_caratheodory_measurable(outer, member)
        assert not is_caratheodory_measurable(outer, half_block)


class TestCaratheodoryExtension:
    def test_extension_blocks_and_masses(self, trio, premeasure):
        ext = caratheodory_extend(premeasure)
        assert set(ext.domain.blocks("a1")) == {frozenset({1}), frozenset({2}), frozenset({3})}
        assert set(ext.domain.blocks("a2")) == {frozenset({1, 2}), frozenset({3})}
        assert ext.block_mass["a1"][frozenset({1})] == Fraction(1, 2)
        assert ext.block_mass["a1"][frozenset({2})] is INF
        assert ext.block_mass["a1"][frozenset({3})] is INF
        assert ext.block_mass["a2"][frozenset({1, 2})] == Fraction(3, 4)
        assert ext.block_mass["a2"][frozenset({3})] is INF

    def test_extension_restricts_to_premeasure(self, trio, premeasure):
        ext = caratheodory_extend(premeasure)
        v = mk(trio, {"a1": {1, 2}, "a2": {1, 2}})
        assert ext.eval(v) == premeasure.eval(v)


class TestUniqueness:
    def test_agreement_on_generator_forces_agreement(self, trio):
        sig = StableSigmaAlgebra.discrete(trio)
        masses = {a: {1: Fraction(1, 2), 2: Fraction(1, 4), 3: Fraction(1, 4)} for a in ("a1", "a2")}
        mu = StableMeasure.from_point_masses(sig, masses)
        generator = sorted(
            mix_closure(trio, [trio.top, mk(trio, {"a1": {1}, "a2": {1}})]), key=repr
        )
        assert uniqueness_check(mu, mu, generator)

    def test_trivial_generator_ignores_finer_disagreement(self, trio):
        # {top} generates only the trivial algebra, where the measures coincide
        sig = StableSigmaAlgebra.discrete(trio)
        mu = StableMeasure.from_point_masses(
            sig, {a: {1: Fraction(1, 2), 2: Fraction(1, 4), 3: Fraction(1, 4)} for a in ("a1", "a2")}
        )
        nu = StableMeasure.from_point_masses(
            sig, {a: {1: Fraction(1, 4), 2: Fraction(1, 2), 3: Fraction(1, 4)} for a in ("a1", "a2")}
        )
        assert uniqueness_check(mu, nu, [trio.top])

    def test_disagreement_on_generator_is_reported(self, trio):
        sig = StableSigmaAlgebra.discrete(trio)
        mu = StableMeasure.from_point_masses(
            sig, {a: {1: Fraction(1, 2), 2: Fraction(1, 4), 3: Fraction(1, 4)} for a in ("a1", "a2")}
        )
        nu = StableMeasure.from_point_masses(
            sig, {a: {1: Fraction(1, 4), 2: Fraction(1, 2), 3: Fraction(1, 4)} for a in ("a1", "a2")}
        )
        generator = sorted(
            mix_closure(trio, [trio.top, mk(trio, {"a1": {1}, "a2": {1}})]), key=repr
        )
        assert not uniqueness_check(mu, nu, generator)

    def test_generator_must_be_meet_closed(self, trio):
        sig = StableSigmaAlgebra.discrete(trio)
        mu = StableMeasure.from_point_masses(
            sig, {a: {1: Fraction(1, 3), 2: Fraction(1, 3), 3: Fraction(1, 3)} for a in ("a1", "a2")}
        )
        generator = [trio.top, mk(trio, {"a1": {1, 2}, "a2": {1, 2}}), mk(trio, {"a1": {2, 3}, "a2": {2, 3}})]
        with pytest.raises(ValueError, match="pairwise meets"):
            uniqueness_check(mu, mu, generator)

    def test_generator_must_exhaust_the_space(self, trio):
        sig = StableSigmaAlgebra.discrete(trio)
        mu = StableMeasure.from_point_masses(
            sig, {a: {1: Fraction(1), 2: Fraction(0), 3: Fraction(0)} for a in ("a1", "a2")}
        )
        with pytest.raises(ValueError, match="whole space is missing"):
            uniqueness_check(mu, mu, [mk(trio, {"a1": {1}, "a2": {1}})])

    def test_exhausting_mass_must_be_finite(self, trio):
        sig = StableSigmaAlgebra.trivial(trio)
        mu = StableMeasure(sig, {a: {frozenset({1, 2, 3}): INF} for a in ("a1", "a2")})
        with pytest.raises(ValueError, match="finite mass"):
            uniqueness_check(mu, mu, [trio.top])

    def test_four_point_counterexample(self):
        """Two different measures that agree on a generator which is not
        closed under meets: the premise check refuses to certify them."""
        algebra = MeasureAlgebra([("a1", Fraction(1))])
        quad = CondSpace(algebra, GroundSpace((1, 2, 3, 4)))
        sig = StableSigmaAlgebra.discrete(quad)
        mu = StableMeasure.from_point_masses(
            sig, {"a1": {p: Fraction(1, 4) for p in (1, 2, 3, 4)}}
        )
        nu = StableMeasure.from_point_masses(
            sig, {"a1": {1: Fraction(1, 2), 2: Fraction(0), 3: Fraction(0), 4: Fraction(1, 2)}}
        )
        twelve = mk(quad, {"a1": {1, 2}})
        thirteen = mk(quad, {"a1": {1, 3}})
        # agreement on the generator, disagreement on the generated algebra
        assert mu.eval(twelve) == nu.eval(twelve)
        assert mu.eval(thirteen) == nu.eval(thirteen)
        assert mu.eval(mk(quad, {"a1": {1}})) != nu.eval(mk(quad, {"a1": {1}}))
        with pytest.raises(ValueError, match="pairwise meets"):
            uniqueness_check(mu, nu, [quad.top, twelve, thirteen])
