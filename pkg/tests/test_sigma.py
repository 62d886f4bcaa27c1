from fractions import Fraction

import pytest

from condmeasure import (
    BOTTOM,
    CondSpace,
    GroundSpace,
    MeasureAlgebra,
    SetRing,
    StableFunction,
    StableRing,
    StableSigmaAlgebra,
    classify,
    cond_preimage,
    fiberwise_sigma_oracle,
    generate_dynkin,
    generate_sigma,
    is_stable_collection,
    is_stably_measurable,
    pi_lambda_check,
)
from condmeasure.sigma import generate_sigma_extensional, mix_closure


def mk(space, fibers):
    return space.make(fibers.keys(), fibers)


@pytest.fixture
def trio():
    algebra = MeasureAlgebra.uniform(["a1", "a2"])
    return CondSpace(algebra, GroundSpace((1, 2, 3)))


@pytest.fixture
def quad():
    algebra = MeasureAlgebra([("a1", Fraction(1))])
    return CondSpace(algebra, GroundSpace((1, 2, 3, 4)))


class TestSetRing:
    def test_generated_blocks_are_signatures(self):
        ring = SetRing.generated([frozenset({1, 2}), frozenset({2, 3})])
        assert set(ring.blocks) == {frozenset({1}), frozenset({2}), frozenset({3})}
        assert ring.covered == frozenset({1, 2, 3})

    def test_contains_unions_of_blocks_only(self):
        ring = SetRing([frozenset({1, 2}), frozenset({3})])
        assert ring.contains(frozenset({1, 2, 3}))
        assert not ring.contains(frozenset({1}))
        assert not ring.contains(frozenset({4}))

    def test_from_members_validates_closure(self):
        SetRing.from_members([frozenset(), frozenset({1}), frozenset({2}), frozenset({1, 2})])
        with pytest.raises(ValueError):
            SetRing.from_members([frozenset({1}), frozenset({2})])

    def test_member_count(self):
        ring = SetRing([frozenset({1}), frozenset({2}), frozenset({3})])
        assert ring.member_count() == 8
        assert len(list(ring.members())) == 8


class TestStableFamilies:
    def test_ring_membership_is_atom_local(self, trio):
        ring = StableRing.from_fiber_sets(trio, {"a1": [frozenset({1})], "a2": [frozenset({2, 3})]})
        assert ring.contains(mk(trio, {"a1": {1}}))
        assert ring.contains(mk(trio, {"a1": {1}, "a2": {2, 3}}))
        assert not ring.contains(mk(trio, {"a2": {2}}))
        assert ring.contains(BOTTOM)

    def test_sigma_must_cover_the_points(self, trio):
        with pytest.raises(ValueError):
            StableSigmaAlgebra.from_blocks(trio, {"a1": [frozenset({1})], "a2": [frozenset({1, 2, 3})]})

    def test_discrete_and_trivial(self, trio):
        disc = StableSigmaAlgebra.discrete(trio)
        triv = StableSigmaAlgebra.trivial(trio)
        assert disc.member_count() == 8 * 8
        assert triv.member_count() == 2 * 2
        assert disc.contains(mk(trio, {"a1": {2}}))
        assert not triv.contains(mk(trio, {"a1": {2}}))

    def test_from_members_validates_product_structure(self, trio):
        disc = StableSigmaAlgebra.discrete(trio)
        rebuilt = StableSigmaAlgebra.from_members(trio, disc.members())
        assert rebuilt == disc
        partial = [v for v in disc.members() if v.support != {"a1"}]
        with pytest.raises(ValueError):
            StableSigmaAlgebra.from_members(trio, partial)


class TestMixes:
    def test_mix_closure_adds_all_concatenations(self, trio):
        v = mk(trio, {"a1": {1}, "a2": {1}})
        w = mk(trio, {"a1": {2}, "a2": {2}})
        mixes = mix_closure(trio, [v, w])
        assert mixes == frozenset(
            {v, w, mk(trio, {"a1": {1}, "a2": {2}}), mk(trio, {"a1": {2}, "a2": {1}})}
        )

    def test_stability_detects_missing_mix(self, trio):
        v = mk(trio, {"a1": {1}, "a2": {1}})
        w = mk(trio, {"a1": {2}, "a2": {2}})
        assert not is_stable_collection(trio, [v, w])
        assert is_stable_collection(trio, mix_closure(trio, [v, w]))


class TestClassify:
    def test_sigma_label(self, trio):
        assert classify(trio, StableSigmaAlgebra.trivial(trio).members()) == "sigma"

    def test_dynkin_but_not_sigma(self, quad):
        pairs = [{1, 2}, {3, 4}, {1, 3}, {2, 4}, {1, 4}, {2, 3}]
        members = [BOTTOM, quad.top] + [mk(quad, {"a1": s}) for s in pairs]
        assert classify(quad, members) == "dynkin"

    def test_ring_but_not_dynkin(self, quad):
        members = [BOTTOM, mk(quad, {"a1": {1}})]
        assert classify(quad, members) == "ring"

    def test_none(self, quad):
        members = [BOTTOM, mk(quad, {"a1": {1}}), mk(quad, {"a1": {2}})]
        assert classify(quad, members) == "none"


class TestGeneration:
    def test_generated_sigma_matches_oracle_and_closure(self, trio):
        gen = [mk(trio, {"a1": {1}, "a2": {1, 2}})]
        sig = generate_sigma(trio, gen)
        assert sig == fiberwise_sigma_oracle(trio, gen)
        assert frozenset(sig.members()) == generate_sigma_extensional(trio, gen)
        assert set(sig.blocks("a1")) == {frozenset({1}), frozenset({2, 3})}
        assert set(sig.blocks("a2")) == {frozenset({1, 2}), frozenset({3})}
        assert sig.member_count() == 16

    def test_meet_closed_generator_passes_pi_lambda(self, trio):
        gen = [mk(trio, {"a1": {1}, "a2": {1, 2}})]
        assert pi_lambda_check(trio, gen)

    def test_non_meet_closed_generator_can_fail_pi_lambda(self, quad):
        # the two generating sets overlap in {1}, which neither contains alone:
        # the Dynkin closure stops at six members while the sigma-algebra is discrete
        gen = [mk(quad, {"a1": {1, 2}}), mk(quad, {"a1": {1, 3}})]
        assert not pi_lambda_check(quad, gen)
        assert len(generate_dynkin(quad, gen)) == 6
        assert generate_sigma(quad, gen).member_count() == 16


class TestMeasurability:
    def test_preimage_commutes_with_membership(self, trio):
        f = StableFunction.same_on_all_atoms(("a1", "a2"), {1: 2, 2: 2, 3: 1})
        w = mk(trio, {"a1": {2}, "a2": {1}})
        assert cond_preimage(f, w) == mk(trio, {"a1": {1, 2}, "a2": {3}})

    def test_preimage_of_unreached_fiber_drops_atom(self, trio):
        f = StableFunction.same_on_all_atoms(("a1", "a2"), {1: 1, 2: 1, 3: 1})
        w = mk(trio, {"a1": {2, 3}, "a2": {1}})
        assert cond_preimage(f, w) == mk(trio, {"a2": {1, 2, 3}})

    def test_measurability_against_generators(self, trio):
        coarse = StableSigmaAlgebra.from_blocks(
            trio, {a: [frozenset({1, 2}), frozenset({3})] for a in ("a1", "a2")}
        )
        keeps = StableFunction.same_on_all_atoms(("a1", "a2"), {1: 1, 2: 1, 3: 3})
        splits = StableFunction.same_on_all_atoms(("a1", "a2"), {1: 1, 2: 3, 3: 3})
        targets = list(StableSigmaAlgebra.discrete(trio).members())
        assert is_stably_measurable(keeps, coarse, targets)
        assert not is_stably_measurable(splits, coarse, targets)
