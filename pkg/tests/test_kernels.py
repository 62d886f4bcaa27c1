from fractions import Fraction

import pytest

from condmeasure import (
    CondSpace,
    Field,
    GroundSpace,
    INF,
    MeasureAlgebra,
    StableMeasure,
    StableSigmaAlgebra,
    SubAlgebra,
    conditional_distribution,
    conditional_expectation,
    field_as_observation,
    kernel_to_measure,
    lift_function,
    measure_to_kernel,
    pushforward,
)


def mk(space, fibers):
    return space.make(fibers.keys(), fibers)


@pytest.fixture
def coords_setting(coin_algebra):
    space = GroundSpace((0, 1), {0: Fraction(0), 1: Fraction(1)})
    cspace = CondSpace(coin_algebra, space)
    sigma = StableSigmaAlgebra.discrete(cspace)
    mu = StableMeasure.from_point_masses(
        sigma,
        {"a1": {0: Fraction(1, 2), 1: Fraction(1, 2)}, "a2": {0: Fraction(3, 4), 1: Fraction(1, 4)}},
    )
    return cspace, sigma, mu


class TestKernelTranslation:
    def test_round_trip_is_exact(self, coords_setting):
        _, _, mu = coords_setting
        kappa = measure_to_kernel(mu)
        assert kappa.mass("a1", frozenset({0})) == Fraction(1, 2)
        assert kappa.mass("a2", frozenset({1})) == Fraction(1, 4)
        assert kappa.is_probability()
        back = kernel_to_measure(kappa)
        assert back.block_mass == mu.block_mass
        assert measure_to_kernel(back) == kappa

    def test_recovery_needs_coordinates(self, coin_space):
        sigma = StableSigmaAlgebra.discrete(coin_space)
        mu = StableMeasure.from_point_masses(
            sigma, {a: {1: Fraction(1, 2), 2: Fraction(1, 2)} for a in ("a1", "a2")}
        )
        with pytest.raises(ValueError, match="coordinates"):
            measure_to_kernel(mu)

    def test_recovery_needs_probability(self, coords_setting):
        cspace, sigma, _ = coords_setting
        heavy = StableMeasure.from_point_masses(
            sigma, {a: {0: Fraction(2), 1: Fraction(1)} for a in ("a1", "a2")}
        )
        with pytest.raises(ValueError, match="probability"):
            measure_to_kernel(heavy)


class TestSubAlgebra:
    def test_blocks_sort_by_first_atom_and_label(self, dice):
        parity = dice["parity"]
        assert parity.labels == ("a1+a3+a5", "a2+a4+a6")
        assert parity.quotient.weights["a1+a3+a5"] == Fraction(1, 2)
        assert parity.label_of("a4") == "a2+a4+a6"

    def test_partition_is_enforced(self, dice):
        with pytest.raises(ValueError):
            SubAlgebra(dice["algebra"], [["a1", "a2"], ["a2", "a3", "a4", "a5", "a6"]])

    def test_coarseness(self, dice):
        algebra = dice["algebra"]
        fine = SubAlgebra(algebra, [[a] for a in algebra.atoms])
        trivial = SubAlgebra(algebra, [list(algebra.atoms)])
        assert trivial.is_coarser_than(fine)
        assert not fine.is_coarser_than(trivial)

    def test_spread_to_atoms(self, dice):
        parity = dice["parity"]
        g = Field(parity.quotient, {"a1+a3+a5": Fraction(3), "a2+a4+a6": Fraction(4)})
        spread = parity.spread_to_atoms(g)
        assert spread.as_dict() == {"a1": 3, "a2": 4, "a3": 3, "a4": 4, "a5": 3, "a6": 4}


class TestConditioning:
    def test_dice_conditional_expectation(self, dice):
        got = conditional_expectation(dice["parity"], dice["roll"], dice["space"], dice["face"])
        assert got.as_dict() == {"a1+a3+a5": 3, "a2+a4+a6": 4}

    def test_dice_conditional_distribution_of_odd(self, dice):
        dist = conditional_distribution(dice["parity"], dice["roll"], dice["space"])
        assert dist.is_probability()
        quotient_space = dist.domain.cspace
        odd = mk(quotient_space, {label: {1, 3, 5} for label in dice["parity"].labels})
        assert dist.eval(odd).as_dict() == {"a1+a3+a5": 1, "a2+a4+a6": 0}

    def test_finest_grouping_returns_the_function(self, dice):
        algebra = dice["algebra"]
        fine = SubAlgebra(algebra, [[a] for a in algebra.atoms])
        got = conditional_expectation(fine, dice["roll"], dice["space"], dice["face"])
        assert [got[label] for label in fine.labels] == [1, 2, 3, 4, 5, 6]

    def test_coarsest_grouping_returns_the_mean(self, dice):
        algebra = dice["algebra"]
        trivial = SubAlgebra(algebra, [list(algebra.atoms)])
        got = conditional_expectation(trivial, dice["roll"], dice["space"], dice["face"])
        assert got[trivial.labels[0]] == Fraction(7, 2)

    def test_tower_property(self, dice):
        algebra = dice["algebra"]
        trivial = SubAlgebra(algebra, [list(algebra.atoms)])
        inner = conditional_expectation(dice["parity"], dice["roll"], dice["space"], dice["face"])
        spread = dice["parity"].spread_to_atoms(inner)
        obs_space, obs = field_as_observation(spread)
        fmap = {p: Fraction(p) for p in obs_space.points}
        outer = conditional_expectation(trivial, obs, obs_space, fmap)
        direct = conditional_expectation(trivial, dice["roll"], dice["space"], dice["face"])
        assert outer[trivial.labels[0]] == direct[trivial.labels[0]] == Fraction(7, 2)

    def test_distribution_over_trivial_grouping_is_the_law(self, dice):
        algebra = dice["algebra"]
        trivial = SubAlgebra(algebra, [list(algebra.atoms)])
        dist = conditional_distribution(trivial, dice["roll"], dice["space"])
        law = pushforward(algebra, dice["roll"], dice["space"])
        label = trivial.labels[0]
        quotient_space = dist.domain.cspace
        for p in dice["space"].points:
            single = mk(quotient_space, {label: {p}})
            assert dist.eval(single)[label] == law[p] == Fraction(1, 6)


class TestObservationFromField:
    def test_distinct_values_become_points(self, coin_algebra):
        h = Field(coin_algebra, {"a1": Fraction(1, 3), "a2": Fraction(2)})
        space, obs = field_as_observation(h)
        assert set(space.points) == {Fraction(1, 3), Fraction(2)}
        assert space.coords is not None
        assert obs == {"a1": Fraction(1, 3), "a2": Fraction(2)}

    def test_infinite_field_rejected(self, coin_algebra):
        h = Field(coin_algebra, {"a1": Fraction(1), "a2": INF})
        with pytest.raises(ValueError):
            field_as_observation(h)

    def test_lift_function_spreads_over_atoms(self, coin_space):
        sigma = StableSigmaAlgebra.discrete(coin_space)
        f = lift_function(sigma, {1: Fraction(0), 2: Fraction(5)})
        assert f.value("a1", 2) == 5 and f.value("a2", 2) == 5
