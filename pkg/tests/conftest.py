from fractions import Fraction

import pytest

from condmeasure import CondSpace, GroundSpace, MeasureAlgebra, StableSigmaAlgebra, SubAlgebra


@pytest.fixture
def coin_algebra():
    return MeasureAlgebra([("a1", Fraction(1, 2)), ("a2", Fraction(1, 2))])


@pytest.fixture
def coin_space(coin_algebra):
    return CondSpace(coin_algebra, GroundSpace((1, 2)))


@pytest.fixture
def coin_sigma(coin_space):
    return StableSigmaAlgebra.discrete(coin_space)


@pytest.fixture
def dice():
    """A fair die: six equal atoms, the rolled face as observation,
    and the parity grouping of atoms."""
    algebra = MeasureAlgebra.uniform([f"a{i}" for i in range(1, 7)])
    space = GroundSpace(tuple(range(1, 7)))
    return {
        "algebra": algebra,
        "space": space,
        "cspace": CondSpace(algebra, space),
        "roll": {f"a{i}": i for i in range(1, 7)},
        "parity": SubAlgebra(algebra, [["a1", "a3", "a5"], ["a2", "a4", "a6"]]),
        "face": {i: Fraction(i) for i in range(1, 7)},
    }
