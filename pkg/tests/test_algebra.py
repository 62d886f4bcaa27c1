from fractions import Fraction

import pytest

from condmeasure import INF, Field, MeasureAlgebra, format_value, parse_value
from condmeasure.algebra import ext_add, ext_mul, ext_sub, ext_sum, field_inf, field_sup, is_finite


class TestExtendedValues:
    def test_addition_absorbs_infinity(self):
        assert ext_add(INF, Fraction(3)) is INF
        assert ext_add(Fraction(1, 2), Fraction(1, 3)) == Fraction(5, 6)

    def test_zero_times_infinity_is_zero(self):
        assert ext_mul(Fraction(0), INF) == 0
        assert ext_mul(INF, Fraction(0)) == 0
        assert ext_mul(Fraction(2), INF) is INF

    def test_negative_times_infinity_raises(self):
        with pytest.raises(ValueError):
            ext_mul(Fraction(-1), INF)

    def test_subtraction_guards_infinity(self):
        assert ext_sub(INF, Fraction(5)) is INF
        with pytest.raises(ValueError):
            ext_sub(INF, INF)
        with pytest.raises(ValueError):
            ext_sub(Fraction(1), INF)

    def test_ordering(self):
        assert Fraction(10**9) < INF
        assert INF == INF
        assert not INF < INF
        assert is_finite(Fraction(7)) and not is_finite(INF)

    def test_sum_with_infinite_term(self):
        assert ext_sum([Fraction(1), INF, Fraction(2)]) is INF
        assert ext_sum([]) == 0

    def test_parse_format_round_trip(self):
        assert parse_value("3/4") == Fraction(3, 4)
        assert parse_value("inf") is INF
        assert format_value(Fraction(6, 3)) == "2"
        assert format_value(Fraction(-1, 4)) == "-1/4"
        assert format_value(INF) == "inf"
        with pytest.raises(ValueError):
            parse_value("one half")


class TestMeasureAlgebra:
    def test_weights_must_sum_to_one(self):
        with pytest.raises(ValueError):
            MeasureAlgebra([("a1", Fraction(1, 2)), ("a2", Fraction(1, 3))])

    def test_weights_must_be_positive(self):
        with pytest.raises(ValueError):
            MeasureAlgebra([("a1", Fraction(0)), ("a2", Fraction(1))])

    def test_duplicate_atoms_rejected(self):
        with pytest.raises(ValueError):
            MeasureAlgebra([("a1", Fraction(1, 2)), ("a1", Fraction(1, 2))])

    def test_uniform(self):
        alg = MeasureAlgebra.uniform(["x", "y", "z"])
        assert alg.prob(alg.top) == 1
        assert alg.weights["y"] == Fraction(1, 3)

    def test_event_operations(self):
        alg = MeasureAlgebra.uniform(["a1", "a2", "a3", "a4"])
        ev = alg.event(["a1", "a3"])
        assert alg.complement_event(ev) == frozenset({"a2", "a4"})
        assert alg.prob(ev) == Fraction(1, 2)
        with pytest.raises(ValueError):
            alg.event(["zz"])

    def test_largest_event_is_union_of_singletons(self):
        alg = MeasureAlgebra.uniform(["a1", "a2", "a3"])
        target = frozenset({"a1", "a3"})
        assert alg.largest_event(lambda ev: ev <= target, verify=True) == target

    def test_largest_event_verify_rejects_non_local_predicate(self):
        alg = MeasureAlgebra.uniform(["a1", "a2"])
        with pytest.raises(ValueError):
            alg.largest_event(lambda ev: len(ev) == 2, verify=True)

    def test_concatenate_field(self):
        alg = MeasureAlgebra.uniform(["a1", "a2", "a3"])
        f = Field.constant(alg, Fraction(1))
        g = Field.constant(alg, Fraction(2))
        pasted = alg.concatenate_field([f, g], [frozenset({"a2"}), frozenset({"a1", "a3"})])
        assert pasted.as_dict() == {"a1": 2, "a2": 1, "a3": 2}
        with pytest.raises(ValueError):
            alg.concatenate_field([f, g], [frozenset({"a1"}), frozenset({"a1", "a3"})])


class TestField:
    def test_arithmetic_is_pointwise(self, coin_algebra):
        f = Field(coin_algebra, {"a1": Fraction(1, 2), "a2": Fraction(3)})
        g = Field(coin_algebra, {"a1": Fraction(1, 2), "a2": Fraction(-1)})
        assert (f + g).as_dict() == {"a1": 1, "a2": 2}
        assert (f - g).as_dict() == {"a1": 0, "a2": 4}
        assert (f * g)["a2"] == -3
        assert (2 * f)["a1"] == 1

    def test_restrict_zeroes_off_event(self, coin_algebra):
        f = Field(coin_algebra, {"a1": Fraction(5), "a2": INF})
        r = f.restrict(frozenset({"a2"}))
        assert r["a1"] == 0 and r["a2"] is INF
        assert f.support() == frozenset({"a1", "a2"})
        assert not f.is_finite()

    def test_order_and_extrema(self, coin_algebra):
        f = Field(coin_algebra, {"a1": Fraction(1), "a2": Fraction(2)})
        g = Field(coin_algebra, {"a1": Fraction(1), "a2": INF})
        assert f.le(g) and not g.le(f)
        assert field_sup([f, g])["a2"] is INF
        assert field_inf([f, g]).as_dict() == f.as_dict()

    def test_total_sums_atom_values(self, coin_algebra):
        f = Field(coin_algebra, {"a1": Fraction(1), "a2": Fraction(3)})
        assert f.total() == 4
        g = Field(coin_algebra, {"a1": Fraction(1), "a2": INF})
        assert g.total() is INF

    def test_format(self, coin_algebra):
        f = Field(coin_algebra, {"a1": Fraction(1, 3), "a2": INF})
        assert f.format() == "a1=1/3, a2=inf"
