import math

import pytest
from hypothesis import given, strategies as st

from avrisk.errors import UnknownInjuryClass
from avrisk.model import Party, Role
from avrisk.valuation import (
    Consequence,
    MagnitudeSchedule,
    ModifierTable,
    TRAVEL_TIME_USD_PER_PERSON_HOUR,
    VSL_USD,
    apply_fatality_modifiers,
    certainty_weighted_penalty,
    default_modifier_table,
    monetize,
    party_factor,
)
from avrisk.model import CertaintyWeighting, WeightingMode

LINEAR = CertaintyWeighting(mode=WeightingMode.linear)
EXP = lambda g: CertaintyWeighting(mode=WeightingMode.exponential, gamma=g)


class TestMonetize:
    def test_one_fatality_is_vsl(self):
        assert monetize(Consequence(fatalities=1.0)) == 9_400_000.0
        assert VSL_USD == 9_400_000.0

    def test_one_person_hour(self):
        assert monetize(Consequence(person_hours=1.0)) == 13.30
        assert TRAVEL_TIME_USD_PER_PERSON_HOUR == 13.30

    def test_mixed_consequence_sums(self):
        sched = MagnitudeSchedule(injury_cost_table={"moderate": 100_000.0})
        c = Consequence(fatalities=2.0, injuries={"moderate": 3.0}, person_hours=10.0)
        assert monetize(c, sched) == 2 * 9_400_000.0 + 3 * 100_000.0 + 10 * 13.30

    def test_unknown_injury_class(self):
        with pytest.raises(UnknownInjuryClass):
            monetize(Consequence(injuries={"cosmic": 1.0}))

    def test_negative_counts_rejected(self):
        with pytest.raises(ValueError):
            monetize(Consequence(fatalities=-1.0))
        with pytest.raises(ValueError):
            monetize(Consequence(person_hours=-0.5))

    def test_empty_consequence_is_zero(self):
        assert monetize(Consequence()) == 0.0


class TestCertaintyWeighting:
    def test_gamma_zero_equals_linear(self):
        for i in range(1000):
            p = i / 999
            assert certainty_weighted_penalty(p, 5.0, EXP(0.0)) == pytest.approx(
                certainty_weighted_penalty(p, 5.0, LINEAR), abs=1e-12
            )

    def test_linear_is_plain_product(self):
        assert certainty_weighted_penalty(0.25, 8.0, LINEAR) == 2.0

    def test_tunnel_hand_values(self):
        # one near-certain harm outweighs the same mass split in two
        g = math.log(10.0)
        assert certainty_weighted_penalty(0.95, 1.0, EXP(g)) == 8.466883912270584
        assert 2 * certainty_weighted_penalty(0.5, 1.0, EXP(g)) == 3.1622776601683795

    def test_superlinear_in_probability(self):
        g = 1.7
        prev = None
        for i in range(1, 1000):
            p = i / 999
            ratio = certainty_weighted_penalty(p, 3.0, EXP(g)) / p
            if prev is not None:
                assert ratio > prev
            prev = ratio

    def test_negative_base_rejected(self):
        with pytest.raises(ValueError):
            certainty_weighted_penalty(0.5, -1.0, LINEAR)

    @given(st.floats(0.0, 1.0), st.floats(0.0, 1e6), st.floats(0.0, 6.0))
    def test_weighted_at_least_linear(self, p, v, g):
        weighted = certainty_weighted_penalty(p, v, EXP(g))
        assert weighted >= v * p or math.isclose(weighted, v * p)


class TestModifierTable:
    def test_default_table_contents(self):
        t = default_modifier_table()
        assert t.factor("intoxicated", True) == 2.0
        assert t.factor("intoxicated", False) == 1.0
        assert t.factor("sex", "female") == 1.28
        assert t.factor("sex", "male") == 1.0
        assert t.factor("age", 20) == 1.0
        assert t.factor("age", 70) == 3.0

    def test_age_geometric_midpoint(self):
        t = default_modifier_table()
        assert t.factor("age", 45) == 1.7320508075688772  # sqrt(3)

    def test_age_clamps_outside_anchors(self):
        t = default_modifier_table()
        assert t.factor("age", 5) == 1.0
        assert t.factor("age", 95) == 3.0

    def test_seventy_is_exactly_three_times_twenty(self):
        t = default_modifier_table()
        assert t.factor("age", 70) == 3.0 * t.factor("age", 20)

    def test_unknown_key_is_neutral(self):
        assert default_modifier_table().factor("shoe_size", 45) == 1.0

    def test_without_removes_rules(self):
        t = default_modifier_table().without(frozenset({"sex", "age"}))
        assert t.factor("sex", "female") == 1.0
        assert t.factor("age", 70) == 1.0
        assert t.factor("intoxicated", True) == 2.0

    def test_nonpositive_factors_rejected(self):
        with pytest.raises(ValueError):
            ModifierTable(flags={"x": 0.0}, equals={}, anchors={})
        with pytest.raises(ValueError):
            ModifierTable(flags={}, equals={("a", "b"): -1.0}, anchors={})

    def test_anchor_values_must_increase(self):
        with pytest.raises(ValueError):
            ModifierTable(flags={}, equals={}, anchors={"age": ((70.0, 3.0), (20.0, 1.0))})

    def test_anchor_interpolation_between_custom_points(self):
        # halfway between the anchors the factor is the geometric mean
        t = ModifierTable(flags={}, equals={}, anchors={"mass": ((1.0, 1.0), (100.0, 4.0))})
        assert t.factor("mass", 50.5) == pytest.approx(2.0, rel=1e-12)


class TestPartyFactor:
    def _party(self, **attrs):
        return Party(id="p", role=Role.occupant, attributes=attrs)

    def test_factors_multiply(self):
        f, notes = party_factor(self._party(intoxicated=True, sex="female"), default_modifier_table())
        assert f == 2.0 * 1.28
        assert len(notes) == 2

    def test_attribute_order_is_irrelevant(self):
        t = default_modifier_table()
        a = Party(id="p", role=Role.occupant, attributes={"sex": "female", "age": 45, "intoxicated": True})
        b = Party(id="p", role=Role.occupant, attributes={"intoxicated": True, "age": 45, "sex": "female"})
        assert party_factor(a, t) == party_factor(b, t)

    def test_excluded_attributes_skipped(self):
        f, notes = party_factor(
            self._party(sex="female", intoxicated=True),
            default_modifier_table().without(frozenset({"sex"})),
        )
        assert f == 2.0
        assert all("sex" not in n for n in notes)

    def test_no_attributes_is_neutral(self):
        assert party_factor(self._party(), default_modifier_table()) == (1.0, ())


class TestApplyFatalityModifiers:
    def test_intoxication_doubles(self):
        t = default_modifier_table()
        p = Party(id="p", role=Role.occupant, attributes={"intoxicated": True})
        assert apply_fatality_modifiers(0.3, p, t) == 0.6

    def test_female_modifier(self):
        t = default_modifier_table()
        p = Party(id="p", role=Role.occupant, attributes={"sex": "female"})
        assert apply_fatality_modifiers(0.1, p, t) == 0.128

    def test_clamped_at_one(self):
        t = default_modifier_table()
        p = Party(id="p", role=Role.occupant, attributes={"intoxicated": True})
        assert apply_fatality_modifiers(0.6, p, t) == 1.0

    @given(st.floats(0.0, 1.0))
    def test_result_stays_a_probability(self, base):
        t = default_modifier_table()
        p = Party(id="p", role=Role.occupant, attributes={"intoxicated": True, "sex": "female", "age": 88})
        adjusted = apply_fatality_modifiers(base, p, t)
        assert 0.0 <= adjusted <= 1.0
