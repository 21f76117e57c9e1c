from collections import defaultdict
from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from windowcoupling import (
    Alphabet,
    MassFunction,
    ProcessSequenceSpec,
    ProductSpace,
    SpaceMismatchError,
    TailRule,
    WindowRangeError,
    conditional_given_prefix,
    density_convergence,
    total_variation,
    uniform_on_cylinder,
    window_infimum,
    window_marginal,
)


@st.composite
def spaces(draw, max_width=3, max_alphabet=3):
    width = draw(st.integers(1, max_width))
    return ProductSpace(
        tuple(
            Alphabet(tuple("abc"[: draw(st.integers(1, max_alphabet))]))
            for _ in range(width)
        )
    )


@st.composite
def probability_laws(draw, space):
    points = list(space.points())
    weights = draw(
        st.lists(st.integers(0, 8), min_size=len(points), max_size=len(points)).filter(
            lambda w: sum(w) > 0
        )
    )
    total = sum(weights)
    return MassFunction(space, {z: F(w, total) for z, w in zip(points, weights)})


@st.composite
def sequences(draw):
    space = draw(spaces())
    count = draw(st.integers(1, 3))
    members = tuple(draw(probability_laws(space)) for _ in range(count))
    limit = draw(probability_laws(space))
    return ProcessSequenceSpec(space, members, limit, TailRule(count))


class TestAlphabet:
    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            Alphabet(())

    def test_rejects_duplicates(self):
        with pytest.raises(ValueError, match="duplicate"):
            Alphabet(("a", "a"))

    def test_rejects_comma(self):
        with pytest.raises(ValueError, match="comma"):
            Alphabet(("a,b",))

    def test_index(self):
        assert Alphabet(("a", "b")).index("b") == 1
        with pytest.raises(KeyError):
            Alphabet(("a",)).index("z")


class TestProductSpace:
    def test_size_and_points(self, pair_space):
        assert pair_space.size() == 4
        assert sorted(pair_space.points()) == [(0, 0), (0, 1), (1, 0), (1, 1)]

    def test_window_range(self, pair_space):
        assert pair_space.window(0).width == 0
        assert pair_space.window(2) == pair_space
        with pytest.raises(WindowRangeError):
            pair_space.window(3)
        with pytest.raises(WindowRangeError):
            pair_space.window(-1)

    def test_unit_space_has_one_point(self, pair_space):
        assert list(pair_space.window(0).points()) == [()]

    def test_point_formatting_round_trip(self, pair_space):
        assert pair_space.format_point((0, 1)) == "a,y"
        assert pair_space.parse_point("a,y") == (0, 1)
        unit = pair_space.window(0)
        assert unit.format_point(()) == ""
        assert unit.parse_point("") == ()


class TestMassFunction:
    def test_drops_zero_entries(self, binary_space):
        law = MassFunction(binary_space, {(0,): F(1), (1,): F(0)})
        assert law.mass == {(0,): F(1)}
        assert law.is_probability

    def test_rejects_negative(self, binary_space):
        with pytest.raises(ValueError, match="negative"):
            MassFunction(binary_space, {(0,): F(-1, 2)})

    def test_rejects_excess_mass(self, binary_space):
        with pytest.raises(ValueError, match="exceeds"):
            MassFunction(binary_space, {(0,): F(2, 3), (1,): F(2, 3)})

    def test_rejects_foreign_point(self, binary_space):
        with pytest.raises(ValueError, match="outside"):
            MassFunction(binary_space, {(5,): F(1)})

    def test_sub_probability_flagged(self, binary_space):
        law = MassFunction(binary_space, {(0,): F(1, 3)})
        assert not law.is_probability
        assert law.total_mass == F(1, 3)


class TestWindowMarginal:
    def test_uniform_pair_first_coordinate(self, pair_space):
        law = MassFunction.uniform(pair_space)
        got = window_marginal(law, 1)
        assert got.mass == {(0,): F(1, 2), (1,): F(1, 2)}

    def test_window_zero_is_total_mass_on_empty_tuple(self, pair_space):
        law = MassFunction.uniform(pair_space)
        got = window_marginal(law, 0)
        assert got.mass == {(): F(1)}

    def test_mixed_law_matches_direct_summation(self, pair_space):
        law = MassFunction(
            pair_space, {(0, 0): F(1, 3), (0, 1): F(1, 6), (1, 0): F(1, 2)}
        )
        # independent oracle: group masses by prefix
        expected = defaultdict(F)
        for z, v in law.mass.items():
            expected[z[:1]] += v
        got = window_marginal(law, 1)
        assert got.mass == dict(expected)
        assert got.mass == {(0,): F(1, 2), (1,): F(1, 2)}

    def test_out_of_range(self, pair_space):
        with pytest.raises(WindowRangeError):
            window_marginal(MassFunction.uniform(pair_space), 3)

    @given(st.data())
    def test_preserves_total_mass(self, data):
        space = data.draw(spaces())
        law = data.draw(probability_laws(space))
        k = data.draw(st.integers(0, space.width))
        assert window_marginal(law, k).total_mass == law.total_mass

    @given(st.data())
    def test_marginal_composition(self, data):
        space = data.draw(spaces())
        law = data.draw(probability_laws(space))
        k2 = data.draw(st.integers(0, space.width))
        k1 = data.draw(st.integers(0, k2))
        assert window_marginal(window_marginal(law, k2), k1) == window_marginal(law, k1)


class TestWindowInfimum:
    def test_constant_sequence_is_identity(self, constant_sequence):
        got = window_infimum(constant_sequence, 1, 1)
        assert got == window_marginal(constant_sequence.limit, 1)

    def test_two_member_example(self, two_member_sequence):
        # min over {1/4, 1/3, 1/2} and {3/4, 2/3, 1/2}
        got = window_infimum(two_member_sequence, 1, 1)
        assert got.mass == {(0,): F(1, 4), (1,): F(1, 2)}

    def test_past_tail_equals_limit(self, two_member_sequence):
        got = window_infimum(two_member_sequence, 3, 1)
        assert got == window_marginal(two_member_sequence.limit, 1)

    def test_start_below_one_rejected(self, constant_sequence):
        with pytest.raises(ValueError):
            window_infimum(constant_sequence, 0, 1)

    @settings(max_examples=50)
    @given(st.data())
    def test_monotone_in_start_and_dominated(self, data):
        seq = data.draw(sequences())
        k = data.draw(st.integers(0, seq.space.width))
        previous = None
        for n in range(1, seq.horizon + 2):
            current = window_infimum(seq, n, k)
            if previous is not None:
                assert all(previous[z] <= current[z] for z in previous.mass)
            for m in range(n, seq.horizon + 1):
                member = window_marginal(seq.member(m), k)
                assert all(v <= member[z] for z, v in current.mass.items())
            previous = current


class TestDensityConvergence:
    def test_constant_sequence(self, constant_sequence):
        assert density_convergence(constant_sequence, 1) == (True, 1)

    def test_two_member_sequence_witnessed_at_tail(self, two_member_sequence):
        # infimum reaches (1/2, 1/2) exactly when only the limit remains
        assert density_convergence(two_member_sequence, 1) == (True, 3)

    def test_tail_rule_dominates_point_mass_members(self, binary_space):
        point = MassFunction(binary_space, {(0,): F(1)})
        uniform = MassFunction(binary_space, {(0,): F(1, 2), (1,): F(1, 2)})
        seq = ProcessSequenceSpec(binary_space, (point, point), uniform, TailRule(2))
        assert density_convergence(seq, 1) == (True, 3)

    @settings(max_examples=50)
    @given(st.data())
    def test_infimum_mass_reaches_one_at_witness(self, data):
        seq = data.draw(sequences())
        k = data.draw(st.integers(0, seq.space.width))
        verdict = density_convergence(seq, k)
        assert verdict.converges
        masses = [
            window_infimum(seq, n, k).total_mass for n in range(1, seq.horizon + 2)
        ]
        assert all(a <= b for a, b in zip(masses, masses[1:]))
        assert masses[verdict.witness - 1] == 1


class TestTotalVariation:
    def test_identical_laws(self, binary_space):
        law = MassFunction.uniform(binary_space)
        assert total_variation(law, law) == 0

    def test_disjoint_point_masses(self, binary_space):
        a = MassFunction(binary_space, {(0,): F(1)})
        b = MassFunction(binary_space, {(1,): F(1)})
        assert total_variation(a, b) == 1

    def test_quarter_example(self, binary_space):
        p = MassFunction(binary_space, {(0,): F(1, 4), (1,): F(3, 4)})
        q = MassFunction.uniform(binary_space)
        assert total_variation(p, q) == F(1, 4)

    def test_space_mismatch(self, binary_space, pair_space):
        with pytest.raises(SpaceMismatchError):
            total_variation(
                MassFunction.uniform(binary_space), MassFunction.uniform(pair_space)
            )

    @given(st.data())
    def test_symmetric_and_bounded(self, data):
        space = data.draw(spaces())
        p = data.draw(probability_laws(space))
        q = data.draw(probability_laws(space))
        tv = total_variation(p, q)
        assert 0 <= tv <= 1
        assert tv == total_variation(q, p)
        assert (tv == 0) == (p == q)


class TestConditioning:
    def test_conditional_given_prefix(self, pair_space):
        law = MassFunction(
            pair_space, {(0, 0): F(1, 3), (0, 1): F(1, 6), (1, 0): F(1, 2)}
        )
        got = conditional_given_prefix(law, (0,))
        assert got.mass == {(0, 0): F(2, 3), (0, 1): F(1, 3)}

    def test_zero_mass_prefix_rejected(self, pair_space):
        law = MassFunction(pair_space, {(0, 0): F(1)})
        with pytest.raises(ValueError, match="zero-mass"):
            conditional_given_prefix(law, (1,))

    def test_uniform_on_cylinder(self, pair_space):
        got = uniform_on_cylinder(pair_space, (1,))
        assert got.mass == {(1, 0): F(1, 2), (1, 1): F(1, 2)}


class TestProcessSequenceSpec:
    def test_member_count_must_match_tail(self, binary_space):
        q = MassFunction.uniform(binary_space)
        with pytest.raises(ValueError, match="tail index"):
            ProcessSequenceSpec(binary_space, (q,), q, TailRule(2))

    def test_members_must_be_probability(self, binary_space):
        q = MassFunction.uniform(binary_space)
        sub = MassFunction(binary_space, {(0,): F(1, 3)})
        with pytest.raises(ValueError, match="total mass"):
            ProcessSequenceSpec(binary_space, (sub,), q, TailRule(1))

    def test_member_lookup_past_tail(self, two_member_sequence):
        assert two_member_sequence.member(7) == two_member_sequence.limit
        with pytest.raises(ValueError):
            two_member_sequence.member(0)

    def test_tail_rule_requires_positive_index(self):
        with pytest.raises(ValueError):
            TailRule(0)
