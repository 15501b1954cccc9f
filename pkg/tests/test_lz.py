import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from udec import InputError, conditional_lz_length, joint_parse
from udec.lz import joint_lz_length
from udec.typeclasses import all_sequences


class TestJointParse:
    def test_four_singleton_phrases(self):
        parse = joint_parse((0, 1, 0, 1), (0, 0, 1, 1))
        assert parse.phrase_count == 4
        assert parse.phrases == (
            ((0,), (0,)),
            ((1,), (0,)),
            ((0,), (1,)),
            ((1,), (1,)),
        )
        assert parse.y_counts == {(0,): 2, (1,): 2}

    def test_growing_phrase(self):
        parse = joint_parse((0, 1, 0, 0), (0, 1, 0, 0))
        assert parse.phrases == (((0,), (0,)), ((1,), (1,)), ((0, 0), (0, 0)))
        assert parse.y_counts == {(0,): 1, (1,): 1, (0, 0): 1}

    def test_single_symbol(self):
        parse = joint_parse((1,), (0,))
        assert parse.phrase_count == 1

    def test_length_mismatch(self):
        with pytest.raises(InputError):
            joint_parse((0, 1), (0,))

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.integers(0, 1), min_size=1, max_size=40), st.data())
    def test_concatenation_reproduces_input(self, xs, data):
        ys = data.draw(
            st.lists(st.integers(0, 1), min_size=len(xs), max_size=len(xs))
        )
        parse = joint_parse(xs, ys)
        rx = [v for xpart, _ in parse.phrases for v in xpart]
        ry = [v for _, ypart in parse.phrases for v in ypart]
        assert rx == xs and ry == ys


class TestConditionalLength:
    def test_hand_value_four_bits(self):
        assert conditional_lz_length((0, 1, 0, 1), (0, 0, 1, 1)) == 4.0

    def test_hand_value_two_bits(self):
        assert conditional_lz_length((0, 1, 1, 0), (0, 0, 0, 0)) == 2.0

    def test_self_conditioning_exhaustive(self):
        for n in range(1, 13):
            for x in all_sequences(2, n):
                assert conditional_lz_length(x.symbols, x.symbols) == 0.0

    def test_non_negative(self):
        for x in all_sequences(2, 6):
            assert conditional_lz_length(x.symbols, (0,) * 6) >= 0.0

    def test_pair_conditioning(self):
        # product-alphabet x-parts; identical pairs given y are free
        assert joint_lz_length((0, 1), (0, 1), (0, 1)) >= 0.0
        assert joint_lz_length((0, 0, 1, 1), (0, 0, 1, 1), (0, 0, 1, 1)) == 0.0
