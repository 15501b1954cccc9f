import pytest

from udec import InputError, additive_family, finite_state_family, mac_xor_additive_family
from udec.families import MetricFamily


def test_additive_constructor():
    fam = additive_family(2, 3)
    assert fam.kind == "additive"
    assert fam.x_alphabet_size == 2
    assert fam.y_alphabet_size == 3
    assert fam.num_states == 1


def test_mac_constructor():
    fam = mac_xor_additive_family(2, 2)
    assert fam.kind == "mac_xor_additive"


def test_finite_state_from_callable():
    fam = finite_state_family(2, 2, 2, lambda x, y, s: x)
    assert fam.step(1, 0, 0) == 1
    assert fam.step(0, 1, 1) == 0


def test_finite_state_from_table():
    table = tuple(x for x in (0, 0, 0, 0, 1, 1, 1, 1))
    fam = finite_state_family(2, 2, 2, table)
    assert fam.step(1, 1, 0) == 1


def test_state_sequence_hand_trace():
    fam = finite_state_family(2, 2, 2, lambda x, y, s: x)
    states = fam.state_sequence((0, 0, 1, 1), (0, 1, 0, 1))
    assert states == (0, 0, 0, 1)


def test_state_sequence_stateless_family():
    fam = additive_family(2, 2)
    assert fam.state_sequence((0, 1), (1, 0)) == (0, 0)


def test_invalid_kind_rejected():
    with pytest.raises(InputError):
        MetricFamily("bogus", 2, 2)


def test_wrong_table_size_rejected():
    with pytest.raises(InputError):
        finite_state_family(2, 2, 2, (0, 1))


def test_out_of_range_state_rejected():
    with pytest.raises(InputError):
        finite_state_family(2, 2, 2, lambda x, y, s: 5)


def test_stateless_family_rejects_states():
    with pytest.raises(InputError):
        MetricFamily("additive", 2, 2, num_states=3)
