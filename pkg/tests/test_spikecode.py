import itertools

import numpy as np
import pytest

from nlspike.kernels import ContractViolation
from nlspike.kernels.fixedq import QValue
from nlspike.kernels.spikecode import (
    Dyadic,
    LifState,
    SpikeTrain,
    decode_rate,
    encode_rate,
    lif_run,
    lif_step,
    split_currents,
)

THETA = QValue(3, -2)


def test_encode_zero():
    tr = encode_rate(QValue(0, 0), 8, QValue(1, 0))
    assert tr.steps == (0,) * 8
    assert decode_rate(tr).raw == 0


def test_encode_five_theta_round_trips():
    v = QValue(15, -2)
    tr = encode_rate(v, 8, THETA)
    assert tr.total == 5
    assert tr.is_binary
    assert decode_rate(tr).to_float() == v.to_float()


def test_encode_clips_and_flags():
    tr = encode_rate(QValue(30, -2), 8, THETA)
    assert tr.total == 8
    assert tr.saturated
    assert decode_rate(tr).saturated


def test_decode_hand_sum():
    tr = SpikeTrain.binary([1, 0, 1, 1], QValue(2, 0))
    assert decode_rate(tr).to_float() == 6.0


@pytest.mark.parametrize("T", [1, 4, 8])
def test_decode_inverts_encode_on_theta_grid(T):
    for k in range(T + 1):
        v = QValue(k * THETA.raw, THETA.scale_exp)
        assert decode_rate(encode_rate(v, T, THETA)) == v


def test_multi_count_train():
    tr = encode_rate(QValue(22, 0), 4, QValue(1, 0), binary=False)
    assert tr.steps == (6, 6, 5, 5)
    assert not tr.saturated
    assert decode_rate(tr).raw == 22


def test_invalid_trains():
    with pytest.raises(ContractViolation):
        SpikeTrain.binary([0, 2], QValue(1, 0))
    with pytest.raises(ContractViolation):
        SpikeTrain((), QValue(1, 0))
    with pytest.raises(ContractViolation):
        encode_rate(QValue(1, 0), 0, QValue(1, 0))
    with pytest.raises(ContractViolation):
        encode_rate(QValue(1, 0), 4, QValue(0, 0))


def test_split_currents_front_loads_remainder():
    np.testing.assert_array_equal(split_currents(np.array([10, 3]), 4), [[3, 3, 2, 2], [1, 1, 1, 0]])
    assert split_currents(np.array([10, 3]), 4).sum(axis=-1).tolist() == [10, 3]


def _lif(v=0, leak=Dyadic(1, 0), theta=10) -> LifState:
    return LifState(QValue(v, 0), leak, QValue(theta, 0))


def test_lif_fires_on_exact_threshold():
    st, spike = lif_step(_lif(), QValue(10, 0))
    assert spike == 1
    assert st.v.raw == 0


def test_lif_accumulates_then_resets_subtractively():
    st, spikes = lif_run(_lif(), [QValue(4, 0)] * 3)
    assert spikes == [0, 0, 1]
    assert st.v.raw == 2


def test_lif_dyadic_leak():
    st, spike = lif_step(_lif(v=8, leak=Dyadic(1, 1)), QValue(0, 0))
    assert spike == 0
    assert st.v.raw == 4


def test_invalid_leak():
    with pytest.raises(ContractViolation):
        Dyadic(3, 1)


def test_lif_counts_floor_of_total_input():
    """One spike per step while the input stays at or below theta."""
    for theta in range(1, 9):
        for T in range(1, 5):
            for seq in itertools.product(range(min(15, theta) + 1), repeat=T):
                _, spikes = lif_run(_lif(theta=theta), [QValue(i, 0) for i in seq])
                assert sum(spikes) == sum(seq) // theta


def test_lif_counts_floor_on_longer_windows():
    rng = np.random.default_rng(4)
    for _ in range(300):
        theta = int(rng.integers(1, 9))
        seq = rng.integers(0, theta + 1, size=6)
        _, spikes = lif_run(_lif(theta=theta), [QValue(int(i), 0) for i in seq])
        assert sum(spikes) == int(seq.sum()) // theta
