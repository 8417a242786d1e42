import itertools

import numpy as np
import pytest

from nlspike.kernels import ContractViolation, DenominatorUnderflow, tally
from nlspike.kernels.divneuron import (
    DivisionGroup,
    DivisionGroupConfig,
    calibrate,
    calibrate_array,
    decode,
    decode_array,
    divide,
    division_error_bound,
    run,
    run_array,
)
from nlspike.kernels.fixedq import QValue
from nlspike.kernels.spikecode import SpikeTrain, split_currents

SMALL = DivisionGroupConfig(T=4, L=4)


def test_config_resolution():
    cfg = DivisionGroupConfig()
    assert (cfg.T, cfg.L, cfg.n) == (16, 256, 12)
    assert cfg.delta == 2.0**-12
    assert SMALL.n == 4
    with pytest.raises(ContractViolation):
        DivisionGroupConfig(T=3, L=4)
    with pytest.raises(ContractViolation):
        DivisionGroupConfig(T=4, L=6)


def test_exhaustive_floor_division():
    A = np.arange(4096)[:, None]
    theta = np.arange(1, 65)[None, :]
    currents = split_currents(np.broadcast_to(A, (4096, 64)), SMALL.T)
    result = run_array(currents, theta, SMALL)
    np.testing.assert_array_equal(result.q, A // theta)
    decoded = decode_array(result.q, SMALL).to_float()
    np.testing.assert_array_equal(decoded, (A // theta) * 2.0**-4)


def test_calibrate_shifts_denominator():
    cfg = DivisionGroupConfig()
    assert calibrate(3 * 4096 + 17, cfg) == 3
    train = SpikeTrain.currents([16, 16, 16, 16])
    assert calibrate(train, SMALL) == 4


def test_calibrate_underflow_names_minimum():
    with pytest.raises(DenominatorUnderflow, match="4096"):
        calibrate(4095, DivisionGroupConfig())


def test_calibrate_rejects_wrong_window():
    with pytest.raises(ContractViolation):
        calibrate(SpikeTrain.currents([1, 2]), SMALL)


def test_per_step_clipping_is_flagged_and_drained():
    currents = np.array([0, 0, 0, 16])
    drained = run_array(currents, 1, SMALL)
    assert bool(drained.saturated)
    assert int(drained.window_q) == 4
    assert int(drained.q) == 16
    assert int(drained.drain_steps) == 3

    q, saturated = run(SpikeTrain.currents([0, 0, 0, 16]), 1, SMALL, drain=False)
    assert (q, saturated) == (4, True)


def test_decode_resolution():
    assert decode(5, SMALL) == QValue(5, -4)
    assert decode(4096, DivisionGroupConfig()).to_float() == 1.0


def test_divide_within_error_bound():
    cfg = DivisionGroupConfig()
    rng = np.random.default_rng(5)
    A = rng.integers(0, 1_000_000, size=20_000)
    B = rng.integers(1 << 13, 10_000_000, size=20_000)
    decoded = divide(A, B, cfg).to_float()
    for a, b, y in zip(A[:2000], B[:2000], decoded[:2000]):
        assert abs(y - a / b) <= division_error_bound(float(a), float(b), cfg)
    assert np.all(np.abs(decoded - A / B) <= 2 * cfg.delta + A * 4096.0 / (B * (B - 4096.0)))


def test_error_bound_precondition():
    with pytest.raises(ContractViolation):
        division_error_bound(1.0, 4096.0, DivisionGroupConfig())


def test_group_two_window_protocol():
    group = DivisionGroup(SMALL)
    with pytest.raises(ContractViolation):
        group.run(SpikeTrain.currents([1, 1, 1, 1]))
    assert group.calibrate(SpikeTrain.currents([16, 16, 16, 16])) == 4
    assert group.state.thresholds == (4, 8, 12, 16)
    out = group.run(SpikeTrain.currents([5, 5, 5, 5]))
    assert out == QValue(5, -4)
    assert group.state.q == 5


def test_window_costs_only_accumulates():
    theta = np.array([3, 5])
    with tally() as counts:
        run_array(split_currents(np.array([7, 9]), SMALL.T), theta, SMALL)
    assert counts.macs == 0
    assert counts.shifts == 0
    assert counts.acs >= SMALL.T * (SMALL.L + 2) * 2


def test_quotient_is_monotone_in_numerator():
    cfg = DivisionGroupConfig()
    A = np.arange(2000)
    result = run_array(split_currents(A, cfg.T), 7, cfg)
    assert np.all(np.diff(result.q) >= 0)
    np.testing.assert_array_equal(result.q, A // 7)


def test_calibration_ignores_order_of_denominator_train():
    steps = (500, 3, 170, 9)
    perms = list(itertools.permutations(steps))
    assert len(perms) == 24
    thetas = {calibrate(SpikeTrain.currents(p), SMALL) for p in perms}
    assert thetas == {sum(steps) >> SMALL.n}
    stacked = calibrate_array(np.array(perms), SMALL)
    np.testing.assert_array_equal(stacked, np.full(24, sum(steps) >> SMALL.n))


def test_drained_quotient_ignores_order_of_numerator_train():
    steps = np.array(list(itertools.permutations((90, 0, 41, 7))))
    result = run_array(steps, 3, SMALL)
    np.testing.assert_array_equal(result.q, np.full(24, 138 // 3))
