import itertools
import math

import numpy as np
import pytest

from nlspike.kernels import ContractViolation, tally
from nlspike.kernels.fixedq import QArray, QGrid, QValue, quantize_array
from nlspike.kernels.polarnorm import (
    CordicConfig,
    bound_eps_pol,
    fixed_point_slack,
    hypot,
    hypot_real,
    tree_height,
    tree_norm,
    tree_norm_array,
    tree_norm_real,
    working_exp,
)

CFG = CordicConfig(n_iters=8)


def test_gain_constant_within_half_step():
    for n in (4, 8, 16):
        cfg = CordicConfig(n_iters=n)
        assert abs(cfg.gain_inv.to_float() - cfg.gain_inv_real) <= 2.0**-33
        assert cfg.eps_pair == 2.0 ** (-2 * n - 1)
    with pytest.raises(ContractViolation):
        CordicConfig(n_iters=0)


@pytest.mark.parametrize("d, n, expected", [(1024, 8, 10 * 2.0**-17), (2, 5, 2.0**-11), (65, 8, 7 * 2.0**-17)])
def test_bound_eps_pol(d, n, expected):
    assert bound_eps_pol(d, n) == expected


def test_bound_grows_one_step_per_doubling():
    step = 2.0**-17
    assert bound_eps_pol(128, 8) - bound_eps_pol(64, 8) == pytest.approx(step)
    assert tree_height(1) == 0
    assert tree_height(65) == 7


@pytest.mark.parametrize("n", [4, 8, 16])
def test_real_hypot_meets_pairwise_bound(n):
    cfg = CordicConfig(n_iters=n)
    rng = np.random.default_rng(n)
    a = rng.normal(size=100_000)
    b = rng.normal(size=100_000)
    exact = np.hypot(a, b)
    rel = np.abs(hypot_real(a, b, cfg) - exact) / exact
    # float64 noise is ~1e-16, far below the bound for every n here
    assert rel.max() <= 2.0 ** (-2 * n - 1) + 1e-15


@pytest.mark.parametrize("d", [2, 3, 7, 64, 255, 256])
def test_real_tree_meets_height_bound(d):
    rng = np.random.default_rng(d)
    x = rng.normal(size=(2000, d))
    exact = np.sqrt(np.sum(x * x, axis=-1))
    rel = np.abs(tree_norm_real(x, 0.0, CFG) - exact) / exact
    assert rel.max() <= bound_eps_pol(d + 1, CFG.n_iters)


def test_fixed_point_hypot_pythagorean():
    out = hypot(QValue(3, 0), QValue(4, 0), CFG)
    assert out.scale_exp == working_exp(0, CFG)
    slack = fixed_point_slack(2, CFG, out.scale_exp, norm=5.0)
    assert abs(out.to_float() - 5.0) <= 5.0 * 2.0**-17 + slack


def test_fixed_point_hypot_axis():
    out = hypot(QValue(-16, -4), QValue(0, -4), CFG)
    assert abs(out.to_float() - 1.0) <= CFG.eps_pair + fixed_point_slack(2, CFG, out.scale_exp, norm=1.0)


def test_tree_norm_small_vectors():
    out = tree_norm([QValue(3, 0), QValue(4, 0)], 0.0, CFG)
    tol = bound_eps_pol(3, 8) * 5.0 + fixed_point_slack(3, CFG, out.scale_exp, norm=5.0)
    assert abs(out.to_float() - 5.0) <= tol

    single = tree_norm([QValue(-7, -2)], 0.0, CFG)
    tol = CFG.eps_pair * 1.75 + fixed_point_slack(2, CFG, single.scale_exp, norm=1.75)
    assert abs(single.to_float() - 1.75) <= tol


def test_tree_norm_augments_with_eps():
    out = tree_norm_array(QArray(np.zeros((1, 64), dtype=np.int64), -5), 1e-5, CFG)
    expected = math.sqrt(1e-5 * 64)
    assert abs(out.to_float()[0] - expected) <= expected * bound_eps_pol(65, 8) + fixed_point_slack(
        65, CFG, out.scale_exp, norm=expected
    ) + math.ldexp(1.0, out.scale_exp)


def test_fixed_point_tree_within_slack():
    rng = np.random.default_rng(9)
    xq = quantize_array(rng.normal(size=(500, 64)), QGrid(bits=8, scale_exp=-5))
    x = xq.to_float()
    eps = 1e-5
    R = tree_norm_array(xq, eps, CFG)
    exact = np.sqrt(np.sum(x * x, axis=-1) + eps * 64)
    err = np.abs(R.to_float() - exact)
    limit = bound_eps_pol(65, 8) * exact + np.array(
        [fixed_point_slack(65, CFG, R.scale_exp, norm=r) for r in exact]
    )
    assert np.all(err <= limit)


def test_tree_norm_follows_input_exponent():
    rng = np.random.default_rng(10)
    raw = rng.integers(-128, 128, size=(20, 16))
    fine = tree_norm_array(QArray(raw, -5), 0.0, CFG)
    coarse = tree_norm_array(QArray(raw, -3), 0.0, CFG)
    np.testing.assert_array_equal(fine.raw, coarse.raw)
    assert coarse.scale_exp - fine.scale_exp == 2


def test_norm_uses_no_multiplier():
    xq = QArray(np.arange(1, 9)[None, :], 0)
    with tally() as counts:
        tree_norm_array(xq, 0.0, CFG)
    assert counts.macs == 0
    assert counts.shifts > 0
    assert counts.acs > 0


def test_tree_norm_rejects_scalar():
    with pytest.raises(ContractViolation):
        tree_norm_array(QArray(np.array(3), 0), 0.0, CFG)


def _tree_tolerance(R: QArray, exact, leaves: int):
    exact = np.asarray(exact, dtype=np.float64)
    slack = np.array([fixed_point_slack(leaves, CFG, R.scale_exp, norm=r) for r in exact.ravel()])
    return bound_eps_pol(leaves, CFG.n_iters) * exact + slack.reshape(exact.shape)


@pytest.mark.parametrize("raw", [32767, -32768])
def test_sixteen_bit_leaves_at_d256(raw):
    xq = QArray(np.full((1, 256), raw, dtype=np.int64), -15)
    R = tree_norm_array(xq, 0.0, CFG)
    exact = abs(raw) * 2.0**-15 * 16.0
    assert R.scale_exp > -15 - CFG.frac_bits
    assert abs(R.to_float()[0] - exact) <= _tree_tolerance(R, [exact], 257)[0]


def test_wide_leaves_get_fewer_fraction_bits():
    out = tree_norm([QValue(1 << 20, -20)] * 8, 0.0, CFG)
    exact = math.sqrt(8.0)
    assert out.scale_exp == -20 - 24
    tol = bound_eps_pol(9, 8) * exact + fixed_point_slack(9, CFG, out.scale_exp, norm=exact)
    assert abs(out.to_float() - exact) <= tol + math.ldexp(1.0, out.scale_exp)


def test_leaves_beyond_headroom_are_rejected():
    with pytest.raises(ContractViolation, match="headroom"):
        tree_norm_array(QArray(np.full((1, 4), 1 << 46, dtype=np.int64), 0), 0.0, CFG)


def test_zero_padding_is_neutral():
    rng = np.random.default_rng(12)
    raw = rng.integers(-128, 128, size=(50, 5))
    padded = np.concatenate([raw, np.zeros((50, 2), dtype=np.int64)], axis=-1)
    # 5 + 1 and 7 + 1 leaves both fill a tree of 8
    np.testing.assert_array_equal(
        tree_norm_array(QArray(raw, -5), 0.0, CFG).raw,
        tree_norm_array(QArray(padded, -5), 0.0, CFG).raw,
    )
    x = raw * 2.0**-5
    np.testing.assert_array_equal(
        tree_norm_real(x, 0.0, CFG),
        tree_norm_real(np.concatenate([x, np.zeros((50, 2))], axis=-1), 0.0, CFG),
    )


def test_merge_with_zero_returns_the_other_input():
    r = np.abs(np.random.default_rng(13).normal(size=10_000)) + 1e-3
    rel = np.abs(hypot_real(r, np.zeros_like(r), CFG) - r) / r
    assert rel.max() <= CFG.eps_pair + 1e-15


def test_permutations_stay_within_bound():
    v = np.array([37, -5, 120, 0, -64, 9], dtype=np.int64)
    perms = np.array(list(itertools.permutations(v)))
    assert perms.shape == (720, 6)
    eps = 1e-5
    R = tree_norm_array(QArray(perms, -5), eps, CFG)
    x = v * 2.0**-5
    exact = math.sqrt(float(np.sum(x * x)) + eps * 6)
    ulp = math.ldexp(1.0, R.scale_exp)
    tol = _tree_tolerance(R, [exact], 7)[0] + ulp
    err = np.abs(R.to_float() - exact)
    assert err.max() <= tol
    assert R.to_float().max() - R.to_float().min() <= 2 * tol
