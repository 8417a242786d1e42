import math

import numpy as np
import pytest

from nlspike.kernels import ContractViolation, TableFormatError
from nlspike.kernels.fixedq import QArray, QGrid, QValue, quantize_array
from nlspike.kernels.pwlexp import (
    BelowPolicy,
    bound_eps_exp,
    build_table,
    dump_table,
    eps_grid,
    eval_array,
    eval_exp,
    eval_real,
    from_bytes,
    grid_slack,
    load_table,
    tampered,
    to_bytes,
)


@pytest.fixture(scope="module")
def table():
    return build_table(5.0, 64)


def test_recommended_table_shape(table):
    assert table.gamma == 0.15625
    assert len(table.slope_codes) == len(table.intercept_codes) == 64
    assert table.size_bits == 64 * (8 + 16)
    assert max(table.slope_codes) < 256
    assert max(table.intercept_codes) < 65536


def test_two_segment_closed_form():
    tbl = build_table(1.0, 2)
    np.testing.assert_allclose(tbl.knots, [-1.0, 0.0, 1.0])
    np.testing.assert_allclose(tbl.real_slopes, [1 - math.exp(-1), math.e - 1])


@pytest.mark.parametrize("H, K", [(5.0, 3), (5.0, 1), (0.0, 64), (float("inf"), 64)])
def test_invalid_tables(H, K):
    with pytest.raises(ContractViolation):
        build_table(H, K)


def test_bound_values():
    assert bound_eps_exp(5.0, 64) == pytest.approx(3.568e-3, rel=1e-3)
    assert bound_eps_exp(5.0, 64) <= 3.63e-3
    assert bound_eps_exp(5.0, 16) == pytest.approx(0.0913, abs=5e-4)
    ratio = bound_eps_exp(5.0, 256) / bound_eps_exp(5.0, 1024)
    assert 16.0 < ratio < 17.0
    with pytest.raises(ContractViolation):
        bound_eps_exp(0.0, 64)


def test_eps_grid_is_relative_to_smallest_value(table):
    relative, absolute = grid_slack(table)
    assert eps_grid(table) == pytest.approx(relative + absolute * math.exp(5.0))
    assert eps_grid(table) > relative


def test_eval_at_zero_knot(table):
    y = eval_exp(QValue(0, -4), table)
    assert abs(y.to_float() - 1.0) <= table.intercept_grid.half_step


def test_eval_below_range(table):
    assert eval_exp(QValue(-96, -4), table).raw == 0
    clamped = table.with_policy("clamp")
    assert clamped.below_neg_H is BelowPolicy.CLAMP
    y = eval_exp(QValue(-96, -4), clamped).to_float()
    assert abs(y - math.exp(-5.0)) <= clamped.intercept_grid.half_step


def test_eval_above_range_clamps_to_value_at_H(table):
    assert eval_exp(QValue(96, -4), table) == eval_exp(QValue(80, -4), table)


def test_real_interpolant_meets_bound(table):
    x = np.linspace(-5.0, 5.0, 1_000_000)
    rel = np.abs(eval_real(x, table) - np.exp(x)) / np.exp(x)
    assert rel.max() <= bound_eps_exp(5.0, 64)
    assert rel.max() <= 3.63e-3


def test_real_interpolant_is_monotone(table):
    x = np.linspace(-5.0, 5.0, 100_001)
    assert np.all(np.diff(eval_real(x, table)) >= 0)


@pytest.mark.parametrize("H", [3.0, 5.0, 10.0])
@pytest.mark.parametrize("K", [16, 64, 128])
def test_quantized_path_within_grid_slack(H, K):
    tbl = build_table(H, K)
    xq = quantize_array(np.linspace(-H, H, 20_001), QGrid(bits=40, scale_exp=-30))
    x = xq.to_float()
    y = eval_array(xq, tbl).to_float()
    relative, absolute = grid_slack(tbl)
    limit = (bound_eps_exp(H, K) + relative) * np.exp(x) + absolute
    assert np.all(np.abs(y - np.exp(x)) <= limit)


def test_eval_array_matches_scalar(table):
    xq = quantize_array(np.array([-4.9, -1.3, 0.0, 0.7, 4.2]), QGrid(bits=8, scale_exp=-4))
    out = eval_array(xq, table)
    for raw, expected in zip(xq.raw, out.raw):
        assert eval_exp(QValue(int(raw), xq.scale_exp), table).raw == expected


def test_lut_file_round_trip(table, tmp_path):
    path = tmp_path / "exp_h5_k64.lut"
    assert dump_table(table, path) == 212
    assert path.stat().st_size == 212
    assert load_table(path) == table
    assert to_bytes(load_table(path)) == path.read_bytes()


def test_corrupt_lut_rejected(table):
    payload = to_bytes(table)
    with pytest.raises(TableFormatError):
        from_bytes(payload[:10])
    with pytest.raises(TableFormatError):
        from_bytes(payload[:-1])
    bad_k = bytearray(payload)
    bad_k[8:12] = (3).to_bytes(4, "little")
    with pytest.raises(TableFormatError):
        from_bytes(bytes(bad_k))


def test_tampered_table_keeps_shape(table):
    bad = tampered(table, slope_codes=[0] * 64)
    assert bad.slope_codes == (0,) * 64
    assert bad.intercept_codes == table.intercept_codes
    assert bad != table
    # step function: value at the left knot
    y = eval_exp(QValue(19, -5), bad).to_float()
    assert y < math.exp(19 / 32) * 0.95


@pytest.mark.parametrize("H", [3.0, 5.0, 7.0, 10.0])
@pytest.mark.parametrize("K", [16, 32, 64, 128])
def test_quantized_path_is_monotone(H, K):
    tbl = build_table(H, K)
    xq = quantize_array(np.linspace(-H - 0.5, H + 0.5, 200_001), QGrid(bits=40, scale_exp=-30))
    y = eval_array(xq, tbl).raw
    assert np.all(np.diff(y) >= 0)


@pytest.mark.parametrize("H", [3.0, 5.0, 7.0, 10.0])
@pytest.mark.parametrize("K", [16, 64, 128])
def test_knot_jumps_stay_below_half_step(H, K):
    tbl = build_table(H, K)
    f = tbl.work_frac_bits
    h_raw = int(round(math.ldexp(H, f)))
    gamma_raw = (2 * h_raw) // K
    inner = np.arange(1, K)
    knots = -h_raw + inner * gamma_raw
    at = eval_array(QArray(knots, -f), tbl).raw
    left = eval_array(QArray(knots - 1, -f), tbl).raw
    jump = at - left
    live = np.array(tbl.intercept_codes)[inner - 1] > 0
    assert live.any()
    assert np.all(jump[live] >= 0)
    assert np.all(jump[live] <= 1 << (f + tbl.intercept_scale_exp - 1))
