import io
import json

import polars as pl
import pytest
from rich.console import Console

from nlspike.cli import EXIT_BOUND_FAILURE, EXIT_IO, EXIT_OK, EXIT_USAGE, main
from nlspike.kernels import build_table
from nlspike.kernels.pwlexp import tampered

CSV_HEADER = "operator,kind,d,H,K,T,L,samples,seed,mean_abs,max_abs,mean_rel,max_rel,bound,slack,pass"


@pytest.fixture
def console():
    return Console(file=io.StringIO(), width=200)


@pytest.fixture(autouse=True)
def _env(monkeypatch):
    monkeypatch.setenv("NLSPIKE_THREADS", "2")
    monkeypatch.delenv("NLSPIKE_SEED", raising=False)
    monkeypatch.delenv("NLSPIKE_LOG_LEVEL", raising=False)


class TestEmitLut:
    def test_writes_default_table(self, tmp_path, console):
        path = tmp_path / "exp.lut"
        assert main(["emit-lut", "-O", str(path)], console=console) == EXIT_OK
        assert path.stat().st_size == 212

        assert main(["emit-lut", "--inspect", str(path)], console=console) == EXIT_OK
        out = console.file.getvalue()
        assert "212 bytes" in out
        assert "-5.00000" in out

    def test_invalid_segment_count(self, tmp_path, console):
        assert main(["emit-lut", "--K", "3", "-O", str(tmp_path / "x.lut")], console=console) == EXIT_USAGE

    def test_needs_output(self, console):
        assert main(["emit-lut"], console=console) == EXIT_USAGE

    def test_unwritable_path(self, tmp_path, console):
        target = tmp_path / "missing" / "exp.lut"
        assert main(["emit-lut", "-O", str(target)], console=console) == EXIT_IO

    def test_corrupt_inspect(self, tmp_path, console):
        path = tmp_path / "bad.lut"
        path.write_bytes(b"\x00" * 7)
        assert main(["emit-lut", "--inspect", str(path)], console=console) == EXIT_IO


def test_missing_operator_is_usage_error(console):
    with pytest.raises(SystemExit) as exc:
        main(["bench-op"], console=console)
    assert exc.value.code == 2


def test_bench_op_csv_is_deterministic(tmp_path, console):
    """Same seed, same bytes."""
    args = ["bench-op", "-o", "softmax", "--dims", "8,16", "-n", "50", "-f", "csv"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(args + ["-O", str(a)], console=console) == EXIT_OK
    assert main(args + ["-O", str(b)], console=console) == EXIT_OK
    assert a.read_text().splitlines()[0] == CSV_HEADER
    assert a.read_bytes() == b.read_bytes()
    df = pl.read_csv(a)
    assert df.height == 2 * 4
    assert df["seed"].unique().to_list() == [7]


def test_bench_op_silu_json(tmp_path, console):
    path = tmp_path / "silu.json"
    rc = main(["bench-op", "-o", "silu", "--dims", "8", "-n", "50", "-f", "json", "-O", str(path)], console=console)
    assert rc == EXIT_OK
    rows = json.loads(path.read_text())
    assert all(list(row) == CSV_HEADER.split(",") for row in rows)
    grid = [row for row in rows if row["kind"] == "nls_grid"]
    assert len(grid) == 1
    assert grid[0]["max_abs"] <= 0.038
    assert grid[0]["pass"] is True


def test_seed_from_environment(monkeypatch, tmp_path, console):
    monkeypatch.setenv("NLSPIKE_SEED", "11")
    path = tmp_path / "seeded.csv"
    assert main(["bench-op", "-o", "rmsnorm", "--dims", "8", "-n", "20", "-O", str(path)], console=console) == EXIT_OK
    assert pl.read_csv(path)["seed"].unique().to_list() == [11]


def test_invalid_thread_setting(monkeypatch, console):
    monkeypatch.setenv("NLSPIKE_THREADS", "0")
    assert main(["verify-bounds", "--dims", "8", "-n", "10"], console=console) == EXIT_USAGE


def test_sweep_h_charts(tmp_path, console):
    rc = main(
        ["sweep-h", "--H-values", "3,5,10", "-n", "200", "-f", "svg", "-O", str(tmp_path / "h.svg")],
        console=console,
    )
    assert rc in (EXIT_OK, EXIT_BOUND_FAILURE)
    assert (tmp_path / "h_silu.svg").read_text().startswith("<svg")
    assert (tmp_path / "h_softmax.svg").exists()


def test_verify_bounds(console):
    assert main(["verify-bounds", "--dims", "8,64", "-n", "200"], console=console) == EXIT_OK
    assert "verify-bounds" in console.file.getvalue()


def test_verify_bounds_fails_with_tampered_table(console):
    """Negative control: zeroed slope codes break the bound."""
    table = build_table(5.0, 64)
    bad = tampered(table, slope_codes=[0] * 64)
    rc = main(["verify-bounds", "-o", "softmax", "--dims", "8", "-n", "200"], table=bad, console=console)
    assert rc == EXIT_BOUND_FAILURE
    assert "FAIL" in console.file.getvalue()


def test_opcount_csv(tmp_path, console):
    path = tmp_path / "ops.csv"
    assert main(["opcount", "-o", "silu", "--dims", "16", "-O", str(path)], console=console) == EXIT_OK
    df = pl.read_csv(path).sort("T")
    assert df["T"].to_list() == [1, 2, 4]
    assert df["shifts_ratio"].to_list() == [1.0, 2.0, 4.0]
    assert df["macs"].to_list() == [0, 0, 0]


def test_opcount_rejects_svg(tmp_path, console):
    rc = main(["opcount", "-f", "svg", "-O", str(tmp_path / "ops.svg")], console=console)
    assert rc == EXIT_USAGE
