"""
End-to-end tests of the chowla-lab command line through cli.run.
"""

import argparse
import io
import json

import pandas as pd
import pytest

from chowla_lab import __version__
from chowla_lab.cli import build_parser, distinct_shifts, int_list, positive_int, run, shifts_grid
from chowla_lab.experiments import SCAN_COLUMNS
from chowla_lab.output import RunManifest


def _csv(capsys) -> pd.DataFrame:
    return pd.read_csv(io.StringIO(capsys.readouterr().out))


class TestArgumentTypes:
    def test_int_list(self):
        assert int_list("0, 1,2") == (0, 1, 2)
        assert int_list("") == ()

    def test_distinct_shifts(self):
        assert distinct_shifts("0,3") == (0, 3)
        with pytest.raises(argparse.ArgumentTypeError, match="distinct"):
            distinct_shifts("0,0,1")
        with pytest.raises(argparse.ArgumentTypeError, match="non-negative"):
            distinct_shifts("-1,0")

    def test_shifts_grid(self):
        assert shifts_grid("0;0,1;0,2") == ((0,), (0, 1), (0, 2))
        assert shifts_grid("") == ()

    def test_positive_int_accepts_exponent(self):
        assert positive_int("1e6") == 1_000_000
        assert positive_int("42") == 42
        with pytest.raises(argparse.ArgumentTypeError):
            positive_int("0")

    def test_parser_requires_subcommand(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args([])


class TestExitCodes:
    def test_version(self, capsys):
        assert run(["--version"]) == 0
        assert __version__ in capsys.readouterr().out

    def test_duplicate_shifts(self, capsys):
        assert run(["correlate", "--x", "100", "--shifts", "0,0,1"]) == 2
        assert "shifts must be distinct" in capsys.readouterr().err

    def test_r_and_eta_proxy_exclusive(self, capsys):
        argv = ["correlate", "--x", "1000", "--shifts", "0,1", "--r", "10", "--eta-proxy", "1e6"]
        assert run(argv) == 2

    def test_parquet_without_out(self, capsys):
        assert run(["correlate", "--x", "100", "--shifts", "0,1", "--format", "parquet"]) == 2
        assert "UsageError" in capsys.readouterr().err

    def test_lambda_r_needs_parameters(self, capsys):
        assert run(["correlate", "--x", "100", "--shifts", "0,1", "--function", "lambda_r"]) == 2

    def test_table_budget_exceeded(self, capsys):
        argv = ["correlate", "--x", "1000", "--shifts", "0,1", "--table-limit", "100"]
        assert run(argv) == 1
        assert "CapacityError" in capsys.readouterr().err

    def test_invalid_discriminant(self, capsys):
        assert run(["charsum", "--discriminant", "-12"]) == 1
        assert "InvalidDiscriminantError" in capsys.readouterr().err

    def test_moment_coefficient_count(self, capsys):
        argv = ["moment", "--x", "100", "--m", "4", "--eps", "0.5", "--k", "2", "--coeffs", "1,1"]
        assert run(argv) == 2


class TestCorrelate:
    def test_stdout(self, capsys):
        assert run(["correlate", "--x", "10000", "--shifts", "0,1"]) == 0
        frame = _csv(capsys)
        assert list(frame.columns) == SCAN_COLUMNS
        assert frame["raw_sum"][0] == 112
        assert frame["status"][0] == "ok"

    def test_out_and_manifest(self, tmp_path):
        out = tmp_path / "c.csv"
        assert run(["correlate", "--x", "1000", "--shifts", "0", "--out", str(out)]) == 0
        assert pd.read_csv(out)["raw_sum"][0] == -14
        manifest = RunManifest.load_json(RunManifest.path_for(out))
        assert manifest.subcommand == "correlate"
        assert manifest.parameters["shifts"] == [0]
        assert manifest.rows == 1
        assert "total" in manifest.timings

    def test_manifest_on_stderr_without_out(self, capsys):
        assert run(["correlate", "--x", "1000", "--shifts", "0,1"]) == 0
        captured = capsys.readouterr()
        manifest = json.loads(captured.err.strip().splitlines()[-1])
        assert manifest["subcommand"] == "correlate"
        assert manifest["digest"]
        assert manifest["rows"] == 1
        assert manifest["output"] is None
        assert len(pd.read_csv(io.StringIO(captured.out))) == 1

    def test_no_manifest_on_stderr_with_out(self, tmp_path, capsys):
        out = tmp_path / "c.csv"
        assert run(["correlate", "--x", "1000", "--shifts", "0", "--out", str(out)]) == 0
        assert "digest" not in capsys.readouterr().err

    def test_digest_independent_of_threads(self, tmp_path):
        digests = []
        for threads in ("1", "4"):
            out = tmp_path / f"c{threads}.csv"
            argv = ["correlate", "--x", "50000", "--shifts", "0,1,2", "--threads", threads, "--out", str(out)]
            assert run(argv) == 0
            digests.append(RunManifest.load_json(RunManifest.path_for(out)).digest)
        assert digests[0] == digests[1]

    def test_lambda_r_with_r(self, capsys):
        argv = ["correlate", "--x", "5000", "--shifts", "0,1", "--function", "lambda_r", "--r", "100"]
        assert run(argv) == 0
        frame = _csv(capsys)
        assert frame["r"][0] == 100
        assert frame["experiment"][0] == "lambda_r"

    def test_eta_proxy_fills_reference_bound(self, capsys):
        assert run(["correlate", "--x", "100000", "--shifts", "0,1", "--eta-proxy", "1e12"]) == 0
        frame = _csv(capsys)
        assert 0 < frame["reference_bound"][0] < 1

    def test_json_format(self, capsys):
        assert run(["correlate", "--x", "100", "--shifts", "0", "--format", "json"]) == 0
        records = json.loads(capsys.readouterr().out)
        assert records[0]["raw_sum"] == -2

    def test_parquet(self, tmp_path):
        out = tmp_path / "c.parquet"
        assert run(["correlate", "--x", "100", "--shifts", "0", "--format", "parquet", "--out", str(out)]) == 0
        assert pd.read_parquet(out)["raw_sum"].tolist() == [-2]


class TestCharsum:
    def test_weil_rows(self, capsys):
        assert run(["charsum", "--poly", "0:1,1:1", "--primes-up-to", "30"]) == 0
        frame = _csv(capsys)
        assert frame["q"].tolist() == [3, 5, 7, 11, 13, 17, 19, 23, 29]
        assert set(frame["sum"]) == {-1}
        assert frame["holds"].all()

    def test_square_rows_have_no_bound(self, capsys):
        assert run(["charsum", "--poly", "0:1,0:1", "--primes-up-to", "10"]) == 0
        frame = _csv(capsys)
        assert frame["bound"].isna().all()
        assert frame["sum"].tolist() == [p - 1 for p in (3, 5, 7)]

    def test_composite_discriminant(self, capsys):
        assert run(["charsum", "--poly", "0:1,1:1", "--discriminant", "-15"]) == 0
        frame = _csv(capsys)
        assert frame["q"][0] == 15
        assert frame["sum"][0] == 1

    def test_bad_poly(self, capsys):
        assert run(["charsum", "--poly", "nonsense"]) == 2


class TestSnfSolve:
    def test_two_three(self, capsys):
        assert run(["snf-solve", "--a", "2,3", "--h", "1"]) == 0
        document = json.loads(capsys.readouterr().out)
        assert document == {
            "solvable": True,
            "particular": [1, 1],
            "step": [3, 2],
            "lcm": 6,
            "necessary_condition": True,
        }

    def test_unsolvable(self, capsys):
        assert run(["snf-solve", "--a", "2,4", "--h", "1"]) == 0
        document = json.loads(capsys.readouterr().out)
        assert document["solvable"] is False
        assert document["particular"] is None

    def test_negative_shift(self, capsys):
        assert run(["snf-solve", "--a", "2,3", "--h=-1"]) == 0
        document = json.loads(capsys.readouterr().out)
        b0, b1 = document["particular"]
        assert 3 * b1 == 2 * b0 - 1

    def test_banded_mode(self, capsys):
        assert run(["snf-solve", "--a", "4,6,10", "--h", "2,6", "--mode", "banded"]) == 0
        document = json.loads(capsys.readouterr().out)
        assert document["step"] == [15, 10, 6]

    def test_mismatched_lengths(self, capsys):
        assert run(["snf-solve", "--a", "2,3", "--h", "1,2"]) == 1
        assert "OutOfRangeError" in capsys.readouterr().err


class TestSieveCount:
    def test_default_levels(self, capsys):
        assert run(["sieve-count", "--x", "10000", "--primes-up-to", "19"]) == 0
        frame = _csv(capsys)
        assert frame["u"].tolist() == [1.0, 2.0, 3.0]
        assert set(frame["s_exact"]) == {1711}
        assert frame["holds"].all()

    def test_explicit_levels(self, capsys):
        assert run(["sieve-count", "--x", "30", "--primes-up-to", "5", "--u", "1.5"]) == 0
        frame = _csv(capsys)
        assert frame["s_exact"].tolist() == [8]


class TestMoment:
    def test_row(self, capsys):
        assert run(["moment", "--x", "2000", "--m", "4", "--eps", "0.5", "--k", "2"]) == 0
        frame = _csv(capsys)
        assert frame["k"][0] == 2
        assert frame["count"][0] <= 2000
        assert bool(frame["holds"][0])

    def test_single_term_reports_count_only(self, capsys):
        assert run(["moment", "--x", "500", "--m", "1", "--eps", "0.5"]) == 0
        frame = _csv(capsys)
        assert frame["count"][0] == 500
        assert pd.isna(frame["majorant"][0])


class TestScan:
    def test_grid(self, capsys):
        assert run(["scan", "--x", "100,1000", "--shifts", "0;0,1"]) == 0
        frame = _csv(capsys)
        assert len(frame) == 4
        assert frame["raw_sum"].tolist()[0] == -2

    def test_empty_grid(self, capsys):
        assert run(["scan", "--x", "100", "--shifts", ""]) == 0
        assert capsys.readouterr().out == ",".join(SCAN_COLUMNS) + "\n"

    def test_failed_cell_is_a_row(self, capsys):
        argv = ["scan", "--x", "10,1000", "--shifts", "0,1", "--function", "lambda_r", "--r", "50"]
        assert run(argv) == 0
        frame = _csv(capsys)
        assert frame["status"][0].startswith("error: ConfigError")
        assert frame["status"][1] == "ok"


class TestSelftest:
    def test_all_checks_pass(self, capsys, tmp_path):
        out = tmp_path / "selftest.csv"
        assert run(["selftest", "--out", str(out)]) == 0
        assert "10/10 checks passed" in capsys.readouterr().out
        assert pd.read_csv(out)["passed"].all()
