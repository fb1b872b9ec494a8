"""End-to-end runs of the command-line entry point."""

import io
import json
import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from sphdir.cli import EXIT_CONVERGENCE, EXIT_DATA, EXIT_OK, EXIT_USAGE, main
from sphdir.core.distribution import mode
from sphdir.utils.dataio import read_matrix, write_matrix


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, out


def key_values(text):
    return dict(line.split("=", 1) for line in text.splitlines())


class TestSimulate:
    def test_byte_identical_reruns(self, capsys):
        code, first = run(capsys, "simulate", "--alpha", "2,2,2", "--n", "500", "--seed", "7")
        _, second = run(capsys, "simulate", "--alpha", "2,2,2", "--n", "500", "--seed", "7")
        assert code == EXIT_OK
        assert first == second
        values, header = read_matrix(io.StringIO(first))
        assert header == ["x1", "x2", "x3"]
        assert values.shape == (500, 3)
        assert_allclose(np.linalg.norm(values, axis=1), 1.0, atol=1e-12)

    def test_seed_changes_output(self, capsys):
        _, first = run(capsys, "simulate", "--alpha", "2,3", "--n", "20", "--seed", "1")
        _, second = run(capsys, "simulate", "--alpha", "2,3", "--n", "20", "--seed", "2")
        assert first != second

    def test_output_file(self, capsys, tmp_path):
        target = tmp_path / "sample.csv"
        code, out = run(capsys, "simulate", "--alpha", "1,4", "--n", "10", "-o", str(target))
        assert code == EXIT_OK
        assert out == ""
        assert len(target.read_text().splitlines()) == 11

    @pytest.mark.parametrize(
        "argv",
        [
            ["--alpha", "2,2", "--n", "0"],
            ["--alpha", "2,-1", "--n", "5"],
            ["--alpha", "2", "--n", "5"],
            ["--alpha", "a,b", "--n", "5"],
            ["--alpha", "2,2", "--n", "5", "--seed", "-3"],
        ],
    )
    def test_usage_errors(self, argv, capsys):
        code, out = run(capsys, "simulate", *argv)
        assert code == EXIT_USAGE
        assert out == ""

    def test_missing_flag_is_argparse_error(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["simulate", "--n", "5"])
        assert exc.value.code == EXIT_USAGE


class TestFit:
    """fit on simulated, fixture and malformed input."""

    @pytest.fixture
    def sample_csv(self, tmp_path, capsys):
        path = tmp_path / "sample.csv"
        main(["simulate", "--alpha", "5,15,2", "--n", "10000", "--seed", "43", "-o", str(path)])
        capsys.readouterr()
        return path

    def test_both_methods_with_truth(self, sample_csv, capsys):
        code, out = run(capsys, "fit", str(sample_csv), "--truth", "5,15,2")
        assert code == EXIT_OK
        kv = key_values(out)
        assert kv["n"] == "10000" and kv["p"] == "3"
        for method in ("mom", "mle"):
            assert kv[f"fit.{method}.converged"] == "true"
            assert float(kv[f"fit.{method}.norm_error_vs_truth"]) <= 5.0
            assert float(kv[f"fit.{method}.alpha_hat.alpha.2"]) == pytest.approx(15.0, rel=0.1)
        assert kv["fit.mom.method"] == "mom"

    def test_json_document(self, sample_csv, capsys, tmp_path):
        target = tmp_path / "fit.json"
        code, out = run(capsys, "fit", str(sample_csv), "--method", "mle", "--json", str(target))
        assert code == EXIT_OK
        document = json.loads(target.read_text())
        assert document["fit.mle.method"] == "mle"
        assert "fit.mom.method" not in document
        assert document["fit.mle.norm_error_vs_truth"] is None
        assert float(key_values(out)["fit.mle.alpha_hat.alpha.1"]) == document["fit.mle.alpha_hat.alpha.1"]

    def test_moment_coordinate_auto(self, sample_csv, capsys):
        code, out = run(capsys, "fit", str(sample_csv), "--method", "mom", "--moment-coordinate", "auto")
        assert code == EXIT_OK
        assert key_values(out)["fit.mom.converged"] == "true"

    def test_term_frequencies(self, term_frequencies_path, capsys):
        code, out = run(capsys, "fit", str(term_frequencies_path), "--transform", "log-shift", "--shift", "1.10")
        assert code == EXIT_OK
        kv = key_values(out)
        alpha = [float(kv[f"fit.mle.alpha_hat.alpha.{i}"]) for i in range(1, 10)]
        assert all(a > 0 for a in alpha)
        assert max(alpha) == alpha[0]

    def test_empty_file(self, tmp_path, capsys):
        path = tmp_path / "empty.csv"
        path.write_text("# nothing here\n")
        code, _ = run(capsys, "fit", str(path))
        assert code == EXIT_DATA

    def test_missing_file(self, tmp_path, capsys):
        code, _ = run(capsys, "fit", str(tmp_path / "nope.csv"))
        assert code == EXIT_DATA

    def test_zeros_without_transform(self, tmp_path, capsys):
        path = tmp_path / "zeros.csv"
        write_matrix([[0.6, 0.8], [1.0, 0.0], [0.8, 0.6]], path)
        code, _ = run(capsys, "fit", str(path), "--method", "mle")
        assert code == EXIT_DATA

    def test_single_row(self, tmp_path, capsys):
        path = tmp_path / "one.csv"
        write_matrix([[0.6, 0.8]], path)
        code, out = run(capsys, "fit", str(path), "--method", "mom")
        assert code == EXIT_DATA
        assert out == ""

    def test_truth_dimension(self, sample_csv, capsys):
        code, _ = run(capsys, "fit", str(sample_csv), "--truth", "1,1")
        assert code == EXIT_DATA

    def test_non_convergence_exit_code(self, sample_csv, capsys):
        code, out = run(capsys, "fit", str(sample_csv), "--method", "mle", "--max-iter", "1")
        assert code == EXIT_CONVERGENCE
        assert key_values(out)["fit.mle.converged"] == "false"


class TestDescribe:
    def test_uniform(self, capsys):
        code, out = run(capsys, "describe", "--alpha", "0.5,0.5,0.5")
        assert code == EXIT_OK
        kv = key_values(out)
        assert kv["uniform"] == "true"
        assert float(kv["uniform_density"]) == pytest.approx(2.0 / math.pi, rel=1e-15)
        assert kv["mode"] == "undefined"
        assert kv["mode_defined"] == "false"

    def test_symmetric_mode(self, capsys):
        _, out = run(capsys, "describe", "--alpha", "2,2,2")
        kv = key_values(out)
        for i in (1, 2, 3):
            assert float(kv[f"mode.x.{i}"]) == pytest.approx(1.0 / math.sqrt(3.0), abs=1e-12)

    def test_undefined_mode(self, capsys):
        code, out = run(capsys, "describe", "--alpha", "0.4,2,2")
        assert code == EXIT_OK
        assert key_values(out)["mode"] == "undefined"

    @pytest.mark.parametrize("alpha, flag", [("1e6,1e6,1e6", "true"), ("2,2,2", "false")])
    def test_degenerate_key(self, alpha, flag, capsys):
        code, out = run(capsys, "describe", "--alpha", alpha)
        assert code == EXIT_OK
        assert key_values(out)["degenerate"] == flag

    def test_mode(self, capsys, tmp_path):
        target = tmp_path / "describe.json"
        code, out = run(capsys, "describe", "--alpha", "2,5,3", "--json", str(target))
        assert code == EXIT_OK
        kv = key_values(out)
        expected = mode((2.0, 5.0, 3.0)).x
        assert [float(kv[f"mode.x.{i}"]) for i in (1, 2, 3)] == list(expected)
        assert kv["uniform_density"] == "undefined"
        assert json.loads(target.read_text())["moments.second_raw.2"] == pytest.approx(0.5)


class TestDensityGrid:
    def test_p3_grid(self, capsys):
        code, out = run(capsys, "density-grid", "--alpha", "2,5,3", "--grid", "100")
        assert code == EXIT_OK
        values, header = read_matrix(io.StringIO(out))
        assert header == ["theta", "phi", "x1", "x2", "x3", "density"]
        assert values.shape == (10_000, 6)
        best = values[np.argmax(values[:, -1]), 2:5]
        assert_allclose(best, mode((2.0, 5.0, 3.0)).array, atol=0.03)

    def test_p2_grid(self, capsys):
        code, out = run(capsys, "density-grid", "--alpha", "3,1.5", "--grid", "400")
        values, header = read_matrix(io.StringIO(out))
        assert header == ["theta", "x1", "x2", "density"]
        assert values.shape == (400, 4)
        best = values[np.argmax(values[:, -1]), 1:3]
        assert_allclose(best, mode((3.0, 1.5)).array, atol=0.01)

    def test_density_rises_toward_pole(self, capsys):
        _, out = run(capsys, "density-grid", "--alpha", "0.5,0.5,2", "--grid", "50")
        values, _ = read_matrix(io.StringIO(out))
        order = np.argsort(values[:, 4])
        assert np.all(np.diff(values[order, -1]) >= -1e-12)

    def test_p4_rejected(self, capsys):
        code, out = run(capsys, "density-grid", "--alpha", "1,1,1,1")
        assert code == EXIT_USAGE
        assert out == ""


class TestReproduceTable1:
    """The four-scenario study: deterministic and independent of the worker count."""

    def test_serial_and_parallel_agree(self, capsys, tmp_path):
        target = tmp_path / "table.json"
        code, serial = run(capsys, "reproduce-table1", "--workers", "1", "--json", str(target))
        code_parallel, parallel = run(capsys, "reproduce-table1", "--workers", "2")
        assert code == EXIT_OK and code_parallel == EXIT_OK
        assert serial == parallel
        lines = serial.splitlines()
        assert len(lines) == 9
        assert lines[0].startswith("scenario")
        document = json.loads(target.read_text())
        assert document["n"] == 10_000
        assert document["scenarios.3.alpha.1"] == 0.5
        for i in range(1, 5):
            for method in ("mom", "mle"):
                assert document[f"scenarios.{i}.{method}.norm_error_vs_truth"] <= 5.0


def test_version(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
    assert "sphdir" in capsys.readouterr().out
