"""CLI subcommands: behavior, file outputs, exit codes and determinism."""

import numpy as np
import pytest

from sslsq.cli import EXIT_CAPACITY, EXIT_NUMERICAL, EXIT_OK, EXIT_PARSE, EXIT_USAGE, main


def run_cli(args):
    """Invoke the CLI in-process; argparse usage errors become exit code 2."""
    try:
        return main(args)
    except SystemExit as exc:
        return exc.code


def write_cluster_data(tmp_path, name="clusters.csv", seed=7, unlabeled=40):
    path = tmp_path / name
    code = run_cli([
        "generate", "--kind", "two-cluster-1d", "--seed", str(seed),
        "--unlabeled", str(unlabeled), "--out", str(path),
    ])
    assert code == EXIT_OK
    return path


def write_pool(tmp_path, name="pool.csv", n=60, seed=3, kind="two-gaussian-2d"):
    path = tmp_path / name
    code = run_cli([
        "generate", "--kind", kind, "--seed", str(seed),
        "--labeled-per-class", str(n // 2), "--unlabeled", "0",
        "--separation", "3.0", "--out", str(path),
    ])
    assert code == EXIT_OK
    return path


class TestGenerate:
    def test_identical_files_for_identical_flags(self, tmp_path):
        a = write_cluster_data(tmp_path, "a.csv", unlabeled=396)
        b = write_cluster_data(tmp_path, "b.csv", unlabeled=396)
        assert a.read_bytes() == b.read_bytes()
        # 4 + 396 data rows plus one header line.
        assert len(a.read_text().splitlines()) == 401

    def test_invalid_kind_is_usage_error(self, tmp_path):
        code = run_cli(["generate", "--kind", "spiral", "--out", str(tmp_path / "x.csv")])
        assert code == EXIT_USAGE

    def test_manifest_written(self, tmp_path):
        path = write_cluster_data(tmp_path)
        manifest = (tmp_path / "clusters.manifest.txt").read_text()
        assert "subcommand = generate" in manifest
        assert "seed = 7" in manifest


class TestFit:
    def test_supervised_objective_matches_direct_computation(self, tmp_path, capsys):
        path = write_cluster_data(tmp_path)
        capsys.readouterr()
        assert run_cli(["fit", "--data", str(path), "--method", "supervised"]) == EXIT_OK
        out = dict(
            line.split(" = ", 1) for line in capsys.readouterr().out.splitlines()
        )
        from sslsq import load_csv, ridge_solve, supervised_objective

        data, _ = load_csv(path)
        w = ridge_solve(data.labeled_features, data.labels, 0.0)
        assert float(out["final_objective"]) == pytest.approx(
            supervised_objective(data, w, 0.0), rel=1e-12
        )
        assert out["iterations"] == "1"

    def test_soft_on_fully_labeled_equals_supervised(self, tmp_path, capsys):
        path = write_pool(tmp_path)
        assert run_cli(["fit", "--data", str(path), "--method", "soft"]) == EXIT_OK
        soft_out = capsys.readouterr().out
        assert run_cli(["fit", "--data", str(path), "--method", "supervised"]) == EXIT_OK
        supervised_out = capsys.readouterr().out
        weights = lambda text: next(
            line for line in text.splitlines() if line.startswith("weights")
        )
        assert weights(soft_out) == weights(supervised_out)

    def test_trace_is_monotone(self, tmp_path, capsys):
        path = write_cluster_data(tmp_path)
        trace = tmp_path / "trace.csv"
        assert run_cli([
            "fit", "--data", str(path), "--method", "soft", "--trace", str(trace),
        ]) == EXIT_OK
        rows = trace.read_text().splitlines()
        assert rows[0].startswith("iteration,objective,w_0")
        objectives = [float(line.split(",")[1]) for line in rows[1:]]
        assert all(
            objectives[k] <= objectives[k - 1] + 1e-10 * (1 + abs(objectives[k - 1]))
            for k in range(1, len(objectives))
        )
        assert (tmp_path / "trace.manifest.txt").exists()

    def test_oracle_needs_truth_column(self, tmp_path, capsys):
        path = tmp_path / "plain.csv"
        path.write_text("x0,label\n0.0,0\n1.0,1\n2.0,\n")
        assert run_cli(["fit", "--data", str(path), "--method", "oracle"]) == EXIT_PARSE
        assert "true_label" in capsys.readouterr().err

    def test_oracle_uses_truth_column(self, tmp_path, capsys):
        data = write_cluster_data(tmp_path, unlabeled=20)
        capsys.readouterr()
        assert run_cli(["fit", "--data", str(data), "--method", "oracle"]) == EXIT_OK
        out = dict(
            line.split(" = ", 1) for line in capsys.readouterr().out.splitlines()
            if " = " in line
        )
        # The oracle solves the pooled system with the hidden labels.
        from sslsq import load_csv, ridge_solve

        loaded, truth = load_csv(data)
        pooled = np.vstack([loaded.labeled_features, loaded.unlabeled_features])
        targets = np.concatenate([loaded.labels, truth])
        expected = ridge_solve(pooled, targets, 0.0)
        reported = np.array([float(v) for v in out["weights"].split(",")])
        np.testing.assert_allclose(reported, expected, atol=1e-12)

    def test_test_error_reported(self, tmp_path, capsys):
        data = write_cluster_data(tmp_path)
        test = write_pool(tmp_path, "test.csv", n=20, seed=9, kind="two-cluster-1d")
        assert run_cli([
            "fit", "--data", str(data), "--method", "hard", "--test", str(test),
        ]) == EXIT_OK
        assert "test_error = " in capsys.readouterr().out


class TestDiagnose:
    def test_reports_verdicts_and_gap(self, tmp_path, capsys):
        path = write_cluster_data(tmp_path, unlabeled=8)
        assert run_cli(["diagnose", "--data", str(path)]) == EXIT_OK
        out = capsys.readouterr().out
        assert "label_hessian_psd = False" in out
        assert "label_hessian_min_diagonal = -2.0" in out
        assert "responsibility_witness_value = -" in out
        gap = float(next(
            line.split(" = ")[1] for line in out.splitlines()
            if line.startswith("optimality_gap")
        ))
        assert gap >= -1e-9

    def test_parse_error_exit_code(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("x0,label\nabc,1\n")
        assert run_cli(["diagnose", "--data", str(bad)]) == EXIT_PARSE

    def test_missing_file_is_parse_class(self, tmp_path):
        assert run_cli(["diagnose", "--data", str(tmp_path / "nope.csv")]) == EXIT_PARSE

    def test_no_unlabeled_rows_is_numerical_class(self, tmp_path):
        pool = write_pool(tmp_path, n=10)
        assert run_cli(["diagnose", "--data", str(pool)]) == EXIT_NUMERICAL


class TestBasin:
    def test_row_count_and_determinism(self, tmp_path):
        data = write_cluster_data(tmp_path, unlabeled=60)
        out_a = tmp_path / "a.csv"
        out_b = tmp_path / "b.csv"
        base = ["basin", "--data", str(data), "--method", "hard", "--starts", "10",
                "--seed", "1"]
        assert run_cli(base + ["--out", str(out_a)]) == EXIT_OK
        assert run_cli(base + ["--out", str(out_b), "--threads", "3"]) == EXIT_OK
        # 10 random starts + 1 supervised start + header.
        assert len(out_a.read_text().splitlines()) == 12
        assert out_a.read_bytes() == out_b.read_bytes()
        assert (tmp_path / "a.agg.csv").read_bytes() == (tmp_path / "b.agg.csv").read_bytes()
        manifest_a = (tmp_path / "a.manifest.txt").read_text()
        manifest_b = (tmp_path / "b.manifest.txt").read_text()
        assert manifest_a == manifest_b
        assert "threads" not in manifest_a

    def test_seed_required(self, tmp_path):
        data = write_cluster_data(tmp_path)
        code = run_cli(["basin", "--data", str(data), "--method", "hard",
                        "--out", str(tmp_path / "o.csv")])
        assert code == EXIT_USAGE

    def test_paths_file(self, tmp_path):
        data = write_cluster_data(tmp_path, unlabeled=30)
        out = tmp_path / "o.csv"
        paths = tmp_path / "paths.csv"
        assert run_cli([
            "basin", "--data", str(data), "--method", "soft", "--starts", "3",
            "--seed", "1", "--out", str(out), "--paths", str(paths),
        ]) == EXIT_OK
        lines = paths.read_text().splitlines()
        assert lines[0].startswith("start,iteration,objective")
        assert len(lines) > 4


class TestLocalOptima:
    def test_report_shape(self, tmp_path):
        a = write_pool(tmp_path, "a.csv", n=50, seed=1)
        b = write_pool(tmp_path, "b.csv", n=50, seed=2)
        out = tmp_path / "lo.csv"
        assert run_cli([
            "local-optima", "--data", str(a), str(b), "--restarts", "2",
            "--seed", "5", "--out", str(out),
        ]) == EXIT_OK
        lines = out.read_text().splitlines()
        # Per dataset: supervised + 2 from-supervised + 2 methods x 2 restarts.
        assert len(lines) == 1 + 2 * (3 + 4)
        agg = (tmp_path / "lo.agg.csv").read_text().splitlines()
        assert len(agg) == 1 + 2 * 2

    def test_rejects_partially_labeled_input(self, tmp_path):
        data = write_cluster_data(tmp_path)
        code = run_cli(["local-optima", "--data", str(data), "--seed", "1",
                        "--out", str(tmp_path / "x.csv")])
        assert code == EXIT_USAGE


class TestLearningCurve:
    def test_aggregate_row_count(self, tmp_path):
        pool = write_pool(tmp_path, n=60)
        out = tmp_path / "lc.csv"
        assert run_cli([
            "learning-curve", "--data", str(pool), "--labeled", "8",
            "--u-values", "1,2,4", "--repeats", "5", "--seed", "2",
            "--out", str(out),
        ]) == EXIT_OK
        agg = (tmp_path / "lc.agg.csv").read_text().splitlines()
        assert len(agg) == 1 + 3 * 4
        cells = out.read_text().splitlines()
        assert len(cells) == 1 + 3 * 5 * 4

    def test_capacity_exit_code(self, tmp_path):
        pool = write_pool(tmp_path, n=20)
        code = run_cli([
            "learning-curve", "--data", str(pool), "--labeled", "8",
            "--u-values", "64", "--repeats", "2", "--seed", "2",
            "--out", str(tmp_path / "x.csv"),
        ])
        assert code == EXIT_CAPACITY

    def test_labeled_must_exceed_dimension(self, tmp_path):
        pool = write_pool(tmp_path, n=30)
        code = run_cli([
            "learning-curve", "--data", str(pool), "--labeled", "2",
            "--u-values", "1", "--repeats", "1", "--seed", "2",
            "--out", str(tmp_path / "x.csv"),
        ])
        assert code == EXIT_USAGE

    def test_determinism_across_threads(self, tmp_path):
        pool = write_pool(tmp_path, n=60)
        out_a, out_b = tmp_path / "a.csv", tmp_path / "b.csv"
        base = ["learning-curve", "--data", str(pool), "--labeled", "8",
                "--u-values", "1,4", "--repeats", "4", "--seed", "2"]
        assert run_cli(base + ["--out", str(out_a)]) == EXIT_OK
        assert run_cli(base + ["--out", str(out_b), "--threads", "4"]) == EXIT_OK
        assert out_a.read_bytes() == out_b.read_bytes()
        assert (tmp_path / "a.agg.csv").read_bytes() == (tmp_path / "b.agg.csv").read_bytes()
