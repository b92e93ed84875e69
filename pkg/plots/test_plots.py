import subprocess
import sys
from pathlib import Path

import pytest

PLOTS = Path(__file__).parent / "plots.py"

SUMMARY_HEADER = "iter,min,q1,median,q3,max,count\n"
HISTORY_HEADER = "trial,iter,norm_Eu,norm_Es,kappa_T,alpha_i,normU2,normV2,residual\n"


def run_plots(*args):
    return subprocess.run([sys.executable, str(PLOTS), *args], capture_output=True, text=True, timeout=300)


def run_pipeline(*args):
    return subprocess.run(
        [sys.executable, "-m", "pencilback.cli", *args], capture_output=True, text=True, timeout=600
    )


@pytest.fixture
def summary_csv(tmp_path):
    path = tmp_path / "summary.csv"
    path.write_text(
        SUMMARY_HEADER
        + "1,0.9,1.0,1.1,1.3,1.5,4\n"
        + "2,0.01,0.02,0.03,0.05,0.09,4\n"
        + "3,1e-9,2e-9,4e-9,8e-9,2e-8,3\n"
    )
    return path


@pytest.fixture
def history_csv(tmp_path):
    path = tmp_path / "history.csv"
    rows = [
        "0,1,1.2,0.5,100,2000,1.01,1.02,1e-15",
        "0,2,0.05,0.51,100,2000,1.012,1.021,1e-16",
        "0,3,1e-5,0.512,101,2001,1.012,1.021,1e-18",
        "0,4,1e-11,0.512,nan,nan,1.012,1.021,nan",
    ]
    path.write_text(HISTORY_HEADER + "\n".join(rows) + "\n")
    return path


class TestRenderKinds:
    def test_whisker(self, summary_csv, tmp_path):
        out = tmp_path / "whisker.png"
        proc = run_plots("--kind", "whisker", "--in", str(summary_csv), "--out", str(out))
        assert proc.returncode == 0, proc.stderr
        assert out.stat().st_size > 1000

    def test_whisker_degenerate_single_iteration(self, tmp_path):
        path = tmp_path / "flat.csv"
        path.write_text(SUMMARY_HEADER + "1,0.5,0.5,0.5,0.5,0.5,10\n")
        out = tmp_path / "flat.png"
        proc = run_plots("--kind", "whisker", "--in", str(path), "--out", str(out))
        assert proc.returncode == 0, proc.stderr
        assert out.exists()

    def test_convergence_log_scale(self, history_csv, tmp_path):
        out = tmp_path / "conv.png"
        proc = run_plots("--kind", "convergence", "--in", str(history_csv), "--out", str(out), "--log-y")
        assert proc.returncode == 0, proc.stderr
        assert out.stat().st_size > 1000

    def test_norms(self, history_csv, tmp_path):
        out = tmp_path / "norms.png"
        proc = run_plots("--kind", "norms", "--in", str(history_csv), "--out", str(out))
        assert proc.returncode == 0, proc.stderr
        assert out.stat().st_size > 1000


class TestContracts:
    def test_missing_columns_diagnostic(self, summary_csv, tmp_path):
        proc = run_plots("--kind", "convergence", "--in", str(summary_csv), "--out", str(tmp_path / "x.png"))
        assert proc.returncode == 2
        assert "needs columns" in proc.stderr
        assert "norm_Eu" in proc.stderr

    def test_input_never_mutated(self, history_csv, tmp_path):
        before = history_csv.read_bytes()
        run_plots("--kind", "norms", "--in", str(history_csv), "--out", str(tmp_path / "n.png"))
        assert history_csv.read_bytes() == before

    def test_same_csv_same_bytes(self, summary_csv, tmp_path):
        out_a = tmp_path / "a.png"
        out_b = tmp_path / "b.png"
        run_plots("--kind", "whisker", "--in", str(summary_csv), "--out", str(out_a))
        run_plots("--kind", "whisker", "--in", str(summary_csv), "--out", str(out_b))
        assert out_a.read_bytes() == out_b.read_bytes()

    def test_empty_csv_rejected(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text(SUMMARY_HEADER)
        proc = run_plots("--kind", "whisker", "--in", str(path), "--out", str(tmp_path / "e.png"))
        assert proc.returncode == 2
        assert "no data rows" in proc.stderr


@pytest.fixture(scope="module")
def pipeline_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("pipeline")
    proc = run_pipeline(
        "experiment", "random", "--m", "3", "--n", "3", "--d", "5",
        "--trials", "30", "--seed", "11", "--out", str(out),
    )
    assert proc.returncode == 0, proc.stderr
    proc = run_pipeline("experiment", "manipulator", "--pert", "0.01", "--seed", "1", "--out", str(out))
    assert proc.returncode == 0, proc.stderr
    return out


class TestPipelineIntegration:
    """Renders the real pipeline CSVs: random-ensemble summary plus manipulator histories."""

    def test_whisker_from_random_ensemble(self, pipeline_dir, tmp_path):
        out = tmp_path / "ex1_whisker.png"
        proc = run_plots(
            "--kind", "whisker", "--in", str(pipeline_dir / "random_3x3_d5_summary.csv"),
            "--out", str(out), "--log-y",
        )
        assert proc.returncode == 0, proc.stderr
        assert out.stat().st_size > 1000

    def test_convergence_from_manipulator(self, pipeline_dir, tmp_path):
        out = tmp_path / "manip_conv.png"
        proc = run_plots(
            "--kind", "convergence",
            "--in", str(pipeline_dir / "manipulator_normalized_history.csv"),
            "--out", str(out), "--log-y",
        )
        assert proc.returncode == 0, proc.stderr
        assert out.stat().st_size > 1000

    def test_norms_from_manipulator(self, pipeline_dir, tmp_path):
        out = tmp_path / "manip_norms.png"
        proc = run_plots(
            "--kind", "norms",
            "--in", str(pipeline_dir / "manipulator_unnormalized_history.csv"),
            "--out", str(out),
        )
        assert proc.returncode == 0, proc.stderr
        assert out.stat().st_size > 1000
