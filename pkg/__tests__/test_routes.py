import json

import pytest

from src.main import main
from src.storage.artifacts import sha256_file


def run_cli(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, json.loads(out) if out.strip() else None


@pytest.fixture
def planted_file(tmp_path, capsys):
    """A noiseless planted 5x5x5 rank-2 tensor written through the CLI."""
    path = tmp_path / "planted.dtf"
    code, _ = run_cli(capsys, "gen", "planted", "--dims", "5,5,5", "--rank", "2", "--seed", "11", "--out", str(path))
    assert code == 0
    return path


def test_gen_gaussian_is_deterministic(tmp_path, capsys):
    """Test the same seed writes byte-identical files."""
    paths = [tmp_path / "a.dtf", tmp_path / "b.dtf"]
    for path in paths:
        code, report = run_cli(capsys, "gen", "gaussian", "--dims", "3x4x2", "--seed", "5", "--out", str(path))
        assert code == 0
        assert report["dims"] == [3, 4, 2]

    assert paths[0].read_bytes() == paths[1].read_bytes()


def test_gen_planted_writes_truth_sidecar(planted_file):
    """Test the planted sidecar records the data digest and ground truth."""
    sidecar = planted_file.with_name(planted_file.name + ".truth.json")
    truth = json.loads(sidecar.read_text())

    assert truth["data_digest"] == sha256_file(planted_file)
    assert truth["rank"] == 2
    assert all(1.0 <= abs(v) <= 2.0 for v in truth["lam"])


def test_gen_planted_requires_rank(tmp_path, capsys):
    """Test planted generation without --rank exits 1."""
    code, _ = run_cli(capsys, "gen", "planted", "--dims", "3,3", "--out", str(tmp_path / "x.dtf"))
    assert code == 1


def test_solve_planted_converges(planted_file, tmp_path, capsys):
    """Test a noiseless planted tensor solves to Converged with run artifacts."""
    out_dir = tmp_path / "run"
    code, report = run_cli(
        capsys,
        "solve", str(planted_file),
        "--rank", "2",
        "--kappa", "1e-3",
        "--restarts", "3",
        "--seed", "2",
        "--out-dir", str(out_dir),
    )

    assert code == 0
    assert report["status"] == "Converged"
    assert report["rank"] == 2
    assert len(report["factor_digests"]) == 3
    assert {p.name for p in out_dir.iterdir()} == {"trace.csv", "result.json", "manifest.json"}


def test_solve_outputs_are_reproducible(planted_file, tmp_path, capsys):
    """Test the same manifest gives byte-identical trace and result files."""
    for name in ("one", "two"):
        run_cli(capsys, "solve", str(planted_file), "--rank", "2", "--max-sweeps", "50", "--out-dir", str(tmp_path / name))

    for artifact in ("trace.csv", "result.json"):
        assert (tmp_path / "one" / artifact).read_bytes() == (tmp_path / "two" / artifact).read_bytes()


@pytest.mark.parametrize(
    "extra",
    [
        ["--rank", "0"],
        ["--rank", "2", "--epsilon", "-1"],
        ["--rank", "2", "--kappa", "wide"],
        ["--rank", "2", "--bogus"],
    ],
)
def test_solve_invalid_arguments_exit_1(planted_file, capsys, extra):
    """Test validation and usage errors exit 1, never 2."""
    code, _ = run_cli(capsys, "solve", str(planted_file), *extra)
    assert code == 1


def test_solve_missing_file_exit_1(tmp_path, capsys, caplog):
    """Test a missing input exits 1 with a one-line diagnostic."""
    code, _ = run_cli(capsys, "solve", str(tmp_path / "missing.dtf"), "--rank", "1")
    assert code == 1
    assert "cannot read tensor file" in caplog.text


def test_solve_max_sweeps_exit_2(tmp_path, capsys):
    """Test an exhausted sweep budget exits 2."""
    path = tmp_path / "g.dtf"
    run_cli(capsys, "gen", "gaussian", "--dims", "3,3,3", "--seed", "1", "--out", str(path))
    code, report = run_cli(capsys, "solve", str(path), "--rank", "2", "--max-sweeps", "2")

    assert code == 2
    assert report["status"] == "MaxSweeps"
    assert report["rate_fit"] is None
    assert report["rate_fit_error"]


def test_solve_all_truncated_exit_3(planted_file, capsys):
    """Test truncating every component exits 3."""
    code, report = run_cli(capsys, "solve", str(planted_file), "--rank", "2", "--kappa", "1e6")
    assert code == 3
    assert report["status"] == "AllTruncated"
    assert report["rank"] == 0


def test_diagnose_converged_run(planted_file, tmp_path, capsys):
    """Test diagnose re-runs the solve and all checks pass."""
    out_dir = tmp_path / "run"
    run_cli(capsys, "solve", str(planted_file), "--rank", "2", "--kappa", "1e-3", "--seed", "2", "--out-dir", str(out_dir))
    code, report = run_cli(capsys, "diagnose", str(out_dir))

    assert code == 0
    assert report["passed"]
    assert not report["subgrad_bound"]["skipped"]
    assert report["feasibility"]["passed"]


def test_diagnose_without_input_skips_bound(planted_file, tmp_path, capsys):
    """Test a missing input tensor marks the subgradient bound skipped."""
    out_dir = tmp_path / "run"
    run_cli(capsys, "solve", str(planted_file), "--rank", "2", "--max-sweeps", "30", "--out-dir", str(out_dir))
    planted_file.unlink()
    code, report = run_cli(capsys, "diagnose", str(out_dir))

    assert report["subgrad_bound"]["skipped"]
    assert code in (0, 4)


def test_diagnose_digest_mismatch_exit_1(planted_file, tmp_path, capsys):
    """Test a modified input tensor is refused."""
    out_dir = tmp_path / "run"
    run_cli(capsys, "solve", str(planted_file), "--rank", "2", "--max-sweeps", "10", "--out-dir", str(out_dir))
    planted_file.write_text(planted_file.read_text() + "\n")
    code, _ = run_cli(capsys, "diagnose", str(out_dir))

    assert code == 1


def test_diagnose_missing_directory(tmp_path, capsys):
    """Test a missing run directory exits 1."""
    code, _ = run_cli(capsys, "diagnose", str(tmp_path / "nowhere"))
    assert code == 1


def test_experiment_location(tmp_path, capsys):
    """Test the location experiment writes its summary and histogram."""
    out, hist = tmp_path / "loc.json", tmp_path / "loc.csv"
    code, summary = run_cli(
        capsys,
        "experiment", "location",
        "--kind", "lu",
        "--num-b", "4",
        "--starts", "20",
        "--seed", "3",
        "--out", str(out),
        "--csv", str(hist),
    )

    assert code == 0
    assert summary["violations"] == 0
    assert json.loads(out.read_text()) == summary
    assert hist.read_text().startswith("log10_low,log10_high,count")


def test_unknown_command_exit_1(capsys):
    """Test argparse usage errors map to exit 1."""
    code, _ = run_cli(capsys, "transform")
    assert code == 1
