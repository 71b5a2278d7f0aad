import subprocess
import sys
import warnings

import pytest

from sscm.cli import main
from sscm.io import read_dataset, read_params, read_stats_csv, write_params

from .conftest import REFERENCE_SETS


@pytest.fixture
def set_b(tmp_path):
    path = tmp_path / "b.params"
    write_params(path, REFERENCE_SETS["B"])
    return path


def run(*argv):
    return main([str(a) for a in argv])


class TestUsage:
    def test_count_zero(self, set_b, tmp_path, capsys):
        assert run("generate", "--params", set_b, "--count", 0, "--seed", 1, "--out", tmp_path / "x") == 1
        err = capsys.readouterr().err
        assert "usage:" in err and "--count" in err

    def test_missing_argument(self, capsys):
        with pytest.raises(SystemExit) as exc:
            run("generate", "--count", 1)
        assert exc.value.code == 1
        assert "usage:" in capsys.readouterr().err

    def test_unknown_baseline(self, tmp_path):
        assert run("fit", "--stats", tmp_path / "s.csv", "--baseline", "rma", "--out", tmp_path / "o") == 1

    def test_data_error(self, tmp_path, capsys):
        bad = tmp_path / "bad.params"
        bad.write_text("mu_lgds=1\n")
        assert run("generate", "--params", bad, "--count", 1, "--seed", 1, "--out", tmp_path / "x") == 2
        assert "unknown key" in capsys.readouterr().err

    def test_missing_file(self, tmp_path):
        assert run("extract", "--in", tmp_path / "nope.csds", "--out", tmp_path / "s.csv") == 2

    def test_bad_hex(self):
        assert run("report", "decode", "--hex", "zz") == 1
        assert run("report", "decode", "--hex", "0102") == 2


class TestSubcommands:
    def test_report(self, set_b, capsys):
        assert run("report", "encode", "--params", set_b) == 0
        hexed = capsys.readouterr().out.strip()
        assert hexed == "018c737c2b994d33"
        assert run("report", "decode", "--hex", hexed) == 0
        out = capsys.readouterr().out
        assert "mu_lgDS=-6.80392157" in out

    def test_match_reference_sets(self, tmp_path, capsys):
        cat = tmp_path / "cat"
        cat.mkdir()
        for name in "ABC":
            write_params(cat / f"{name}.params", REFERENCE_SETS[name])
        write_params(tmp_path / "d.params", REFERENCE_SETS["D"])
        assert run("match", "--catalog", cat, "--query", tmp_path / "d.params", "--top-k", 3) == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[0].split(",")[:2] == ["1", "B"]
        assert len(lines) == 3

    def test_catalog_then_match(self, tmp_path, capsys):
        cat = tmp_path / "grid"
        args = ["catalog", "--kf-grid", "4,8,12", "--as-grid", "0.7,1.2", "--nc-grid", "8,12", "--out", cat]
        assert run(*args) == 0
        assert len(list(cat.glob("*.params"))) == 12
        write_params(tmp_path / "q.params", REFERENCE_SETS["B"])
        assert run("match", "--catalog", cat, "--query", tmp_path / "q.params") == 0
        rank, ident, _ = capsys.readouterr().out.strip().split(",")
        assert rank == "1" and ident.startswith("uma-kf1-as0-")

    def test_augment_and_eval(self, set_b, tmp_path, capsys):
        ds = tmp_path / "b.csds"
        assert run("generate", "--params", set_b, "--count", 20, "--seed", 3, "--out", ds) == 0
        assert run("augment", "--in", ds, "--snr-db", 20, "--seed", 1, "--out", tmp_path / "n.csds") == 0
        assert len(read_dataset(tmp_path / "n.csds")) == 20
        args = ["eval", "--train", ds, "--test", tmp_path / "n.csds", "--coeffs", 7, "--bits-per-comp", 4]
        assert run(*args, "--per-sample", tmp_path / "per.csv", "--figures", tmp_path / "fig") == 0
        report = dict(line.split("=", 1) for line in capsys.readouterr().out.splitlines())
        assert report["feedback_bits"] == "56" and 0 <= float(report["mean_sgcs"]) <= 1
        assert len((tmp_path / "per.csv").read_text().splitlines()) == 21
        assert (tmp_path / "fig" / "sgcs_cdf.png").stat().st_size > 0
        assert run("eval", "--test", ds, "--codec", "dft", "--beams", 2) == 0
        assert "feedback_bits=18" in capsys.readouterr().out
        assert run("eval", "--test", ds) == 1


def test_end_to_end_pipeline(set_b, tmp_path):
    ds, stats, fitted = tmp_path / "b.csds", tmp_path / "s.csv", tmp_path / "fit.params"
    assert run("generate", "--params", set_b, "--count", 300, "--seed", 42, "--workers", 2, "--out", ds) == 0
    assert run("extract", "--in", ds, "--out", stats, "--figures", tmp_path / "fig") == 0
    assert stats.read_text().splitlines()[0] == "ds_s,asd_deg,asa_deg,kf_db,n_clusters"
    assert len(read_stats_csv(stats)) == 300
    assert (tmp_path / "fig" / "stats.png").stat().st_size > 0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        assert run("fit", "--stats", stats, "--baseline", "uma-los", "--out", fitted) == 0
    p = read_params(fitted)
    assert fitted.read_text().startswith("# fitted from s.csv (300 samples)")
    assert abs(p.mu_lgDS + 6.8) <= 0.15
    assert abs(p.sigma_lgDS / 0.675 - 1) <= 0.30
    assert abs(p.mu_lgASD - 0.7) <= 0.2


def test_console_script_entry(set_b, tmp_path):
    out = subprocess.run(
        [sys.executable, "-m", "sscm.cli", "report", "encode", "--params", str(set_b)],
        capture_output=True,
        text=True,
        check=True,
    )
    assert out.stdout.strip() == "018c737c2b994d33"
