import csv

import pytest

from riscap import matrix_analysis
from riscap.cli import main
from riscap.experiments import SWEEP_RES_COLUMNS, SWEEP_SNR_COLUMNS, format_value, subseed

SMALL = """
m_h = 2
m_v = 2
snr_grid_db = [0, 20]
m_grid = [4, 8]
mc_trials = 500
offset_trials = 500
ga_population = 6
ga_generations = 3
"""


@pytest.fixture
def cfg_file(tmp_path):
    path = tmp_path / "small.cfg"
    path.write_text(SMALL)
    return str(path)


def read_rows(path):
    with open(path) as handle:
        return list(csv.reader(line for line in handle if not line.startswith("#")))


def test_sweep_snr(cfg_file, tmp_path):
    out = tmp_path / "snr.csv"
    assert main(["sweep-snr", "--config", cfg_file, "--out", str(out)]) == 0
    rows = read_rows(out)
    assert tuple(rows[0]) == SWEEP_SNR_COLUMNS and len(rows) == 3
    assert all(float(r[3]) <= float(r[2]) for r in rows[1:])
    assert main(["sweep-snr", "--config", cfg_file, "--out", str(out), "--format", "long"]) == 0
    assert read_rows(out)[0] == ["rho_db", "kind", "value", "std_error", "trials"]


@pytest.mark.parametrize("mode", ["a", "b"])
def test_sweep_res(cfg_file, tmp_path, mode):
    out = tmp_path / "res.csv"
    assert main(["sweep-res", "--mode", mode, "--config", cfg_file, "--out", str(out), "--threads", "2"]) == 0
    rows = read_rows(out)
    assert tuple(rows[0]) == SWEEP_RES_COLUMNS[mode]
    assert [r[0] for r in rows[1:]] == ["4", "8"]


def test_optimize(cfg_file, tmp_path):
    out, phases = tmp_path / "trace.csv", tmp_path / "phases.txt"
    assert main(["optimize", "--config", cfg_file, "--out", str(out), "--phases-out", str(phases)]) == 0
    assert len(phases.read_text().split()) == 4
    assert read_rows(out)[0] == ["generation", "best", "mean"]


def test_seed_changes_and_reproduces_output(cfg_file, tmp_path):
    texts = []
    for seed in (1, 1, 2):
        out = tmp_path / f"s{len(texts)}.csv"
        assert main(["sweep-snr", "--config", cfg_file, "--seed", str(seed), "--out", str(out)]) == 0
        texts.append(out.read_text())
    assert texts[0] == texts[1] != texts[2]


def test_exit_codes(cfg_file, tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text("unknown_key = 1\n")
    assert main(["sweep-snr", "--config", str(bad)]) == 2
    assert main(["sweep-snr", "--config", str(tmp_path / "missing.cfg")]) == 2
    assert main(["no-such-command"]) == 2
    singular = tmp_path / "singular.cfg"
    singular.write_text(SMALL + "los_power_r = 1.0\nlos_power_h = 1.0\n")
    assert main(["sweep-snr", "--config", str(singular), "--out", str(tmp_path / "x.csv")]) == 1
    assert "SingularCovarianceError" in capsys.readouterr().err


def test_validate_catches_injected_fault(tmp_path):
    out = tmp_path / "v.txt"
    assert main(["validate", "--suite", "minor_expansion", "--out", str(out)]) == 0
    assert main(["validate", "--suite", "expected_det_mc", "--trials", "20000", "--out", str(out),
                 "--inject-j-scale", "1.05"]) == 1
    assert "[FAIL] expected_det_mc" in out.read_text()
    assert matrix_analysis._J_SCALE == 1.0


def test_helpers():
    assert subseed(1, 2) == subseed(1, 2) != subseed(1, 3)
    assert format_value(3) == "3" and format_value(None) == "" and format_value(1 / 3) == "0.3333333333"
