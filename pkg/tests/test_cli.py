import json
import math
from pathlib import Path

import numpy as np
import pytest

from flmtails.cli import EXIT_CONFIG, EXIT_DIVERGENCE, EXIT_OK, EXIT_REGIME, EXIT_SLOW_DECAY, main
from flmtails.density import DensityGrid
from flmtails.simulate import read_samples

CONFIGS = Path(__file__).parent.parent / "configs"


def write(tmp_path, text, name="c.yaml"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_check_symmetric(capsys):
    assert main(["check", "--config", str(CONFIGS / "symmetric_h025.yaml")]) == EXIT_OK
    out = capsys.readouterr().out
    assert out.startswith("exists: yes, regime: Regular")
    assert "I1:" in out and "I2:" in out


def test_check_dyadic_flags_profile(capsys):
    assert main(["check", "--config", str(CONFIGS / "dyadic_h025.yaml")]) == EXIT_OK
    assert "𝔪∉𝓛d suspected" in capsys.readouterr().out


def test_check_power_not_flagged(capsys):
    assert main(["check", "--config", str(CONFIGS / "power_tails_h025.yaml")]) == EXIT_OK
    out = capsys.readouterr().out
    assert "ExtremelyHeavy" in out and "suspected" not in out


def test_empty_measure_is_config_error(capsys):
    assert main(["check", "--config", str(CONFIGS / "empty.yaml")]) == EXIT_CONFIG
    assert "positive total mass" in capsys.readouterr().err


def test_divergent_measure(tmp_path, capsys):
    cfg = write(tmp_path, "model:\n  H: 0.25\n  measure:\n    pieces:\n"
                          "      - {family: power, lo: 1.0, hi: inf, coef: 0.5, alpha: 0.5}\n")
    assert main(["check", "--config", cfg]) == EXIT_DIVERGENCE
    assert capsys.readouterr().out.startswith("exists: no")


def test_slow_decay(tmp_path):
    cfg = write(tmp_path, "model: {H: 0.25, measure: {atoms: [[1.0, 1.0e-6], [-1.0, 1.0e-6]]}}\n"
                          "t: [1.0e-3]\nx: [0.0]\n")
    assert main(["density", "--config", cfg]) == EXIT_SLOW_DECAY


def test_wrong_regime(tmp_path):
    cfg = write(tmp_path, "model: {H: 0.25, measure: {atoms: [[1.0, 1.0], [-1.0, 1.0]]}}\n"
                          "x: [10.0]\nasymptote: {regime: Thm21}\n")
    assert main(["asymptote", "--config", cfg]) == EXIT_REGIME


@pytest.mark.parametrize(
    "argv",
    [
        ["bogus"],
        ["check", "--format", "xml"],
        ["check", "--seed", "abc"],
        ["check"],
        ["check", "--config", "/nonexistent/c.yaml"],
        ["verify", "--only", "nosuch"],
        ["verify", "--tolerance-scale", "0"],
    ],
)
def test_usage_errors(argv):
    assert main(argv) == EXIT_CONFIG


def test_help_is_ok(capsys):
    assert main(["--help"]) == EXIT_OK
    assert "--tolerance-scale" in capsys.readouterr().out


def test_verify_only_lemma32(tmp_path, capsys):
    out = tmp_path / "v.json"
    assert main(["verify", "--only", "lemma32", "--out", str(out)]) == EXIT_OK
    doc = json.loads(out.read_text())
    assert doc["passed"] and [r["name"] for r in doc["results"]] == ["lemma32"]
    assert "[PASS]  3 lemma32" in capsys.readouterr().err


def test_density_csv_and_json(tmp_path):
    text = "model: {H: 0.25, measure: {atoms: [[1.0, 1.0], [-1.0, 1.0]]}}\nx: [0.0, 1.0, 2.5]\n"
    cfg = write(tmp_path, text)
    out = tmp_path / "d.csv"
    assert main(["density", "--config", cfg, "--out", str(out)]) == EXIT_OK
    lines = out.read_text().splitlines()
    assert lines[0] == "x,p,err" and len(lines) == 4
    g = DensityGrid.from_csv(out.read_text(), t=1.0)
    assert g.p_values[0] > g.p_values[1] > g.p_values[2] > 0
    js = tmp_path / "d.json"
    assert main(["density", "--config", cfg, "--out", str(js), "--format", "json"]) == EXIT_OK
    g2 = DensityGrid.from_json(js.read_text())
    assert np.array_equal(g2.p_values, g.p_values)


def test_density_several_times(tmp_path):
    cfg = write(tmp_path, "model: {H: 0.25, measure: {atoms: [[1.0, 1.0], [-1.0, 1.0]]}}\n"
                          "t: [1.0, 2.0]\nx: [0.0]\n")
    out = tmp_path / "d.csv"
    assert main(["density", "--config", cfg, "--out", str(out)]) == EXIT_OK
    text = out.read_text()
    assert text.count("x,p,err") == 2 and "# t = 2.0" in text


def test_asymptote_csv(tmp_path):
    cfg = write(tmp_path, "model: {H: 0.25, measure: {atoms: [[1.0, 1.0], [-1.0, 1.0]]}}\n"
                          "x: [-3.0, 50.0]\n")
    out = tmp_path / "a.csv"
    assert main(["asymptote", "--config", cfg, "--out", str(out)]) == EXIT_OK
    rows = [line.split(",") for line in out.read_text().splitlines()]
    assert rows[0] == ["t", "x", "exact", "asymptote", "ratio", "err"]
    assert math.isnan(float(rows[1][3]))
    assert 0.5 < float(rows[2][4]) < 2.0


def test_asymptote_json(tmp_path):
    cfg = write(tmp_path, "model: {H: 0.25, measure: {atoms: [[1.0, 1.0], [-1.0, 1.0]]}}\nx: [50.0]\n")
    out = tmp_path / "a.json"
    assert main(["asymptote", "--config", cfg, "--out", str(out), "--format", "json"]) == EXIT_OK
    doc = json.loads(out.read_text())
    assert doc["regime"] == "Thm22_ii" and len(doc["rows"]) == 1


@pytest.mark.parametrize("fmt", ["binary", "csv"])
def test_simulate_writes_files(tmp_path, capsys, fmt):
    cfg = write(tmp_path, "model: {H: 0.25, measure: {atoms: [[1.0, 1.0], [-1.0, 1.0]]}}\n"
                          f"simulate: {{n_samples: 10000, sample_format: {fmt}, bandwidth: 0.1}}\n")
    out = tmp_path / "s.bin"
    assert main(["simulate", "--config", cfg, "--out", str(out), "--seed", "3"]) == EXIT_OK
    summary = json.loads(capsys.readouterr().out)
    assert summary["seed"] == 3 and summary["runs"][0]["file"] == str(out)
    s = read_samples(out, fmt)
    assert s.size == 10000
    assert Path(summary["runs"][0]["density_file"]).read_text().startswith("x,density,se")
    # same seed, same samples
    out2 = tmp_path / "s2.bin"
    main(["simulate", "--config", cfg, "--out", str(out2), "--seed", "3"])
    assert np.array_equal(read_samples(out2, fmt), s)
