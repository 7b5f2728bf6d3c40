from pathlib import Path

import numpy as np
import pytest

from flmtails import ConfigError
from flmtails.config import GridSpec, RunConfig, dump_config, load_config, parse_config

CONFIGS = sorted((Path(__file__).parent.parent / "configs").glob("*.yaml"))


@pytest.mark.parametrize("path", [p for p in CONFIGS if p.stem != "empty"], ids=lambda p: p.stem)
def test_shipped_configs_round_trip(path):
    cfg = load_config(path)
    again = parse_config(dump_config(cfg))
    assert again.to_dict() == cfg.to_dict()


def test_empty_measure_parses():
    # the measure is rejected only when a command needs it
    cfg = load_config(Path(__file__).parent.parent / "configs" / "empty.yaml")
    assert cfg.measure.atoms == ()


def test_full_round_trip():
    text = """
model:
  H: 0.3
  lambda: 2.0
  measure:
    atoms: [[1.0, 0.5], [-2.0, 0.25]]
    pieces:
      - {family: power, lo: 3.0, hi: inf, coef: 2.0, alpha: 1.2}
      - {family: exp_power, lo: -inf, hi: -1.0, coef: 1.0, alpha: 0.5, beta: 2.0}
      - {family: gaussian_tail, lo: 1.0, hi: 3.0, coef: 1.0, scale: 0.5}
t: [0.5, 2.0]
x: [1.0, 10.0, 100.0]
asymptote: {regime: Ex41, ex41: {alpha: 1.2, C_minus: 0.0, C_plus: 2.0}}
simulate: {n_samples: 5000, jump_floor: 0.25, s_min: -100.0, small_jump_mode: gaussian_substitute,
           block_size: 512, sample_format: csv, bandwidth: 0.1}
verify: {only: [lemma32, ex41], tolerance_scale: 2.0}
output: {path: out.csv, format: json}
seed: 99
"""
    cfg = parse_config(text)
    assert cfg.H == 0.3 and cfg.lambda_trunc == 2.0
    assert cfg.t == (0.5, 2.0)
    assert np.array_equal(cfg.x.values(), [1.0, 10.0, 100.0])
    assert cfg.ex41 == (1.2, 0.0, 2.0)
    assert cfg.only == ("lemma32", "ex41")
    assert cfg.out == "out.csv" and cfg.format == "json" and cfg.seed == 99
    assert len(cfg.measure.density_pieces) == 3
    assert parse_config(dump_config(cfg)).to_dict() == cfg.to_dict()


BASE = "model: {H: 0.25, measure: {atoms: [[1.0, 1.0]]}}\n"


@pytest.mark.parametrize(
    "extra",
    [
        "colour: red\n",
        "simulate: {n_sample: 10}\n",
        "output: {format: xml}\n",
        "simulate: {n_samples: -1}\n",
        "simulate: {bandwidth: 0}\n",
        "t: [0.0]\n",
        "seed: -3\n",
        "seed: 1.5\n",
        "x: {lo: 1.0, hi: 0.0, n: 5}\n",
        "x: {lo: 0.0, hi: 1.0}\n",
        "verify: {tolerance_scale: 0}\n",
        "asymptote: {ex41: {alpha: 1.0}}\n",
    ],
)
def test_bad_keys_and_values(extra):
    with pytest.raises(ConfigError):
        parse_config(BASE + extra)


@pytest.mark.parametrize(
    "text",
    [
        "",
        "model: {H: 0.25}\n",
        "model: {H: 0.5, measure: {atoms: [[1.0, 1.0]]}}\n",
        "model: {H: 0.25, measure: {atoms: [[0.0, 1.0]]}}\n",
        "model: {H: 0.25, measure: {pieces: [{family: nope, lo: 1, hi: 2}]}}\n",
        "model: [unbalanced\n",
    ],
)
def test_bad_models(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "absent.yaml")


def test_grid_spec():
    g = GridSpec.parse({"lo": -1.0, "hi": 1.0, "n": 5}, "x")
    assert np.allclose(g.values(), [-1, -0.5, 0, 0.5, 1])
    assert GridSpec.parse(3.0, "x").values().tolist() == [3.0]
    assert GridSpec.parse([1, 2], "x").to_obj() == [1.0, 2.0]
    with pytest.raises(ConfigError):
        GridSpec.parse([], "x")


def test_overrides_win():
    cfg = parse_config(BASE + "seed: 4\noutput: {format: csv}\n")
    new = cfg.with_overrides(seed=9, format="json", only="lemma32,ex42", out=None)
    assert new.seed == 9 and new.format == "json" and new.only == ("lemma32", "ex42")
    assert new.out is None
    assert cfg.with_overrides(seed=None).seed == 4
    with pytest.raises(ConfigError):
        cfg.with_overrides(tolerance_scale=-1.0)


def test_defaults():
    cfg = RunConfig.from_dict({"model": {"H": 0.25, "measure": {"atoms": [[1.0, 1.0]]}}})
    assert cfg.t == (1.0,) and cfg.format == "csv" and cfg.seed == 0
    assert cfg.small_jump_mode == "drop_compensated"
