"""Command line: ``flmtails {check,density,asymptote,simulate,verify}``.

Settings come from the YAML file given by ``--config``; flags given on the
command line override the matching keys of the file.  Exit codes: 0 pass,
1 tolerance failure, 2 config error, 3 divergence, 4 slow decay, 5 regime
mismatch.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Optional, Sequence

import numpy as np

from ._validation import ConfigError, DivergenceError, FLMError
from .config import RunConfig, load_config
from .levy_measure import symmetric_atoms

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_DIVERGENCE, EXIT_SLOW_DECAY, EXIT_REGIME = range(6)


def _emit(text: str, out: Optional[str], mode="w"):
    if out is None:
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")
    else:
        with open(out, mode) as fh:
            fh.write(text)


def _model(cfg: RunConfig):
    from .charfn import Model

    return Model(cfg.measure, cfg.H, lambda_trunc=cfg.lambda_trunc)


# ----------------------------------------------------------------------
def cmd_check(cfg: RunConfig) -> int:
    from .asymptotics import profile_shift_check
    from .charfn import Model
    from .levy_measure import TailRegime, check_existence, check_integral_conditions, classify_tail_regime

    mu = cfg.measure
    mu.require_nonzero()
    exists = check_existence(mu, cfg.H)
    verdict = [f"exists: {'yes' if exists else 'no'}"]
    if exists and cfg.H < 0.5:
        regime = classify_tail_regime(mu, cfg.H)
        verdict.append(f"regime: {regime}")
        if regime == TailRegime.EXTREMELY_HEAVY:
            _, suspected = profile_shift_check(Model(mu, cfg.H, lambda_trunc=cfg.lambda_trunc))
            if suspected:
                verdict.append("𝔪∉𝓛d suspected")
    elif exists:
        verdict.append("regime: saddle point (H > 1/2)")
    lines = [", ".join(verdict)]
    if exists:
        rep = check_integral_conditions(mu, cfg.H)
        for name, val, err in rep.as_rows():
            lines.append(f"  {name}: {val:.10g} (abs err {err:.2g})")
    _emit("\n".join(lines) + "\n", cfg.out)
    if not exists:
        raise DivergenceError("the existence integral diverges")
    return EXIT_OK


def cmd_density(cfg: RunConfig) -> int:
    from .density import DensityGrid, density_fourier

    m = _model(cfg)
    x = cfg.x.values()
    chunks = []
    for t in cfg.t:
        p, err = density_fourier(m, t, x)
        chunks.append(DensityGrid(t, x, p, err))
    if cfg.format == "json":
        text = chunks[0].to_json() if len(chunks) == 1 else "[" + ",".join(g.to_json() for g in chunks) + "]"
    else:
        text = ""
        for g in chunks:
            body = g.to_csv()
            if len(chunks) > 1:
                body = f"# t = {g.t!r}\n" + body
            text += body
    _emit(text, cfg.out)
    return EXIT_OK


def cmd_asymptote(cfg: RunConfig) -> int:
    from .asymptotics import Regime, auto_regime, compare

    m = _model(cfg)
    regime = auto_regime(m) if cfg.regime == "auto" else Regime(cfg.regime)
    grid = [(t, x) for t in cfg.t for x in cfg.x.values()]
    rep = compare(m, regime, grid, cfg.ex41)
    _emit(rep.to_json() if cfg.format == "json" else rep.to_csv(), cfg.out)
    return EXIT_OK


def cmd_simulate(cfg: RunConfig) -> int:
    from .simulate import SimConfig, empirical_density, sample, write_samples

    m = _model(cfg)
    sc = SimConfig(n_samples=cfg.n_samples, s_min=cfg.s_min, jump_floor=cfg.jump_floor, seed=cfg.seed,
                   small_jump_mode=cfg.small_jump_mode, block_size=cfg.block_size)
    summary = {"seed": cfg.seed, "n_samples": cfg.n_samples, "runs": []}
    for t in cfg.t:
        s = sample(m, t, sc)
        entry = {"t": t, "mean": float(np.mean(s)), "median": float(np.median(s)),
                 "q01": float(np.quantile(s, 0.01)), "q99": float(np.quantile(s, 0.99))}
        if cfg.out is not None:
            path = cfg.out if len(cfg.t) == 1 else f"{cfg.out}.t{t:g}"
            write_samples(path, s, cfg.sample_format)
            entry["file"] = path
            if s.size >= 10_000:
                ed = empirical_density(s, cfg.bandwidth, *np.quantile(s, [0.001, 0.999]))
                with open(path + ".density.csv", "w") as fh:
                    fh.write(ed.to_csv())
                entry["density_file"] = path + ".density.csv"
        summary["runs"].append(entry)
    sys.stdout.write(json.dumps(summary, indent=2) + "\n")
    return EXIT_OK


def cmd_verify(cfg: RunConfig) -> int:
    from .verify import run_battery

    def show(res):
        sys.stderr.write(res.line() + "\n")
        sys.stderr.flush()

    results = run_battery(cfg.only, cfg.tolerance_scale, progress=show)
    doc = {"passed": all(r.passed for r in results), "results": [r.to_dict() for r in results]}
    _emit(json.dumps(doc, indent=2), cfg.out)
    return EXIT_OK if doc["passed"] else EXIT_FAIL


COMMANDS = {
    "check": cmd_check,
    "density": cmd_density,
    "asymptote": cmd_asymptote,
    "simulate": cmd_simulate,
    "verify": cmd_verify,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="flmtails", description="Densities and tail asymptotics of fractional "
                                 "Levy motion.  Flags override keys of the config file.")
    ap.add_argument("command", choices=list(COMMANDS))
    ap.add_argument("--config", metavar="PATH", help="YAML run configuration")
    ap.add_argument("--out", metavar="PATH", help="output file (default: stdout)")
    ap.add_argument("--seed", type=int, metavar="N")
    ap.add_argument("--format", choices=["csv", "json"])
    ap.add_argument("--only", metavar="NAME", help="comma-separated check names for verify")
    ap.add_argument("--tolerance-scale", type=float, metavar="F", dest="tolerance_scale")
    return ap


def _default_config() -> RunConfig:
    """Used by ``verify`` when no file is given."""
    return RunConfig(measure=symmetric_atoms(), H=0.25)


def main(argv: Optional[Sequence[str]] = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        if args.config is not None:
            cfg = load_config(args.config)
        elif args.command == "verify":
            cfg = _default_config()
        else:
            raise ConfigError(f"'{args.command}' needs --config")
        cfg = cfg.with_overrides(out=args.out, seed=args.seed, format=args.format, only=args.only,
                                 tolerance_scale=args.tolerance_scale)
        return COMMANDS[args.command](cfg)
    except FLMError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
