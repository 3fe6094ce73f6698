"""Command-line entry point: ``activeris <subcommand> [options]``."""

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .channel import generate_channels
from .config import ConfigError, RunSettings, check_modes, load_config
from .harness import ExperimentConfig, cell_seed, run_sweep, write_results, write_table
from .solver import IDEAL, PRACTICAL, run_bcd
from .validation import run_all

log = logging.getLogger("activeris")

_SWEEPS = {
    "sweep-power": ("p_bs_dbm", "power_dbm"),
    "sweep-position": ("user_center_x_m", "position_x_m"),
    "sweep-elements": ("num_elements", "elements"),
}


def _parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI configuration file")
    common.add_argument("--seed", type=int, help="base seed (unsigned 64-bit)")
    common.add_argument("--out", help="output path (default: stdout)")
    common.add_argument("--mode", help="comma-separated solver modes")
    common.add_argument("--realizations", type=int, help="realizations per sweep point")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="activeris", description="Active-RIS beamforming simulator.")
    sub = p.add_subparsers(dest="command", required=True)
    for name in _SWEEPS:
        s = sub.add_parser(name, parents=[common], help=f"{name.split('-')[1]} sweep, CSV summary")
        s.add_argument("--long", help="also write the per-realization table here")
        s.add_argument("--workers", type=int, help="worker processes")
    sub.add_parser("single-run", parents=[common], help="one realization, JSON iteration trace")
    sub.add_parser("validate", parents=[common], help="run the invariant checks")
    return p


def _settings(args):
    settings = load_config(args.config) if args.config else RunSettings()
    if args.seed is not None:
        if not 0 <= args.seed < 2**64:
            raise ConfigError("--seed must be an unsigned 64-bit integer")
        settings.seed = args.seed
    if args.realizations is not None:
        if args.realizations < 1:
            raise ConfigError("--realizations must be >= 1")
        settings.realizations = args.realizations
    if args.mode:
        settings.modes = check_modes(m.strip() for m in args.mode.split(","))
    if getattr(args, "workers", None):
        settings.workers = args.workers
    return settings


def _emit(text, out):
    if out:
        try:
            Path(out).write_text(text)
        except OSError as exc:
            raise OSError(f"cannot write {out!r}: {exc.strerror}") from None
    else:
        sys.stdout.write(text)


def _sweep(args, settings):
    variable, key = _SWEEPS[args.command]
    exp = ExperimentConfig(
        system=settings.system,
        sweep_variable=variable,
        sweep_values=getattr(settings, key),
        realizations=settings.realizations,
        seed=settings.seed,
        modes=settings.modes,
        output_path=args.out,
        geometry=settings.geometry,
        path_loss=settings.path_loss,
        rician_factor=settings.rician_factor,
        solver=settings.solver,
        practical_warm_start=settings.practical_warm_start,
        workers=settings.workers,
    )
    result = run_sweep(exp)
    if args.out:
        write_results(result, args.out)
    else:
        write_table(result, sys.stdout)
    if args.long:
        write_results(result, args.long, format="long")
    return 0


def _single_run(args, settings):
    seed = cell_seed(settings.seed, 0, 0)
    rng = np.random.default_rng(seed)
    sysc = settings.system
    channels = generate_channels(
        settings.geometry, settings.path_loss, settings.rician_factor, sysc.M, sysc.K, sysc.L, rng
    )
    doc = {"seed": seed, "runs": {}}
    ideal = None
    for mode in sorted(settings.modes, key=lambda m: m != IDEAL):
        warm = ()
        if mode == PRACTICAL and settings.practical_warm_start:
            ideal = ideal or run_bcd(channels, sysc, replace(settings.solver, mode=IDEAL))
            warm = [(ideal.beamformer.w, ideal.reflection.psi)]
        res = run_bcd(channels, sysc, replace(settings.solver, mode=mode), warm_starts=warm)
        if mode == IDEAL:
            ideal = res
        doc["runs"][mode] = res.trace.to_dict()
    _emit(json.dumps(doc, indent=1, sort_keys=True) + "\n", args.out)
    return 0


def _validate(args, settings):
    results = run_all()
    lines = [f"{'PASS' if r.passed else 'FAIL'} {r.name}: {r.detail}" for r in results]
    _emit("\n".join(lines) + "\n", args.out)
    return 0 if all(r.passed for r in results) else 1


def main(argv=None):
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        settings = _settings(args)
        if args.command in _SWEEPS:
            return _sweep(args, settings)
        if args.command == "single-run":
            return _single_run(args, settings)
        return _validate(args, settings)
    except (ConfigError, OSError, ValueError) as exc:
        print(f"activeris: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
