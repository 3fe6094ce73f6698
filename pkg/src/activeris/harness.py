"""Seeded Monte Carlo sweeps over transmit power, user position and RIS size."""

import csv
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .amplifier import REGION_NAMES
from .channel import Geometry, PathLossParams, generate_channels
from .solver import IDEAL, MODES, PRACTICAL, SolverOptions, run_bcd
from .system import SystemConfig
from .units import dbm_to_mw

log = logging.getLogger(__name__)

SWEEP_VARIABLES = ("p_bs_dbm", "user_center_x_m", "num_elements")
SUMMARY_HEADER = (
    "mode",
    "sweep_variable",
    "sweep_value",
    "mean_sum_rate_bps_hz",
    "std_err",
    "n_realizations",
    "n_failed",
)
LONG_HEADER = (
    "mode",
    "sweep_variable",
    "sweep_value",
    "realization",
    "seed",
    "sum_rate_bps_hz",
    "converged",
    "iterations",
    "failure",
)
_U64 = (1 << 64) - 1


def cell_seed(seed, point, realization):
    """Per-cell seed: ``seed`` XOR a hash of ``(point, realization)``."""
    mix = np.random.SeedSequence([point, realization]).generate_state(1, np.uint64)[0]
    return (int(seed) ^ int(mix)) & _U64


@dataclass
class ExperimentConfig:
    system: SystemConfig = field(default_factory=SystemConfig)
    sweep_variable: str = "p_bs_dbm"
    sweep_values: tuple = (6.0, 9.0, 12.0, 15.0, 18.0, 21.0)
    realizations: int = 50
    seed: int = 0
    modes: tuple = MODES
    output_path: str | None = None
    geometry: Geometry = field(default_factory=Geometry)
    path_loss: PathLossParams = field(default_factory=PathLossParams)
    rician_factor: float = 1.0
    solver: SolverOptions = field(default_factory=lambda: SolverOptions(init_strategy="lock_search"))
    practical_warm_start: bool = True  # refine the ideal design in practical mode
    workers: int = 1

    def __post_init__(self):
        if self.sweep_variable not in SWEEP_VARIABLES:
            raise ValueError(f"sweep_variable must be one of {SWEEP_VARIABLES}")
        self.sweep_values = tuple(self.sweep_values)
        if not self.sweep_values:
            raise ValueError("sweep_values must be nonempty")
        diffs = np.diff(np.asarray(self.sweep_values, dtype=float))
        if not (np.all(diffs > 0) or np.all(diffs < 0)):
            raise ValueError("sweep_values must be strictly monotone")
        if self.realizations < 1:
            raise ValueError("realizations must be >= 1")
        self.modes = tuple(self.modes)
        bad = [m for m in self.modes if m not in MODES]
        if bad or not self.modes:
            raise ValueError(f"unknown mode(s) {bad}")
        if not 0 <= int(self.seed) <= _U64:
            raise ValueError("seed must be an unsigned 64-bit integer")

    def point(self, value):
        """System configuration and geometry at one sweep value."""
        system, geometry = self.system, self.geometry
        if self.sweep_variable == "p_bs_dbm":
            system = replace(system, p_bs=float(dbm_to_mw(value)))
        elif self.sweep_variable == "user_center_x_m":
            geometry = replace(geometry, user_center=(float(value), geometry.user_center[1]))
        else:
            system = replace(system, L=int(value))
        return system, geometry


@dataclass
class CellResult:
    """All realizations of one mode at one sweep value."""

    mode: str
    sweep_value: float
    values: list = field(default_factory=list)  # sum-rate per realization, nan if failed
    seeds: list = field(default_factory=list)
    converged: list = field(default_factory=list)
    iterations: list = field(default_factory=list)
    failures: list = field(default_factory=list)  # reason string or ""
    regions: list = field(default_factory=list)  # per realization, fraction per region

    @property
    def ok(self):
        v = np.asarray(self.values, dtype=float)
        return v[np.isfinite(v)]

    @property
    def n_realizations(self):
        return int(self.ok.size)

    @property
    def n_failed(self):
        return sum(1 for f in self.failures if f)

    @property
    def mean(self):
        v = self.ok
        return float(np.mean(v)) if v.size else math.nan

    @property
    def std_err(self):
        v = self.ok
        if v.size == 0:
            return math.nan
        if v.size == 1:
            return 0.0
        return float(np.std(v, ddof=1) / np.sqrt(v.size))

    @property
    def converged_fraction(self):
        flags = [c for c, f in zip(self.converged, self.failures) if not f]
        return float(np.mean(flags)) if flags else math.nan

    def region_fractions(self):
        rows = [r for r in self.regions if r is not None]
        if not rows:
            return {name: math.nan for name in REGION_NAMES}
        arr = np.asarray(rows)
        return dict(zip(REGION_NAMES, arr.mean(axis=0).tolist()))


@dataclass
class SweepResult:
    sweep_variable: str
    sweep_values: tuple
    modes: tuple
    cells: dict = field(default_factory=dict)  # (mode, point index) -> CellResult

    def cell(self, mode, point):
        return self.cells[(mode, point)]

    def means(self, mode):
        return np.array([self.cells[(mode, i)].mean for i in range(len(self.sweep_values))])


def _run_cell(exp, point, realization):
    """One (sweep point, realization): every requested mode on a shared channel draw."""
    value = exp.sweep_values[point]
    seed = cell_seed(exp.seed, point, realization)
    system, geometry = exp.point(value)
    out = {}
    try:
        rng = np.random.default_rng(seed)
        channels = generate_channels(
            geometry, exp.path_loss, exp.rician_factor, system.M, system.K, system.L, rng
        )
    except Exception as exc:  # noqa: BLE001 - recorded per cell
        return seed, {m: (None, f"channel: {exc}") for m in exp.modes}

    order = sorted(exp.modes, key=lambda m: m != IDEAL)  # ideal first: practical may warm-start from it
    ideal = None
    for mode in order:
        try:
            warm = ()
            if mode == PRACTICAL and exp.practical_warm_start:
                if ideal is None:
                    ideal = run_bcd(channels, system, replace(exp.solver, mode=IDEAL))
                warm = [(ideal.beamformer.w, ideal.reflection.psi)]
            res = run_bcd(channels, system, replace(exp.solver, mode=mode), warm_starts=warm)
            if mode == IDEAL:
                ideal = res
            tr = res.trace
            fr = tr.region_fractions()
            out[mode] = (
                (tr.evaluated_sum_rate, tr.converged, tr.iterations, [fr[n] for n in REGION_NAMES]),
                "",
            )
        except Exception as exc:  # noqa: BLE001 - a failed cell must not stop the sweep
            log.warning("cell (%d, %d) mode %s failed: %s", point, realization, mode, exc)
            out[mode] = (None, f"{type(exc).__name__}: {exc}")
    return seed, out


def _run_cell_args(args):
    return _run_cell(*args)


def run_sweep(exp):
    """Run every (sweep point, realization) cell and aggregate per mode."""
    result = SweepResult(exp.sweep_variable, exp.sweep_values, exp.modes)
    for i, v in enumerate(exp.sweep_values):
        for mode in exp.modes:
            result.cells[(mode, i)] = CellResult(mode, v)

    jobs = [(exp, i, r) for i in range(len(exp.sweep_values)) for r in range(exp.realizations)]
    if exp.workers > 1:
        with ProcessPoolExecutor(max_workers=exp.workers) as pool:
            outputs = list(pool.map(_run_cell_args, jobs, chunksize=1))
    else:
        outputs = [_run_cell(*job) for job in jobs]

    # outputs follow job order, so aggregation is independent of scheduling
    for (_, i, _), (seed, per_mode) in zip(jobs, outputs):
        for mode in exp.modes:
            cell = result.cells[(mode, i)]
            payload, failure = per_mode[mode]
            cell.seeds.append(seed)
            cell.failures.append(failure)
            if payload is None:
                cell.values.append(math.nan)
                cell.converged.append(False)
                cell.iterations.append(0)
                cell.regions.append(None)
            else:
                rate, conv, iters, regs = payload
                cell.values.append(float(rate))
                cell.converged.append(bool(conv))
                cell.iterations.append(int(iters))
                cell.regions.append(regs)
    return result


def _fmt(x):
    return format(float(x), ".17g")


def _open_for_write(path):
    path = Path(path)
    try:
        return path.open("w", newline="")
    except OSError as exc:
        raise OSError(f"cannot write results to {str(path)!r}: {exc.strerror}") from None


def write_results(result, path, format="summary"):
    """Write ``result`` as CSV: ``"summary"`` (one row per mode and sweep value)
    or ``"long"`` (one row per realization)."""
    if format not in ("summary", "long"):
        raise ValueError(f"unknown format {format!r}")
    with _open_for_write(path) as fh:
        write_table(result, fh, format)


def write_table(result, fh, format="summary"):
    """Same as :func:`write_results` but into an open text stream."""
    writer = csv.writer(fh, lineterminator="\n")
    if result is None:
        writer.writerow(SUMMARY_HEADER if format == "summary" else LONG_HEADER)
        return
    if format == "summary":
        writer.writerow(SUMMARY_HEADER)
        for mode in result.modes:
            for i, v in enumerate(result.sweep_values):
                c = result.cells[(mode, i)]
                writer.writerow(
                    [mode, result.sweep_variable, _fmt(v), _fmt(c.mean), _fmt(c.std_err),
                     c.n_realizations, c.n_failed]
                )
    else:
        writer.writerow(LONG_HEADER)
        for mode in result.modes:
            for i, v in enumerate(result.sweep_values):
                c = result.cells[(mode, i)]
                for r, (val, seed) in enumerate(zip(c.values, c.seeds)):
                    writer.writerow(
                        [mode, result.sweep_variable, _fmt(v), r, seed, _fmt(val),
                         int(c.converged[r]), c.iterations[r], c.failures[r]]
                    )


def read_summary(path):
    """Parse a summary CSV back into a list of dicts with typed values."""
    with Path(path).open(newline="") as fh:
        rows = list(csv.DictReader(fh))
    for row in rows:
        for key in ("sweep_value", "mean_sum_rate_bps_hz", "std_err"):
            row[key] = float(row[key])
        for key in ("n_realizations", "n_failed"):
            row[key] = int(row[key])
    return rows
