"""Quick invariant checks runnable from the command line (``activeris validate``).

Each check returns a :class:`CheckResult`; they are smaller versions of the
property tests in the test suite and need no test dependencies.
"""

from dataclasses import dataclass

import numpy as np

from . import qcqp
from .amplifier import AmplifierModel, linear_gain_db, reflection_gain_db
from .channel import Geometry, PathLossParams, gen_bs_ris_channel, generate_channels, path_loss
from .solver import PRACTICAL, SolverOptions, eval_f1, eval_f2, run_bcd, update_mu, update_rho
from .system import SystemConfig, sum_rate


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str


def _random_state(rng, M=4, K=4, L=16):
    ch = generate_channels(Geometry(), PathLossParams(), 1.0, M, K, L, rng)
    cfg = SystemConfig(M=M, K=K, L=L)
    w = (rng.standard_normal((K, M)) + 1j * rng.standard_normal((K, M))) * np.sqrt(cfg.p_bs / (2 * K * M))
    psi = np.sqrt(100.0 * rng.random(L)) * np.exp(2j * np.pi * rng.random(L))
    return ch, cfg, w, psi


def check_fp_tightness(n=20, seed=0):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n):
        ch, cfg, w, psi = _random_state(rng)
        rho = update_rho(ch, w, psi, cfg)
        mu = update_mu(ch, w, psi, rho, cfg)
        r = sum_rate(ch, w, psi, cfg)
        f1 = eval_f1(ch, w, psi, rho, cfg)
        f2 = eval_f2(ch, w, psi, rho, mu, cfg)
        worst = max(worst, abs(f1 - r), abs(f2 - f1))
    return CheckResult("fp_tightness", worst <= 1e-9, f"max gap {worst:.2e}")


def check_amplifier(model=None):
    model = model or AmplifierModel()
    eps = 1e-9
    left = linear_gain_db(model.p_in_m, model)
    right = float(reflection_gain_db(model.p_in_m + eps, model))
    outside = reflection_gain_db(np.array([model.p_in_min - 1.0, model.p_in_max + 1.0]), model)
    ok = abs(left - right) < 1e-6 and np.all(outside == 0.0)
    ok &= linear_gain_db(0.0, model) == 22.46 and abs(linear_gain_db(10.0, model) - 20.51) < 1e-12
    return CheckResult("amplifier", bool(ok), f"jump at p_in_m {abs(left - right):.1e} dB")


def check_channel_calibration(n=20000, seed=0):
    rng = np.random.default_rng(seed)
    geo = Geometry()
    pl = path_loss(geo.bs_ris_distance(), 3.2)
    draws = np.concatenate(
        [np.abs(gen_bs_ris_channel(geo, PathLossParams(), 1.0, 4, 16, rng)).ravel() ** 2 for _ in range(n // 64)]
    )
    z = abs(draws.mean() - pl) / (draws.std(ddof=1) / np.sqrt(draws.size))
    return CheckResult("channel_calibration", z < 3.0, f"{z:.2f} standard errors from path loss")


def check_qcqp(n=10, seed=0):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n):
        dim = 3
        A = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
        obj = qcqp.QuadraticObjective(rng.standard_normal(dim) + 1j * rng.standard_normal(dim), A @ A.conj().T)
        _, info = qcqp.solve_ball_quadratic(obj, qcqp.ConstraintSet(ball_radius2=1.0))
        worst = max(worst, info.kkt_residual)
        radii2 = rng.uniform(0.1, 2.0, dim)
        _, info = qcqp.solve_disk_quadratic(obj, radii2)
        worst = max(worst, info.kkt_residual)
    return CheckResult("qcqp_kkt", worst < 1e-5, f"max KKT residual {worst:.1e}")


def check_monotone(n=3, seed=0):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n):
        ch = generate_channels(Geometry(), PathLossParams(), 1.0, 4, 4, 16, rng)
        tr = run_bcd(ch, SystemConfig(L=16), SolverOptions(mode=PRACTICAL)).trace
        worst = max(worst, -float(np.min(np.diff(tr.sum_rates), initial=0.0)))
    return CheckResult("bcd_monotone", worst <= 1e-6, f"largest decrease {worst:.1e}")


CHECKS = (check_fp_tightness, check_amplifier, check_channel_calibration, check_qcqp, check_monotone)


def run_all():
    return [check() for check in CHECKS]
