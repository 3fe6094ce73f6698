"""Joint transmit / reflection design by fractional programming + MM + BCD.

One outer iteration updates, in order: the Lagrangian-dual auxiliaries
``rho``, the quadratic-transform auxiliaries ``mu``, the stacked beamformer
``w`` (a convex QCQP after MM linearization of the lock-in lower bound), the
hardware amplification factors, and the reflection vector ``psi`` (a
disk-constrained concave QP).

Three modes share the loop:

``practical_active``
    reflection magnitudes are capped by the gain the amplifier actually
    delivers at the realized incident power, and incident powers of locked
    elements are kept inside the linear interval;
``ideal_active``
    a constant gain cap and no incident-power constraints; the final design is
    re-evaluated with the hardware gain law;
``passive``
    unit-modulus reflection, no amplification.
"""

import logging
from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np

from . import qcqp
from .amplifier import REGION_NAMES, incident_bounds_for_gain, region, update_amplification
from .system import (
    BeamformerState,
    ReflectionState,
    check_constraints,
    effective_channels,
    incident_power,
    sum_rate,
    sinr,
)
from .units import mw_to_dbm

log = logging.getLogger(__name__)

PRACTICAL = "practical_active"
IDEAL = "ideal_active"
PASSIVE = "passive"
MODES = (PRACTICAL, IDEAL, PASSIVE)

LN2 = np.log(2.0)
# Relative safety margin kept inside the lock-in interval so that round-off
# can never push an element across a region boundary.
_EDGE = 1e-7


class InitializationError(RuntimeError):
    pass


@dataclass
class SolverOptions:
    mode: str = PRACTICAL
    outer_tol: float = 1e-4
    max_outer_iters: int = 100
    qcqp_tol: float = 1e-7
    qcqp_max_iter: int = 5000
    disk_tol: float = 1e-9
    disk_max_iter: int = 300
    init_strategy: str = "mrt"
    ideal_gain_db: float | None = None  # None: the amplifier's nominal gain
    reevaluate: bool = True
    probe_iters: int = 3

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}; expected one of {MODES}")
        if not self.outer_tol > 0:
            raise ValueError("outer_tol must be > 0")
        if self.max_outer_iters < 1:
            raise ValueError("max_outer_iters must be >= 1")
        if self.init_strategy not in ("mrt", "lock_search"):
            raise ValueError(f"unknown init_strategy {self.init_strategy!r}")


@dataclass
class IterationTrace:
    mode: str
    sum_rates: list = field(default_factory=list)
    records: list = field(default_factory=list)
    converged: bool = False
    evaluated_sum_rate: float = float("nan")

    @property
    def iterations(self):
        return len(self.sum_rates) - 1

    @property
    def final_sum_rate(self):
        return self.sum_rates[-1]

    def region_fractions(self):
        regs = np.asarray(self.records[-1]["regions"])
        return {name: float(np.mean(regs == i)) for i, name in enumerate(REGION_NAMES)}

    def to_dict(self):
        return {
            "mode": self.mode,
            "converged": self.converged,
            "iterations": self.iterations,
            "sum_rates": [float(r) for r in self.sum_rates],
            "evaluated_sum_rate": float(self.evaluated_sum_rate),
            "records": self.records,
        }


class BCDResult(NamedTuple):
    beamformer: BeamformerState
    reflection: ReflectionState
    trace: IterationTrace


# --------------------------------------------------------------------------
# closed-form auxiliaries and the two surrogate objectives


def _cross_terms(channels, w, psi, config):
    S = effective_channels(channels, psi) @ np.atleast_2d(w).T  # S[k, i] = hbar_k^H w_i
    noise = np.sum(np.abs(channels.h_ris_user) ** 2 * np.abs(psi) ** 2, axis=1) * config.sigma_v2
    total = np.sum(np.abs(S) ** 2, axis=1) + noise + config.sigma2
    return S, total


def update_rho(channels, w, psi, config):
    return sinr(channels, w, psi, config)


def update_mu(channels, w, psi, rho, config):
    S, total = _cross_terms(channels, w, psi, config)
    return np.sqrt(1.0 + rho) * np.diag(S) / total


def eval_f1(channels, w, psi, rho, config):
    """Lagrangian-dual surrogate, in bits. Equals the sum-rate at ``rho = sinr``."""
    S, total = _cross_terms(channels, w, psi, config)
    frac = (1.0 + rho) * np.abs(np.diag(S)) ** 2 / total
    return float(np.sum(np.log1p(rho) - rho + frac) / LN2)


def eval_f2(channels, w, psi, rho, mu, config):
    """Quadratic-transform surrogate, in bits. Equals ``eval_f1`` at the optimal ``mu``."""
    S, total = _cross_terms(channels, w, psi, config)
    lin = 2.0 * np.sqrt(1.0 + rho) * np.real(np.conj(mu) * np.diag(S))
    return float(np.sum(np.log1p(rho) - rho + lin - np.abs(mu) ** 2 * total) / LN2)


# --------------------------------------------------------------------------
# subproblems


def _element_grams(channels, K):
    """``G_l = I_K kron h_l h_l^H`` for every element, shape (L, MK, MK)."""
    H = channels.h_bs_ris
    outer = np.einsum("li,lj->lij", H.conj(), H)  # h_l h_l^H with h_l^H = H[l]
    eye = np.eye(K)
    return np.einsum("ab,lij->laibj", eye, outer).reshape(H.shape[0], K * H.shape[1], K * H.shape[1])


def assemble_w_subproblem(
    channels, psi, rho, mu, config, w_t, mode=PRACTICAL, locked=None, gain_consistent=False
):
    """Objective and constraints of the stacked-beamformer QCQP.

    ``locked`` marks the elements whose lock-in lower bound is enforced (via
    the MM minorant anchored at ``w_t``); by default every element that the
    anchor already drives into the linear interval. With ``gain_consistent``
    the incident power of each amplifying element is further limited so the
    hardware gain stays at least ``|psi_l|^2``.
    """
    K, M = channels.K, channels.M
    w_t = np.atleast_2d(w_t)
    if w_t.shape != (K, M) or np.asarray(psi).shape != (channels.L,):
        raise ValueError("dimension mismatch between channels, psi and w_t")
    hbar = effective_channels(channels, psi).conj()  # column vectors hbar_k as rows
    lam = (2.0 * np.sqrt(1.0 + rho) * mu)[:, None] * hbar
    core = np.einsum("k,ki,kj->ij", np.abs(mu) ** 2, hbar, hbar.conj())
    E = np.kron(np.eye(K), core)
    obj = qcqp.QuadraticObjective(lam.reshape(-1), 0.5 * (E + E.conj().T))

    amp = config.amplifier
    p_min = 10.0 ** (amp.p_in_min / 10.0) * (1.0 + _EDGE)
    p_m = 10.0 ** (amp.p_in_m / 10.0) * (1.0 - _EDGE)
    mag2 = np.abs(psi) ** 2
    p_t = incident_power(channels, w_t)
    if locked is None:
        locked = (p_t >= p_min) if mode == PRACTICAL else np.zeros(channels.L, dtype=bool)

    grams = _element_grams(channels, K)
    x_t = w_t.reshape(-1)
    cons = qcqp.ConstraintSet(ball_radius2=config.p_bs)
    for l in range(channels.L):
        upper = np.inf
        lower = None
        if mag2[l] > 0:
            upper = config.p_elem / mag2[l] - config.sigma_v2
        if mode == PRACTICAL:
            upper = min(upper, p_m)
            if locked[l]:
                lower = p_min
            if gain_consistent and mag2[l] > 1.0:
                bounds = incident_bounds_for_gain(mag2[l], amp)
                if bounds is not None:
                    lo, hi = bounds
                    upper = min(upper, hi * (1.0 - _EDGE))
                    lower = max(lower or 0.0, lo * (1.0 + _EDGE))
        if np.isfinite(upper):
            cons.quad_upper.append((grams[l], upper))
        if lower is not None:
            mm = qcqp.mm_linearize(grams[l], x_t)
            cons.affine_lower.append((mm.g, mm.offset, lower))
    return obj, cons


def assemble_psi_subproblem(channels, w, rho, mu, config, a_hw):
    """Objective in ``psi`` and per-element squared radii.

    With ``d_{k,i} = diag(h_{r,k}^H) H_r w_i`` the effective gain is
    ``hbar_k^H w_i = psi^T d_{k,i}``; expanding the quadratic-transform
    surrogate in ``psi`` gives ``lin = 2 sum_k sqrt(1+rho_k) mu_k conj(d_kk)``
    and ``quad = sum_k |mu_k|^2 (sum_i conj(d_ki) d_ki^T + sigma_v^2 diag|h_{r,k}|^2)``.
    The squared radius of element ``l`` is ``min(a_hw[l], P_l / (p_in,l + sigma_v^2))``.
    """
    w = np.atleast_2d(w)
    X = channels.h_bs_ris @ w.T  # (L, K): incident signal per element and user
    hc = channels.h_ris_user.conj()  # (K, L)
    D = hc[:, None, :] * X.T[None, :, :]  # D[k, i] = d_{k,i}
    Dc = D.conj()
    weights = np.sqrt(1.0 + rho) * mu
    lin = 2.0 * np.einsum("k,kl->l", weights, Dc[np.arange(channels.K), np.arange(channels.K)])
    mu2 = np.abs(mu) ** 2
    quad = np.einsum("k,kil,kim->lm", mu2, Dc, D)
    quad += np.diag(config.sigma_v2 * np.einsum("k,kl->l", mu2, np.abs(channels.h_ris_user) ** 2))
    quad = 0.5 * (quad + quad.conj().T)
    p_in = np.sum(np.abs(X) ** 2, axis=1)
    budget = config.p_elem / (p_in + config.sigma_v2)
    radii2 = np.minimum(np.asarray(a_hw, dtype=float), budget)
    return qcqp.QuadraticObjective(lin, quad), radii2


# --------------------------------------------------------------------------
# initialization


def _mrt(channels, config, psi):
    hbar = effective_channels(channels, psi).conj()
    peak = np.max(np.abs(hbar), axis=1, keepdims=True)
    hbar = np.divide(hbar, peak, out=np.zeros_like(hbar), where=peak > 0)  # guards the norm against overflow
    norms = np.linalg.norm(hbar, axis=1)
    w = np.zeros((channels.K, channels.M), dtype=complex)
    ok = norms > 0
    w[ok] = hbar[ok] / norms[ok, None]
    w[~ok] = 1.0 / np.sqrt(channels.M)
    return w * np.sqrt(config.p_bs / channels.K)


def _interval_scale(p_in, p_m):
    """Largest power fraction ``c <= 1`` with ``c * p_in <= p_m`` everywhere.

    The upper end of the lock-in interval is a hard constraint on every
    element; the lower end only binds elements that reach it, so the largest
    admissible scaling also locks the most elements.
    """
    peak = float(np.max(p_in, initial=0.0))
    return 1.0 if peak <= p_m else p_m / peak


def _principal_beam(channels, config):
    _, _, vh = np.linalg.svd(channels.h_bs_ris)
    v = vh[0].conj()
    K = channels.K
    phases = np.exp(2j * np.pi * np.arange(K) / K)
    return np.sqrt(config.p_bs / K) * phases[:, None] * v[None, :]


def hardware_caps(channels, w, config, mode, options):
    """Squared reflection radii for the mode, from the incident power of ``w``."""
    p_in = incident_power(channels, w)
    budget = config.p_elem / (p_in + config.sigma_v2)
    if mode == PRACTICAL:
        a = update_amplification(channels, w, config.amplifier)
    elif mode == IDEAL:
        gain_db = options.ideal_gain_db
        if gain_db is None:
            gain_db = config.amplifier.nominal_gain_db
        a = np.full(channels.L, 10.0 ** (gain_db / 10.0))
    else:
        return np.ones(channels.L)
    return np.minimum(a, budget)


def _lock_search(channels, config, w0, rounds=4, max_drop_steps=6):
    """Beamformer driving as many elements as it can into the lock-in interval.

    Starting from ``w0`` the set of target elements is every element; for the
    current set the max-min normalized incident power is raised by repeated
    MM-linearized feasibility solves. Whenever the set turns out infeasible
    the weakest quarter of it is dropped.
    """
    amp = config.amplifier
    p_min = 10.0 ** (amp.p_in_min / 10.0) * (1.0 + 2 * _EDGE)
    p_m = 10.0 ** (amp.p_in_m / 10.0) * (1.0 - 2 * _EDGE)
    grams = _element_grams(channels, channels.K)
    zero = qcqp.QuadraticObjective(np.zeros(grams.shape[1]), np.zeros(grams.shape[1:]))
    w = w0.reshape(-1).copy()
    target = np.ones(channels.L, dtype=bool)
    for _ in range(max_drop_steps):
        for _ in range(rounds):
            cons = qcqp.ConstraintSet(ball_radius2=config.p_bs)
            for l in range(channels.L):
                cons.quad_upper.append((grams[l], p_m))
                if target[l]:
                    mm = qcqp.mm_linearize(grams[l], w)
                    cons.affine_lower.append((mm.g, mm.offset, p_min))
            x, info = qcqp.solve_ball_quadratic(zero, cons, x0=w)
            if np.all(cons.violations(x) <= 0) or info.status != qcqp.INFEASIBLE:
                return x.reshape(w0.shape)
            w = x
        p = incident_power(channels, w.reshape(w0.shape))
        idx = np.flatnonzero(target)
        n_drop = max(1, idx.size // 4)
        target[idx[np.argsort(p[idx])[:n_drop]]] = False
        if not target.any():
            break
    return w.reshape(w0.shape)


def _init_candidates(channels, config, options):
    ones = np.ones(channels.L, dtype=complex)
    cands = [_mrt(channels, config, ones)]
    if options.mode == PRACTICAL and options.init_strategy == "lock_search":
        beam = _principal_beam(channels, config)
        cands.append(beam)
        cands.append(_lock_search(channels, config, beam))
    return cands


def _prepare(channels, config, options, w, psi=None):
    """Admit a starting beamformer: scale it under the lock-in ceiling in
    practical mode and put ``psi`` (phases kept, zero by default) on the caps."""
    w = np.array(w, dtype=complex).reshape(channels.K, channels.M)
    p_in = incident_power(channels, w)
    if not np.all(np.isfinite(p_in)):
        raise InitializationError("incident_upper: incident power is not finite at the starting point")
    if options.mode == PRACTICAL:
        p_m = 10.0 ** (config.amplifier.p_in_m / 10.0)
        w = w * np.sqrt(_interval_scale(p_in, p_m * (1.0 - 2 * _EDGE)))
        if not np.all(incident_power(channels, w) <= p_m):
            raise InitializationError("incident_upper: no scaling keeps every element below p_in_m")
    phase = np.zeros(channels.L) if psi is None else np.angle(psi)
    psi = np.sqrt(hardware_caps(channels, w, config, options.mode, options)) * np.exp(1j * phase)
    return w, psi


def initialize(channels, config, options):
    """Starting ``(w, psi)`` candidates.

    The baseline is MRT toward the zero-phase cascade with an equal power
    split, scaled below the lock-in ceiling in practical mode. With
    ``init_strategy="lock_search"`` (practical mode) a principal-beam and a
    lock-maximizing beamformer are added.
    """
    return [_prepare(channels, config, options, w) for w in _init_candidates(channels, config, options)]


# --------------------------------------------------------------------------
# main loop


def realized_reflection(channels, w, psi, config):
    """Reflection the hardware actually applies: designed phases, hardware gain
    (capped by the per-element power budget)."""
    p_in = incident_power(channels, w)
    a = update_amplification(channels, w, config.amplifier)
    budget = config.p_elem / (p_in + config.sigma_v2)
    return np.sqrt(np.minimum(a, budget)) * np.exp(1j * np.angle(psi))


def _w_step(channels, psi, rho, mu, config, w, options, gain_consistent):
    obj, cons = assemble_w_subproblem(
        channels, psi, rho, mu, config, w, mode=options.mode, gain_consistent=gain_consistent
    )
    x_t = w.reshape(-1)
    x, info = qcqp.solve_ball_quadratic(
        obj, cons, x0=x_t, tol=options.qcqp_tol, max_iter=options.qcqp_max_iter
    )
    if info.status not in (qcqp.OPTIMAL, qcqp.MAX_ITER) or obj(x) < obj(x_t):
        return w, info.status, False
    viol = cons.violations(x)
    if np.any(viol > 0):
        return w, info.status, False
    return x.reshape(w.shape), info.status, True


def _psi_step(channels, w, rho, mu, config, psi, radii2, options):
    obj, _ = assemble_psi_subproblem(channels, w, rho, mu, config, radii2)
    start = qcqp.project_disks(psi, np.sqrt(radii2))
    new, info = qcqp.solve_disk_quadratic(
        obj, radii2, x0=start, tol=options.disk_tol, max_iter=options.disk_max_iter
    )
    if options.mode == PASSIVE:
        phase = np.where(np.abs(new) > 0, np.angle(new), np.angle(start))
        unit = np.exp(1j * phase)
        if obj(unit) >= obj(start):
            new = unit
        else:
            new = start
    elif obj(new) < obj(start):
        new = start
    return new


def _record(channels, w, psi, config, mode, rate, step):
    p_in = incident_power(channels, w)
    rep = check_constraints(channels, w, psi, config)
    return {
        "sum_rate": float(rate),
        "w_step": step,
        "incident_power_dbm": [float(v) for v in mw_to_dbm(p_in)],
        "regions": [int(r) for r in np.atleast_1d(region(mw_to_dbm(p_in), config.amplifier))],
        "slack_bs_power": float(rep.bs_power),
        "min_slack_element_power": float(np.min(rep.element_power)),
        "min_slack_incident_lower": float(np.min(rep.incident_lower)),
        "min_slack_incident_upper": float(np.min(rep.incident_upper)),
    }


def _outer_step(channels, config, options, w, psi, rate):
    """One BCD pass; never returns a lower sum-rate than ``rate``."""
    mode = options.mode
    rho = update_rho(channels, w, psi, config)
    mu = update_mu(channels, w, psi, rho, config)
    attempts = (False, True) if mode == PRACTICAL else (False,)
    for gain_consistent in attempts:
        w_new, status, moved = _w_step(channels, psi, rho, mu, config, w, options, gain_consistent)
        radii2 = hardware_caps(channels, w_new, config, mode, options)
        psi_new = _psi_step(channels, w_new, rho, mu, config, psi, radii2, options)
        new_rate = sum_rate(channels, w_new, psi_new, config)
        step = ("consistent" if gain_consistent else "direct") if moved else f"kept:{status}"
        if new_rate >= rate:
            return w_new, psi_new, new_rate, step
    # even the gain-consistent step can only lose to round-off here
    return w, psi, rate, "rejected"


def run_bcd(channels, config, options=None, rng=None, warm_starts=()):
    """Run the alternating design until the relative sum-rate change drops below
    ``options.outer_tol``. ``rng`` is accepted for API symmetry; the loop itself
    is deterministic.

    ``warm_starts`` holds extra ``(w, psi)`` starting points; ``psi`` is
    projected onto the mode's reflection caps. With several starting points
    each one gets ``options.probe_iters`` passes and only the best continues.
    """
    options = options or SolverOptions()
    mode = options.mode
    inits = list(initialize(channels, config, options))
    inits += [_prepare(channels, config, options, w, psi) for w, psi in warm_starts]
    starts = []
    for w, psi in inits:
        rate = sum_rate(channels, w, psi, config)
        trace = IterationTrace(mode=mode)
        trace.sum_rates.append(rate)
        trace.records.append(_record(channels, w, psi, config, mode, rate, "init"))
        starts.append([w, psi, rate, trace])

    def advance(state):
        w, psi, rate, trace = state
        w, psi, new_rate, step = _outer_step(channels, config, options, w, psi, rate)
        change = abs(new_rate - rate) / max(abs(rate), 1e-12)
        trace.sum_rates.append(new_rate)
        trace.records.append(_record(channels, w, psi, config, mode, new_rate, step))
        state[:3] = w, psi, new_rate
        trace.converged = change < options.outer_tol
        return trace.converged

    if len(starts) > 1:
        for state in starts:
            for _ in range(min(options.probe_iters, options.max_outer_iters)):
                if advance(state):
                    break
    state = max(starts, key=lambda s: s[2])
    trace = state[3]
    while not trace.converged and trace.iterations < options.max_outer_iters:
        advance(state)

    w, psi, rate, trace = state
    if mode == IDEAL and options.reevaluate:
        trace.evaluated_sum_rate = sum_rate(channels, w, realized_reflection(channels, w, psi, config), config)
    else:
        trace.evaluated_sum_rate = rate
    return BCDResult(BeamformerState(w), ReflectionState.from_psi(psi), trace)


def run_passive_mode(channels, config, options=None):
    return run_bcd(channels, config, replace(options or SolverOptions(), mode=PASSIVE))


def run_ideal_mode(channels, config, options=None):
    return run_bcd(channels, config, replace(options or SolverOptions(), mode=IDEAL))


def run_practical_mode(channels, config, options=None):
    return run_bcd(channels, config, replace(options or SolverOptions(), mode=PRACTICAL))
