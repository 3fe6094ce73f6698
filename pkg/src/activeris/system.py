"""Downlink signal model through an active RIS: SINR, sum-rate, constraints.

Shapes used throughout: ``w`` is ``(K, M)`` with row ``k`` the beamformer of
user ``k``; ``psi`` is the length-``L`` vector of reflection coefficients
``sqrt(a_l) * exp(1j * theta_l)``.
"""

from dataclasses import dataclass, field

import numpy as np

from .amplifier import AmplifierModel
from .units import dbm_to_mw

CONSTRAINT_RTOL = 1e-8


@dataclass
class SystemConfig:
    M: int = 4
    K: int = 4
    L: int = 64
    p_bs: float = float(dbm_to_mw(10.0))  # mW
    p_elem: float = float(dbm_to_mw(0.1))  # mW, per RIS element
    sigma_v2: float = float(dbm_to_mw(-90.0))  # mW, RIS noise
    sigma2: float = float(dbm_to_mw(-90.0))  # mW, user noise
    amplifier: AmplifierModel = field(default_factory=AmplifierModel)

    def __post_init__(self):
        if min(self.M, self.K, self.L) < 1:
            raise ValueError("M, K and L must all be >= 1")
        for name in ("p_bs", "p_elem", "sigma_v2", "sigma2"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")

    @classmethod
    def from_dbm(cls, p_bs_dbm=10.0, p_elem_dbm=0.1, sigma_v2_dbm=-90.0, sigma2_dbm=-90.0, **kw):
        return cls(
            p_bs=float(dbm_to_mw(p_bs_dbm)),
            p_elem=float(dbm_to_mw(p_elem_dbm)),
            sigma_v2=float(dbm_to_mw(sigma_v2_dbm)),
            sigma2=float(dbm_to_mw(sigma2_dbm)),
            **kw,
        )


@dataclass
class BeamformerState:
    w: np.ndarray  # (K, M)

    @property
    def stacked(self):
        return self.w.reshape(-1)

    @property
    def power(self):
        return float(np.sum(np.abs(self.w) ** 2))


@dataclass
class ReflectionState:
    a: np.ndarray
    theta: np.ndarray
    psi: np.ndarray

    @classmethod
    def from_psi(cls, psi):
        psi = np.asarray(psi, dtype=complex)
        return cls(a=np.abs(psi) ** 2, theta=np.angle(psi), psi=psi)

    @classmethod
    def from_gain_phase(cls, a, theta):
        a = np.asarray(a, dtype=float)
        theta = np.asarray(theta, dtype=float)
        return cls(a=a, theta=theta, psi=np.sqrt(a) * np.exp(1j * theta))


@dataclass
class AuxiliaryState:
    rho: np.ndarray
    mu: np.ndarray


def incident_power(channels, w):
    x = channels.h_bs_ris @ np.atleast_2d(w).T  # (L, K)
    return np.sum(np.abs(x) ** 2, axis=1)


def effective_channels(channels, psi):
    """Rows ``hbar_k^H = h_{r,k}^H diag(psi) H_r`` for all users, shape (K, M)."""
    return (channels.h_ris_user.conj() * np.asarray(psi)) @ channels.h_bs_ris


def effective_channel(channels, psi, k):
    """Row vector ``hbar_k^H`` (length M) so that ``hbar_k^H w = row @ w``."""
    return effective_channels(channels, psi)[k]


def effective_channel_cascade(channels, psi, k):
    """Same quantity written as ``psi^T diag(h_{r,k}^H) H_r`` (cascade form)."""
    cascade = np.diag(channels.h_ris_user[k].conj()) @ channels.h_bs_ris
    return np.asarray(psi) @ cascade


def _signal_terms(channels, w, psi, config):
    """Cross gains ``S[k, i] = hbar_k^H w_i`` and the per-user RIS+user noise."""
    S = effective_channels(channels, psi) @ np.atleast_2d(w).T
    ris_noise = np.sum(np.abs(channels.h_ris_user) ** 2 * np.abs(psi) ** 2, axis=1) * config.sigma_v2
    return S, ris_noise + config.sigma2


def sinr(channels, w, psi, config, k=None):
    S, noise = _signal_terms(channels, w, psi, config)
    P = np.abs(S) ** 2
    sig = np.diag(P)
    gamma = sig / (P.sum(axis=1) - sig + noise)
    return gamma if k is None else float(gamma[k])


def user_rates(channels, w, psi, config):
    return np.log2(1.0 + sinr(channels, w, psi, config))


def sum_rate(channels, w, psi, config):
    return float(np.sum(user_rates(channels, w, psi, config)))


@dataclass
class ConstraintReport:
    bs_power: float  # slack of the BS budget
    element_power: np.ndarray  # per-element output-power slack
    incident_lower: np.ndarray  # p_in - p_in_min
    incident_upper: np.ndarray  # p_in_m - p_in
    tol: float = CONSTRAINT_RTOL
    violations: dict = field(default_factory=dict)

    def feasible(self, interval=True):
        keys = ["bs_power", "element_power"]
        if interval:
            keys += ["incident_lower", "incident_upper"]
        return not any(self.violations[k] for k in keys)


def check_constraints(channels, w, psi, config, tol=CONSTRAINT_RTOL):
    """Slacks of the BS budget, per-element output budget and lock-in interval."""
    amp = config.amplifier
    p_in = incident_power(channels, w)
    p_min, p_m = 10.0 ** (amp.p_in_min / 10.0), 10.0 ** (amp.p_in_m / 10.0)
    bs = config.p_bs - float(np.sum(np.abs(w) ** 2))
    elem = config.p_elem - np.abs(psi) ** 2 * (p_in + config.sigma_v2)
    lower = p_in - p_min
    upper = p_m - p_in
    report = ConstraintReport(bs, elem, lower, upper, tol)
    report.violations = {
        "bs_power": bool(bs < -tol * config.p_bs),
        "element_power": np.asarray(elem < -tol * config.p_elem),
        "incident_lower": np.asarray(lower < -tol * p_min),
        "incident_upper": np.asarray(upper < -tol * p_m),
    }
    report.violations = {k: bool(np.any(v)) for k, v in report.violations.items()}
    return report
