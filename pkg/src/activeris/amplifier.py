"""Piecewise reflection-amplifier response versus incident power.

Three operating regimes, all in log units (gain in dB, power in dBm):

* ``[p_in_min, p_in_m]``  linear amplification, gain follows the fitted law
  ``linear_slope * p_in + linear_intercept``;
* ``(p_in_m, p_in_max]``  saturation, the output power is pinned at
  ``p_out_sat`` so the gain falls with slope -1 dB/dB;
* anything else        reflect-only, gain exactly 0 dB.
"""

from dataclasses import dataclass

import numpy as np

from .units import mw_to_dbm

REFLECT_LOW = 0
LINEAR = 1
NONLINEAR = 2
REFLECT_HIGH = 3
REGION_NAMES = ("reflect_low", "linear", "nonlinear", "reflect_high")


@dataclass(frozen=True)
class AmplifierModel:
    p_in_min: float = -100.0  # dBm
    p_in_m: float = -80.0  # dBm
    p_in_max: float = -70.0  # dBm
    linear_slope: float = -0.195  # dB per dBm
    linear_intercept: float = 22.46  # dB

    def __post_init__(self):
        if not (self.p_in_min < self.p_in_m < self.p_in_max):
            raise ValueError(
                f"need p_in_min < p_in_m < p_in_max, got "
                f"{self.p_in_min}, {self.p_in_m}, {self.p_in_max}"
            )

    @property
    def p_out_sat(self):
        """Saturated output power (dBm); continuous with the linear law at p_in_m."""
        return self.p_in_m + linear_gain_db(self.p_in_m, self)

    @property
    def nominal_gain_db(self):
        """Linear-law gain at the middle of the amplification interval."""
        return linear_gain_db(0.5 * (self.p_in_min + self.p_in_m), self)


def linear_gain_db(p_in_dbm, model):
    """The fitted linear-regime law, without any region logic."""
    g = model.linear_slope * np.asarray(p_in_dbm, dtype=float) + model.linear_intercept
    return float(g) if g.ndim == 0 else g


def region(p_in_dbm, model):
    p = np.asarray(p_in_dbm, dtype=float)
    out = np.full(p.shape, REFLECT_LOW, dtype=int)
    out[(p >= model.p_in_min) & (p <= model.p_in_m)] = LINEAR
    out[(p > model.p_in_m) & (p <= model.p_in_max)] = NONLINEAR
    out[p > model.p_in_max] = REFLECT_HIGH
    return int(out) if out.ndim == 0 else out


def reflection_gain_db(p_in_dbm, model):
    p = np.asarray(p_in_dbm, dtype=float)
    reg = np.asarray(region(p, model))
    gain = np.zeros(p.shape)
    lin = reg == LINEAR
    sat = reg == NONLINEAR
    gain[lin] = model.linear_slope * p[lin] + model.linear_intercept
    gain[sat] = model.p_out_sat - p[sat]
    return float(gain) if gain.ndim == 0 else gain


def amplification_factor(p_in_mw, model):
    """Linear power gain ``a_l`` for an incident power given in mW."""
    p = np.asarray(p_in_mw, dtype=float)
    if np.any(p < 0):
        raise ValueError("incident power must be >= 0")
    a = 10.0 ** (np.asarray(reflection_gain_db(mw_to_dbm(p), model)) / 10.0)
    return float(a) if a.ndim == 0 else a


def update_amplification(channels, w, model):
    """Per-element gains ``a_l`` from the incident power produced by ``w`` (K x M)."""
    x = channels.h_bs_ris @ np.atleast_2d(w).T  # (L, K)
    p_in = np.sum(np.abs(x) ** 2, axis=1)
    return amplification_factor(p_in, model)


def incident_bounds_for_gain(a, model):
    """Incident-power interval (mW) on which the hardware gain is at least ``a``.

    Only the linear regime is considered: the returned ``(lo, hi)`` is the
    sub-interval of ``[p_in_min, p_in_m]`` where the fitted law reaches ``a``.
    Returns ``None`` when no incident power in that regime provides ``a``.
    For ``a <= 1`` the whole linear interval qualifies provided the fitted law
    is non-negative there.
    """
    lo_dbm, hi_dbm = model.p_in_min, model.p_in_m
    need = 10.0 * np.log10(a) if a > 0 else -np.inf
    s, b = model.linear_slope, model.linear_intercept
    if s < 0:
        hi_dbm = min(hi_dbm, (need - b) / s)
    elif s > 0:
        lo_dbm = max(lo_dbm, (need - b) / s)
    elif b < need:
        return None
    if lo_dbm > hi_dbm:
        return None
    return 10.0 ** (lo_dbm / 10.0), 10.0 ** (hi_dbm / 10.0)
