"""dB / dBm conversions. Everything inside the package is linear (mW)."""

import numpy as np


def db_to_linear(x_db):
    return 10.0 ** (np.asarray(x_db, dtype=float) / 10.0)


def linear_to_db(x):
    return 10.0 * np.log10(np.asarray(x, dtype=float))


def dbm_to_mw(p_dbm):
    return db_to_linear(p_dbm)


def mw_to_dbm(p_mw):
    """mW -> dBm. Zero power maps to -inf without a warning."""
    p = np.asarray(p_mw, dtype=float)
    with np.errstate(divide="ignore"):
        return 10.0 * np.log10(p)
