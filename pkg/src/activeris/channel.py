"""Large-scale path loss and small-scale fading for the BS -> RIS -> user links.

Conventions
-----------
``h_bs_ris`` is the ``L x M`` matrix whose ``l``-th row is the Hermitian of the
channel from the BS array to RIS element ``l``; the signal incident on element
``l`` for a transmit vector ``w`` is ``(h_bs_ris @ w)[l]``.

``h_ris_user`` is ``K x L``; row ``k`` is the channel vector from the RIS to
user ``k`` (the received signal uses its conjugate).
"""

from dataclasses import dataclass, field

import numpy as np

from .units import db_to_linear


@dataclass
class PathLossParams:
    c0_db: float = -30.0
    alpha_bs_ris: float = 3.2
    alpha_ris_user: float = 2.7

    def __post_init__(self):
        if self.alpha_bs_ris < 0 or self.alpha_ris_user < 0:
            raise ValueError("path-loss exponents must be >= 0")
        if not np.isfinite(self.c0_db):
            raise ValueError("c0_db must be finite")


@dataclass
class Geometry:
    """2-D placement of BS, RIS and the user disk (meters).

    ``bs_axis`` / ``ris_axis`` are the directions along which the two uniform
    linear arrays are laid out; angles for the LoS steering vectors are taken
    against these axes.
    """

    bs_position: tuple = (0.0, -40.0)
    ris_position: tuple = (400.0, 15.0)
    user_center: tuple = (400.0, 0.0)
    user_radius: float = 8.0
    user_positions: np.ndarray | None = None
    bs_axis: tuple = (0.0, 1.0)
    ris_axis: tuple = (1.0, 0.0)

    def __post_init__(self):
        if self.user_radius < 0:
            raise ValueError("user_radius must be >= 0")
        if self.user_positions is not None:
            self.user_positions = np.atleast_2d(np.asarray(self.user_positions, dtype=float))

    def draw_users(self, K, rng):
        """Uniform positions over the user disk; returns a new Geometry."""
        r = self.user_radius * np.sqrt(rng.random(K))
        phi = 2.0 * np.pi * rng.random(K)
        pos = np.asarray(self.user_center, dtype=float) + np.column_stack(
            (r * np.cos(phi), r * np.sin(phi))
        )
        return Geometry(
            bs_position=self.bs_position,
            ris_position=self.ris_position,
            user_center=self.user_center,
            user_radius=self.user_radius,
            user_positions=pos,
            bs_axis=self.bs_axis,
            ris_axis=self.ris_axis,
        )

    def bs_ris_distance(self):
        return _distance(self.bs_position, self.ris_position)

    def ris_user_distances(self):
        if self.user_positions is None:
            raise ValueError("user positions have not been drawn")
        d = np.linalg.norm(self.user_positions - np.asarray(self.ris_position, dtype=float), axis=1)
        if np.any(d <= 0):
            raise ValueError("a user coincides with the RIS")
        return d


@dataclass
class ChannelSet:
    h_bs_ris: np.ndarray  # (L, M)
    h_ris_user: np.ndarray  # (K, L)
    rician_factor: float = 1.0
    geometry: Geometry | None = field(default=None, repr=False)

    def __post_init__(self):
        self.h_bs_ris = np.atleast_2d(np.asarray(self.h_bs_ris, dtype=complex))
        self.h_ris_user = np.atleast_2d(np.asarray(self.h_ris_user, dtype=complex))
        if self.h_ris_user.shape[1] != self.h_bs_ris.shape[0]:
            raise ValueError(
                f"RIS size mismatch: h_bs_ris has {self.h_bs_ris.shape[0]} rows, "
                f"h_ris_user has {self.h_ris_user.shape[1]} columns"
            )
        if not (np.all(np.isfinite(self.h_bs_ris)) and np.all(np.isfinite(self.h_ris_user))):
            raise ValueError("channel entries must be finite")

    @property
    def L(self):
        return self.h_bs_ris.shape[0]

    @property
    def M(self):
        return self.h_bs_ris.shape[1]

    @property
    def K(self):
        return self.h_ris_user.shape[0]


def _distance(a, b):
    d = float(np.linalg.norm(np.asarray(a, dtype=float) - np.asarray(b, dtype=float)))
    if d <= 0:
        raise ValueError("coincident positions give zero distance")
    return d


def path_loss(d, alpha, c0_db=-30.0):
    """Linear power gain ``C0 * d**(-alpha)``."""
    d = np.asarray(d, dtype=float)
    if np.any(d <= 0):
        raise ValueError(f"distance must be positive, got {d}")
    out = db_to_linear(c0_db) * d ** (-float(alpha))
    return float(out) if out.ndim == 0 else out


def ula_response(n, sin_angle):
    """Half-wavelength ULA steering vector, unit-modulus entries."""
    return np.exp(1j * np.pi * np.arange(n) * sin_angle)


def _sin_to(axis, src, dst):
    u = np.asarray(dst, dtype=float) - np.asarray(src, dtype=float)
    u /= np.linalg.norm(u)
    ax = np.asarray(axis, dtype=float)
    ax = ax / np.linalg.norm(ax)
    return float(u @ ax)


def los_bs_ris(geometry, M, L):
    """Rank-one LoS component ``a_ris a_bs^H`` (L x M), unit-modulus entries."""
    a_bs = ula_response(M, _sin_to(geometry.bs_axis, geometry.bs_position, geometry.ris_position))
    a_ris = ula_response(L, _sin_to(geometry.ris_axis, geometry.ris_position, geometry.bs_position))
    return np.outer(a_ris, a_bs.conj())


def complex_gaussian(rng, shape):
    """i.i.d. CN(0, 1) samples."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def gen_bs_ris_channel(geometry, path_loss_params, beta, M, L, rng):
    """Rician BS -> RIS channel scaled by the BS-RIS path loss."""
    if beta < 0:
        raise ValueError("Rician factor must be >= 0")
    pl = path_loss(geometry.bs_ris_distance(), path_loss_params.alpha_bs_ris, path_loss_params.c0_db)
    if np.isinf(beta):
        w_los, w_nlos = 1.0, 0.0
    else:
        w_los, w_nlos = np.sqrt(beta / (beta + 1.0)), np.sqrt(1.0 / (beta + 1.0))
    nlos = complex_gaussian(rng, (L, M))
    return np.sqrt(pl) * (w_los * los_bs_ris(geometry, M, L) + w_nlos * nlos)


def gen_ris_user_channels(geometry, path_loss_params, K, L, rng, gains=None):
    """Rayleigh RIS -> user vectors, one row per user.

    ``gains`` overrides the geometric path loss with explicit per-user linear
    values (useful for calibration and degenerate cases).
    """
    if K < 1:
        raise ValueError("need at least one user")
    if gains is None:
        gains = path_loss(
            geometry.ris_user_distances()[:K], path_loss_params.alpha_ris_user, path_loss_params.c0_db
        )
    gains = np.broadcast_to(np.asarray(gains, dtype=float), (K,))
    if np.any(gains < 0):
        raise ValueError("path-loss gains must be >= 0")
    g = complex_gaussian(rng, (K, L))
    return np.sqrt(gains)[:, None] * g


def generate_channels(geometry, path_loss_params, beta, M, K, L, rng):
    """One full realization. Users are drawn from ``rng`` unless supplied."""
    if geometry.user_positions is None or len(geometry.user_positions) < K:
        geometry = geometry.draw_users(K, rng)
    h_bs_ris = gen_bs_ris_channel(geometry, path_loss_params, beta, M, L, rng)
    h_ris_user = gen_ris_user_channels(geometry, path_loss_params, K, L, rng)
    return ChannelSet(h_bs_ris, h_ris_user, rician_factor=beta, geometry=geometry)
