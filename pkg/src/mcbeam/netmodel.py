"""Network geometry, pathloss, noise bookkeeping, and time-varying channels.

Cell layout is a regular polygon of base stations with one single-antenna
user per cell. Transmit power and pathloss are folded into the channel
amplitudes so that the unit-norm beamformer constraint is the only power
mechanism downstream. Fading follows a first-order Gauss-Markov process
whose correlation comes from the Jakes model, J0(2 pi f_D T_s).
"""

import csv
from dataclasses import dataclass

import numpy as np

from .cxla import ContractError

SPEED_OF_LIGHT = 299_792_458.0

STATE_SIZE_LIMIT = 1 << 16


@dataclass(frozen=True)
class NetworkConfig:
    """Simulation parameters; defaults follow the small-cell setup."""

    n_cells: int = 4
    n_tx: int = 3
    cell_radius_m: float = 70.0
    tx_power_dbm: float = 30.0
    noise_density_dbm_hz: float = -174.0
    bandwidth_hz: float = 10e6
    carrier_hz: float = 2e9
    slot_s: float = 1e-3
    user_speed_kmh: float = 5.0
    pathloss_a_db: float = 34.53
    pathloss_b: float = 38.0
    min_bs_user_dist_m: float = 3.0

    def __post_init__(self):
        if not 1 <= self.n_cells <= 8:
            raise ContractError(f"n_cells must be in [1, 8], got {self.n_cells}")
        if not 1 <= self.n_tx <= 8:
            raise ContractError(f"n_tx must be in [1, 8], got {self.n_tx}")
        for name in (
            "cell_radius_m",
            "bandwidth_hz",
            "carrier_hz",
            "slot_s",
            "min_bs_user_dist_m",
        ):
            if getattr(self, name) <= 0:
                raise ContractError(f"{name} must be positive")
        if self.user_speed_kmh < 0:
            raise ContractError("user_speed_kmh must be nonnegative")
        if self.min_bs_user_dist_m >= self.cell_radius_m:
            raise ContractError("min_bs_user_dist_m must be below cell_radius_m")
        if self.state_size > STATE_SIZE_LIMIT:
            raise ContractError(
                f"state size {self.state_size} exceeds {STATE_SIZE_LIMIT}"
            )

    @property
    def n_actions(self):
        return 1 << self.n_cells

    @property
    def state_size(self):
        return self.n_cells * (self.n_cells + (1 << self.n_cells))


@dataclass(frozen=True)
class Geometry:
    """BS and user positions in meters, one of each per cell."""

    bs: np.ndarray  # (n_cells, 2)
    users: np.ndarray  # (n_cells, 2)


@dataclass
class ChannelTensor:
    """Effective channels h[i, j] from BS i to user j at slot t.

    Power and pathloss are folded in: h = s_ij * g with g ~ CN(0, I).
    """

    h: np.ndarray  # (n_cells, n_cells, n_tx) complex128
    t: int

    def row(self, i):
        """Local CSI of BS i: its outgoing channels h[i, :]."""
        return self.h[i]


def pathloss_db(d, a_db=34.53, slope=38.0):
    """Log-distance pathloss a + b*log10(d), d in meters."""
    d = np.asarray(d, dtype=np.float64)
    if np.any(d <= 0):
        raise ContractError("distance must be positive")
    return a_db + slope * np.log10(d)


def generate_geometry(cfg, seed):
    """Place BSs on a regular polygon and one user uniformly per cell disk.

    BSs sit at the vertices of a regular n_cells-gon of circumradius
    2 * cell_radius_m (a single cell sits at the origin). Users are drawn
    uniformly in their own cell disk, re-sampled until they are at least
    min_bs_user_dist_m from every BS.
    """
    rng = np.random.default_rng(seed)
    n = cfg.n_cells
    if n == 1:
        bs = np.zeros((1, 2))
    else:
        ang = 2.0 * np.pi * np.arange(n) / n
        bs = 2.0 * cfg.cell_radius_m * np.column_stack([np.cos(ang), np.sin(ang)])
    users = np.empty((n, 2))
    for j in range(n):
        while True:
            r = cfg.cell_radius_m * np.sqrt(rng.random())
            theta = 2.0 * np.pi * rng.random()
            pos = bs[j] + [r * np.cos(theta), r * np.sin(theta)]
            if np.min(np.linalg.norm(bs - pos, axis=1)) >= cfg.min_bs_user_dist_m:
                users[j] = pos
                break
    return Geometry(bs=bs, users=users)


def channel_amplitudes(cfg, geom):
    """Large-scale amplitudes s[i, j] = sqrt(P_tx * 10^(-PL(d_ij)/10))."""
    d = np.linalg.norm(geom.bs[:, None, :] - geom.users[None, :, :], axis=2)
    pl = pathloss_db(d, cfg.pathloss_a_db, cfg.pathloss_b)
    p_lin_w = 10.0 ** ((cfg.tx_power_dbm - 30.0) / 10.0)
    return np.sqrt(p_lin_w * 10.0 ** (-pl / 10.0))


def _bessel_j0(x, terms=24):
    """J0 by its power series; plenty of terms for the arguments used here."""
    q = x * x / 4.0
    term = 1.0
    total = 1.0
    for k in range(1, terms):
        term *= -q / (k * k)
        total += term
    return total


def doppler_correlation(cfg):
    """Slot-to-slot fading correlation rho = J0(2 pi f_D T_s), in [0, 1].

    f_D is the maximum Doppler shift for the configured user speed and
    carrier.
    """
    f_d = (cfg.user_speed_kmh / 3.6) * cfg.carrier_hz / SPEED_OF_LIGHT
    rho = _bessel_j0(2.0 * np.pi * f_d * cfg.slot_s)
    return float(min(max(rho, 0.0), 1.0))


def _draw_fading(rng, shape):
    return np.sqrt(0.5) * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def init_channels(geom, cfg, seed):
    """Slot-0 channel tensor: h_ij = s_ij * g with g ~ CN(0, I) per antenna."""
    rng = np.random.default_rng(seed)
    amps = channel_amplitudes(cfg, geom)
    g = _draw_fading(rng, (cfg.n_cells, cfg.n_cells, cfg.n_tx))
    return ChannelTensor(h=amps[:, :, None] * g, t=0)


def advance_channels(ch, rho, amps, rng):
    """One Gauss-Markov step: h' = rho*h + sqrt(1-rho^2)*s*g_new."""
    if not 0.0 <= rho <= 1.0:
        raise ContractError(f"rho must be in [0, 1], got {rho}")
    g = _draw_fading(rng, ch.h.shape)
    h = rho * ch.h + np.sqrt(1.0 - rho * rho) * amps[:, :, None] * g
    return ChannelTensor(h=h, t=ch.t + 1)


class ChannelProcess:
    """Stateful channel stream for one episode.

    Owns a single RNG stream, so a (geometry, seed) pair fully determines
    every slot regardless of what the policies do. ``rho`` overrides the
    Jakes-derived correlation (``rho=1.0`` gives a static channel).
    """

    def __init__(self, geom, cfg, seed, rho=None):
        self.cfg = cfg
        self.amps = channel_amplitudes(cfg, geom)
        self.rho = doppler_correlation(cfg) if rho is None else float(rho)
        if not 0.0 <= self.rho <= 1.0:
            raise ContractError(f"rho must be in [0, 1], got {self.rho}")
        self._rng = np.random.default_rng(seed)
        g = _draw_fading(self._rng, (cfg.n_cells, cfg.n_cells, cfg.n_tx))
        self.tensor = ChannelTensor(h=self.amps[:, :, None] * g, t=0)

    def advance(self):
        self.tensor = advance_channels(self.tensor, self.rho, self.amps, self._rng)
        return self.tensor


def noise_power_w(cfg):
    """Receiver noise power in watts over the configured bandwidth."""
    dbm = cfg.noise_density_dbm_hz + 10.0 * np.log10(cfg.bandwidth_hz)
    return float(10.0 ** ((dbm - 30.0) / 10.0))


def export_geometry_csv(geom, path):
    """Dump positions as rows (kind, index, x_m, y_m)."""
    with open(path, "w", newline="") as f:
        wr = csv.writer(f)
        wr.writerow(["kind", "index", "x_m", "y_m"])
        for i, pos in enumerate(geom.bs):
            wr.writerow(["bs", i, repr(float(pos[0])), repr(float(pos[1]))])
        for j, pos in enumerate(geom.users):
            wr.writerow(["user", j, repr(float(pos[0])), repr(float(pos[1]))])


def export_channels_csv(tensors, path):
    """Dump channel tensors as rows (i, j, t, antenna, re, im)."""
    with open(path, "w", newline="") as f:
        wr = csv.writer(f)
        wr.writerow(["i", "j", "t", "antenna", "re", "im"])
        for ch in tensors:
            n_c, _, n_t = ch.h.shape
            for i in range(n_c):
                for j in range(n_c):
                    for a in range(n_t):
                        z = ch.h[i, j, a]
                        wr.writerow(
                            [i, j, ch.t, a, repr(float(z.real)), repr(float(z.imag))]
                        )
