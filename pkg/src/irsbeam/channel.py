"""Array responses, measured-model path gains and channel realizations.

All generators are pure functions of (config, geometry, rng): feeding the
same seeded ``numpy.random.Generator`` reproduces realizations bit for bit.
Workers that need independent draws should each own their own stream.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .config import (
    LOS_28GHZ,
    NLOS_28GHZ,
    PathLossParams,
    ScenarioGeometry,
    SystemConfig,
)


# ---------------------------------------------------------------------------
# Array response vectors (half-wavelength spacing, phase e^{+j pi n sin})
# ---------------------------------------------------------------------------

def ula_responses(n: int, phis) -> np.ndarray:
    """Batched ULA steering vectors.

    Args:
        n: element count.
        phis: (L,) azimuths in radians, measured from broadside.

    Returns:
        (L, n) complex matrix of unit-norm rows.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    phis = np.atleast_1d(np.asarray(phis, dtype=float))
    phase = np.pi * np.outer(np.sin(phis), np.arange(n))
    return np.exp(1j * phase) / np.sqrt(n)


def ula_response(n: int, phi: float) -> np.ndarray:
    """Unit-norm ULA steering vector (1/sqrt(n)) * [e^{j pi k sin(phi)}]."""
    return ula_responses(n, phi)[0]


def ura_responses(m_y: int, m_z: int, azimuths, elevations) -> np.ndarray:
    """Batched URA steering vectors: per-row kron of the horizontal factor
    (depends on azimuth and elevation) and the vertical factor (elevation
    only).

    Returns:
        (L, m_y*m_z) complex matrix of unit-norm rows.
    """
    if m_y < 1 or m_z < 1:
        raise ValueError("m_y and m_z must be >= 1")
    az = np.atleast_1d(np.asarray(azimuths, dtype=float))
    el = np.atleast_1d(np.asarray(elevations, dtype=float))
    if az.shape != el.shape:
        raise ValueError("azimuths and elevations must have equal length")
    horiz = np.exp(1j * np.pi * np.outer(np.sin(az) * np.cos(el), np.arange(m_y)))
    vert = np.exp(1j * np.pi * np.outer(np.sin(el), np.arange(m_z)))
    combined = np.einsum("ly,lz->lyz", horiz, vert).reshape(az.size, m_y * m_z)
    return combined / np.sqrt(m_y * m_z)


def ura_response(m_y: int, m_z: int, azimuth: float, elevation: float) -> np.ndarray:
    """Unit-norm URA steering vector, kron(horizontal, vertical)."""
    return ura_responses(m_y, m_z, azimuth, elevation)[0]


# ---------------------------------------------------------------------------
# Path gains
# ---------------------------------------------------------------------------

def _path_gains(params: PathLossParams, dists, rng: np.random.Generator,
                xi_db=None) -> np.ndarray:
    """(L,) complex gains alpha_l ~ CN(0, 10^{-0.1 kappa_l}).

    Draw order is fixed: shadowing first, then the Gaussian pair.
    ``xi_db`` overrides the shadowing draw (scalar or (L,)).
    """
    dists = np.atleast_1d(np.asarray(dists, dtype=float))
    n = dists.size
    if xi_db is None:
        xi_db = rng.normal(0.0, params.sigma_xi_db, size=n)
    kappa = params.kappa_db(dists, xi_db)
    amp = 10.0 ** (-kappa / 20.0)
    z = rng.standard_normal((2, n))
    return amp * (z[0] + 1j * z[1]) / np.sqrt(2.0)


def sample_path_gain(params: PathLossParams, dist_m: float,
                     rng: np.random.Generator, xi_db=None) -> complex:
    """One complex path gain at distance ``dist_m`` (meters)."""
    if dist_m <= 0:
        raise ValueError("dist_m must be > 0")
    return complex(_path_gains(params, dist_m, rng, xi_db)[0])


# ---------------------------------------------------------------------------
# Channel containers
# ---------------------------------------------------------------------------

@dataclass
class RankOneChannel:
    """BS-to-surface link gain * outer(irs_response, bs_response).

    ``gain`` absorbs sqrt(N*M), the path gain and the element gains;
    both response vectors are unit norm.
    """

    gain: complex
    irs_response: np.ndarray  # (M,)
    bs_response: np.ndarray   # (N,)

    def __post_init__(self):
        for name in ("irs_response", "bs_response"):
            v = getattr(self, name)
            if abs(np.linalg.norm(v) - 1.0) > 1e-12:
                raise ValueError(f"{name} must be unit norm")

    def as_matrix(self) -> np.ndarray:
        """(M, N) channel matrix."""
        return self.gain * np.outer(self.irs_response, self.bs_response)


@dataclass
class ChannelRealization:
    """One Monte Carlo draw: K BS-surface links, K surface-user vectors and
    an optional direct BS-user vector (baseline only)."""

    bs_irs: list
    irs_user: list
    direct: np.ndarray | None = None

    def __post_init__(self):
        if len(self.bs_irs) != len(self.irs_user):
            raise ValueError("bs_irs and irs_user must have equal length")

    @property
    def K(self) -> int:
        return len(self.bs_irs)


# ---------------------------------------------------------------------------
# Channel generators
# ---------------------------------------------------------------------------

def gen_irs_user_channel(cfg: SystemConfig, path_count: int, dist_m: float,
                         rng: np.random.Generator,
                         params: PathLossParams = NLOS_28GHZ,
                         xi_db=None) -> np.ndarray:
    """Geometric surface-to-user channel, sqrt(M/L) * sum_l alpha_l a_l.

    Path azimuths are uniform on [-pi/2, pi/2], elevations on [-pi/4, pi/4];
    angles are drawn before gains so the stream layout is stable.
    """
    if path_count < 1:
        raise ValueError("path_count must be >= 1")
    az = rng.uniform(-np.pi / 2, np.pi / 2, size=path_count)
    el = rng.uniform(-np.pi / 4, np.pi / 4, size=path_count)
    gains = _path_gains(params, np.full(path_count, float(dist_m)), rng, xi_db)
    responses = ura_responses(cfg.M_y, cfg.M_z, az, el)
    scale = np.sqrt(cfg.M / path_count) * cfg.element_gain_amp
    return scale * (gains @ responses)


def gen_bs_irs_channel(cfg: SystemConfig, departure_rad: float,
                       arrival_az_rad: float, arrival_el_rad: float,
                       dist_m: float, rng: np.random.Generator,
                       params: PathLossParams = LOS_28GHZ,
                       xi_db=None) -> RankOneChannel:
    """Rank-one BS-to-surface link.

    The BS-side vector is the conjugate of the ULA response at the
    departure angle, so gain * outer(irs, bs) reproduces the geometric
    model a_r(az, el) a_t^H(phi).
    """
    if dist_m <= 0:
        raise ValueError("dist_m must be > 0")
    alpha = sample_path_gain(params, dist_m, rng, xi_db)
    gain = np.sqrt(cfg.N * cfg.M) * alpha * cfg.element_gain_amp
    irs_vec = ura_response(cfg.M_y, cfg.M_z, arrival_az_rad, arrival_el_rad)
    bs_vec = np.conj(ula_response(cfg.N, departure_rad))
    return RankOneChannel(gain, irs_vec, bs_vec)


def gen_rayleigh_irs_user(m: int, varrho: float,
                          rng: np.random.Generator) -> np.ndarray:
    """(m,) i.i.d. CN(0, varrho^2) surface-to-user vector."""
    if varrho <= 0:
        raise ValueError("varrho must be > 0")
    z = rng.standard_normal((2, m))
    return varrho * (z[0] + 1j * z[1]) / np.sqrt(2.0)


def gen_direct_channel(cfg: SystemConfig, path_count: int, dist_m: float,
                       rng: np.random.Generator,
                       params: PathLossParams = NLOS_28GHZ,
                       xi_db=None) -> np.ndarray:
    """Geometric BS-to-user channel for the no-surface baseline,
    sqrt(N/L) * sum_l alpha_l a_t(phi_l); 0 dBi element gains."""
    if path_count < 1:
        raise ValueError("path_count must be >= 1")
    az = rng.uniform(-np.pi / 2, np.pi / 2, size=path_count)
    gains = _path_gains(params, np.full(path_count, float(dist_m)), rng, xi_db)
    responses = ula_responses(cfg.N, az)
    return np.sqrt(cfg.N / path_count) * (gains @ responses)


# ---------------------------------------------------------------------------
# Deterministic geometry-derived link parameters
# ---------------------------------------------------------------------------

class BsIrsGeometry(NamedTuple):
    distances: np.ndarray      # (K,) BS-to-surface ranges
    departure_rad: np.ndarray  # (K,) BS-side angles off the BS-user axis
    arrival_az_rad: np.ndarray
    arrival_el_rad: np.ndarray


def bs_irs_geometry(geom: ScenarioGeometry, K: int) -> BsIrsGeometry:
    """Line-of-sight ray parameters from the BS to each surface."""
    x = geom.irs_x(K)
    dist = np.hypot(x, geom.d_v)
    departure = np.arctan2(geom.d_v, x)
    return BsIrsGeometry(dist, departure, departure.copy(), np.zeros(K))


def irs_user_distances(geom: ScenarioGeometry, K: int) -> np.ndarray:
    """(K,) surface-to-user ranges with the user on the BS axis at d_u."""
    return np.hypot(geom.irs_x(K) - geom.d_u, geom.d_v)


# ---------------------------------------------------------------------------
# Whole-realization draws
# ---------------------------------------------------------------------------

@dataclass
class ShadowingTable:
    """Frozen shadowing draws for placement-level studies."""

    bs_irs: np.ndarray    # (K,)
    irs_user: np.ndarray  # (K, L)


def draw_shadowing_table(cfg: SystemConfig, rng: np.random.Generator,
                         path_count: int = 4) -> ShadowingTable:
    """Draw one shadowing table to share across realizations."""
    return ShadowingTable(
        bs_irs=rng.normal(0.0, LOS_28GHZ.sigma_xi_db, size=cfg.K),
        irs_user=rng.normal(0.0, NLOS_28GHZ.sigma_xi_db, size=(cfg.K, path_count)),
    )


def draw_geometric_realization(cfg: SystemConfig, geom: ScenarioGeometry,
                               rng: np.random.Generator, path_count: int = 4,
                               shadowing: ShadowingTable | None = None) -> ChannelRealization:
    """One full draw with geometric surface-user channels.

    Draw order: all BS-surface links first, then all surface-user vectors.
    """
    links = bs_irs_geometry(geom, cfg.K)
    user_dists = irs_user_distances(geom, cfg.K)
    bs_irs = [
        gen_bs_irs_channel(
            cfg, links.departure_rad[k], links.arrival_az_rad[k],
            links.arrival_el_rad[k], links.distances[k], rng,
            xi_db=None if shadowing is None else shadowing.bs_irs[k],
        )
        for k in range(cfg.K)
    ]
    irs_user = [
        gen_irs_user_channel(
            cfg, path_count, user_dists[k], rng,
            xi_db=None if shadowing is None else shadowing.irs_user[k],
        )
        for k in range(cfg.K)
    ]
    return ChannelRealization(bs_irs, irs_user)


def draw_rayleigh_realization(cfg: SystemConfig, geom: ScenarioGeometry,
                              rng: np.random.Generator,
                              varrho: float = 1.0) -> ChannelRealization:
    """Geometric BS-surface links with CN(0, varrho^2 I) surface-user
    vectors; the setting behind the quantization-loss law."""
    links = bs_irs_geometry(geom, cfg.K)
    bs_irs = [
        gen_bs_irs_channel(
            cfg, links.departure_rad[k], links.arrival_az_rad[k],
            links.arrival_el_rad[k], links.distances[k], rng,
        )
        for k in range(cfg.K)
    ]
    irs_user = [gen_rayleigh_irs_user(cfg.M, varrho, rng) for _ in range(cfg.K)]
    return ChannelRealization(bs_irs, irs_user)
