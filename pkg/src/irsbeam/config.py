"""Configuration types and unit conversions shared across the library."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


def db_to_linear(x_db: float) -> float:
    """Power ratio from dB."""
    return 10.0 ** (x_db / 10.0)


def linear_to_db(x: float) -> float:
    """dB from a linear power ratio."""
    return 10.0 * math.log10(x)


def dbm_to_watts(x_dbm: float) -> float:
    """Watts from dBm."""
    return 10.0 ** ((x_dbm - 30.0) / 10.0)


def dbi_to_amplitude(x_dbi: float) -> float:
    """Linear amplitude factor from an antenna element gain in dBi."""
    return 10.0 ** (x_dbi / 20.0)


@dataclass
class SystemConfig:
    """Link-level parameters of the multi-surface downlink.

    ``b`` is the phase-shifter resolution in bits; ``None`` selects
    continuous (infinite-resolution) phases.
    """

    N: int = 32            # BS antennas (ULA)
    K: int = 3             # number of reflecting surfaces
    M_y: int = 10          # surface elements along the horizontal axis
    M_z: int = 5           # surface elements along the vertical axis
    p_dbm: float = 30.0    # max transmit power
    noise_dbm: float = -85.0
    b: int | None = 2
    gain_tx_dbi: float = 9.82
    gain_rx_dbi: float = 0.0
    freeze_shadowing: bool = False

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("N must be >= 1")
        if self.K < 1:
            raise ValueError("K must be >= 1")
        if self.M_y < 1 or self.M_z < 1:
            raise ValueError("M_y and M_z must be >= 1")
        if self.b is not None and (not isinstance(self.b, int) or self.b < 1):
            raise ValueError("b must be >= 1 or None for continuous phases")

    @property
    def M(self) -> int:
        """Reflecting elements per surface."""
        return self.M_y * self.M_z

    @property
    def p_watts(self) -> float:
        return dbm_to_watts(self.p_dbm)

    @property
    def noise_watts(self) -> float:
        return dbm_to_watts(self.noise_dbm)

    @property
    def element_gain_amp(self) -> float:
        """Combined tx*rx element gain as a linear amplitude factor."""
        return dbi_to_amplitude(self.gain_tx_dbi) * dbi_to_amplitude(self.gain_rx_dbi)


@dataclass
class ScenarioGeometry:
    """Deployment layout, top view.

    The BS sits at the origin and the user on the BS axis at distance
    ``d_u``.  The surfaces lie on a parallel line offset by ``d_v``,
    equally spaced from ``d_b`` out to ``d_b + d_span``.
    """

    d_b: float = 11.0
    d_v: float = 1.5
    d_span: float = 50.0
    d_u: float = 41.0

    def __post_init__(self):
        for name in ("d_b", "d_v", "d_span", "d_u"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0")

    def irs_x(self, K: int) -> np.ndarray:
        """x-coordinates of the K surfaces; a single surface sits at d_b."""
        return np.linspace(self.d_b, self.d_b + self.d_span, K)


@dataclass
class PathLossParams:
    """Distance-power law kappa = e + 10*f*log10(d) + xi, all in dB,
    with lognormal shadowing xi ~ N(0, sigma_xi_db^2)."""

    e_intercept: float
    f_exponent: float
    sigma_xi_db: float

    def __post_init__(self):
        if self.sigma_xi_db < 0:
            raise ValueError("sigma_xi_db must be >= 0")

    def kappa_db(self, dist_m, xi_db=0.0):
        """Loss in dB at distance ``dist_m`` for a given shadowing draw."""
        return self.e_intercept + 10.0 * self.f_exponent * np.log10(dist_m) + xi_db


# 28 GHz measurement presets.
LOS_28GHZ = PathLossParams(61.4, 2.0, 5.8)
NLOS_28GHZ = PathLossParams(72.0, 2.92, 8.7)
