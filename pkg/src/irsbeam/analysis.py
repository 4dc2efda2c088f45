"""Closed-form predictions: quantization loss, mean phase factor and the
large-M approximation of the average received power."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import stats


def mean_phase_factor(bits: int | None) -> float:
    """E[e^{j d}] for d uniform on [-pi/2^b, pi/2^b]: (2^b/pi) sin(pi/2^b).

    Returns 1.0 for continuous phases (bits None).
    """
    if bits is None:
        return 1.0
    if bits < 1:
        raise ValueError("bits must be >= 1")
    x = np.pi / (1 << bits)
    return float(np.sin(x) / x)


def eta(bits: int | None) -> float:
    """Quantization loss ratio ((2^b/pi) sin(pi/2^b))^2, in (0, 1]."""
    return mean_phase_factor(bits) ** 2


@dataclass
class ScalingLawParams:
    """Inputs of the average-power approximation."""

    N: int
    M: int
    K: int
    varrho: Sequence[float]  # per-surface Rayleigh std of the user-side links
    rho2: Sequence[float]    # per-surface E[|path gain|^2]
    bits: int | None

    def __post_init__(self):
        if min(self.N, self.M, self.K) < 1:
            raise ValueError("N, M, K must be >= 1")
        if len(self.varrho) != self.K or len(self.rho2) != self.K:
            raise ValueError("varrho and rho2 must have K entries")
        if any(v <= 0 for v in self.varrho) or any(r <= 0 for r in self.rho2):
            raise ValueError("varrho and rho2 entries must be > 0")


def theoretical_gamma(params: ScalingLawParams) -> float:
    """Large-M mean received power at unit transmit power:

        N M sum_k varrho_k^2 rho2_k
        + N M (M-1) sum_k rho2_k (pi varrho_k^2 / 4) q(b)^2

    with q the mean phase factor.  The second (coherent) term dominates
    for large M, giving the quadratic growth.
    """
    q2 = mean_phase_factor(params.bits) ** 2
    varrho2 = np.asarray(params.varrho, dtype=float) ** 2
    rho2 = np.asarray(params.rho2, dtype=float)
    t1 = params.N * params.M * float(np.sum(varrho2 * rho2))
    t2 = (params.N * params.M * (params.M - 1)
          * float(np.sum(rho2 * np.pi * varrho2 / 4.0)) * q2)
    return t1 + t2


@dataclass
class DiscretizationStats:
    """Empirical diagnostics of quantization errors."""

    mean_phasor: complex
    bin_edges: np.ndarray
    counts: np.ndarray
    ks_statistic: float
    ks_pvalue: float


def discretization_error_stats(samples, bits: int,
                               bins: int = 32) -> DiscretizationStats:
    """Complex mean of e^{j d} plus uniformity diagnostics of the error
    samples against U[-pi/2^b, pi/2^b].  Needs at least 1000 samples."""
    samples = np.asarray(samples, dtype=float)
    if samples.size < 1000:
        raise ValueError("need at least 1000 samples")
    if bits < 1:
        raise ValueError("bits must be >= 1")
    half = np.pi / (1 << bits)
    if np.any(np.abs(samples) > half + 1e-12):
        raise ValueError("samples exceed the quantizer error range")
    counts, edges = np.histogram(samples, bins=bins, range=(-half, half))
    ks = stats.kstest(samples, "uniform", args=(-half, 2.0 * half))
    return DiscretizationStats(
        mean_phasor=complex(np.mean(np.exp(1j * samples))),
        bin_edges=edges,
        counts=counts,
        ks_statistic=float(ks.statistic),
        ks_pvalue=float(ks.pvalue),
    )
