"""Closed-form joint transmit/reflect beamforming and oracle solvers.

The joint solver aligns each surface's phases to its effective element
gains, quantizes them to the b-bit alphabet under circular distance, keeps
a zero common phase per surface, and applies maximum-ratio transmission to
the exact composite channel.  Two oracles audit it: exhaustive enumeration
of the discrete configurations (guarded) and a certified upper bound on
the relaxed unit-modulus program.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelRealization, RankOneChannel
from .config import SystemConfig

TWO_PI = 2.0 * np.pi

# Enumeration guard for the exhaustive oracle.
BRUTE_FORCE_LIMIT = 2 ** 20
_CHUNK = 1 << 15

# Grid density per free dimension for the certified bound; 1 degree up to
# three surfaces, coarser (still certified via the Lipschitz slack) beyond.
_GRID_POINTS = {2: 360, 3: 360, 4: 64, 5: 28}


@dataclass
class PhaseConfig:
    """Per-surface phase settings.

    ``values`` holds integer indices into the 2^bits uniform alphabet on
    [0, 2pi) when ``bits`` is finite, raw radians in [0, 2pi) when
    ``bits`` is None.
    """

    bits: int | None
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values)
        if self.bits is None:
            if np.any(self.values < 0) or np.any(self.values >= TWO_PI):
                raise ValueError("continuous phases must lie in [0, 2pi)")
        else:
            if self.bits < 1:
                raise ValueError("bits must be >= 1")
            if not np.issubdtype(self.values.dtype, np.integer):
                raise ValueError("quantized phases must be integer indices")
            if np.any(self.values < 0) or np.any(self.values >= (1 << self.bits)):
                raise ValueError("phase indices out of range")

    def radians(self) -> np.ndarray:
        if self.bits is None:
            return self.values
        return self.values * (TWO_PI / (1 << self.bits))

    def phasors(self) -> np.ndarray:
        """Unit-modulus entries e^{j theta_m}."""
        return np.exp(1j * self.radians())


@dataclass
class BeamformingSolution:
    w: np.ndarray         # (N,) precoder, ||w||^2 = p
    phases: list          # K PhaseConfig entries
    gamma: float          # achieved receive power, watts
    irs_gains: np.ndarray  # (K,) per-surface aligned gains z_k = ||g_k||_1


def effective_gain_vector(ch: RankOneChannel, h_r: np.ndarray) -> np.ndarray:
    """Per-element gains g = gain * (conj(h_r) o irs_response)."""
    h_r = np.asarray(h_r)
    if h_r.shape != ch.irs_response.shape:
        raise ValueError("h_r dimension does not match the surface response")
    return ch.gain * (np.conj(h_r) * ch.irs_response)


def optimal_continuous_phases(g: np.ndarray) -> PhaseConfig:
    """Phases -arg(g_m) that turn the aligned sum into ||g||_1.

    Zero entries get phase 0 by convention; they contribute nothing.
    """
    theta = np.mod(-np.angle(np.asarray(g)), TWO_PI)
    theta[theta >= TWO_PI] = 0.0  # mod can round up to 2pi for tiny negatives
    return PhaseConfig(None, theta)


def quantize_phases(theta_star, bits: int) -> PhaseConfig:
    """Round each phase to the nearest alphabet point under circular
    distance; exact midpoints resolve to the smaller index."""
    if bits < 1:
        raise ValueError("bits must be >= 1")
    if isinstance(theta_star, PhaseConfig):
        if theta_star.bits is not None:
            raise ValueError("expected continuous phases")
        theta = theta_star.values
    else:
        theta = np.mod(np.asarray(theta_star, dtype=float), TWO_PI)
    levels = 1 << bits
    step = TWO_PI / levels
    lower = np.floor(theta / step).astype(np.int64) % levels
    upper = (lower + 1) % levels

    def circ_dist(idx):
        d = np.abs(theta - idx * step)
        return np.minimum(d, TWO_PI - d)

    d_lo, d_hi = circ_dist(lower), circ_dist(upper)
    idx = np.where(d_lo < d_hi, lower,
                   np.where(d_hi < d_lo, upper, np.minimum(lower, upper)))
    return PhaseConfig(bits, idx)


def aligned_irs_gain(g: np.ndarray, bits: int | None) -> complex:
    """Scalar gain theta^T g after alignment and (optional) quantization;
    equals ||g||_1 when bits is None."""
    cont = optimal_continuous_phases(g)
    cfgd = cont if bits is None else quantize_phases(cont, bits)
    return complex(cfgd.phasors() @ np.asarray(g))


def assemble_phi(z: np.ndarray, bs_rows: np.ndarray) -> np.ndarray:
    """Row-scale the stacked BS-side rows: row k of the result is z_k * b_k^T."""
    z = np.asarray(z, dtype=float)
    bs_rows = np.asarray(bs_rows)
    if np.any(z < 0):
        raise ValueError("z entries must be >= 0")
    if bs_rows.ndim != 2 or bs_rows.shape[0] != z.size:
        raise ValueError("bs_rows must be (K, N) with one row per z entry")
    return z[:, None] * bs_rows


def mrt_precoder(v: np.ndarray, phi: np.ndarray, p: float) -> np.ndarray:
    """Maximum-ratio transmission against the row v^H Phi: sqrt(p) times the
    normalized conjugate, so ||w||^2 = p and |v^H Phi w|^2 = p ||v^H Phi||^2."""
    v = np.asarray(v)
    if np.any(np.abs(np.abs(v) - 1.0) > 1e-9):
        raise ValueError("v must be unit-modulus")
    row = np.conj(v) @ np.asarray(phi)
    return _mrt_from_row(row, p)


def _mrt_from_row(row: np.ndarray, p: float) -> np.ndarray:
    norm = np.linalg.norm(row)
    if norm == 0.0:
        raise ValueError("degenerate channel: zero effective row")
    return np.sqrt(p) * np.conj(row) / norm


def composite_row(realization: ChannelRealization, phases) -> np.ndarray:
    """Exact composite channel row sum_k (theta_k^T g_k) b_k^T, an (N,)
    vector, for fixed per-surface phases."""
    if len(phases) != realization.K:
        raise ValueError("one PhaseConfig per surface required")
    row = None
    for ch, h_r, cfgd in zip(realization.bs_irs, realization.irs_user, phases):
        g = effective_gain_vector(ch, h_r)
        s = cfgd.phasors() @ g
        term = s * ch.bs_response
        row = term if row is None else row + term
    return row


def receive_power(realization: ChannelRealization, w: np.ndarray, phases) -> float:
    """|sum_k h_k^H Theta_k G_k w|^2 evaluated with the full matrices G_k."""
    if len(phases) != realization.K:
        raise ValueError("one PhaseConfig per surface required")
    w = np.asarray(w)
    total = 0.0 + 0.0j
    for ch, h_r, cfgd in zip(realization.bs_irs, realization.irs_user, phases):
        if w.shape != ch.bs_response.shape:
            raise ValueError("w dimension does not match the BS response")
        if np.asarray(h_r).shape != ch.irs_response.shape:
            raise ValueError("h_r dimension does not match the surface response")
        g_mat = ch.as_matrix()
        row = (np.conj(h_r) * cfgd.phasors()) @ g_mat
        total += row @ w
    return float(np.abs(total) ** 2)


def solve_joint(realization: ChannelRealization, cfg: SystemConfig) -> BeamformingSolution:
    """Closed-form near-optimal solution of the joint design.

    Per surface: align phases to -arg(g_k), quantize to b bits (skipped for
    continuous), keep common phase zero.  The precoder is MRT against the
    exact composite channel rather than the orthogonality-approximated
    row form, which is never worse and always available.
    """
    phases = []
    zs = np.empty(realization.K)
    row = None
    for k, (ch, h_r) in enumerate(zip(realization.bs_irs, realization.irs_user)):
        g = effective_gain_vector(ch, h_r)
        cont = optimal_continuous_phases(g)
        cfgd = cont if cfg.b is None else quantize_phases(cont, cfg.b)
        phases.append(cfgd)
        zs[k] = np.abs(g).sum()
        term = (cfgd.phasors() @ g) * ch.bs_response
        row = term if row is None else row + term
    w = _mrt_from_row(row, cfg.p_watts)
    gamma = receive_power(realization, w, phases)
    return BeamformingSolution(w=w, phases=phases, gamma=gamma, irs_gains=zs)


# ---------------------------------------------------------------------------
# Oracles
# ---------------------------------------------------------------------------

def _enumerate_aligned_gains(g: np.ndarray, bits: int) -> np.ndarray:
    """theta^T g over all 2^(bits*M) phase vectors, lexicographic order with
    the first element's index most significant."""
    alphabet = np.exp(1j * TWO_PI * np.arange(1 << bits) / (1 << bits))
    s = np.zeros(1, dtype=complex)
    for g_m in np.asarray(g):
        s = (s[:, None] + alphabet[None, :] * g_m).ravel()
    return s


def brute_force_discrete(realization: ChannelRealization,
                         cfg: SystemConfig) -> BeamformingSolution:
    """Global optimum over all discrete phase configurations.

    Enumerates every configuration, applies exact MRT to each composite
    channel, and returns the argmax (first hit wins on ties, so the result
    is independent of chunking).  Guarded to (2^b)^(K*M) <= 2^20 states.
    """
    if cfg.b is None:
        raise ValueError("brute force requires finite phase resolution")
    K, M, b = realization.K, len(realization.irs_user[0]), cfg.b
    total = (1 << b) ** (K * M)
    if total > BRUTE_FORCE_LIMIT:
        raise ValueError(
            f"search space {total} exceeds guard {BRUTE_FORCE_LIMIT}")

    gains = [effective_gain_vector(ch, h_r)
             for ch, h_r in zip(realization.bs_irs, realization.irs_user)]
    per_irs = [_enumerate_aligned_gains(g, b) for g in gains]
    sizes = np.array([s.size for s in per_irs], dtype=np.int64)
    strides = np.ones(K, dtype=np.int64)
    for k in range(K - 2, -1, -1):
        strides[k] = strides[k + 1] * sizes[k + 1]

    rows = np.stack([ch.bs_response for ch in realization.bs_irs])
    gram = rows @ rows.conj().T  # C_ij = row_i . conj(row_j)

    best_val, best_flat = -1.0, 0
    for start in range(0, total, _CHUNK):
        flat = np.arange(start, min(start + _CHUNK, total), dtype=np.int64)
        s_sel = np.stack([per_irs[k][(flat // strides[k]) % sizes[k]]
                          for k in range(K)])
        vals = np.einsum("ij,ib,jb->b", gram, s_sel, s_sel.conj()).real
        i = int(np.argmax(vals))
        if vals[i] > best_val:
            best_val, best_flat = float(vals[i]), int(flat[i])

    phases = []
    for k in range(K):
        c_k = (best_flat // int(strides[k])) % int(sizes[k])
        digits = np.empty(M, dtype=np.int64)
        for m in range(M - 1, -1, -1):
            digits[m] = c_k % (1 << b)
            c_k //= 1 << b
        phases.append(PhaseConfig(b, digits))

    row = composite_row(realization, phases)
    w = _mrt_from_row(row, cfg.p_watts)
    gamma = receive_power(realization, w, phases)
    zs = np.array([np.abs(g).sum() for g in gains])
    return BeamformingSolution(w=w, phases=phases, gamma=gamma, irs_gains=zs)


def _grid_upper_bound(a: np.ndarray) -> float:
    """Certified upper bound on max |v_k|=1 of v^H A v via a dense angle
    grid plus a first-order Lipschitz slack (the first phase is fixed)."""
    K = a.shape[0]
    if K == 1:
        return float(a[0, 0].real)
    points = _GRID_POINTS[K]
    delta = TWO_PI / points
    ph = np.exp(1j * np.arange(points) * delta)

    f = np.full((points,) * (K - 1), float(np.trace(a).real))
    for i in range(K):
        for j in range(i + 1, K):
            if i == 0:
                term = 2.0 * (a[0, j] * ph).real
                axes = (j - 1,)
            else:
                term = 2.0 * (a[i, j] * np.outer(np.conj(ph), ph)).real
                axes = (i - 1, j - 1)
            shape = [1] * (K - 1)
            for ax, n in zip(axes, term.shape if term.ndim > 1 else (points,)):
                shape[ax] = n
            f += term.reshape(shape)

    # max gradient component along free angle m is 2 * sum_{j != m} |A_mj|
    off_mass = np.abs(a).sum(axis=1) - np.abs(np.diag(a))
    slack = delta * off_mass[1:].sum()
    return float(f.max() + slack)


def upper_bound_power(realization: ChannelRealization, cfg: SystemConfig) -> float:
    """Certified upper bound on the receive power over all phase settings
    (discrete or continuous) and all power-feasible precoders.

    Takes the tightest of K*lambda_max(A), sum_ij |A_ij| and, for K <= 5,
    the Lipschitz-inflated grid maximum of the common-phase program, where
    A stacks the aligned per-surface rows z_k b_k^T.
    """
    zs = np.array([np.abs(effective_gain_vector(ch, h_r)).sum()
                   for ch, h_r in zip(realization.bs_irs, realization.irs_user)])
    rows = np.stack([ch.bs_response for ch in realization.bs_irs])
    phi = assemble_phi(zs, rows)
    a = phi @ phi.conj().T
    a = 0.5 * (a + a.conj().T)
    bound = min(realization.K * float(np.linalg.eigvalsh(a)[-1]),
                float(np.abs(a).sum()))
    if realization.K <= 5:
        bound = min(bound, _grid_upper_bound(a))
    return cfg.p_watts * max(bound, 0.0)
