"""Monte Carlo experiment engine with deterministic seeding.

Every trial owns an rng derived from (seed, stream tag, sweep index, trial
index), so trials can be farmed out to workers in any split and still
reproduce the same multiset of values.  Within a trial all solver variants
see the same channel draw (common random numbers), which removes most of
the comparison variance between curves.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace

import numpy as np

from . import channel
from .beamformer import (
    aligned_irs_gain,
    effective_gain_vector,
    solve_joint,
    upper_bound_power,
)
from .config import ScenarioGeometry, SystemConfig

KINDS = ("snr_vs_distance", "snr_vs_elements", "eta_validation",
         "outage_vs_blockage")

DEFAULT_VARIANTS = {
    "snr_vs_distance": ["proposed", "continuous", "upper_bound", "no_irs"],
    "snr_vs_elements": ["b=1", "b=2", "continuous"],
}

# Stream tags keep independent draws independent of each other and of K.
_TAG_CHANNEL = 0
_TAG_DIRECT = 1
_TAG_PATTERN = 2
_TAG_INNER = 3
_TAG_SHADOW = 4

_BITS_TOKEN = re.compile(r"^b=(\d+)$")


def trial_rng(seed: int, *key: int) -> np.random.Generator:
    """Deterministic per-trial stream; depends only on (seed, key)."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), *map(int, key)]))


@dataclass
class ExperimentSpec:
    """One experiment: a sweep, a trial budget and the solver variants."""

    kind: str
    sweep: list
    trials: int
    seed: int
    cfg: SystemConfig
    geom: ScenarioGeometry
    variants: list | None = None
    inner_samples: int = 200   # inner expectation size for outage runs
    tau_db: float = 1.5        # outage threshold on the mean rate metric
    path_count: int = 4
    varrho: float = 1.0        # Rayleigh per-element std for eta validation

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown experiment kind {self.kind!r}")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if len(self.sweep) == 0:
            raise ValueError("sweep must be nonempty")
        if any(x2 <= x1 for x1, x2 in zip(self.sweep, self.sweep[1:])):
            raise ValueError("sweep must be strictly increasing")
        if self.variants is None:
            self.variants = list(DEFAULT_VARIANTS.get(self.kind, []))
        for token in self.variants:
            _variant_bits(token, self.cfg)  # validates the token
        if self.kind == "snr_vs_elements":
            for m in self.sweep:
                if int(m) % self.cfg.M_y != 0:
                    raise ValueError(
                        f"element count {m} is not a multiple of M_y={self.cfg.M_y}")
        if self.kind == "eta_validation":
            if any(int(b) != b or b < 1 for b in self.sweep):
                raise ValueError("eta sweep must contain integer bit widths >= 1")
        if self.kind == "outage_vs_blockage":
            if any(p < 0 or p > 1 for p in self.sweep):
                raise ValueError("blockage probabilities must lie in [0, 1]")
        if self.inner_samples < 1:
            raise ValueError("inner_samples must be >= 1")


@dataclass
class ResultRow:
    x: float
    variant: str
    value: float
    std: float
    trials: int


@dataclass
class ExperimentResult:
    kind: str
    rows: list = field(default_factory=list)


def aggregate(samples) -> tuple:
    """(mean, sample std, count) of per-trial records; std is 0 for a
    single record.  Deterministic given input order."""
    samples = np.asarray(list(samples), dtype=float)
    if samples.size == 0:
        raise ValueError("nothing to aggregate")
    std = float(np.std(samples, ddof=1)) if samples.size > 1 else 0.0
    return float(np.mean(samples)), std, int(samples.size)


def run_experiment(spec: ExperimentSpec) -> ExperimentResult:
    """Dispatch a spec to its runner."""
    runner = {
        "snr_vs_distance": run_snr_vs_distance,
        "snr_vs_elements": run_snr_vs_elements,
        "eta_validation": run_eta_validation,
        "outage_vs_blockage": run_outage,
    }[spec.kind]
    return runner(spec)


# ---------------------------------------------------------------------------
# SNR sweeps
# ---------------------------------------------------------------------------

def _variant_bits(token: str, cfg: SystemConfig):
    """Resolve a variant token to a phase resolution; raises on junk."""
    if token in ("proposed", "continuous", "upper_bound", "no_irs"):
        return cfg.b if token == "proposed" else None
    m = _BITS_TOKEN.match(token)
    if m is None:
        raise ValueError(f"unknown variant {token!r}")
    bits = int(m.group(1))
    if bits < 1:
        raise ValueError("variant bit width must be >= 1")
    return bits


def _snr_db(gamma: float, noise_w: float) -> float:
    return 10.0 * np.log10(gamma / noise_w)


def snr_trial_values(spec: ExperimentSpec, cfg: SystemConfig,
                     geom: ScenarioGeometry, x_idx: int, t: int) -> dict:
    """Per-trial SNR (dB) of every requested variant on one shared channel
    draw.  The no-surface baseline uses its own stream so its draws do not
    depend on K."""
    rng = trial_rng(spec.seed, _TAG_CHANNEL, x_idx, t)
    shadowing = None
    if cfg.freeze_shadowing:
        shadowing = channel.draw_shadowing_table(
            cfg, trial_rng(spec.seed, _TAG_SHADOW, x_idx), spec.path_count)
    realization = channel.draw_geometric_realization(
        cfg, geom, rng, spec.path_count, shadowing)
    out = {}
    for token in spec.variants:
        if token == "upper_bound":
            gamma = upper_bound_power(realization, cfg)
        elif token == "no_irs":
            h_d = channel.gen_direct_channel(
                cfg, spec.path_count, geom.d_u,
                trial_rng(spec.seed, _TAG_DIRECT, x_idx, t))
            gamma = cfg.p_watts * float(np.linalg.norm(h_d) ** 2)  # MRT optimum
        else:
            bits = _variant_bits(token, cfg)
            gamma = solve_joint(realization, replace(cfg, b=bits)).gamma
        out[token] = _snr_db(gamma, cfg.noise_watts)
    return out


def _run_snr_sweep(spec: ExperimentSpec, cfg_for, geom_for) -> ExperimentResult:
    result = ExperimentResult(spec.kind)
    for x_idx, x in enumerate(spec.sweep):
        cfg_x, geom_x = cfg_for(x), geom_for(x)
        values = {token: [] for token in spec.variants}
        for t in range(spec.trials):
            trial = snr_trial_values(spec, cfg_x, geom_x, x_idx, t)
            for token, v in trial.items():
                values[token].append(v)
        for token in spec.variants:
            mean, std, n = aggregate(values[token])
            result.rows.append(ResultRow(float(x), token, mean, std, n))
    return result


def run_snr_vs_distance(spec: ExperimentSpec) -> ExperimentResult:
    """Mean receive SNR versus BS-user distance; surfaces near the user
    show up as local maxima of the curve."""
    if spec.kind != "snr_vs_distance":
        raise ValueError("spec kind mismatch")
    return _run_snr_sweep(
        spec,
        cfg_for=lambda x: spec.cfg,
        geom_for=lambda x: replace(spec.geom, d_u=float(x)),
    )


def run_snr_vs_elements(spec: ExperimentSpec) -> ExperimentResult:
    """Mean receive SNR versus elements per surface (M_y fixed, M_z swept)."""
    if spec.kind != "snr_vs_elements":
        raise ValueError("spec kind mismatch")
    return _run_snr_sweep(
        spec,
        cfg_for=lambda m: replace(spec.cfg, M_z=int(m) // spec.cfg.M_y),
        geom_for=lambda m: spec.geom,
    )


# ---------------------------------------------------------------------------
# Quantization-loss validation
# ---------------------------------------------------------------------------

def run_eta_validation(spec: ExperimentSpec) -> ExperimentResult:
    """Empirical mean-power ratio gamma(b)/gamma(inf) per bit width.

    Numerator and denominator share every realization (common random
    numbers); the reported std is the spread of the per-trial ratios.
    """
    if spec.kind != "eta_validation":
        raise ValueError("spec kind mismatch")
    bits_list = [int(b) for b in spec.sweep]
    sums = {b: 0.0 for b in bits_list}
    ratios = {b: [] for b in bits_list}
    sum_inf = 0.0
    for t in range(spec.trials):
        rng = trial_rng(spec.seed, _TAG_CHANNEL, 0, t)
        realization = channel.draw_rayleigh_realization(
            spec.cfg, spec.geom, rng, spec.varrho)
        g_inf = solve_joint(realization, replace(spec.cfg, b=None)).gamma
        sum_inf += g_inf
        for b in bits_list:
            g_b = solve_joint(realization, replace(spec.cfg, b=b)).gamma
            sums[b] += g_b
            ratios[b].append(g_b / g_inf)
    result = ExperimentResult(spec.kind)
    for b in bits_list:
        _, spread, n = aggregate(ratios[b])
        result.rows.append(
            ResultRow(float(b), "eta_ratio", sums[b] / sum_inf, spread, n))
    return result


# ---------------------------------------------------------------------------
# Outage under random link blockage
# ---------------------------------------------------------------------------

def run_outage(spec: ExperimentSpec) -> ExperimentResult:
    """Outage probability versus per-link blockage probability.

    Outer loop: blockage patterns (each surface-user link independently
    blocked with probability P; a blocked surface's term is removed, and
    the precoder re-adapts to the surviving composite).  Inner loop: the
    mean of 10*log10(1 + gamma/sigma^2) over ``inner_samples`` channel
    draws.  A pattern is in outage when that mean falls below tau.

    Patterns are coupled across the sweep through common uniforms, so the
    estimated curve is monotone in P by construction.
    """
    if spec.kind != "outage_vs_blockage":
        raise ValueError("spec kind mismatch")
    cfg, geom = spec.cfg, spec.geom
    K, p_w, noise_w = cfg.K, cfg.p_watts, cfg.noise_watts

    links = channel.bs_irs_geometry(geom, K)
    rows = np.stack([np.conj(channel.ula_response(cfg.N, phi))
                     for phi in links.departure_rad])
    gram = rows @ rows.conj().T

    outcomes = np.zeros((len(spec.sweep), spec.trials), dtype=bool)
    for j in range(spec.trials):
        u = trial_rng(spec.seed, _TAG_PATTERN, j).uniform(size=K)
        rng = trial_rng(spec.seed, _TAG_INNER, j)
        s = np.empty((spec.inner_samples, K), dtype=complex)
        for t in range(spec.inner_samples):
            realization = channel.draw_geometric_realization(
                cfg, geom, rng, spec.path_count)
            for k in range(K):
                g = effective_gain_vector(
                    realization.bs_irs[k], realization.irs_user[k])
                s[t, k] = aligned_irs_gain(g, cfg.b)
        for x_idx, p_block in enumerate(spec.sweep):
            live = u >= p_block
            if not live.any():
                outcomes[x_idx, j] = True
                continue
            s_live = s[:, live]
            g_live = gram[np.ix_(live, live)]
            gamma = p_w * np.einsum(
                "ti,ij,tj->t", s_live, g_live, s_live.conj()).real
            rate = 10.0 * np.log10(1.0 + np.maximum(gamma, 0.0) / noise_w)
            outcomes[x_idx, j] = float(rate.mean()) < spec.tau_db

    result = ExperimentResult(spec.kind)
    label = f"K={K}"
    for x_idx, p_block in enumerate(spec.sweep):
        mean, std, n = aggregate(outcomes[x_idx].astype(float))
        result.rows.append(ResultRow(float(p_block), label, mean, std, n))
    return result
