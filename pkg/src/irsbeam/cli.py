"""Config parsing, experiment dispatch and plot-ready data emission.

Config documents are flat JSON objects; every omitted key falls back to
the built-in defaults.  ``run`` writes one CSV per experiment plus a
metadata sidecar holding the fully resolved config, which is itself a
valid config document and reproduces the run bit-exactly.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import analysis, beamformer, channel
from .config import ScenarioGeometry, SystemConfig
from .simharness import (
    DEFAULT_VARIANTS,
    KINDS,
    ExperimentResult,
    ExperimentSpec,
    run_experiment,
)


class ConfigError(ValueError):
    """Bad config document or bad field value."""


_DEFAULT_SWEEPS = {
    "snr_vs_distance": [float(x) for x in range(15, 76, 2)],
    "snr_vs_elements": [50.0, 100.0, 200.0],
    "eta_validation": [1.0, 2.0, 3.0],
    "outage_vs_blockage": [0.0, 0.2, 0.4, 0.6, 0.8, 1.0],
}

_VALUE_UNITS = {
    "snr_vs_distance": "mean receive SNR in dB",
    "snr_vs_elements": "mean receive SNR in dB",
    "eta_validation": "received-power ratio gamma(b)/gamma(inf), linear",
    "outage_vs_blockage": "outage probability in [0, 1]",
}

# key -> (default, validator); validators raise ConfigError.
_SYSTEM_KEYS = ("N", "K", "M_y", "M_z", "p_dbm", "noise_dbm", "b",
                "gain_tx_dbi", "gain_rx_dbi", "freeze_shadowing")
_GEOM_KEYS = ("d_b", "d_v", "d_span", "d_u")
_RUN_KEYS = ("experiment", "sweep", "trials", "seed", "variants",
             "inner_samples", "tau_db", "path_count", "varrho")
_ALL_KEYS = set(_SYSTEM_KEYS) | set(_GEOM_KEYS) | set(_RUN_KEYS)


@dataclass
class RunConfig:
    """Fully validated and resolved run description."""

    experiment: str = "snr_vs_distance"
    system: SystemConfig = field(default_factory=SystemConfig)
    geometry: ScenarioGeometry = field(default_factory=ScenarioGeometry)
    sweep: list | None = None
    trials: int = 1000
    seed: int = 12345
    variants: list | None = None
    inner_samples: int = 200
    tau_db: float = 1.5
    path_count: int = 4
    varrho: float = 1.0

    def resolved(self) -> dict:
        """Flat document with every field explicit; parse_config on the
        JSON dump of this dict reproduces the run."""
        doc = {k: getattr(self.system, k) for k in _SYSTEM_KEYS}
        doc["b"] = "continuous" if self.system.b is None else self.system.b
        doc.update({k: getattr(self.geometry, k) for k in _GEOM_KEYS})
        doc.update(
            experiment=self.experiment,
            sweep=list(self.sweep),
            trials=self.trials,
            seed=self.seed,
            variants=self.variants,
            inner_samples=self.inner_samples,
            tau_db=self.tau_db,
            path_count=self.path_count,
            varrho=self.varrho,
        )
        return doc

    def to_spec(self) -> ExperimentSpec:
        return ExperimentSpec(
            kind=self.experiment,
            sweep=list(self.sweep),
            trials=self.trials,
            seed=self.seed,
            cfg=self.system,
            geom=self.geometry,
            variants=None if self.variants is None else list(self.variants),
            inner_samples=self.inner_samples,
            tau_db=self.tau_db,
            path_count=self.path_count,
            varrho=self.varrho,
        )


def _require(cond: bool, message: str):
    if not cond:
        raise ConfigError(message)


def _parse_bits(value):
    if value is None or value == "continuous":
        return None
    _require(isinstance(value, int) and not isinstance(value, bool) and value >= 1,
             "b must be >= 1 or 'continuous'")
    return value


def _as_number(value, key):
    _require(isinstance(value, (int, float)) and not isinstance(value, bool),
             f"{key} must be a number")
    return float(value)


def _as_positive_int(value, key):
    _require(isinstance(value, int) and not isinstance(value, bool) and value >= 1,
             f"{key} must be an integer >= 1")
    return value


def parse_config(text: str) -> RunConfig:
    """Parse and validate a JSON config document, filling defaults."""
    text = text.strip()
    if not text:
        doc = {}
    else:
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(
                f"config parse error at line {exc.lineno}, column {exc.colno}: "
                f"{exc.msg}") from None
    _require(isinstance(doc, dict), "config document must be a JSON object")

    unknown = sorted(set(doc) - _ALL_KEYS)
    _require(not unknown, f"unknown config keys: {', '.join(unknown)}")

    experiment = doc.get("experiment", "snr_vs_distance")
    _require(experiment in KINDS,
             f"experiment must be one of {', '.join(KINDS)}")

    sys_kwargs = {}
    for key in ("N", "K", "M_y", "M_z"):
        if key in doc:
            sys_kwargs[key] = _as_positive_int(doc[key], key)
    for key in ("p_dbm", "noise_dbm", "gain_tx_dbi", "gain_rx_dbi"):
        if key in doc:
            sys_kwargs[key] = _as_number(doc[key], key)
    if "b" in doc:
        sys_kwargs["b"] = _parse_bits(doc["b"])
    if "freeze_shadowing" in doc:
        _require(isinstance(doc["freeze_shadowing"], bool),
                 "freeze_shadowing must be a boolean")
        sys_kwargs["freeze_shadowing"] = doc["freeze_shadowing"]

    geom_kwargs = {}
    for key in _GEOM_KEYS:
        if key in doc:
            geom_kwargs[key] = _as_number(doc[key], key)
            _require(geom_kwargs[key] > 0, f"{key} must be > 0")

    try:
        system = SystemConfig(**sys_kwargs)
        geometry = ScenarioGeometry(**geom_kwargs)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    sweep = doc.get("sweep", _DEFAULT_SWEEPS[experiment])
    _require(isinstance(sweep, list) and len(sweep) > 0,
             "sweep must be a nonempty list")
    sweep = [_as_number(x, "sweep entry") for x in sweep]

    variants = doc.get("variants", None)
    if variants is not None:
        _require(isinstance(variants, list) and
                 all(isinstance(v, str) for v in variants),
                 "variants must be a list of strings")

    run_cfg = RunConfig(
        experiment=experiment,
        system=system,
        geometry=geometry,
        sweep=sweep,
        trials=_as_positive_int(doc.get("trials", 1000), "trials"),
        seed=doc.get("seed", 12345),
        variants=variants,
        inner_samples=_as_positive_int(doc.get("inner_samples", 200),
                                       "inner_samples"),
        tau_db=_as_number(doc.get("tau_db", 1.5), "tau_db"),
        path_count=_as_positive_int(doc.get("path_count", 4), "path_count"),
        varrho=_as_number(doc.get("varrho", 1.0), "varrho"),
    )
    _require(isinstance(run_cfg.seed, int) and not isinstance(run_cfg.seed, bool)
             and run_cfg.seed >= 0, "seed must be a non-negative integer")
    _require(run_cfg.varrho > 0, "varrho must be > 0")
    try:
        run_cfg.to_spec()  # full cross-field validation
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return run_cfg


def apply_overrides(run_cfg: RunConfig, overrides) -> RunConfig:
    """Re-parse the resolved document with ``key=value`` pairs applied."""
    doc = run_cfg.resolved()
    for item in overrides:
        key, sep, raw = item.partition("=")
        _require(bool(sep), f"override {item!r} is not of the form key=value")
        _require(key in _ALL_KEYS, f"unknown config key: {key}")
        try:
            doc[key] = json.loads(raw)
        except json.JSONDecodeError:
            doc[key] = raw  # bare strings like b=continuous
    return parse_config(json.dumps(doc))


def write_result(result: ExperimentResult, run_cfg: RunConfig,
                 out_dir) -> tuple:
    """Write <kind>.csv and <kind>.meta.json; returns both paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / f"{result.kind}.csv"
    meta_path = out / f"{result.kind}.meta.json"
    lines = [f"# {result.kind}: value = {_VALUE_UNITS[result.kind]}; "
             f"std = per-trial sample std; seed = {run_cfg.seed}",
             "x,variant,value,std,trials"]
    for row in result.rows:
        lines.append(f"{row.x:.12g},{row.variant},{row.value:.12g},"
                     f"{row.std:.12g},{row.trials}")
    csv_path.write_text("\n".join(lines) + "\n")
    meta_path.write_text(json.dumps(run_cfg.resolved(), indent=2,
                                    sort_keys=True) + "\n")
    return csv_path, meta_path


def run(run_cfg: RunConfig, out_dir=".") -> tuple:
    """Execute the experiment and emit its data files."""
    result = run_experiment(run_cfg.to_spec())
    return write_result(result, run_cfg, out_dir)


# ---------------------------------------------------------------------------
# Self-check: fast invariant suite
# ---------------------------------------------------------------------------

@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str = ""


def _check_alignment_optimality(rng):
    g = (rng.standard_normal(6) + 1j * rng.standard_normal(6))
    cont = beamformer.optimal_continuous_phases(g)
    aligned = cont.phasors() @ g
    if abs(aligned.imag) > 1e-10 or abs(aligned.real - np.abs(g).sum()) > 1e-10:
        return False, "aligned sum is not ||g||_1"
    for _ in range(2000):
        u = np.exp(1j * rng.uniform(0, 2 * np.pi, 6))
        if np.abs(u @ g) > aligned.real + 1e-9:
            return False, "random unit-modulus vector beats the alignment"
    return True, ""


def _check_quantizer_wraparound(rng):
    idx = beamformer.quantize_phases(np.array([2 * np.pi - 0.01]), 2).values[0]
    return bool(idx == 0), f"expected wrap to index 0, got {idx}"


def _check_quantizer_error_bound(rng):
    theta = np.concatenate([rng.uniform(0, 2 * np.pi, 500),
                            2 * np.pi - 10.0 ** rng.uniform(-6, -1, 100)])
    for bits in (1, 2, 3):
        q = beamformer.quantize_phases(theta, bits)
        err = np.angle(np.exp(1j * (q.radians() - theta)))
        if np.max(np.abs(err)) > np.pi / 2 ** bits + 1e-9:
            return False, f"error exceeds pi/2^b at b={bits}"
    return True, ""


def _check_quantizer_tie_break(rng):
    idx = beamformer.quantize_phases(np.array([np.pi / 4, 3 * np.pi / 4]), 2).values
    return list(idx) == [0, 1], f"midpoints went to {list(idx)}"


def _check_quantization_sandwich(rng):
    # the split family pairs wrap-side phases (error -2h under a
    # non-circular quantizer, h = pi/2^b) with phases just above the first
    # midpoint (error +h), a 3h spread that such a quantizer cannot keep
    # inside the cos^2(h) bound; a common-mode mis-rotation alone would go
    # unnoticed since the power is phase invariant
    for bits in (2, 3):
        h = np.pi / 2 ** bits
        for family in ("uniform", "split"):
            for _ in range(50):
                mag = rng.uniform(0.1, 1.0, 16)
                if family == "uniform":
                    theta = rng.uniform(0, 2 * np.pi, 16)
                else:
                    eps = rng.uniform(0, h / 2, 16)
                    theta = np.where(np.arange(16) % 2 == 0,
                                     2 * np.pi - eps, h + eps)
                g = mag * np.exp(-1j * theta)
                q = beamformer.quantize_phases(
                    beamformer.optimal_continuous_phases(g), bits)
                gamma_d = np.abs(q.phasors() @ g) ** 2
                gamma_c = np.abs(g).sum() ** 2
                if gamma_d < np.cos(h) ** 2 * gamma_c - 1e-9:
                    return False, f"cos^2 sandwich violated at b={bits}"
    return True, ""


def _check_eta_closed_forms(rng):
    expected = {1: 0.4053, 2: 0.8106, 3: 0.9496}
    for bits, target in expected.items():
        if abs(analysis.eta(bits) - target) > 5e-5:
            return False, f"eta({bits}) != {target}"
    return True, ""


def _check_eta_is_squared_factor(rng):
    for bits in range(1, 17):
        if abs(analysis.eta(bits) - analysis.mean_phase_factor(bits) ** 2) > 1e-15:
            return False, "eta != mean_phase_factor^2"
        if bits > 1 and analysis.eta(bits) <= analysis.eta(bits - 1):
            return False, "eta not strictly increasing"
    return True, ""


def _check_power_budget(rng):
    cfg = SystemConfig(N=8, K=2, M_y=2, M_z=2)
    geom = ScenarioGeometry()
    re = channel.draw_geometric_realization(cfg, geom, rng)
    for bits in (1, 2, None):
        sol = solve_joint_for_check(re, replace(cfg, b=bits))
        if abs(np.linalg.norm(sol.w) ** 2 - cfg.p_watts) > 1e-9 * cfg.p_watts:
            return False, "||w||^2 != p"
    return True, ""


def solve_joint_for_check(re, cfg):
    # looked up through the module so selfcheck sees monkeypatched pieces
    return beamformer.solve_joint(re, cfg)


def _check_oracle_ordering(rng):
    for _ in range(10):
        cfg = SystemConfig(N=3, K=2, M_y=1, M_z=2, b=int(rng.integers(1, 3)))
        re = _random_small_realization(cfg, rng)
        lo = beamformer.solve_joint(re, cfg).gamma
        mid = beamformer.brute_force_discrete(re, cfg).gamma
        hi = beamformer.upper_bound_power(re, cfg)
        if not (lo <= mid * (1 + 1e-9) and mid <= hi * (1 + 1e-9)):
            return False, f"ordering broken: {lo} {mid} {hi}"
    return True, ""


def _check_unit_norm_responses(rng):
    for n in (1, 4, 17):
        if abs(np.linalg.norm(channel.ula_response(n, 0.7)) - 1) > 1e-12:
            return False, "ULA response not unit norm"
    for my, mz in ((1, 1), (3, 5), (10, 5)):
        v = channel.ura_response(my, mz, 0.3, -0.2)
        if abs(np.linalg.norm(v) - 1) > 1e-12:
            return False, "URA response not unit norm"
    return True, ""


def _check_composite_consistency(rng):
    cfg = SystemConfig(N=6, K=3, M_y=2, M_z=2, b=2)
    re = channel.draw_geometric_realization(cfg, ScenarioGeometry(), rng)
    sol = beamformer.solve_joint(re, cfg)
    row = beamformer.composite_row(re, sol.phases)
    direct = float(np.abs(row @ sol.w) ** 2)
    ok = abs(direct - sol.gamma) <= 1e-9 * max(sol.gamma, 1e-300)
    return ok, "reduced row and full-matrix powers disagree" if not ok else ""


def _random_small_realization(cfg, rng):
    chans, users = [], []
    for _ in range(cfg.K):
        a = rng.standard_normal(cfg.M) + 1j * rng.standard_normal(cfg.M)
        bvec = rng.standard_normal(cfg.N) + 1j * rng.standard_normal(cfg.N)
        gain = complex(rng.standard_normal() + 1j * rng.standard_normal())
        chans.append(channel.RankOneChannel(
            gain, a / np.linalg.norm(a), bvec / np.linalg.norm(bvec)))
        users.append(rng.standard_normal(cfg.M) + 1j * rng.standard_normal(cfg.M))
    return channel.ChannelRealization(chans, users)


_PROPERTIES = [
    ("alignment-optimality", _check_alignment_optimality),
    ("quantizer-wraparound", _check_quantizer_wraparound),
    ("quantizer-error-bound", _check_quantizer_error_bound),
    ("quantizer-tie-break", _check_quantizer_tie_break),
    ("quantization-sandwich", _check_quantization_sandwich),
    ("eta-closed-forms", _check_eta_closed_forms),
    ("eta-squared-factor", _check_eta_is_squared_factor),
    ("power-budget", _check_power_budget),
    ("oracle-ordering", _check_oracle_ordering),
    ("unit-norm-responses", _check_unit_norm_responses),
    ("composite-consistency", _check_composite_consistency),
]


def selfcheck(stream=None) -> list:
    """Run the fast invariant suite, print one line per property."""
    stream = stream if stream is not None else sys.stdout
    results = []
    for name, fn in _PROPERTIES:
        rng = np.random.default_rng(2024)
        try:
            passed, detail = fn(rng)
        except Exception as exc:  # a crash is a failure, not an abort
            passed, detail = False, f"raised {exc!r}"
        results.append(CheckResult(name, passed, detail))
        status = "ok  " if passed else "FAIL"
        suffix = f": {detail}" if detail and not passed else ""
        print(f"{status} {name}{suffix}", file=stream)
    return results


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

def _cmd_run(args) -> int:
    try:
        text = Path(args.config).read_text()
    except OSError as exc:
        print(f"error: cannot read {args.config}: {exc}", file=sys.stderr)
        return 1
    try:
        run_cfg = apply_overrides(parse_config(text), args.set or [])
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    try:
        csv_path, meta_path = run(run_cfg, args.out)
    except OSError as exc:
        print(f"error: cannot write results under {args.out}: {exc}",
              file=sys.stderr)
        return 1
    print(csv_path)
    print(meta_path)
    return 0


def _cmd_selfcheck(args) -> int:
    results = selfcheck()
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} properties passed")
    return 1 if failed else 0


def _cmd_eta(args) -> int:
    try:
        bits = [int(x) for x in args.bits.split(",") if x.strip()]
        if not bits or any(b < 1 for b in bits):
            raise ValueError
    except ValueError:
        print("error: --bits expects a comma list of integers >= 1",
              file=sys.stderr)
        return 1
    print("b,eta,eta_db,mean_phase_factor")
    for b in bits:
        e = analysis.eta(b)
        print(f"{b},{e:.6f},{10 * np.log10(e):.4f},"
              f"{analysis.mean_phase_factor(b):.6f}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="irsbeam",
        description="Monte Carlo experiments for multi-surface mmWave "
                    "downlink beamforming with discrete phase shifters.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment from a config file")
    p_run.add_argument("config", help="path to a JSON config document")
    p_run.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override a config key (repeatable)")
    p_run.add_argument("--out", default=".", help="output directory")
    p_run.set_defaults(fn=_cmd_run)

    p_check = sub.add_parser("selfcheck", help="run the fast invariant suite")
    p_check.set_defaults(fn=_cmd_selfcheck)

    p_eta = sub.add_parser("eta", help="print the quantization-loss table")
    p_eta.add_argument("--bits", default="1,2,3,4",
                       help="comma list of bit widths")
    p_eta.set_defaults(fn=_cmd_eta)

    args = parser.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
