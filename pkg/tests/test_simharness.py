import numpy as np
import pytest

from irsbeam.beamformer import solve_joint
from irsbeam.channel import ChannelRealization
from irsbeam.config import ScenarioGeometry, SystemConfig
from irsbeam.simharness import (
    ExperimentSpec,
    aggregate,
    run_eta_validation,
    run_experiment,
    run_outage,
    run_snr_vs_distance,
    run_snr_vs_elements,
    snr_trial_values,
    trial_rng,
)

GEOM = ScenarioGeometry()


def small_cfg(**kw):
    base = dict(N=8, K=3, M_y=2, M_z=2, b=2)
    base.update(kw)
    return SystemConfig(**base)


# ---------------------------------------------------------------------------
# Aggregation
# ---------------------------------------------------------------------------

def test_aggregate_known_triple():
    assert aggregate([1.0, 2.0, 3.0]) == (2.0, 1.0, 3)


def test_aggregate_degenerate_cases():
    assert aggregate([5.0]) == (5.0, 0.0, 1)
    mean, std, n = aggregate([4.0, 4.0])
    assert (mean, std, n) == (4.0, 0.0, 2)
    with pytest.raises(ValueError):
        aggregate([])


# ---------------------------------------------------------------------------
# ExperimentSpec validation
# ---------------------------------------------------------------------------

def test_spec_rejects_bad_inputs():
    ok = dict(kind="snr_vs_distance", sweep=[10.0, 20.0], trials=2, seed=1,
              cfg=small_cfg(), geom=GEOM)
    ExperimentSpec(**ok)
    with pytest.raises(ValueError):
        ExperimentSpec(**{**ok, "kind": "nope"})
    with pytest.raises(ValueError):
        ExperimentSpec(**{**ok, "sweep": []})
    with pytest.raises(ValueError):
        ExperimentSpec(**{**ok, "sweep": [20.0, 10.0]})
    with pytest.raises(ValueError):
        ExperimentSpec(**{**ok, "trials": 0})
    with pytest.raises(ValueError):
        ExperimentSpec(**{**ok, "variants": ["b=0"]})
    with pytest.raises(ValueError):
        ExperimentSpec(**{**ok, "variants": ["zf"]})
    with pytest.raises(ValueError):
        ExperimentSpec(**{**ok, "kind": "snr_vs_elements", "sweep": [31.0]})
    with pytest.raises(ValueError):
        ExperimentSpec(**{**ok, "kind": "eta_validation", "sweep": [1.5]})
    with pytest.raises(ValueError):
        ExperimentSpec(**{**ok, "kind": "outage_vs_blockage", "sweep": [0.5, 2.0]})


def test_default_variants_filled():
    spec = ExperimentSpec(kind="snr_vs_distance", sweep=[10.0], trials=1,
                          seed=1, cfg=small_cfg(), geom=GEOM)
    assert spec.variants == ["proposed", "continuous", "upper_bound", "no_irs"]


# ---------------------------------------------------------------------------
# Reproducibility and seeding
# ---------------------------------------------------------------------------

def test_rerun_is_bit_identical():
    spec = ExperimentSpec(kind="snr_vs_elements", sweep=[4.0, 8.0], trials=5,
                          seed=321, cfg=small_cfg(M_y=2), geom=GEOM,
                          variants=["b=1", "continuous"])
    a, b = run_snr_vs_elements(spec), run_snr_vs_elements(spec)
    assert [(r.x, r.variant, r.value, r.std, r.trials) for r in a.rows] == \
           [(r.x, r.variant, r.value, r.std, r.trials) for r in b.rows]


def test_row_mean_matches_per_trial_values():
    # the engine's per-trial values depend only on (seed, x index, trial
    # index), so any worker split reproduces the same multiset
    spec = ExperimentSpec(kind="snr_vs_distance", sweep=[20.0, 40.0], trials=4,
                          seed=5150, cfg=small_cfg(), geom=GEOM,
                          variants=["proposed", "no_irs"])
    result = run_snr_vs_distance(spec)
    for x_idx, x in enumerate(spec.sweep):
        geom_x = ScenarioGeometry(d_b=GEOM.d_b, d_v=GEOM.d_v,
                                  d_span=GEOM.d_span, d_u=x)
        per_trial = [snr_trial_values(spec, spec.cfg, geom_x, x_idx, t)
                     for t in range(spec.trials)]
        for token in spec.variants:
            manual = np.mean([tv[token] for tv in per_trial])
            row = next(r for r in result.rows
                       if r.x == x and r.variant == token)
            assert row.value == pytest.approx(manual, rel=1e-12)


def test_trial_rng_streams_are_stable():
    a = trial_rng(7, 0, 3).standard_normal(4)
    b = trial_rng(7, 0, 3).standard_normal(4)
    c = trial_rng(7, 0, 4).standard_normal(4)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_run_experiment_dispatch():
    spec = ExperimentSpec(kind="snr_vs_distance", sweep=[30.0], trials=2,
                          seed=9, cfg=small_cfg(), geom=GEOM,
                          variants=["proposed"])
    assert run_experiment(spec).rows[0].variant == "proposed"


# ---------------------------------------------------------------------------
# Variant relationships
# ---------------------------------------------------------------------------

def test_variant_mean_ordering():
    # per-x means obey continuous >= b=2 >= b=1 (not guaranteed per trial)
    spec = ExperimentSpec(kind="snr_vs_elements", sweep=[50.0], trials=1000,
                          seed=60, cfg=SystemConfig(), geom=GEOM,
                          variants=["b=1", "b=2", "continuous"])
    rows = {r.variant: r.value for r in run_snr_vs_elements(spec).rows}
    assert rows["continuous"] > rows["b=2"] > rows["b=1"]


def test_upper_bound_dominates_per_trial():
    spec = ExperimentSpec(kind="snr_vs_distance", sweep=[41.0], trials=50,
                          seed=61, cfg=SystemConfig(M_y=5, M_z=2), geom=GEOM,
                          variants=["proposed", "continuous", "upper_bound"])
    geom_x = ScenarioGeometry(d_u=41.0)
    for t in range(spec.trials):
        tv = snr_trial_values(spec, spec.cfg, geom_x, 0, t)
        assert tv["upper_bound"] >= tv["continuous"] - 1e-9
        assert tv["upper_bound"] >= tv["proposed"] - 1e-9


def test_no_irs_baseline_independent_of_k():
    def baseline_rows(K):
        spec = ExperimentSpec(kind="snr_vs_distance", sweep=[25.0, 45.0],
                              trials=6, seed=77,
                              cfg=small_cfg(K=K), geom=GEOM,
                              variants=["proposed", "no_irs"])
        res = run_snr_vs_distance(spec)
        return [(r.x, r.value) for r in res.rows if r.variant == "no_irs"]

    assert baseline_rows(3) == baseline_rows(5)


def test_hotspot_near_surface_positions():
    # surfaces sit at x = 11, 36, 61; the mean SNR peaks near them
    spec = ExperimentSpec(kind="snr_vs_distance", sweep=[25.0, 35.0, 45.0],
                          trials=300, seed=88, cfg=SystemConfig(),
                          geom=GEOM, variants=["proposed"])
    vals = {r.x: r.value for r in run_snr_vs_distance(spec).rows}
    assert vals[35.0] > vals[25.0]
    assert vals[35.0] > vals[45.0]


def test_proposed_tracks_continuous_and_certified_bound():
    # 2-bit quantization costs ~0.91 dB against continuous everywhere; the
    # certified relaxation bound sits further out (measured <= 1.64 dB on
    # this geometry because the far surfaces crowd in angle), frozen at 2.0
    spec = ExperimentSpec(kind="snr_vs_distance",
                          sweep=[15.0, 25.0, 35.0, 45.0, 55.0, 65.0, 75.0],
                          trials=250, seed=11, cfg=SystemConfig(),
                          geom=GEOM,
                          variants=["proposed", "continuous", "upper_bound"])
    res = run_snr_vs_distance(spec)
    vals = {(r.x, r.variant): r.value for r in res.rows}
    for x in spec.sweep:
        gap_cont = vals[(x, "continuous")] - vals[(x, "proposed")]
        gap_bound = vals[(x, "upper_bound")] - vals[(x, "proposed")]
        assert 0.0 <= gap_cont <= 1.0
        assert gap_cont <= gap_bound <= 2.0


# ---------------------------------------------------------------------------
# Eta validation runner
# ---------------------------------------------------------------------------

def test_eta_validation_rows_and_high_resolution_limit():
    spec = ExperimentSpec(kind="eta_validation", sweep=[1, 8], trials=800,
                          seed=42, cfg=SystemConfig(N=16, K=2, M_y=8, M_z=8),
                          geom=GEOM)
    res = run_eta_validation(spec)
    byx = {int(r.x): r for r in res.rows}
    assert set(byx) == {1, 8}
    assert byx[1].value < byx[8].value <= 1.001
    assert abs(byx[8].value - 1.0) < 0.005
    assert byx[1].trials == 800


# ---------------------------------------------------------------------------
# Outage runner
# ---------------------------------------------------------------------------

def outage_spec(K, trials=60, inner=120):
    return ExperimentSpec(kind="outage_vs_blockage",
                          sweep=[0.0, 0.5, 1.0], trials=trials, seed=31,
                          inner_samples=inner, tau_db=1.5,
                          cfg=SystemConfig(K=K, b=2),
                          geom=ScenarioGeometry(d_u=61.0))


def test_outage_endpoints_and_monotonicity():
    res = run_outage(outage_spec(3))
    vals = [r.value for r in res.rows]
    assert vals[0] == 0.0          # all links up at the default geometry
    assert vals[-1] == 1.0         # everything blocked
    assert all(b >= a for a, b in zip(vals, vals[1:]))  # coupled patterns


def test_outage_all_blocked_is_certain_for_any_k():
    for K in (1, 2):
        res = run_outage(ExperimentSpec(
            kind="outage_vs_blockage", sweep=[1.0], trials=20,
            inner_samples=30, seed=5, cfg=SystemConfig(K=K, b=2),
            geom=ScenarioGeometry(d_u=61.0)))
        assert res.rows[0].value == 1.0


def test_outage_matches_subset_solver():
    # removing blocked surfaces and re-running the solver gives the same
    # power the engine computes through its per-surface aligned gains
    from irsbeam.channel import draw_geometric_realization

    cfg = SystemConfig(N=8, K=3, M_y=2, M_z=2, b=2)
    geom = ScenarioGeometry(d_u=61.0)
    re = draw_geometric_realization(cfg, geom, np.random.default_rng(4))
    live = [0, 2]
    sub = ChannelRealization([re.bs_irs[k] for k in live],
                             [re.irs_user[k] for k in live])
    sub_cfg = SystemConfig(N=8, K=2, M_y=2, M_z=2, b=2)
    expected = solve_joint(sub, sub_cfg).gamma

    from irsbeam.beamformer import aligned_irs_gain, effective_gain_vector
    rows = np.stack([re.bs_irs[k].bs_response for k in live])
    gram = rows @ rows.conj().T
    s = np.array([aligned_irs_gain(
        effective_gain_vector(re.bs_irs[k], re.irs_user[k]), cfg.b)
        for k in live])
    gamma = cfg.p_watts * float(np.einsum("i,ij,j->", s, gram, s.conj()).real)
    assert gamma == pytest.approx(expected, rel=1e-10)


# ---------------------------------------------------------------------------
# Frozen shadowing
# ---------------------------------------------------------------------------

def test_freeze_shadowing_is_deterministic_and_distinct():
    spec = ExperimentSpec(kind="snr_vs_distance", sweep=[30.0], trials=4,
                          seed=12, cfg=small_cfg(freeze_shadowing=True),
                          geom=GEOM, variants=["proposed"])
    a, b = run_snr_vs_distance(spec), run_snr_vs_distance(spec)
    assert a.rows[0].value == b.rows[0].value
    free = ExperimentSpec(kind="snr_vs_distance", sweep=[30.0], trials=4,
                          seed=12, cfg=small_cfg(), geom=GEOM,
                          variants=["proposed"])
    assert run_snr_vs_distance(free).rows[0].value != a.rows[0].value
