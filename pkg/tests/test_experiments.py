import math

import pytest

from tacq.experiments import (
    SWEEP_HEADER,
    TREESTATS_HEADER,
    SweepConfig,
    format_sweep,
    format_tree_stats,
    run_sweep,
    run_tree_stats,
    threshold_p,
)


def test_threshold_degree():
    n = 1 << 14
    assert threshold_p(n) * n == pytest.approx(14, abs=1e-12)


def test_sweep_header():
    assert SWEEP_HEADER == "n,p,multiplier,trials,witness_rate,certified_ge2_rate,mean_residual_bound,mean_runtime_ms"


def test_sweep_is_reproducible():
    cfg = SweepConfig(n_list=(256,), multipliers=(0.6, 1.4), trials=1, base_seed=5)
    a, b = format_sweep(run_sweep(cfg)), format_sweep(run_sweep(cfg))
    assert a == b
    lines = a.splitlines()
    assert lines[0] == SWEEP_HEADER and len(lines) == 3
    assert all(line.endswith(",nan") for line in lines[1:])


def test_sweep_rows_are_well_formed():
    cfg = SweepConfig(n_list=(128, 256), multipliers=(0.8, 4.0), trials=3, base_seed=1)
    seen = []
    rows = run_sweep(cfg, on_trial=lambda n, m, k, g, rep, cert: seen.append((n, m, k, rep.outcome, cert)))
    assert [(r.n, r.multiplier) for r in rows] == [(128, 0.8), (128, 4.0), (256, 0.8), (256, 4.0)]
    assert len(seen) == 12
    for r in rows:
        assert 0 <= r.witness_rate <= 1 and 0 <= r.certified_ge2_rate <= 1
        assert 1 <= r.mean_residual_bound <= r.n
        assert r.p == pytest.approx(r.multiplier * math.log2(r.n) / r.n)
        assert math.isnan(r.mean_runtime_ms)
    timed = run_sweep(SweepConfig(n_list=(128,), multipliers=(1.0,), trials=1, timing=True))
    assert timed[0].mean_runtime_ms > 0


@pytest.mark.parametrize("kw", [
    {"trials": 0},
    {"multipliers": (0.0,)},
    {"multipliers": ()},
    {"n_list": (1,)},
    {"base_seed": -1},
    {"n_list": (8,), "multipliers": (10.0,)},
])
def test_sweep_config_validation(kw):
    with pytest.raises(ValueError):
        SweepConfig(**kw)


def test_tree_stats_smoke():
    s = run_tree_stats(6, 50, base_seed=3)
    assert all(0 <= f <= 1 / 3 for f in s.fractions)
    assert s.trials == 50 and len(s.counts) == 50
    assert s.target == pytest.approx(0.049787, abs=1e-6)
    assert s.bound == pytest.approx(6 / (3 * math.e**3))
    text = format_tree_stats([s])
    assert text.splitlines()[0] == TREESTATS_HEADER
    assert run_tree_stats(6, 50, base_seed=3) == s
    with pytest.raises(ValueError):
        run_tree_stats(5, 10)
    with pytest.raises(ValueError):
        run_tree_stats(10, 0)
