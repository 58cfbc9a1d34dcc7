import json
import math

import numpy as np
import pytest

from fpplab.errors import DataError, ParameterError
from fpplab.graphcore import cycle_graph, path_graph
from fpplab.harness import (
    EXPERIMENTS,
    CycleScalingConfig,
    Ensemble,
    GraphSpec,
    TheoremReport,
    curve_stats,
    fit_exponent,
    hill_tail_index,
    load_defaults,
    plateau_detect,
    q_fit_grid,
    run_ensemble,
    run_experiment,
    threshold,
)
from fpplab.randsrc import RngStream, WeightLaw

POW = WeightLaw.power(0.8)


def test_defaults_have_provenance(tmp_path):
    doc = load_defaults()
    assert doc["version"]
    for rec in doc["thresholds"].values():
        assert rec["provenance"] in {"pilot", "convention", "theory"}
    bad = {"version": "0", "thresholds": {"x": {"value": 1}}}
    p = tmp_path / "d.json"
    p.write_text(json.dumps(bad))
    with pytest.raises(DataError):
        load_defaults(p)


def test_threshold_override():
    rec = threshold("plateau.cv", {"plateau.cv": 2.5})
    assert rec["value"] == 2.5 and rec["provenance"] == "override"
    assert threshold("plateau.cv")["provenance"] != "override"


def test_graph_spec():
    g = GraphSpec("path", {"n": 5}).build(RngStream(0))
    assert g.n == 5 and g.m == 4
    t = GraphSpec("gw-conditioned", {"N": 10, "extra_edge": True}).build(RngStream(1))
    assert t.m == t.n
    with pytest.raises(ParameterError):
        GraphSpec("torus", {}).build(RngStream(0))


def test_ensemble_validation():
    with pytest.raises(ParameterError):
        Ensemble(POW, 1, graph=path_graph(3))
    with pytest.raises(ParameterError):
        Ensemble(POW, 10)
    with pytest.raises(ParameterError):
        Ensemble(POW, 10, graph=path_graph(3), mode="fresh")
    with pytest.raises(ParameterError):
        Ensemble(POW, 10, graph=path_graph(3), process="sir")


def test_ensemble_is_deterministic_across_workers(tmp_path):
    g = cycle_graph(30)
    one, t1 = run_ensemble(Ensemble(POW, 80, 5, graph=g), return_times=True)
    two, t2 = run_ensemble(Ensemble(POW, 80, 5, graph=g, workers=2), return_times=True)
    assert np.array_equal(t1, t2)
    one.to_csv(tmp_path / "a.csv")
    two.to_csv(tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    other = run_ensemble(Ensemble(POW, 80, 6, graph=g))
    assert not np.array_equal(one.mean, other.mean)


def test_fresh_ensemble_cuts_at_smallest_graph():
    ens = Ensemble(POW, 20, 3, model=GraphSpec("gw-conditioned", {"N": 6}), mode="fresh", batches=10)
    cs, times = run_ensemble(ens, return_times=True)
    assert times.shape[0] == 20 and len(cs.k) == times.shape[1]
    assert np.all(times[:, 0] == 0)


def test_curve_stats_by_hand():
    times = np.array([[0.0, 1.0, 3.0], [0.0, 2.0, np.inf], [0.0, 3.0, 4.0], [0.0, 2.0, 5.0]])
    cs = curve_stats(times, batches=2)
    assert np.allclose(cs.mean, [0.0, 2.0, 4.0])
    assert list(cs.never) == [0, 0, 1]
    assert cs.max_share[1] == pytest.approx(3 / 8)
    assert cs.inc_mean[0] == pytest.approx(2.0)
    assert math.isnan(cs.inc_mean[-1])
    with pytest.raises(ParameterError):
        curve_stats(times, batches=5)


def _synthetic_times(heavy_at, M=4000, K=8, seed=0):
    gen = np.random.default_rng(seed)
    inc = gen.uniform(0.5, 1.5, (M, K - 1))
    if heavy_at is not None:
        inc[:, heavy_at - 1] = (1 - gen.random(M)) ** (-1 / 0.5)
    return np.concatenate([np.zeros((M, 1)), np.cumsum(inc, axis=1)], axis=1)


def test_plateau_detect_synthetic():
    assert plateau_detect(curve_stats(_synthetic_times(None), 20)) is None
    assert plateau_detect(curve_stats(_synthetic_times(3), 20)) == 3
    assert plateau_detect(curve_stats(_synthetic_times(3), 20), k_max=2) is None
    with pytest.raises(ParameterError):
        plateau_detect(curve_stats(_synthetic_times(None), 5))


def test_plateau_detect_on_path():
    cs = run_ensemble(Ensemble(POW, 4000, 1, graph=path_graph(8)))
    assert plateau_detect(cs) == 1


def test_fit_exponent():
    ks = 2.0 ** np.arange(3, 9)
    fit = fit_exponent(ks, 3 * ks**1.25)
    assert fit.slope == pytest.approx(1.25) and fit.intercept == pytest.approx(math.log(3))
    assert fit.ci_low == pytest.approx(1.25) and fit.ci_high == pytest.approx(1.25)
    with pytest.raises(ParameterError):
        fit_exponent(ks[:4], ks[:4])
    with pytest.raises(DataError):
        fit_exponent(ks, -ks)
    with pytest.raises(DataError):
        fit_exponent(ks, np.where(ks > 100, np.inf, ks))


def test_hill_on_pareto():
    x = (1 - np.random.default_rng(3).random(10**5)) ** (-1 / 0.8)
    h = hill_tail_index(x)
    assert abs(h.alpha - 0.8) < 0.1 and h.ci_low < h.alpha < h.ci_high
    with pytest.raises(ParameterError):
        hill_tail_index(x[:10])
    with pytest.raises(DataError):
        hill_tail_index(np.concatenate([x, [-1.0]]))


def test_report_json():
    r = TheoremReport("x", {"a": 1}, {"v": np.array([1.0, np.inf]), "n": np.int64(3)}, {}, {"ok": np.bool_(True)})
    d = json.loads(r.to_json())
    assert d["statistics"]["v"] == [1.0, "inf"] and d["statistics"]["n"] == 3
    assert d["verdict"] == "pass" and r.passed
    r.checks["bad"] = False
    assert r.verdict == "fail"


def test_q_fit_grid():
    ks = q_fit_grid(4096)
    assert ks[0] == 64 and ks[-1] == 4096 and len(ks) == 13
    assert list(q_fit_grid(128)) == [16, 23, 32, 45, 64, 91, 128]
    with pytest.raises(ParameterError):
        q_fit_grid(20)


def test_run_experiment_small_and_reproducible():
    assert set(EXPERIMENTS) >= {"gw-tightness", "gw-extra-edge", "ust", "er", "urn", "q-scaling", "cycle-scaling", "star-scaling"}
    cfg = CycleScalingConfig(n=128, runs=200, k_low=4, k_high=64)
    a = run_experiment("cycle-scaling", cfg)
    b = run_experiment("cycle-scaling", cfg)
    assert a.to_json() == b.to_json()
    assert set(a.checks) == {"slope_in_range"}
    strict = run_experiment("cycle-scaling", cfg, {"cycle_scaling.slope_low": 10.0})
    assert strict.verdict == "fail"
    with pytest.raises(ParameterError):
        run_experiment("nope")
