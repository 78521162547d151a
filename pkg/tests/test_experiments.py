import csv
import json
import math

import numpy as np
import pytest

from kelvinlab.experiments import (
    ExperimentConfig,
    RunRecord,
    compute_verdicts,
    drift_exponent,
    fig1_config,
    fig1_contour,
    graph_l1,
    perturbation_profile,
    perturbed_wave,
    run_experiment,
    run_filamentation,
    run_rotation_tracking,
    run_stability,
    sweep,
    timestamped_dir,
    windowed_drift,
    winding_separation,
)
from kelvinlab.geometry import check_m_fold, perimeter, symmetric_difference_area
from kelvinlab.vstate import solve_kelvin

SHORT = dict(T=1.0, dt=0.02, N=256, log_every=0.2, grid=1024)


def short(**kw):
    return ExperimentConfig(**{**SHORT, **kw})


@pytest.fixture(scope="module")
def perturbed_run():
    return run_stability(short(perturbation_size=1e-3))


class TestConfig:
    def test_round_trip(self):
        cfg = short(seed=4)
        assert ExperimentConfig.from_dict(json.loads(json.dumps(cfg.to_dict()))) == cfg

    def test_rejects_unknown(self):
        with pytest.raises(ValueError):
            ExperimentConfig.from_dict({"kind": "stability", "bogus": 1})
        with pytest.raises(ValueError):
            ExperimentConfig(kind="nope")


class TestInitialData:
    def test_profile_symmetry_and_determinism(self):
        cfg = short(seed=7)
        a, b = perturbation_profile(cfg, 512), perturbation_profile(cfg, 512)
        assert np.array_equal(a, b) and np.max(np.abs(a)) == 1.0

    def test_perturbed_wave_size(self):
        w = solve_kelvin(3, 0.05)
        cfg = short(perturbation_size=1e-3)
        c = perturbed_wave(w, cfg, 768)
        theta = 2 * np.pi * np.arange(768) / 768
        h = np.linalg.norm(c.nodes, axis=1) - w.boundary.radius(theta)
        assert graph_l1(w.boundary.radius(theta), h) == pytest.approx(1e-3, rel=1e-10)
        assert check_m_fold(c, 3)
        # rasterized L1 agrees with the exact polar value to about 2%
        assert symmetric_difference_area(c, w.contour(768)) == pytest.approx(1e-3, rel=0.03)

    def test_control_is_not_symmetric(self):
        w = solve_kelvin(3, 0.05)
        c = perturbed_wave(w, short(perturbation_modes=[1], symmetric=False), 768)
        assert not check_m_fold(c, 3)

    def test_fig1_perimeter(self):
        assert perimeter(fig1_contour(1024)) < 20


class TestWaveRuns:
    def test_unperturbed_floor(self):
        rec = run_rotation_tracking(short(kind="rotation-tracking", perturbation_size=0.0))
        assert rec.verdicts["max_l1_fixed"] < 1e-4
        assert np.max(np.abs(rec.series["theta_drift"])) < 1e-4
        assert rec.verdicts["drift"] < 1e-4

    def test_stability_verdict(self, perturbed_run):
        v = perturbed_run.verdicts
        assert v["stable"] and v["has_verdict"]
        assert v["max_l1_fixed"] < 1e-2
        assert perturbed_run.config["initial_support_ok"]

    def test_estimators_agree(self, perturbed_run):
        beta = perturbed_run.config["beta"]
        bound = 2 * perturbed_run.verdicts["max_l1_fixed"] / (math.pi * beta)
        assert perturbed_run.verdicts["estimator_gap"] <= bound

    def test_shared_time_grid(self, perturbed_run):
        n = len(perturbed_run.times)
        assert n == 6
        assert np.allclose(perturbed_run.times, np.linspace(0, 1, 6))
        assert all(len(v) == n for v in perturbed_run.series.values())

    def test_verdicts_replay_from_csv(self, perturbed_run, tmp_path):
        out = perturbed_run.write(tmp_path / "run")
        with open(out / "series.csv") as fh:
            rows = list(csv.DictReader(fh))
        times = [float(r["t"]) for r in rows]
        series = {k: [float(r[k]) for r in rows] for k in rows[0] if k != "t"}
        cfg = json.loads((out / "record.json").read_text())["config"]
        again = compute_verdicts("stability", cfg, times, series)
        for k, v in perturbed_run.verdicts.items():
            if isinstance(v, float) and math.isnan(v):
                assert math.isnan(again[k])
            else:
                assert again[k] == v

    def test_control_run_has_no_verdict(self):
        rec = run_stability(short(T=0.5, perturbation_modes=[1], symmetric=False))
        assert rec.verdicts["has_verdict"] is False and rec.verdicts["stable"] is False

    def test_kind_mismatch(self):
        with pytest.raises(ValueError):
            run_stability(short(kind="rotation-tracking"))
        with pytest.raises(ValueError):
            run_filamentation(short())


class TestFilamentation:
    def test_short_run(self, tmp_path):
        cfg = fig1_config(T=1.0, snapshot_times=[0, 1], grid=512)
        rec = run_experiment(cfg)
        v = rec.verdicts
        assert v["initial_perimeter_below_20"]
        assert v["perimeter_ratio"] > 1.0
        assert sorted(rec.snapshots) == [0, 1]
        # the patch is far from a rotating equilibrium, so the bulk distance grows from zero
        assert rec.series["bulk_distance"][0] < 1e-6
        assert 0 < v["max_bulk_distance"] < 0.5
        out = rec.write(tmp_path / "fil")
        assert (out / "frame_t001_000.svg").read_text().startswith("<svg")
        assert json.loads((out / "snapshot_t000_000.json").read_text())

    def test_winding_separation(self):
        res = winding_separation(T=4.0)
        assert res.fitted_rate == pytest.approx(res.predicted_rate, rel=0.05)
        assert res.separation[-1] > 0


class TestVerdictFunctions:
    def test_windowed_drift(self):
        t = np.linspace(0, 1, 11)
        theta = 0.5 * t + 0.01 * np.sin(7 * t)
        d = windowed_drift(t, theta, 0.5, 3, 0.2)
        brute = max(abs(0.01 * (np.sin(7 * t[j]) - np.sin(7 * t[i])))
                    for i in range(11) for j in range(i + 1, 11) if t[j] - t[i] <= 0.2 + 1e-12)
        assert d == pytest.approx(brute)
        assert windowed_drift(t, 0.5 * t, 0.5, 3, 0.2) < 1e-15

    def test_drift_exponent(self):
        s = np.array([1e-3, 2e-3, 4e-3])
        assert drift_exponent(s, 3 * s**0.5) == pytest.approx(0.5)

    def test_filament_verdicts(self):
        cfg = fig1_config().to_dict()
        t = [0, 3, 6, 9, 12]
        v = compute_verdicts("filamentation", cfg, t, {"perimeter": [18, 19, 20, 30, 40]})
        assert v["perimeter_grows"] and v["monotone_after"] and v["initial_perimeter_below_20"]
        v = compute_verdicts("filamentation", cfg, t, {"perimeter": [18, 19, 20, 30, 29]})
        assert not v["perimeter_grows"] and not v["monotone_after"]


class TestSweep:
    def test_cardinality_and_determinism(self):
        cfgs = [short(T=0.5, perturbation_size=s) for s in (5e-4, 1e-3, 2e-3)]
        rows = sweep(cfgs)
        assert len(rows) == 3
        assert [r["perturbation_size"] for r in rows] == [5e-4, 1e-3, 2e-3]
        assert sweep(cfgs[:1]) == rows[:1]
        assert rows[0]["max_l1_fixed"] < rows[2]["max_l1_fixed"]

    def test_failures_stay_in_row(self):
        rows = sweep([short(T=0.5), short(T=-1.0)])
        assert rows[0]["error"] == ""
        assert "ValueError" in rows[1]["error"]

    def test_homogeneous_kind(self):
        with pytest.raises(ValueError):
            sweep([short(), short(kind="rotation-tracking")])

    def test_timestamped_dir(self, tmp_path):
        d = timestamped_dir(tmp_path, "stability")
        assert d.parent == tmp_path and d.name.startswith("stability-")
