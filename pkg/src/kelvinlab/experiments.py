"""Numerical experiments on perturbed Kelvin waves and the three-armed filamenting patch.

Each run produces a :class:`RunRecord` whose series share one time grid and
whose verdicts are recomputed from the series by :func:`compute_verdicts`.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import math
import time as _time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from ._quad import TWO_PI
from .evolution import EvolutionState, History, RemeshParams, evolve, trace_particles
from .geometry import (
    NodeContour,
    area,
    complex_moment,
    fourier_to_contour,
    min_rotation_distance,
    rotate,
    symmetric_difference_area,
    torus_project,
)
from .vstate import KelvinWave, continuation, solve_kelvin

KINDS = ("stability", "rotation-tracking", "filamentation")


@dataclass
class ExperimentConfig:
    kind: str = "stability"
    m: int = 3
    beta: float = 0.05
    # perturbation: graph modes (multipliers of m when symmetric) with L1 size ``perturbation_size``
    perturbation_modes: list = field(default_factory=lambda: [2, 3])
    perturbation_size: float = 1e-3
    symmetric: bool = True
    initial: str = "kelvin"  # "kelvin" or "fig1" (r < 2 + sin 3 theta)
    T: float = 20.0
    dt: float = 0.01
    N: int = 512
    K_modes: int = 16
    remesh: Optional[dict] = None  # {"h_max": ..., "h_min": ...} for polygon runs
    grid: int = 2048  # rasterization rows for L1 distances
    log_every: float = 0.25
    l1_every: Optional[float] = None  # cadence of the L1 argmin estimator (defaults to log_every)
    window: Optional[float] = None  # drift window, defaults to beta / 2
    snapshot_times: list = field(default_factory=list)
    seed: int = 0
    r_prime: float = 1.2
    stability_threshold: float = 1e-2
    perimeter_ratio_target: float = 2.0
    monotone_after: float = 6.0
    near_factor: float = 8.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}")
        if self.kind == "stability" and not self.symmetric and self.perturbation_size > 0:
            # allowed as a control run, but it carries no verdict
            pass

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)


@dataclass
class RunRecord:
    config: dict
    times: list
    series: dict
    verdicts: dict
    wall_time: float = 0.0
    truncated: bool = False
    message: str = ""
    snapshots: dict = field(default_factory=dict, repr=False)

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "times": list(map(float, self.times)),
            "series": {k: [_num(v) for v in vals] for k, vals in self.series.items()},
            "verdicts": self.verdicts,
            "wall_time": self.wall_time,
            "truncated": self.truncated,
            "message": self.message,
        }

    def write(self, outdir, svg: bool = True) -> Path:
        from .output import write_contour_json, write_svg

        out = Path(outdir)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "record.json", "w") as fh:
            json.dump(self.to_dict(), fh, indent=1)
        names = list(self.series)
        with open(out / "series.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t"] + names)
            for i, t in enumerate(self.times):
                w.writerow([repr(float(t))] + [repr(_num(self.series[k][i])) for k in names])
        for t, c in sorted(self.snapshots.items()):
            tag = f"{t:07.3f}".replace(".", "_")
            write_contour_json(out / f"snapshot_t{tag}.json", c)
            if svg:
                write_svg(out / f"frame_t{tag}.svg", [c], title=f"t = {t:g}")
        return out


def _num(v):
    v = float(v)
    return v if math.isfinite(v) else float("nan")


# ---------------------------------------------------------------------------
# initial data


def perturbation_profile(cfg: ExperimentConfig, n: int) -> np.ndarray:
    """Unit-amplitude graph perturbation on ``theta_j = 2 pi j / n``, with seeded random phases."""
    rng = np.random.default_rng(cfg.seed)
    theta = TWO_PI * np.arange(n) / n
    p = np.zeros(n)
    for k in cfg.perturbation_modes:
        freq = k * cfg.m if cfg.symmetric else k
        phase = rng.uniform(0, TWO_PI)
        p += np.cos(freq * theta + phase)
    return p / np.max(np.abs(p))


def graph_l1(radius: np.ndarray, h: np.ndarray) -> float:
    """``|{R < r < R+h} u {R+h < r < R}|`` for a polar graph perturbation."""
    return TWO_PI * float(np.mean(np.abs(radius * h + 0.5 * h * h)))


def perturbed_wave(w: KelvinWave, cfg: ExperimentConfig, n: int) -> NodeContour:
    """Wave boundary plus a graph perturbation scaled so its L1 size is exactly ``cfg.perturbation_size``."""
    theta = TWO_PI * np.arange(n) / n
    r = w.boundary.radius(theta)
    if cfg.perturbation_size <= 0 or not cfg.perturbation_modes:
        return w.contour(n)
    p = perturbation_profile(cfg, n)
    amp = brentq(lambda a: graph_l1(r, a * p) - cfg.perturbation_size, 0.0, 0.5 * float(r.min()),
                 xtol=1e-16, rtol=1e-14)
    rr = r + amp * p
    return NodeContour(np.column_stack([rr * np.cos(theta), rr * np.sin(theta)]), smooth=True,
                       check_simple=False)


def fig1_contour(n: int = 512) -> NodeContour:
    """The three-armed patch ``r < 2 + sin(3 theta)``."""
    return NodeContour.polar(lambda t: 2.0 + np.sin(3.0 * t), n)


def _wave(cfg: ExperimentConfig) -> KelvinWave:
    if cfg.beta <= 0.3 / cfg.m:
        return solve_kelvin(cfg.m, cfg.beta, cfg.K_modes)
    return continuation(cfg.m, cfg.beta, max(2, int(math.ceil(cfg.beta / (0.3 / cfg.m)))), cfg.K_modes)[-1]


# ---------------------------------------------------------------------------
# verdicts (pure functions of the stored series)


def windowed_drift(times, theta, omega: float, m: int, window: float) -> float:
    """``max |T_m[Theta(t') - Theta(t) - Omega (t' - t)]|`` over ``0 < t' - t <= window``."""
    t = np.asarray(times, dtype=float)
    th = np.asarray(theta, dtype=float)
    best = 0.0
    for i in range(t.size):
        j = i + 1
        while j < t.size and t[j] - t[i] <= window + 1e-12:
            if np.isfinite(th[i]) and np.isfinite(th[j]):
                best = max(best, abs(torus_project(th[j] - th[i] - omega * (t[j] - t[i]), m)))
            j += 1
    return best


def compute_verdicts(kind: str, config: dict, times, series: dict) -> dict:
    t = np.asarray(times, dtype=float)
    out: dict = {}
    if kind in ("stability", "rotation-tracking"):
        dist = np.asarray(series["l1_fixed"], dtype=float)
        out["max_l1_fixed"] = float(np.nanmax(dist))
        mr = np.asarray(series["l1_min_rotation"], dtype=float)
        out["max_l1_min_rotation"] = float(np.nanmax(mr)) if np.any(np.isfinite(mr)) else float("nan")
        if kind == "stability":
            out["stable"] = bool(config["symmetric"] and out["max_l1_fixed"] < config["stability_threshold"])
            out["has_verdict"] = bool(config["symmetric"])
        window = config["window"] if config.get("window") else 0.5 * config["beta"]
        out["window"] = window
        out["drift"] = windowed_drift(t, series["theta_moment"], series["omega"][0], config["m"], window)
        est = np.asarray(series["theta_l1"], dtype=float)
        mom = np.asarray(series["theta_moment"], dtype=float)
        ok = np.isfinite(est)
        diffs = [abs(torus_project(a - b, config["m"])) for a, b in zip(mom[ok], est[ok])]
        out["estimator_gap"] = float(max(diffs)) if diffs else float("nan")
        out["phase_unreliable"] = bool(np.any(np.asarray(series["moment_ratio"]) < 0.1))
    if kind == "filamentation":
        p = np.asarray(series["perimeter"], dtype=float)
        out["initial_perimeter"] = float(p[0])
        out["initial_perimeter_below_20"] = bool(p[0] < 20.0)
        out["perimeter_ratio"] = float(p[-1] / p[0])
        out["perimeter_grows"] = bool(out["perimeter_ratio"] >= config["perimeter_ratio_target"])
        after = t >= config["monotone_after"] - 1e-9
        pa = p[after]
        out["monotone_after"] = bool(pa.size < 2 or np.all(np.diff(pa) > 0))
        bulk = np.asarray(series.get("bulk_distance", [np.nan]), dtype=float)
        out["max_bulk_distance"] = float(np.nanmax(bulk)) if np.any(np.isfinite(bulk)) else float("nan")
    return out


# ---------------------------------------------------------------------------
# runs


def _wave_run(cfg: ExperimentConfig) -> RunRecord:
    t_start = _time.perf_counter()
    w = _wave(cfg)
    c0 = perturbed_wave(w, cfg, cfg.N)
    ref_moment = complex_moment(w.contour(cfg.N), cfg.m)
    log_every = cfg.log_every
    l1_every = cfg.l1_every if cfg.l1_every else log_every
    l1_stride = max(1, int(round(l1_every / log_every)))
    rows = {k: [] for k in ("l1_fixed", "l1_min_rotation", "theta_moment", "theta_l1",
                            "theta_drift", "perimeter", "area", "impulse", "energy",
                            "re_moment", "im_moment", "moment_ratio", "omega")}
    times: list = []
    state = {"prev": None, "count": 0}

    def on_log(s: EvolutionState, d):
        t = s.time
        c = s.contour
        ref_t = w.contour(cfg.N, alpha=w.omega * t)
        phase = np.angle(d.moment / ref_moment) / cfg.m
        # unwrap on the torus of period 2 pi / m
        if state["prev"] is not None:
            phase = state["prev"] + torus_project(phase - state["prev"], cfg.m)
        state["prev"] = phase
        rows["l1_fixed"].append(symmetric_difference_area(c, ref_t, resolution=cfg.grid))
        if state["count"] % l1_stride == 0:
            fit = min_rotation_distance(c, w, resolution=cfg.grid, n_ref=cfg.N)
            rows["l1_min_rotation"].append(fit.distance)
            rows["theta_l1"].append(phase + torus_project(fit.angle - phase, cfg.m))
        else:
            rows["l1_min_rotation"].append(float("nan"))
            rows["theta_l1"].append(float("nan"))
        state["count"] += 1
        rows["theta_moment"].append(phase)
        rows["theta_drift"].append(torus_project(phase - w.omega * t, cfg.m))
        rows["perimeter"].append(d.perimeter)
        rows["area"].append(d.area)
        rows["impulse"].append(d.impulse)
        rows["energy"].append(d.energy)
        rows["re_moment"].append(d.moment.real)
        rows["im_moment"].append(d.moment.imag)
        rows["moment_ratio"].append(abs(d.moment) / abs(ref_moment))
        rows["omega"].append(w.omega)
        times.append(t)

    hist = evolve(EvolutionState(0.0, c0), cfg.T, cfg.dt, None, m=cfg.m, log_every=log_every,
                  snapshot_times=cfg.snapshot_times, on_log=on_log, near_factor=cfg.near_factor)
    conf = cfg.to_dict()
    conf["omega"] = w.omega
    conf["initial_l1"] = symmetric_difference_area(c0, w.contour(cfg.N), resolution=cfg.grid)
    conf["initial_support_radius"] = float(np.max(np.linalg.norm(c0.nodes, axis=1)))
    conf["initial_support_ok"] = bool(conf["initial_support_radius"] < cfg.r_prime)
    return RunRecord(conf, times, rows, compute_verdicts(cfg.kind, conf, times, rows),
                     _time.perf_counter() - t_start, hist.truncated, hist.message, dict(hist.snapshots))


def run_stability(cfg: ExperimentConfig) -> RunRecord:
    if cfg.kind != "stability":
        raise ValueError("config kind must be 'stability'")
    return _wave_run(cfg)


def run_rotation_tracking(cfg: ExperimentConfig) -> RunRecord:
    if cfg.kind != "rotation-tracking":
        raise ValueError("config kind must be 'rotation-tracking'")
    return _wave_run(cfg)


def fig1_config(**kw) -> ExperimentConfig:
    base = dict(kind="filamentation", initial="fig1", m=3, beta=0.0, T=20.0, dt=0.01, N=512,
                remesh={"h_max": 0.06, "h_min": 0.015}, log_every=0.5,
                snapshot_times=[0, 3, 6, 9, 15, 20], perturbation_size=0.0)
    base.update(kw)
    return ExperimentConfig(**base)


def run_filamentation(cfg: ExperimentConfig) -> RunRecord:
    if cfg.kind != "filamentation":
        raise ValueError("config kind must be 'filamentation'")
    t_start = _time.perf_counter()
    if cfg.initial == "fig1":
        c0 = fig1_contour(cfg.N)
    else:
        w = _wave(cfg)
        c0 = perturbed_wave(w, cfg, cfg.N)
    rp = RemeshParams(**cfg.remesh) if cfg.remesh else RemeshParams.for_nodes(cfg.N)
    start = c0.as_polygon()
    ref = start
    rows = {k: [] for k in ("perimeter", "area", "impulse", "energy", "re_moment", "im_moment",
                            "nodes", "bulk_distance")}
    times: list = []

    def on_log(s: EvolutionState, d):
        times.append(s.time)
        rows["perimeter"].append(d.perimeter)
        rows["area"].append(d.area)
        rows["impulse"].append(d.impulse)
        rows["energy"].append(d.energy)
        rows["re_moment"].append(d.moment.real)
        rows["im_moment"].append(d.moment.imag)
        rows["nodes"].append(s.contour.n)
        fit = min_rotation_distance(s.contour, ref, m=cfg.m, n_scan=32, resolution=cfg.grid // 2)
        rows["bulk_distance"].append(fit.distance / d.area)

    hist = evolve(EvolutionState(0.0, start), cfg.T, cfg.dt, rp, m=cfg.m, log_every=cfg.log_every,
                  snapshot_times=cfg.snapshot_times, on_log=on_log, near_factor=cfg.near_factor)
    conf = cfg.to_dict()
    return RunRecord(conf, times, rows, compute_verdicts(cfg.kind, conf, times, rows),
                     _time.perf_counter() - t_start, hist.truncated, hist.message, dict(hist.snapshots))


def run_experiment(cfg: ExperimentConfig) -> RunRecord:
    return {"stability": run_stability, "rotation-tracking": run_rotation_tracking,
            "filamentation": run_filamentation}[cfg.kind](cfg)


# ---------------------------------------------------------------------------
# sweeps


def _summary_row(cfg: ExperimentConfig) -> dict:
    row = {"kind": cfg.kind, "m": cfg.m, "beta": cfg.beta, "perturbation_size": cfg.perturbation_size,
           "seed": cfg.seed}
    try:
        rec = run_experiment(cfg)
        row.update(rec.verdicts)
        row["error"] = ""
    except Exception as exc:  # failures stay in their row
        row["error"] = f"{type(exc).__name__}: {exc}"
    return row


def sweep(cfgs: list[ExperimentConfig], workers: int = 1) -> list[dict]:
    """One summary row per config, in input order."""
    kinds = {c.kind for c in cfgs}
    if len(kinds) > 1:
        raise ValueError("a sweep must have a single kind")
    if workers <= 1:
        return [_summary_row(c) for c in cfgs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_summary_row, cfgs))


def drift_exponent(sizes, drifts) -> float:
    """Least-squares slope of ``log drift`` against ``log size``."""
    x, y = np.log(np.asarray(sizes, float)), np.log(np.asarray(drifts, float))
    return float(np.polyfit(x, y, 1)[0])


# ---------------------------------------------------------------------------
# winding of passive tracers


@dataclass(frozen=True)
class WindingResult:
    times: np.ndarray
    separation: np.ndarray  # winding(r1) - winding(r2)
    predicted_rate: float  # (u_theta(r1) - u_theta(r2)) / (2 pi), disc approximation
    fitted_rate: float


def winding_separation(m: int = 3, beta: float = 0.01, kappa: float = 0.4, T: float = 10.0,
                       dt: float = 0.02, N: int = 256, frame_every: float = 0.1) -> WindingResult:
    """Tracers at radii 1 and ``1 + kappa/2`` around a small-amplitude wave; separation of windings."""
    w = solve_kelvin(m, beta)
    hist = evolve(EvolutionState(0.0, w.contour(N)), T, dt, None, m=m, frame_every=frame_every)
    r1, r2 = 1.0, 1.0 + 0.5 * kappa
    # seeds on the ray theta = pi/(2m), where the wave boundary is close to radius 1
    ang = math.pi / (2 * m)
    seeds = np.array([[r1 * math.cos(ang), r1 * math.sin(ang)], [r2 * math.cos(ang), r2 * math.sin(ang)]])
    tr = trace_particles(hist, seeds)
    sep = tr.winding[0] - tr.winding[1]
    pred = (0.5 - 0.5 / r2**2) / TWO_PI
    fitted = float(np.polyfit(tr.times, sep, 1)[0])
    return WindingResult(tr.times, sep, pred, fitted)


def timestamped_dir(root, kind: str) -> Path:
    stamp = _time.strftime("%Y%m%d-%H%M%S")
    return Path(root) / f"{kind}-{stamp}"
