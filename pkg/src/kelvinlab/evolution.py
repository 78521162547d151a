"""Contour dynamics: Lagrangian advection of patch boundary nodes.

Each node moves with the velocity the patch induces at it.  Smooth contours
(sampled at equispaced parameter values) keep their node count and use the
spectral self-evaluation.  Polygon contours use exact segment integrals and
are remeshed after every step so that stretching filaments stay resolved.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import _quad
from .field import _self_velocity, compute_diagnostics, evaluate_field
from .geometry import Diagnostics, NodeContour, _shoelace


class CFLError(ValueError):
    def __init__(self, message: str, suggested_dt: float):
        super().__init__(message)
        self.suggested_dt = suggested_dt


@dataclass(frozen=True)
class RemeshParams:
    """Node spacing bounds for polygon contours.

    Spacing is kept below ``h_max`` (and below ``curvature_angle / kappa``
    where the curve bends), and nodes closer than ``h_min`` are merged where
    the turning angle is below ``removal_angle``.
    """

    h_max: float
    h_min: float
    curvature_angle: float = 0.2
    removal_angle: float = 0.05
    node_cap: int = 200_000

    def __post_init__(self):
        if not (0 < self.h_min < self.h_max):
            raise ValueError("need 0 < h_min < h_max")

    @classmethod
    def for_nodes(cls, n0: int, **kw) -> "RemeshParams":
        """Defaults tied to an initial node count ``n0``: twice the initial unit-circle spacing."""
        h_max = 2.0 * math.pi * 2.0 / n0
        return cls(h_max=h_max, h_min=kw.pop("h_min", h_max / 8.0), **kw)


@dataclass(frozen=True)
class EvolutionState:
    time: float
    contour: NodeContour
    step_count: int = 0


# ---------------------------------------------------------------------------
# velocity and stepping

DEFAULT_NEAR_FACTOR = 8.0


def contour_velocity(c: NodeContour, near_factor: float = DEFAULT_NEAR_FACTOR) -> np.ndarray:
    """Velocity at the nodes of a single closed contour."""
    if c.smooth:
        return _self_velocity(c)
    x = np.ascontiguousarray(c.nodes[:, 0])
    y = np.ascontiguousarray(c.nodes[:, 1])
    ux, uy = _quad.polygon_velocity(x, y, x, y, np.ones(1), np.array([0, c.n], dtype=np.int64),
                                    float(near_factor))
    return np.column_stack([ux, uy])


def _min_spacing(pts: np.ndarray) -> float:
    return float(np.min(np.linalg.norm(np.roll(pts, -1, axis=0) - pts, axis=1)))


def step(s: EvolutionState, dt: float, reverse: bool = False,
         near_factor: float = DEFAULT_NEAR_FACTOR) -> EvolutionState:
    """One classical RK4 step; the contour is frozen within each stage."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    sign = -1.0 if reverse else 1.0
    c = s.contour
    x0 = c.nodes

    def vel(pts):
        return sign * contour_velocity(NodeContour._trusted(pts, c.smooth), near_factor)

    k1 = vel(x0)
    umax = float(np.max(np.linalg.norm(k1, axis=1)))
    hmin = _min_spacing(x0)
    if dt * umax > 0.5 * hmin:
        suggested = 0.5 * hmin / umax
        raise CFLError(f"dt={dt:.3g} violates dt*max|u| <= h_min/2; try dt <= {suggested:.3g}",
                       suggested)
    k2 = vel(x0 + 0.5 * dt * k1)
    k3 = vel(x0 + 0.5 * dt * k2)
    k4 = vel(x0 + dt * k3)
    x1 = x0 + dt * (k1 + 2 * k2 + 2 * k3 + k4) / 6.0
    return EvolutionState(s.time + sign * dt, NodeContour._trusted(x1, c.smooth), s.step_count + 1)


# ---------------------------------------------------------------------------
# remeshing


def _turning(pts: np.ndarray) -> np.ndarray:
    # exterior angle at each node
    a = pts - np.roll(pts, 1, axis=0)
    b = np.roll(pts, -1, axis=0) - pts
    cross = a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0]
    dot = np.sum(a * b, axis=1)
    return np.arctan2(cross, dot)


def _cubic_points(p, d, i, fractions):
    """Points on the chord-length cubic through nodes i-1, i, i+1, i+2 at fractions of segment i."""
    n = p.shape[0]
    im, ip, ipp = (i - 1) % n, (i + 1) % n, (i + 2) % n
    t = np.array([-d[im], 0.0, d[i], d[i] + d[ip]])
    pts = p[[im, i, ip, ipp]]
    s = fractions * d[i]
    out = np.zeros((s.size, 2))
    for a in range(4):
        w = np.ones_like(s)
        for b in range(4):
            if a != b:
                w *= (s - t[b]) / (t[a] - t[b])
        out += w[:, None] * pts[a]
    return out


def _restore_area(pts: np.ndarray, moved: np.ndarray, target: float) -> np.ndarray:
    """Shift the ``moved`` nodes along their normals by a common distance so the polygon area is ``target``."""
    if moved.size == 0:
        return pts
    nxt = np.roll(pts, -1, axis=0)
    prv = np.roll(pts, 1, axis=0)
    tang = nxt - prv
    nrm = np.column_stack([tang[:, 1], -tang[:, 0]])
    nrm /= np.maximum(np.linalg.norm(nrm, axis=1, keepdims=True), 1e-300)
    direction = np.zeros_like(pts)
    direction[moved] = nrm[moved]
    # area(pts + delta*direction) is quadratic in delta
    a0 = _shoelace(pts) - target
    a1 = 0.5 * (np.dot(pts[:, 0], np.roll(direction[:, 1], -1)) + np.dot(direction[:, 0], np.roll(pts[:, 1], -1))
                - np.dot(np.roll(pts[:, 0], -1), direction[:, 1]) - np.dot(np.roll(direction[:, 0], -1), pts[:, 1]))
    a2 = _shoelace(direction)
    if abs(a1) < 1e-300:
        return pts
    delta = -a0 / a1
    for _ in range(5):
        f = a0 + a1 * delta + a2 * delta**2
        delta -= f / (a1 + 2 * a2 * delta)
    return pts + delta * direction


def remesh(c: NodeContour, p: RemeshParams) -> NodeContour:
    """Insert nodes on long segments, merge short low-curvature ones, keep the polygon area."""
    pts = c.nodes
    n = pts.shape[0]
    d = np.linalg.norm(np.roll(pts, -1, axis=0) - pts, axis=1)
    turn = np.abs(_turning(pts))
    # local curvature estimate at each node and the resulting target spacing per segment
    kappa = turn / np.maximum(0.5 * (d + np.roll(d, 1)), 1e-300)
    kseg = np.maximum(kappa, np.roll(kappa, -1))
    with np.errstate(divide="ignore"):
        h_loc = np.where(kseg > 0, p.curvature_angle / kseg, np.inf)
    h_loc = np.clip(h_loc, 2.0 * p.h_min, p.h_max)

    n_ins = np.maximum(np.ceil(d / h_loc - 1e-6).astype(np.int64) - 1, 0)
    # merge candidates: a short neighbouring segment, a straight-ish corner, and a merged
    # segment that does not itself need splitting
    short = (d < p.h_min) | (np.roll(d, 1) < p.h_min)
    # segments under h_min/2 are merged whatever the local turning: they are sawtooth
    # kinks that only throttle the CFL step
    tiny = (d < 0.5 * p.h_min) | (np.roll(d, 1) < 0.5 * p.h_min)
    merged = d + np.roll(d, 1)
    removable = ((short & (turn < p.removal_angle) & (merged <= p.h_max)) | tiny) \
        & (n_ins == 0) & (np.roll(n_ins, 1) == 0)
    if not removable.any() and not n_ins.any():
        return c
    remove = np.zeros(n, dtype=bool)
    for i in np.flatnonzero(removable):
        if not remove[(i - 1) % n] and not remove[(i + 1) % n]:
            remove[i] = True
    if n - remove.sum() < 8:
        remove[:] = False

    target = _shoelace(pts)
    new_pts, moved = [], []
    for i in range(n):
        if remove[i]:
            # neighbours of a removed node are adjusted to restore area
            if new_pts:
                moved.append(len(new_pts) - 1)
            continue
        new_pts.append(pts[i])
        if remove[(i - 1) % n]:
            moved.append(len(new_pts) - 1)
        k = n_ins[i]
        if k:
            fr = np.arange(1, k + 1) / (k + 1)
            for q in _cubic_points(pts, d, i, fr):
                new_pts.append(q)
                moved.append(len(new_pts) - 1)
    out = np.array(new_pts)
    out = _restore_area(out, np.unique(np.array(moved, dtype=np.int64)), target)
    return NodeContour._trusted(out, False)


# ---------------------------------------------------------------------------
# driver


@dataclass
class History:
    times: list = field(default_factory=list)
    diagnostics: list = field(default_factory=list)
    snapshots: dict = field(default_factory=dict)
    frames: list = field(default_factory=list)
    frame_times: list = field(default_factory=list)
    truncated: bool = False
    final: Optional[EvolutionState] = None
    m: int = 1
    message: str = ""

    def series(self, name: str) -> np.ndarray:
        return np.array([getattr(d, name) for d in self.diagnostics])


def _advance(s, dt, reverse, near_factor, depth=0):
    try:
        return step(s, dt, reverse, near_factor)
    except CFLError as exc:
        if depth >= 12:
            raise
        # split into the power-of-two number of substeps the guard asks for; each
        # substep may split again if the contour speeds up
        levels = min(12 - depth, max(1, math.ceil(math.log2(dt / exc.suggested_dt))))
        sub = dt / 2**levels
        out = s
        for _ in range(2**levels):
            out = _advance(out, sub, reverse, near_factor, depth + levels)
        return EvolutionState(out.time, out.contour, s.step_count + 1)


def evolve(s0: EvolutionState, T: float, dt: float, remesh_params: Optional[RemeshParams] = None,
           m: int = 1, log_every: Optional[float] = None, snapshot_times: Sequence[float] = (),
           frame_every: Optional[float] = None, reverse: bool = False,
           near_factor: float = DEFAULT_NEAR_FACTOR, on_log=None) -> History:
    """Advance ``s0`` by ``T`` (backwards in time with ``reverse``).

    Diagnostics are logged every ``log_every`` time units, contours stored at
    ``snapshot_times`` (absolute times, reached exactly by a partial step off the
    main trajectory) and every ``frame_every`` (for particle
    tracing).  Exceeding the node cap stops the run with ``truncated=True``.
    """
    if T <= 0:
        raise ValueError("T must be positive")
    n_steps = max(1, int(math.ceil(T / dt - 1e-9)))
    h = T / n_steps
    sign = -1.0 if reverse else 1.0
    log_stride = n_steps if log_every is None else max(1, int(round(log_every / h)))
    frame_stride = None if frame_every is None else max(1, int(round(frame_every / h)))
    snaps = sorted(snapshot_times)
    hist = History(m=m)
    s = s0

    def record(state, k):
        if k % log_stride == 0 or k == n_steps:
            d = compute_diagnostics(state.contour, m)
            hist.times.append(state.time)
            hist.diagnostics.append(d)
            if on_log is not None:
                on_log(state, d)
        if frame_stride is not None and (k % frame_stride == 0 or k == n_steps):
            hist.frames.append(state.contour)
            hist.frame_times.append(state.time)
        for ts in snaps:
            if ts not in hist.snapshots and abs(state.time - ts) <= 1e-9 * max(1.0, abs(ts)):
                hist.snapshots[ts] = state.contour

    def snap_between(state):
        # requested times strictly inside the coming step get an off-trajectory partial step
        for ts in snaps:
            gap = sign * (ts - state.time)
            if ts not in hist.snapshots and 1e-9 * max(1.0, abs(ts)) < gap < h - 1e-9 * max(1.0, abs(ts)):
                hist.snapshots[ts] = _advance(state, gap, reverse, near_factor).contour

    record(s, 0)
    for k in range(1, n_steps + 1):
        snap_between(s)
        s = _advance(s, h, reverse, near_factor)
        # pin the clock to the grid so rounding does not accumulate
        s = EvolutionState(s0.time + sign * k * h, s.contour, s.step_count)
        if remesh_params is not None and not s.contour.smooth:
            s = EvolutionState(s.time, remesh(s.contour, remesh_params), s.step_count)
            if s.contour.n > remesh_params.node_cap:
                hist.truncated = True
                hist.message = f"node cap {remesh_params.node_cap} exceeded at t={s.time:.4g}"
                record(s, n_steps)
                break
        record(s, k)
    hist.final = s
    return hist


def write_diagnostics_csv(path, hist: History) -> None:
    import csv

    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "area", "impulse", "energy", "perimeter", "Re I", "Im I"])
        for t, d in zip(hist.times, hist.diagnostics):
            w.writerow([repr(float(t))] + [repr(float(v)) for v in d.row()])


# ---------------------------------------------------------------------------
# passive particles


@dataclass(frozen=True, eq=False)
class TrajectorySet:
    seeds: np.ndarray
    times: np.ndarray
    paths: np.ndarray  # (S, T, 2), NaN after truncation
    winding: np.ndarray  # (S, T), unwrapped polar angle / 2 pi
    truncated: np.ndarray  # (S,)


def _frame_velocity(frames, frame_times, t, pts):
    ft = np.asarray(frame_times)
    forward = ft[-1] >= ft[0]
    key = ft if forward else -ft
    tk = t if forward else -t
    j = int(np.clip(np.searchsorted(key, tk, side="right") - 1, 0, len(ft) - 2))
    t0, t1 = ft[j], ft[j + 1]
    lam = 0.0 if t1 == t0 else float(np.clip((t - t0) / (t1 - t0), 0.0, 1.0))
    a, b = frames[j], frames[j + 1]
    if a.n == b.n:
        c = NodeContour._trusted((1 - lam) * a.nodes + lam * b.nodes, a.smooth and b.smooth)
        return evaluate_field(c, pts)[1]
    return (1 - lam) * evaluate_field(a, pts)[1] + lam * evaluate_field(b, pts)[1]


def trace_particles(hist: History, seeds, dt: Optional[float] = None,
                    box_factor: float = 3.0) -> TrajectorySet:
    """RK4 paths of passive tracers through the recorded frames (linear in time between frames)."""
    frames, ft = hist.frames, np.asarray(hist.frame_times)
    if len(frames) < 2:
        raise ValueError("history needs at least two frames (set frame_every in evolve)")
    seeds = np.atleast_2d(np.asarray(seeds, dtype=float))
    if dt is None:
        dt = float(np.min(np.abs(np.diff(ft))))
    span = ft[-1] - ft[0]
    n = max(1, int(math.ceil(abs(span) / dt - 1e-9)))
    h = span / n
    times = ft[0] + h * np.arange(n + 1)
    extent = max(float(np.max(np.abs(f.nodes))) for f in frames)
    bound = box_factor * max(extent, float(np.max(np.abs(seeds))))

    paths = np.full((seeds.shape[0], n + 1, 2), np.nan)
    paths[:, 0] = seeds
    alive = np.ones(seeds.shape[0], dtype=bool)
    x = seeds.copy()
    for k in range(n):
        t = times[k]
        idx = np.flatnonzero(alive)
        if idx.size == 0:
            break
        p = x[idx]
        k1 = _frame_velocity(frames, ft, t, p)
        k2 = _frame_velocity(frames, ft, t + 0.5 * h, p + 0.5 * h * k1)
        k3 = _frame_velocity(frames, ft, t + 0.5 * h, p + 0.5 * h * k2)
        k4 = _frame_velocity(frames, ft, t + h, p + h * k3)
        p = p + h * (k1 + 2 * k2 + 2 * k3 + k4) / 6.0
        out = np.max(np.abs(p), axis=1) > bound
        alive[idx[out]] = False
        x[idx] = p
        keep = idx[~out]
        paths[keep, k + 1] = p[~out]
    angle = np.arctan2(paths[..., 1], paths[..., 0])
    winding = np.full(angle.shape, np.nan)
    for i in range(seeds.shape[0]):
        ok = np.isfinite(angle[i])
        winding[i, ok] = np.unwrap(angle[i, ok]) / (2 * np.pi)
        winding[i] -= winding[i, 0]
    return TrajectorySet(seeds, times, paths, winding, ~alive)


def diagnostics_drift(hist: History) -> dict:
    """Max relative drift of area, impulse and energy over the logged history."""
    out = {}
    for name in ("area", "impulse", "energy"):
        v = hist.series(name)
        out[name] = float(np.max(np.abs(v - v[0])) / abs(v[0]))
    return out
