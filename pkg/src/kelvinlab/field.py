"""Stream function, velocity and energy of a uniform vortex patch.

With vorticity ``1_A`` and ``G = (-Delta)^{-1} 1_A``,

    G(x) = (1/2pi) int_A ln(1/|x-y|) dy,      u = (d2 G, -d1 G),

both reduce to line integrals over the boundary:

    u(x) = -(1/2pi) oint ln|x-y| dy,
    G(x) = -(1/2pi) oint (y-x).n (ln|x-y|/2 - 1/4) ds.

Targets far from the boundary use the periodic trapezoid rule on smooth
contours.  Targets near or on the boundary use the closed-form segment
integrals of a finely refined polygon, which are continuous across the
boundary.  Self-evaluation at the nodes of a smooth contour uses the
log-sine splitting with exact Fourier weights.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from . import _quad
from ._quad import TWO_PI, fourier_upsample, log_sine_weights, sine_distance_sq
from .geometry import (
    Diagnostics,
    NodeContour,
    PatchLike,
    angular_impulse,
    area,
    centroid,
    complex_moment,
    loops,
    perimeter,
)

# trapezoid rule is used for targets farther than this many node spacings
FAR_SPACINGS = 6.0
NEAR_UPSAMPLE = 16


@dataclass(frozen=True)
class FieldSample:
    point: np.ndarray
    stream: float
    velocity: np.ndarray
    on_boundary: bool = False


# ---------------------------------------------------------------------------
# evaluation at arbitrary targets


def _pack_polygons(polys: list[np.ndarray]):
    starts = np.zeros(len(polys) + 1, dtype=np.int64)
    starts[1:] = np.cumsum([p.shape[0] for p in polys])
    allp = np.vstack(polys)
    return np.ascontiguousarray(allp[:, 0]), np.ascontiguousarray(allp[:, 1]), starts


def polygon_patch_field(polys, signs, targets, near_factor=np.inf):
    """Exact (psi, u) of the polygonal patch at ``targets``."""
    x, y, starts = _pack_polygons(polys)
    t = np.atleast_2d(np.asarray(targets, dtype=float))
    psi, ux, uy = _quad.polygon_field(np.ascontiguousarray(t[:, 0]), np.ascontiguousarray(t[:, 1]),
                                      x, y, np.asarray(signs, dtype=float), starts,
                                      float(near_factor))
    return psi, np.column_stack([ux, uy])


def _trapezoid_field(c: NodeContour, t: np.ndarray):
    y = c.nodes
    dy = c.derivative()
    w = TWO_PI / c.n
    diff = y[None, :, :] - t[:, None, :]
    r2 = np.sum(diff * diff, axis=2)
    lg = 0.5 * np.log(r2)
    u = -(w / TWO_PI) * (lg @ dy)
    # (y - x).n ds with n ds = (y2', -y1') dt
    flux = diff[..., 0] * dy[None, :, 1] - diff[..., 1] * dy[None, :, 0]
    psi = -(w / TWO_PI) * np.sum(flux * (0.5 * lg - 0.25), axis=1)
    return psi, u


def evaluate_field(patch: PatchLike, points) -> tuple[np.ndarray, np.ndarray]:
    """Stream values (M,) and velocities (M, 2) at the target points (M, 2)."""
    t = np.atleast_2d(np.asarray(points, dtype=float))
    if not np.all(np.isfinite(t)):
        raise ValueError("target points must be finite")
    psi = np.zeros(t.shape[0])
    u = np.zeros((t.shape[0], 2))
    for c, s in loops(patch):
        if not c.smooth:
            p, v = polygon_patch_field([c.nodes], [s], t)
        else:
            h = float(c.spacing().max())
            dmin = np.sqrt(np.min(np.sum((t[:, None, :] - c.nodes[None, :, :]) ** 2, axis=2), axis=1))
            far = dmin > FAR_SPACINGS * h
            p = np.empty(t.shape[0])
            v = np.empty((t.shape[0], 2))
            if np.any(far):
                p[far], v[far] = _trapezoid_field(c, t[far])
            if np.any(~far):
                fine = fourier_upsample(c.nodes, NEAR_UPSAMPLE)
                p[~far], v[~far] = polygon_patch_field([fine], [1.0], t[~far])
            p, v = s * p, s * v
        psi += p
        u += v
    return psi, u


def _on_boundary(patch: PatchLike, x: np.ndarray, tol: float = 1e-12) -> bool:
    for c, _ in loops(patch):
        if np.min(np.sum((c.nodes - x) ** 2, axis=1)) <= tol**2:
            return True
    return False


def field_sample(patch: PatchLike, x) -> FieldSample:
    """Stream and velocity at one point; ``on_boundary`` flags a target on a node,
    where the stream is the continuous extension and the velocity a principal value."""
    pt = np.asarray(x, dtype=float).reshape(2)
    psi, u = evaluate_field(patch, pt[None, :])
    return FieldSample(pt, float(psi[0]), u[0], _on_boundary(patch, pt))


def stream_at(patch: PatchLike, x) -> float:
    return field_sample(patch, x).stream


def velocity_at(patch: PatchLike, x) -> np.ndarray:
    return field_sample(patch, x).velocity


# ---------------------------------------------------------------------------
# self-evaluation at the nodes of smooth contours


def log_kernel_matrix(c: NodeContour) -> np.ndarray:
    """Weights ``K[i, j]`` with ``sum_j K[i, j] q_j = (1/2pi) int ln(1/|x_i - x(s)|) q(s) ds``.

    ``s`` is the contour parameter on ``[0, 2pi)``.  The matrix is symmetric.
    """
    n = c.n
    x = c.nodes
    d = x[:, None, :] - x[None, :, :]
    r2 = np.sum(d * d, axis=2)
    sp = np.sum(c.derivative() ** 2, axis=1)
    np.fill_diagonal(r2, sp)
    smooth = 0.5 * np.log(r2 / sine_distance_sq(n))
    return -(0.5 * log_sine_weights(n) + (TWO_PI / n) * smooth) / TWO_PI


def _self_velocity(c: NodeContour, kmat: np.ndarray | None = None) -> np.ndarray:
    # u_i = -(1/2pi) int ln|x_i - y| y' ds = sum_j K_ij y'_j
    if kmat is None:
        return _quad.kress_velocity(c.nodes, c.derivative())
    return kmat @ c.derivative()


def _self_stream(c: NodeContour) -> np.ndarray:
    n = c.n
    x = c.nodes
    dx = c.derivative()
    d = x[None, :, :] - x[:, None, :]  # y_j - x_i
    r2 = np.sum(d * d, axis=2)
    np.fill_diagonal(r2, np.sum(dx * dx, axis=1))
    flux = d[..., 0] * dx[None, :, 1] - d[..., 1] * dx[None, :, 0]
    rem = 0.25 * np.log(r2 / sine_distance_sq(n)) - 0.25
    total = 0.25 * np.sum(log_sine_weights(n) * flux, axis=1) + (TWO_PI / n) * np.sum(flux * rem, axis=1)
    return -total / TWO_PI


def node_field(patch: PatchLike, near_factor: float = np.inf):
    """(psi, u) at the nodes of every loop, as lists aligned with ``loops(patch)``."""
    items = loops(patch)
    out_psi, out_u = [], []
    if all(not c.smooth for c, _ in items):
        polys = [c.nodes for c, _ in items]
        signs = [s for _, s in items]
        allnodes = np.vstack(polys)
        psi, u = polygon_patch_field(polys, signs, allnodes, near_factor)
        off = 0
        for p in polys:
            out_psi.append(psi[off : off + p.shape[0]])
            out_u.append(u[off : off + p.shape[0]])
            off += p.shape[0]
        return out_psi, out_u
    for i, (c, _) in enumerate(items):
        if not c.smooth:
            raise ValueError("cannot mix smooth and polygon loops")
        psi = np.zeros(c.n)
        u = np.zeros((c.n, 2))
        for j, (b, s) in enumerate(items):
            if i == j:
                p, v = _self_stream(b), _self_velocity(b)
            else:
                p, v = evaluate_field(b, c.nodes)
            psi += s * p
            u += s * v
        out_psi.append(psi)
        out_u.append(u)
    return out_psi, out_u


def node_velocity(c: NodeContour, near_factor: float = np.inf) -> np.ndarray:
    """Velocity at the nodes of a single contour."""
    return node_field(c, near_factor)[1][0]


def node_stream(c: NodeContour) -> np.ndarray:
    return node_field(c)[0][0]


# ---------------------------------------------------------------------------
# energy


def _energy_smooth_self(c: NodeContour) -> float:
    n = c.n
    x = c.nodes
    dx = c.derivative()
    d = x[:, None, :] - x[None, :, :]
    r2 = np.sum(d * d, axis=2)
    p = r2 * (dx @ dx.T)
    safe = r2.copy()
    np.fill_diagonal(safe, np.sum(dx * dx, axis=1))
    w = TWO_PI / n
    inner = 0.125 * np.sum(log_sine_weights(n) * p, axis=1) + w * np.sum(
        p * (0.125 * np.log(safe / sine_distance_sq(n)) - 0.25), axis=1
    )
    return w * float(np.sum(inner))


def _energy_smooth_cross(a: NodeContour, b: NodeContour) -> float:
    d = a.nodes[:, None, :] - b.nodes[None, :, :]
    r2 = np.sum(d * d, axis=2)
    phi = 0.125 * r2 * np.log(r2) - 0.25 * r2
    dots = a.derivative() @ b.derivative().T
    return (TWO_PI / a.n) * (TWO_PI / b.n) * float(np.sum(phi * dots))


def _energy_polygon_pair(a: NodeContour, b: NodeContour, same: bool) -> float:
    return _quad.polygon_energy_double(
        np.ascontiguousarray(a.nodes[:, 0]), np.ascontiguousarray(a.nodes[:, 1]),
        np.ascontiguousarray(b.nodes[:, 0]), np.ascontiguousarray(b.nodes[:, 1]),
        same, _quad._GL_X, _quad._GL_W, _quad._GL12_X, _quad._GL12_W,
    )


def energy(patch: PatchLike) -> float:
    """``E = 1/2 int_A G = (1/4pi) oint oint phi(|x-y|) dx.dy``, ``phi(r) = r^2 (ln r - 1)/4``.

    ``phi`` is a biharmonic-type antiderivative of the log kernel, so the area
    double integral collapses to a boundary double integral.
    """
    items = loops(patch)
    total = 0.0
    for i, (a, sa) in enumerate(items):
        for j, (b, sb) in enumerate(items):
            if j < i:
                continue
            mult = 1.0 if i == j else 2.0
            if a.smooth and b.smooth:
                val = _energy_smooth_self(a) if i == j else _energy_smooth_cross(a, b)
            else:
                pa, pb = a.as_polygon(), b.as_polygon()
                val = _energy_polygon_pair(pa, pb, i == j)
            total += mult * sa * sb * val
    return total / (2.0 * TWO_PI)


@dataclass(frozen=True)
class EnergyEstimate:
    value: float
    error: float
    converged: bool


def energy_with_error(patch: PatchLike, tol: float = 1e-8) -> EnergyEstimate:
    """Energy with an error estimate from the half-resolution rule on every other node."""
    value = energy(patch)
    coarse = []
    for c, _ in loops(patch):
        if c.n < 8:
            return EnergyEstimate(value, np.inf, False)
        coarse.append(NodeContour._trusted(c.nodes[::2], c.smooth))
    err = abs(value - energy(coarse if len(coarse) > 1 else coarse[0]))
    return EnergyEstimate(value, err, err <= tol * max(1.0, abs(value)))


# ---------------------------------------------------------------------------
# closed forms


def disc_oracle(r0: float, x) -> FieldSample:
    """Exact stream and velocity of the disc of radius ``r0`` centred at the origin."""
    if r0 <= 0:
        raise ValueError("r0 must be positive")
    pt = np.asarray(x, dtype=float).reshape(2)
    r = float(np.hypot(*pt))
    if r <= r0:
        psi = 0.25 * (r0**2 - r0**2 * np.log(r0**2) - r**2)
        omega = 0.5
    else:
        psi = -0.5 * r0**2 * np.log(r)
        omega = 0.5 * r0**2 / r**2
    vel = omega * np.array([-pt[1], pt[0]])
    return FieldSample(pt, float(psi), vel, bool(abs(r - r0) < 1e-14))


def disc_energy(r0: float) -> float:
    """``E`` of the disc of radius ``r0``: ``(pi/4) r0^4 (1/4 - ln r0)``."""
    return 0.25 * np.pi * r0**4 * (0.25 - np.log(r0))


# ---------------------------------------------------------------------------
# CSV batch I/O

FIELD_COLUMNS = ("x", "y", "psi", "ux", "uy")


def read_points_csv(path) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return np.array([[float(r["x"]), float(r["y"])] for r in rows]).reshape(-1, 2)


def write_field_csv(path, points, psi, u) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(FIELD_COLUMNS)
        for p, s, v in zip(np.atleast_2d(points), psi, u):
            w.writerow([repr(float(p[0])), repr(float(p[1])), repr(float(s)),
                        repr(float(v[0])), repr(float(v[1]))])


def evaluate_csv(patch: PatchLike, src, dst) -> None:
    pts = read_points_csv(src)
    psi, u = evaluate_field(patch, pts)
    write_field_csv(dst, pts, psi, u)


def compute_diagnostics(patch: PatchLike, m: int) -> Diagnostics:
    return Diagnostics(
        area=area(patch),
        impulse=angular_impulse(patch),
        energy=energy(patch),
        perimeter=perimeter(patch),
        moment=complex_moment(patch, m),
        centroid=tuple(float(v) for v in centroid(patch)),
    )
