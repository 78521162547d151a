"""Patch boundaries, geometric measures, symmetry operations and L1 distances.

A patch is the region enclosed by a :class:`NodeContour` (vorticity 1 inside).
Functions taking a ``patch`` also accept a sequence ``[outer, hole, ...]`` of
counterclockwise contours; holes enter every integral with a minus sign.

Contours come in two flavours.  ``smooth=True`` means the nodes sample a smooth
closed curve at equispaced values of some parameter, and measures are computed
with spectrally accurate periodic quadrature.  ``smooth=False`` means the
contour *is* the polygon through its nodes, and measures are exact for it.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import numpy as np

from ._quad import TWO_PI, fourier_upsample, spectral_derivative


class InvalidContourError(ValueError):
    pass


class InvalidBoundaryError(ValueError):
    pass


MIN_SPACING = 1e-12


@dataclass(frozen=True, eq=False)
class NodeContour:
    """Closed, counterclockwise chain of nodes; node N-1 connects back to node 0."""

    nodes: np.ndarray
    smooth: bool = False
    check_simple: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        pts = np.array(self.nodes, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise InvalidContourError("nodes must have shape (N, 2)")
        if pts.shape[0] < 3:
            raise InvalidContourError(f"need at least 3 nodes, got {pts.shape[0]}")
        if not np.all(np.isfinite(pts)):
            raise InvalidContourError("non-finite node coordinates")
        gaps = np.linalg.norm(np.roll(pts, -1, axis=0) - pts, axis=1)
        if gaps.min() <= MIN_SPACING:
            raise InvalidContourError(f"consecutive nodes coincide (spacing {gaps.min():.3g})")
        if _shoelace(pts) <= 0.0:
            raise InvalidContourError("contour must be counterclockwise (positive signed area)")
        if self.check_simple and pts.shape[0] <= 4096 and not is_simple(pts):
            raise InvalidContourError("contour is self-intersecting")
        pts.setflags(write=False)
        object.__setattr__(self, "nodes", pts)

    @classmethod
    def _trusted(cls, nodes: np.ndarray, smooth: bool) -> "NodeContour":
        # skips validation; used inside time stepping where nodes are known good
        obj = object.__new__(cls)
        arr = np.asarray(nodes, dtype=float)
        object.__setattr__(obj, "nodes", arr)
        object.__setattr__(obj, "smooth", smooth)
        object.__setattr__(obj, "check_simple", False)
        return obj

    @classmethod
    def circle(cls, radius: float = 1.0, n: int = 256, center=(0.0, 0.0)) -> "NodeContour":
        t = TWO_PI * np.arange(n) / n
        pts = np.column_stack([center[0] + radius * np.cos(t), center[1] + radius * np.sin(t)])
        return cls(pts, smooth=True)

    @classmethod
    def polar(cls, radius: Callable[[np.ndarray], np.ndarray], n: int) -> "NodeContour":
        """Star-shaped contour ``r < radius(theta)`` sampled at ``theta_j = 2 pi j / n``."""
        t = TWO_PI * np.arange(n) / n
        r = np.asarray(radius(t), dtype=float)
        if np.any(r <= 0):
            raise InvalidBoundaryError("radius must be positive")
        return cls(np.column_stack([r * np.cos(t), r * np.sin(t)]), smooth=True)

    @property
    def n(self) -> int:
        return self.nodes.shape[0]

    @property
    def z(self) -> np.ndarray:
        return self.nodes[:, 0] + 1j * self.nodes[:, 1]

    def spacing(self) -> np.ndarray:
        return np.linalg.norm(np.roll(self.nodes, -1, axis=0) - self.nodes, axis=1)

    def derivative(self) -> np.ndarray:
        """dx/dt on the parameter grid t_j = 2 pi j / N (smooth contours only)."""
        if not self.smooth:
            raise InvalidContourError("parametric derivative needs a smooth contour")
        return spectral_derivative(self.nodes)

    def translated(self, d) -> "NodeContour":
        return NodeContour._trusted(self.nodes + np.asarray(d, dtype=float), self.smooth)

    def as_polygon(self, min_nodes: int = 0) -> "NodeContour":
        """Polygon through the nodes, Fourier-refined first if smooth and coarser than ``min_nodes``."""
        pts = self.nodes
        if self.smooth and min_nodes > self.n:
            pts = fourier_upsample(pts, int(math.ceil(min_nodes / self.n)))
        return NodeContour._trusted(pts, False)

    def to_json(self) -> list:
        return self.nodes.tolist()

    @classmethod
    def from_json(cls, data, smooth: bool = False) -> "NodeContour":
        if isinstance(data, str):
            data = json.loads(data)
        return cls(np.asarray(data, dtype=float), smooth=smooth)


PatchLike = Union[NodeContour, Sequence[NodeContour]]


def loops(patch: PatchLike) -> list[tuple[NodeContour, float]]:
    """Split a patch into ``(contour, sign)`` pairs: outer +1, holes -1."""
    if isinstance(patch, NodeContour):
        return [(patch, 1.0)]
    items = list(patch)
    if not items:
        raise InvalidContourError("empty patch")
    return [(c, 1.0 if k == 0 else -1.0) for k, c in enumerate(items)]


def _shoelace(pts: np.ndarray) -> float:
    x, y = pts[:, 0], pts[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def is_simple(pts: np.ndarray, chunk: int = 256) -> bool:
    """True when no two non-adjacent edges of the closed polygon intersect."""
    a = np.asarray(pts, dtype=float)
    b = np.roll(a, -1, axis=0)
    n = a.shape[0]
    idx = np.arange(n)

    def orient(p, q, r):
        return (q[..., 0] - p[..., 0]) * (r[..., 1] - p[..., 1]) - (q[..., 1] - p[..., 1]) * (
            r[..., 0] - p[..., 0]
        )

    for s in range(0, n, chunk):
        i = idx[s : s + chunk]
        p1, p2 = a[i][:, None, :], b[i][:, None, :]
        q1, q2 = a[None, :, :], b[None, :, :]
        d1 = orient(q1, q2, p1)
        d2 = orient(q1, q2, p2)
        d3 = orient(p1, p2, q1)
        d4 = orient(p1, p2, q2)
        cross = (d1 * d2 < 0) & (d3 * d4 < 0)
        diff = (idx[None, :] - i[:, None]) % n
        adjacent = (diff <= 1) | (diff == n - 1)
        if np.any(cross & ~adjacent):
            return False
    return True


# ---------------------------------------------------------------------------
# Fourier boundaries


@dataclass(frozen=True)
class FourierBoundary:
    """``r(theta) = r0 + sum_k a_k cos(k m theta)``, exactly m-fold symmetric."""

    r0: float
    m: int
    coeffs: tuple

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(float(a) for a in self.coeffs))
        if self.m < 1:
            raise InvalidBoundaryError("symmetry order must be >= 1")

    def radius(self, theta, alpha: float = 0.0) -> np.ndarray:
        th = np.asarray(theta, dtype=float) - alpha
        r = np.full_like(th, self.r0, dtype=float)
        for k, a in enumerate(self.coeffs, start=1):
            r = r + a * np.cos(k * self.m * th)
        return r

    def dradius(self, theta, alpha: float = 0.0) -> np.ndarray:
        th = np.asarray(theta, dtype=float) - alpha
        out = np.zeros_like(th, dtype=float)
        for k, a in enumerate(self.coeffs, start=1):
            out = out - a * k * self.m * np.sin(k * self.m * th)
        return out

    def min_radius(self, samples: int = 4096) -> float:
        return float(self.radius(TWO_PI * np.arange(samples) / samples).min())

    def to_dict(self) -> dict:
        return {"r0": self.r0, "m": self.m, "coeffs": list(self.coeffs)}

    @classmethod
    def from_dict(cls, d: dict) -> "FourierBoundary":
        return cls(float(d["r0"]), int(d["m"]), tuple(d["coeffs"]))


def fourier_to_contour(fb: FourierBoundary, n: int, alpha: float = 0.0) -> NodeContour:
    """Nodes at ``theta_j = 2 pi j / n`` on ``r = r0 + g(theta - alpha)``."""
    if n < 16:
        raise InvalidBoundaryError("need at least 16 nodes")
    t = TWO_PI * np.arange(n) / n
    r = fb.radius(t, alpha)
    if np.any(r <= 0) or fb.min_radius() <= 0:
        raise InvalidBoundaryError("boundary radius must stay positive")
    return NodeContour(np.column_stack([r * np.cos(t), r * np.sin(t)]), smooth=True,
                       check_simple=False)


def fit_fourier(c: NodeContour, m: int, n_modes: int) -> FourierBoundary:
    """Recover ``r0`` and the ``cos(k m theta)`` coefficients of a contour sampled at ``theta_j = 2 pi j / N``."""
    r = np.abs(c.z)
    spec = np.fft.rfft(r) / c.n
    r0 = float(spec[0].real)
    coeffs = []
    for k in range(1, n_modes + 1):
        idx = k * m
        coeffs.append(2.0 * float(spec[idx].real) if idx < spec.size else 0.0)
    return FourierBoundary(r0, m, tuple(coeffs))


# ---------------------------------------------------------------------------
# measures


def _cross_density(c: NodeContour):
    # (x y' - y x') on the parameter grid
    d = c.derivative()
    x, y = c.nodes[:, 0], c.nodes[:, 1]
    return x * d[:, 1] - y * d[:, 0]


def _area_single(c: NodeContour) -> float:
    if c.smooth:
        return 0.5 * TWO_PI * float(np.mean(_cross_density(c)))
    return _shoelace(c.nodes)


def area(patch: PatchLike) -> float:
    """Signed area; positive for counterclockwise contours."""
    return sum(s * _area_single(c) for c, s in loops(patch))


def perimeter(patch: PatchLike) -> float:
    total = 0.0
    for c, _ in loops(patch):
        if c.smooth:
            total += TWO_PI * float(np.mean(np.linalg.norm(c.derivative(), axis=1)))
        else:
            total += float(c.spacing().sum())
    return total


def angular_impulse(patch: PatchLike) -> float:
    """``int_A |x|^2 dx`` through ``|x|^2 = div(|x|^2 x / 4)``."""
    total = 0.0
    for c, s in loops(patch):
        if c.smooth:
            r2 = np.sum(c.nodes**2, axis=1)
            val = 0.25 * TWO_PI * float(np.mean(r2 * _cross_density(c)))
        else:
            a = c.nodes
            d = np.roll(a, -1, axis=0) - a
            cr = a[:, 0] * d[:, 1] - a[:, 1] * d[:, 0]
            quad = np.sum(a * a, axis=1) + np.sum(a * d, axis=1) + np.sum(d * d, axis=1) / 3.0
            val = 0.25 * float(np.sum(cr * quad))
        total += s * val
    return total


_GL8_X, _GL8_W = np.polynomial.legendre.leggauss(8)
_GL8_X = 0.5 * (_GL8_X + 1.0)
_GL8_W = 0.5 * _GL8_W


def complex_moment(patch: PatchLike, m: int) -> complex:
    """``int_A e^{i m theta} dx``; uses ``e^{i m theta} = div(x e^{i m theta} / 2)``."""
    if m == 0:
        raise ValueError("m = 0 is the area; use area() instead")
    if m < 0:
        raise ValueError("m must be positive")
    total = 0.0 + 0.0j
    for c, s in loops(patch):
        if c.smooth:
            z = c.z
            phase = (z / np.abs(z)) ** m
            val = 0.5 * TWO_PI * complex(np.mean(phase * _cross_density(c)))
        else:
            a = c.nodes
            d = np.roll(a, -1, axis=0) - a
            cr = a[:, 0] * d[:, 1] - a[:, 1] * d[:, 0]
            pts = (a[:, None, :] + _GL8_X[None, :, None] * d[:, None, :])
            zz = pts[..., 0] + 1j * pts[..., 1]
            phase = (zz / np.abs(zz)) ** m
            val = 0.5 * complex(np.sum(cr * (phase @ _GL8_W)))
        total += s * val
    return total


def centroid(patch: PatchLike) -> np.ndarray:
    """Area-weighted centre, from ``x_i = div(x x_i / 3)``."""
    mom = np.zeros(2)
    for c, s in loops(patch):
        if c.smooth:
            dens = _cross_density(c)
            mom += s * TWO_PI / 3.0 * np.mean(c.nodes * dens[:, None], axis=0)
        else:
            a = c.nodes
            b = np.roll(a, -1, axis=0)
            cr = a[:, 0] * b[:, 1] - b[:, 0] * a[:, 1]
            mom += s * np.sum((a + b) * cr[:, None], axis=0) / 6.0
    return mom / area(patch)


# ---------------------------------------------------------------------------
# symmetry


def _rotate_nodes(pts: np.ndarray, alpha: float) -> np.ndarray:
    c, s = math.cos(alpha), math.sin(alpha)
    return pts @ np.array([[c, s], [-s, c]])


def rotate(patch: PatchLike, alpha: float):
    """Counterclockwise rotation by ``alpha`` about the origin."""
    if isinstance(patch, NodeContour):
        return NodeContour._trusted(_rotate_nodes(patch.nodes, alpha), patch.smooth)
    return [rotate(c, alpha) for c in patch]


def torus_project(alpha: float, m: int) -> float:
    """Representative of ``alpha`` modulo ``2 pi / m`` in ``[-pi/m, pi/m)``."""
    period = TWO_PI / m
    out = (alpha + 0.5 * period) % period - 0.5 * period
    # floating-point wrap can land exactly on +pi/m
    if out >= 0.5 * period:
        out -= period
    return out


# ---------------------------------------------------------------------------
# L1 distance by scanline rasterization

DEFAULT_RESOLUTION = 2048
POLY_MIN_NODES = 8192


def _edge_crossings(pts: np.ndarray, y0: float, dy: float, rows: int):
    a = pts
    b = np.roll(pts, -1, axis=0)
    ylo = np.minimum(a[:, 1], b[:, 1])
    yhi = np.maximum(a[:, 1], b[:, 1])
    # rows sit at y0 + (i + 1/2) dy; an edge owns rows with ylo <= y < yhi
    i_lo = np.ceil((ylo - y0) / dy - 0.5).astype(np.int64)
    i_hi = np.ceil((yhi - y0) / dy - 0.5).astype(np.int64)
    i_lo = np.clip(i_lo, 0, rows)
    i_hi = np.clip(i_hi, 0, rows)
    count = np.maximum(i_hi - i_lo, 0)
    if count.sum() == 0:
        return np.empty(0, np.int64), np.empty(0)
    edge = np.repeat(np.arange(a.shape[0]), count)
    offs = np.arange(count.sum()) - np.repeat(np.cumsum(count) - count, count)
    row = i_lo[edge] + offs
    yr = y0 + (row + 0.5) * dy
    pa, pb = a[edge], b[edge]
    t = (yr - pa[:, 1]) / (pb[:, 1] - pa[:, 1])
    x = pa[:, 0] + t * (pb[:, 0] - pa[:, 0])
    return row, x


def _patch_polygons(patch: PatchLike) -> list[np.ndarray]:
    return [c.as_polygon(POLY_MIN_NODES).nodes for c, _ in loops(patch)]


def symmetric_difference_area(a: PatchLike, b: PatchLike, resolution: int = DEFAULT_RESOLUTION,
                              margin: float = 0.1, bounds: tuple | None = None) -> float:
    """``|A xor B|``, the L1 distance of the two vorticities.

    Horizontal scanlines at ``resolution`` rows over the joint bounding box
    (with ``margin`` padding), or over ``bounds = (y_min, y_max)`` when given;
    along each row the xor length is exact.  On a fixed frame the result is a
    metric.
    """
    pa, pb = _patch_polygons(a), _patch_polygons(b)
    if bounds is None:
        allpts = np.vstack(pa + pb)
        lo, hi = allpts.min(axis=0), allpts.max(axis=0)
        pad = margin * (hi - lo)
        y0, y1 = lo[1] - pad[1], hi[1] + pad[1]
    else:
        y0, y1 = bounds
    dy = (y1 - y0) / resolution
    rows, xs, labels = [], [], []
    for label, polys in ((0, pa), (1, pb)):
        for p in polys:
            r, x = _edge_crossings(p, y0, dy, resolution)
            rows.append(r)
            xs.append(x)
            labels.append(np.full(r.size, label, dtype=np.int8))
    row = np.concatenate(rows)
    x = np.concatenate(xs)
    lab = np.concatenate(labels)
    if row.size == 0:
        return 0.0
    order = np.lexsort((x, row))
    row, x, lab = row[order], x[order], lab[order]
    # each closed polygon crosses every row an even number of times, so the
    # running parities return to zero at the end of each row
    par_a = np.cumsum(lab == 0) % 2
    par_b = np.cumsum(lab == 1) % 2
    same_row = row[1:] == row[:-1]
    seg = np.diff(x)
    inside = (par_a[:-1] != par_b[:-1]) & same_row
    return float(np.sum(seg[inside]) * dy)


@dataclass(frozen=True)
class RotationFit:
    distance: float
    angle: float
    converged: bool


def _reference(ref, m, n_ref):
    if isinstance(ref, NodeContour) or not hasattr(ref, "boundary"):
        if m is None:
            raise ValueError("m is required for a contour reference")
        return (lambda alpha: rotate(ref, alpha)), m
    fb = ref.boundary
    return (lambda alpha: fourier_to_contour(fb, n_ref, alpha)), ref.m


def min_rotation_distance(a: PatchLike, ref, m: int | None = None, n_scan: int = 64,
                          resolution: int = DEFAULT_RESOLUTION, n_ref: int = 1024,
                          tol: float = 1e-9) -> RotationFit:
    """``min_alpha |A xor R_alpha ref|`` over ``alpha in [-pi/m, pi/m)``.

    ``ref`` is a contour (then ``m`` is required) or a wave with ``.boundary``
    and ``.m``.  Coarse scan over ``n_scan`` angles, golden-section refinement
    around the best one; ties go to the smallest ``|alpha|``.
    """
    make, m = _reference(ref, m, n_ref)
    half = math.pi / m

    def f(alpha):
        return symmetric_difference_area(a, make(alpha), resolution=resolution)

    grid = -half + (2 * half) * np.arange(n_scan) / n_scan
    vals = np.array([f(al) for al in grid])
    best = vals.min()
    ties = np.flatnonzero(vals <= best * (1 + 1e-12) + 1e-15)
    k = ties[np.argmin(np.abs(grid[ties]))]
    step = 2 * half / n_scan
    lo, hi = grid[k] - step, grid[k] + step

    g = (math.sqrt(5.0) - 1.0) / 2.0
    c1, c2 = hi - g * (hi - lo), lo + g * (hi - lo)
    f1, f2 = f(c1), f(c2)
    converged = False
    for _ in range(80):
        if hi - lo < tol:
            converged = True
            break
        if f1 <= f2:
            hi, c2, f2 = c2, c1, f1
            c1 = hi - g * (hi - lo)
            f1 = f(c1)
        else:
            lo, c1, f1 = c1, c2, f2
            c2 = lo + g * (hi - lo)
            f2 = f(c2)
    cands = [(vals[k], grid[k]), (f1, c1), (f2, c2)]
    dist, ang = min(cands, key=lambda p: (p[0], abs(p[1])))
    return RotationFit(float(dist), float(torus_project(ang, m)), converged)


def check_m_fold(patch: PatchLike, m: int, tol: float = 1e-6,
                 resolution: int = DEFAULT_RESOLUTION) -> bool:
    if m < 2:
        raise ValueError("m must be >= 2")
    diff = symmetric_difference_area(patch, rotate(patch, TWO_PI / m), resolution=resolution)
    return diff < tol * area(patch)


@dataclass(frozen=True)
class Diagnostics:
    """Integral quantities of a patch at one instant; ``moment`` is the order-m complex moment."""

    area: float
    impulse: float
    energy: float
    perimeter: float
    moment: complex
    centroid: tuple

    def isoperimetric_ok(self) -> bool:
        return self.area > 0 and self.perimeter**2 >= 4.0 * math.pi * self.area * (1 - 1e-12)

    def row(self) -> list[float]:
        return [self.area, self.impulse, self.energy, self.perimeter,
                self.moment.real, self.moment.imag]
