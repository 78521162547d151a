"""Kelvin m-waves: rigidly rotating m-fold vortex patches bifurcating from the unit disc.

The boundary is ``r = 1 + sum_k a_k cos(k m theta)`` with ``a_1 = beta`` fixed.
The remaining coefficients, the angular velocity ``Omega`` and a gauge
constant ``C`` solve

    psi = G + Omega r^2 / 2 + C = 0   on the boundary,

by Gauss-Newton on collocation nodes in one half-period ``[0, pi/m]``.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from ._quad import TWO_PI
from .field import _self_stream, _self_velocity, evaluate_field, log_kernel_matrix
from .geometry import FourierBoundary, NodeContour, fourier_to_contour


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, residual: float, beta: Optional[float] = None):
        super().__init__(message)
        self.residual = residual
        self.beta = beta


class ConditioningWarning(UserWarning):
    pass


@dataclass(frozen=True)
class KelvinWave:
    m: int
    beta: float
    boundary: FourierBoundary
    omega: float
    residual: float
    gauge: float = 0.0
    iterations: int = field(default=0, compare=False)

    @property
    def coeffs(self) -> np.ndarray:
        return np.asarray(self.boundary.coeffs)

    def contour(self, n: int, alpha: float = 0.0) -> NodeContour:
        return fourier_to_contour(self.boundary, n, alpha)

    @classmethod
    def disc(cls, m: int, n_modes: int = 16) -> "KelvinWave":
        """The beta = 0 member of the family: unit disc rotating at ``(m-1)/(2m)``."""
        omega = 0.5 - 0.5 / m
        fb = FourierBoundary(1.0, m, (0.0,) * n_modes)
        return cls(m, 0.0, fb, omega, 0.0, -0.5 * omega)

    def to_dict(self) -> dict:
        return {
            "m": self.m,
            "beta": self.beta,
            "omega": self.omega,
            "r0": self.boundary.r0,
            "coeffs": list(self.boundary.coeffs),
            "residual": self.residual,
            "gauge": self.gauge,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "KelvinWave":
        fb = FourierBoundary(float(d.get("r0", 1.0)), int(d["m"]), tuple(d["coeffs"]))
        return cls(int(d["m"]), float(d["beta"]), fb, float(d["omega"]),
                   float(d.get("residual", np.nan)), float(d.get("gauge", 0.0)))


def _polar_contour(fb: FourierBoundary, theta: np.ndarray) -> NodeContour:
    r = fb.radius(theta)
    return NodeContour._trusted(np.column_stack([r * np.cos(theta), r * np.sin(theta)]), True)


def default_colloc(m: int, n_modes: int) -> int:
    return 8 * m * n_modes


def beta_max(m: int) -> float:
    """Largest amplitude solved from the disc guess without continuation."""
    return 0.3 / m


def _residual_and_jacobian(m, beta, a_rest, omega, gauge, n, rows, want_jac=True):
    coeffs = np.concatenate([[beta], a_rest])
    fb = FourierBoundary(1.0, m, tuple(coeffs))
    theta = TWO_PI * np.arange(n) / n
    c = _polar_contour(fb, theta)
    r = fb.radius(theta)
    g = _self_stream(c)
    res = (g + 0.5 * omega * r**2 + gauge)[rows]
    if not want_jac:
        return res, None
    kmat = log_kernel_matrix(c)
    u = _self_velocity(c, kmat)
    # grad G = (-u_y, u_x); radial derivative at the nodes
    drg = (-u[:, 1] * np.cos(theta) + u[:, 0] * np.sin(theta))
    local = drg + omega * r
    jac = np.empty((rows.size, a_rest.size + 2))
    for k in range(2, a_rest.size + 2):
        mode = np.cos(k * m * theta)
        jac[:, k - 2] = (kmat[rows] @ (r * mode)) + local[rows] * mode[rows]
    jac[:, -2] = 0.5 * r[rows] ** 2
    jac[:, -1] = 1.0
    return res, jac


def solve_kelvin(m: int, beta: float, K_modes: int = 16, N_colloc: Optional[int] = None,
                 initial: Optional[KelvinWave] = None, tol: float = 1e-10,
                 max_iter: int = 25) -> KelvinWave:
    """Newton-solve the m-wave with amplitude ``beta``.

    ``initial`` warm-starts the iteration (continuation); without it ``beta``
    must not exceed ``beta_max(m)``.
    """
    if m < 2:
        raise ValueError("m must be >= 2")
    if K_modes < 4:
        raise ValueError("K_modes must be >= 4")
    n = default_colloc(m, K_modes) if N_colloc is None else int(N_colloc)
    if n < 8 * m * K_modes:
        raise ValueError(f"N_colloc must be >= 8 m K_modes = {8 * m * K_modes}")
    if beta < 0:
        raise ValueError("beta must be >= 0")
    if beta == 0:
        return KelvinWave.disc(m, K_modes)
    if initial is None and beta > beta_max(m) + 1e-15:
        raise ValueError(f"beta > {beta_max(m):.4g} needs continuation (pass initial=...)")

    theta = TWO_PI * np.arange(n) / n
    rows = np.flatnonzero(theta <= math.pi / m + 1e-12)
    if initial is not None:
        a = np.zeros(K_modes - 1)
        prev = np.asarray(initial.boundary.coeffs[1:])
        a[: min(a.size, prev.size)] = prev[: a.size]
        omega, gauge = initial.omega, initial.gauge
    else:
        a = np.zeros(K_modes - 1)
        omega = 0.5 - 0.5 / m
        gauge = -0.5 * omega

    res, jac = _residual_and_jacobian(m, beta, a, omega, gauge, n, rows)
    rnorm = float(np.max(np.abs(res)))
    it = 0
    while rnorm >= tol:
        if it >= max_iter:
            raise ConvergenceError(f"Newton did not converge in {max_iter} iterations", rnorm, beta)
        it += 1
        sv = np.linalg.svd(jac, compute_uv=False)
        if sv[-1] <= 1e-12 * sv[0]:
            warnings.warn(f"near-singular Jacobian at beta={beta:.4g} (cond {sv[0] / sv[-1]:.3g})",
                          ConditioningWarning, stacklevel=2)
        delta = np.linalg.lstsq(jac, -res, rcond=None)[0]
        lam = 1.0
        while True:
            a_new = a + lam * delta[:-2]
            om_new = omega + lam * delta[-2]
            ga_new = gauge + lam * delta[-1]
            res_new, _ = _residual_and_jacobian(m, beta, a_new, om_new, ga_new, n, rows, False)
            new_norm = float(np.max(np.abs(res_new)))
            if new_norm < rnorm or lam < 1e-3:
                break
            lam *= 0.5
        if new_norm >= rnorm and lam < 1e-3:
            raise ConvergenceError("damped Newton step failed to reduce the residual", rnorm, beta)
        a, omega, gauge = a_new, om_new, ga_new
        res, jac = _residual_and_jacobian(m, beta, a, omega, gauge, n, rows)
        rnorm = float(np.max(np.abs(res)))

    fb = FourierBoundary(1.0, m, tuple(np.concatenate([[beta], a])))
    if fb.min_radius() <= 0:
        raise ConvergenceError("solution boundary is not star-shaped", rnorm, beta)
    return KelvinWave(m, float(beta), fb, float(omega), rnorm, float(gauge), it)


@dataclass(frozen=True)
class RelativeStream:
    """``psi = G + Omega |x|^2 / 2 + C`` of a wave, evaluable anywhere."""

    wave: KelvinWave
    gauge: float
    n: int = 1024

    def __call__(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        g, _ = evaluate_field(self.wave.contour(self.n), pts)
        return g + 0.5 * self.wave.omega * np.sum(pts**2, axis=1) + self.gauge


def relative_stream(w: KelvinWave, n: int = 1024) -> RelativeStream:
    return RelativeStream(w, w.gauge, n)


def relative_stream_residual(w: KelvinWave, N_check: int = 1024) -> float:
    """Max boundary deviation of ``psi`` on a grid offset by half a cell from any solver grid.

    The gauge constant is refit (minimax) rather than reused, so the check
    measures how far ``psi`` is from constant on the boundary.
    """
    theta = TWO_PI * (np.arange(N_check) + 0.5) / N_check
    c = _polar_contour(w.boundary, theta)
    r2 = np.sum(c.nodes**2, axis=1)
    # node grid is shifted by half a cell; the periodic rules only need equispacing
    psi = _self_stream(c) + 0.5 * w.omega * r2
    return 0.5 * float(psi.max() - psi.min())


def continuation(m: int, beta_max: float, steps: int, K_modes: int = 16,
                 N_colloc: Optional[int] = None, start: Optional[KelvinWave] = None,
                 beta_end: float = 0.0) -> list[KelvinWave]:
    """Waves at ``beta_j = beta_end + j (beta_max - beta_end)/steps``, j = 1..steps, each warm-started.

    With ``start`` given, the branch is walked from ``start.beta`` towards
    ``beta_end`` instead (downward continuation), in ``steps`` equal steps.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    if start is None:
        betas = [beta_end + j * (beta_max - beta_end) / steps for j in range(1, steps + 1)]
        prev = None
    else:
        betas = [start.beta + j * (beta_end - start.beta) / steps for j in range(1, steps + 1)]
        prev = start
    out = []
    for b in betas:
        try:
            w = solve_kelvin(m, b, K_modes, N_colloc, initial=prev)
        except ConvergenceError as exc:
            raise ConvergenceError(f"continuation failed at beta={b:.6g}: {exc}", exc.residual, b) from exc
        out.append(w)
        prev = w
    return out


def limit_stream(m: int, r) -> np.ndarray:
    """Relative stream of the disc rotating at ``Omega* = 1/2 - 1/(2m)`` outside the unit disc."""
    r = np.asarray(r, dtype=float)
    return -0.5 * np.log(r) + 0.5 * (0.5 - 0.5 / m) * (r**2 - 1.0)


def critical_radius_kelvin(m: int) -> float:
    """Root ``r* > 1`` of the limit relative stream."""
    if m < 2:
        raise ValueError("m must be >= 2")
    # the function is negative just beyond r = 1 (slope -1/(2m)) and grows like r^2
    hi = 2.0
    while limit_stream(m, hi) <= 0:
        hi *= 2.0
    return float(brentq(lambda r: limit_stream(m, r), 1.0 + 1e-9, hi, xtol=1e-13, rtol=1e-14))


@dataclass(frozen=True)
class KirchhoffFit:
    a: float
    b: float
    omega_kirchhoff: float
    omega_wave: float
    ellipse_deviation: float


def kirchhoff_check(w: KelvinWave, n: int = 2048) -> KirchhoffFit:
    """Compare an m = 2 wave with the Kirchhoff ellipse through its axis points."""
    if w.m != 2:
        raise ValueError("Kirchhoff ellipses are the m = 2 waves")
    a = float(w.boundary.radius(0.0))
    b = float(w.boundary.radius(math.pi / 2))
    theta = TWO_PI * np.arange(n) / n
    r = w.boundary.radius(theta)
    ell = a * b / np.sqrt((b * np.cos(theta)) ** 2 + (a * np.sin(theta)) ** 2)
    return KirchhoffFit(a, b, a * b / (a + b) ** 2, w.omega, float(np.max(np.abs(r - ell))))


def with_omega(w: KelvinWave, omega: float) -> KelvinWave:
    return replace(w, omega=omega)
