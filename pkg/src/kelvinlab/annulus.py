"""Energy stability of the rotating annulus ``r1 < |x| < r2``.

The annulus rotates rigidly with angular velocity ``2 C1``.  Its relative
stream function

    psi(r) = G(r) - G(0) - C1 r1^2 + C1 r^2

vanishes on both circles.  For graph perturbations ``r1 + h1``, ``r2 + h2``
with mass and impulse held fixed, the energy change of the single Fourier mode
``h_i = eps a_i cos(n theta)`` is ``pi eps^2 a^T Q_n a`` to leading order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from ._quad import TWO_PI
from .field import energy
from .geometry import NodeContour


@dataclass(frozen=True)
class AnnulusModel:
    r1: float
    r2: float
    C1: float
    G0: float
    gauge: float
    rstar: float
    slope_inner: float
    slope_outer: float

    @property
    def omega(self) -> float:
        return 2.0 * self.C1


def _G(r1: float, r2: float, r):
    """Stream function ``G(r)`` of the annulus (radially symmetric)."""
    r = np.asarray(r, dtype=float)
    g0 = -0.5 * (r2**2 * np.log(r2) - (r1**2 * np.log(r1) if r1 > 0 else 0.0)) + 0.25 * (r2**2 - r1**2)
    with np.errstate(divide="ignore", invalid="ignore"):
        mid = 0.25 * (r**2 - r1**2) - 0.5 * r1**2 * np.log(r / r1)
        outer = 0.25 * (r2**2 - r1**2) - 0.5 * r1**2 * np.log(r2 / r1) + 0.5 * (r2**2 - r1**2) * np.log(r / r2)
    drop = np.where(r <= r1, 0.0, np.where(r <= r2, mid, outer))
    return g0 - drop


def _dG(r1: float, r2: float, r):
    r = np.asarray(r, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        mid = -(r**2 - r1**2) / (2 * r)
        outer = -(r2**2 - r1**2) / (2 * r)
    return np.where(r <= r1, 0.0, np.where(r <= r2, mid, outer))


def _psi(r1, r2, c1, r):
    return _G(r1, r2, r) - _G(r1, r2, 0.0) - c1 * r1**2 + c1 * np.asarray(r, dtype=float) ** 2


def build_annulus(r1: float, r2: float) -> AnnulusModel:
    if not (0 < r1 < r2):
        raise ValueError("need 0 < r1 < r2")
    if (r2 - r1) <= 1e-12 * r2:
        raise ValueError("degenerate annulus (r1 = r2)")
    c1 = 0.25 - r1**2 * np.log(r2 / r1) / (2.0 * (r2**2 - r1**2))
    g0 = float(_G(r1, r2, 0.0))
    gauge = -g0 - c1 * r1**2
    s_in = 2.0 * c1 * r1
    s_out = float(_dG(r1, r2, r2)) + 2.0 * c1 * r2
    hi = 2.0 * r2
    while _psi(r1, r2, c1, hi) <= 0:
        hi *= 2.0
        if hi > 1e12 * r2:
            raise RuntimeError("no sign change found for the critical radius")
    # psi is negative just beyond r2 because the outer slope is negative
    lo = r2 * (1.0 + 1e-12)
    rstar = brentq(lambda r: _psi(r1, r2, c1, r), lo, hi, xtol=1e-13, rtol=1e-15)
    model = AnnulusModel(r1, r2, float(c1), g0, float(gauge), float(rstar), float(s_in), float(s_out))
    # psi scales like r2^2 (log r2), so the check is relative to that size
    scale = max(1.0, r2**2 * max(1.0, abs(np.log(r2))))
    for r in (r1, r2):
        if abs(annulus_stream(model, r)) > 1e-12 * scale:
            raise RuntimeError("annulus boundary condition violated")
    if not (c1 > 0 and s_in > 0 and s_out < 0):
        raise RuntimeError("annulus constants violate the expected signs")
    return model


def annulus_stream(model: AnnulusModel, r):
    """``psi(r) = G(r) + gauge + C1 r^2``."""
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ValueError("r must be >= 0")
    out = _G(model.r1, model.r2, r) + model.gauge + model.C1 * r**2
    return float(out) if out.ndim == 0 else out


def annulus_critical_radius(model: AnnulusModel) -> float:
    return model.rstar


def annulus_energy_exact(model: AnnulusModel) -> float:
    """``1/2 int G`` over the annulus by radial quadrature."""
    val, _ = quad(lambda r: float(_G(model.r1, model.r2, r)) * r, model.r1, model.r2,
                  epsabs=1e-15, epsrel=1e-13)
    return 0.5 * TWO_PI * val


# ---------------------------------------------------------------------------
# per-mode quadratic form


def coupling_eigenvalue(model: AnnulusModel, n: int) -> float:
    """Eigenvalue of the inner-outer convolution on ``cos(n theta)``: ``(r1/r2)^n / (2n)``."""
    return (model.r1 / model.r2) ** n / (2.0 * n)


def mode_quadratic_form(model: AnnulusModel, n: int) -> np.ndarray:
    """``Q_n`` with ``E[perturbed] - E[annulus] = pi eps^2 (a1, a2) Q_n (a1, a2)^T + O(eps^3)``.

    ``a1, a2`` are the amplitudes of ``cos(n theta)`` on the inner and outer
    radius.  The inner diagonal carries ``-r1 psi'(r1)/2`` because moving the
    inner circle outward removes vorticity.
    """
    if n < 1:
        raise ValueError("mode n = 0 is removed by the mass constraint")
    r1, r2 = model.r1, model.r2
    q11 = -0.5 * r1 * model.slope_inner + r1**2 / (4.0 * n)
    q22 = 0.5 * r2 * model.slope_outer + r2**2 / (4.0 * n)
    q12 = -0.5 * r1 * r2 * coupling_eigenvalue(model, n)
    return np.array([[q11, q12], [q12, q22]])


def mode_max_eigenvalue(model: AnnulusModel, n: int) -> float:
    return float(np.linalg.eigvalsh(mode_quadratic_form(model, n))[-1])


def limit_quadratic_form(model: AnnulusModel) -> np.ndarray:
    """``lim_{n -> inf} Q_n``."""
    return np.diag([-0.5 * model.r1 * model.slope_inner, 0.5 * model.r2 * model.slope_outer])


def _tail_bound(model: AnnulusModel, n_from: int) -> float:
    # for n >= n_from every entry is bounded by its value at n_from
    q = mode_quadratic_form(model, n_from)
    return max(q[0, 0], q[1, 1]) + abs(q[0, 1])


@dataclass(frozen=True)
class ThresholdResult:
    m: int
    n_max: int
    tail_bound: float


def modes_negative(model: AnnulusModel, m: int, n_max: int) -> bool:
    """All modes ``n = k m <= n_max`` have a negative definite ``Q_n`` and the tail bound beyond is negative."""
    for n in range(m, n_max + 1, m):
        if mode_max_eigenvalue(model, n) >= 0:
            return False
    return _tail_bound(model, n_max + 1) < 0


def coercivity_threshold(model: AnnulusModel, n_max_factor: int = 64, m_limit: int = 10000) -> int:
    """Smallest ``m >= 2`` whose multiples all give negative definite ``Q_n``."""
    return coercivity_threshold_detail(model, n_max_factor, m_limit).m


def coercivity_threshold_detail(model: AnnulusModel, n_max_factor: int = 64,
                                m_limit: int = 10000) -> ThresholdResult:
    for m in range(2, m_limit + 1):
        n_max = n_max_factor * m
        if modes_negative(model, m, n_max):
            return ThresholdResult(m, n_max, _tail_bound(model, n_max + 1))
    raise RuntimeError(f"no coercivity threshold below m = {m_limit}")


# ---------------------------------------------------------------------------
# brute-force oracle


@dataclass(frozen=True)
class AnnulusPerturbation:
    """Graph perturbations ``h_i(theta) = Re sum_n c_n e^{i n theta}`` of the inner (1) and outer (2) circle."""

    h1: tuple
    h2: tuple

    @classmethod
    def single_mode(cls, n: int, a1: float, a2: float) -> "AnnulusPerturbation":
        c1 = [0.0] * (n + 1)
        c2 = [0.0] * (n + 1)
        c1[n], c2[n] = a1, a2
        return cls(tuple(c1), tuple(c2))

    def sample(self, theta: np.ndarray):
        def ev(coef):
            out = np.zeros_like(theta)
            for n, c in enumerate(coef):
                c = complex(c)
                out += c.real * np.cos(n * theta) - c.imag * np.sin(n * theta)
            return out

        return ev(self.h1), ev(self.h2)


def _ring(radius: np.ndarray, theta: np.ndarray) -> NodeContour:
    return NodeContour._trusted(np.column_stack([radius * np.cos(theta), radius * np.sin(theta)]), True)


def annulus_patch(model: AnnulusModel, h1=None, h2=None, n: int = 512):
    theta = TWO_PI * np.arange(n) / n
    r_in = model.r1 + (0.0 if h1 is None else h1)
    r_out = model.r2 + (0.0 if h2 is None else h2)
    return [_ring(r_out * np.ones(n), theta), _ring(r_in * np.ones(n), theta)]


def _enforce(model: AnnulusModel, h1: np.ndarray, h2: np.ndarray):
    # constants added to each graph so mass and impulse match the annulus exactly
    r1, r2 = model.r1, model.r2
    c = np.zeros(2)
    for _ in range(30):
        a, b = r1 + h1 + c[0], r2 + h2 + c[1]
        f = np.array([
            np.mean(0.5 * (b**2 - r2**2) - 0.5 * (a**2 - r1**2)),
            np.mean(0.25 * (b**4 - r2**4) - 0.25 * (a**4 - r1**4)),
        ])
        jac = np.array([[-np.mean(a), np.mean(b)], [-np.mean(a**3), np.mean(b**3)]])
        dc = np.linalg.solve(jac, -f)
        c += dc
        if np.max(np.abs(dc)) < 1e-17:
            break
    return h1 + c[0], h2 + c[1]


def annulus_energy_bruteforce(model: AnnulusModel, pert: AnnulusPerturbation, eps: float,
                              n: int = 512, enforce_constraints: bool = True) -> float:
    """``E[perturbed] - E[annulus]`` from direct two-contour energies."""
    theta = TWO_PI * np.arange(n) / n
    h1, h2 = pert.sample(theta)
    h1, h2 = eps * h1, eps * h2
    if enforce_constraints:
        h1, h2 = _enforce(model, h1, h2)
    r_in, r_out = model.r1 + h1, model.r2 + h2
    if np.any(r_in <= 0) or np.any(r_out <= r_in):
        raise ValueError("perturbed boundaries collide")
    return energy(annulus_patch(model, h1, h2, n)) - energy(annulus_patch(model, n=n))


def sample_stream(model: AnnulusModel, r_max: float | None = None, n: int = 400):
    """``(r, G(r), psi(r))`` on ``[0, r_max]`` for plotting."""
    if r_max is None:
        r_max = 1.2 * model.rstar
    r = np.linspace(0.0, r_max, n)
    return r, _G(model.r1, model.r2, r), annulus_stream(model, r)
