"""Second variation of the energy at a Kelvin wave, restricted to graph perturbations.

The perturbed patch is ``r < R(eta) + h(eta)`` with ``R`` the wave boundary.
With ``q = J0 h`` (``J0 = R``, the polar Jacobian on the boundary),

    E[omega_h] - E[omega*] = 1/2 <q, L q> + O(|h|^3),
    L q = I0 q + int K(eta, eta') q(eta') deta',

when mass and angular impulse are held fixed.  Here ``I0 = d_r psi / J0`` with
``psi`` the relative stream function of the wave, and
``K = (1/2pi) ln(1/|x(eta) - x(eta')|)``.  The inner product is
``<p, q> = int_0^{2pi} p q deta`` (trapezoid rule on the grid).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._quad import TWO_PI
from .field import _self_velocity, energy, log_kernel_matrix
from .geometry import NodeContour
from .vstate import KelvinWave


@dataclass(frozen=True, eq=False)
class LinearizedOperatorMatrix:
    wave: KelvinWave
    grid: np.ndarray
    I0_values: np.ndarray
    kernel: np.ndarray
    J0_values: np.ndarray

    @property
    def n(self) -> int:
        return self.grid.size

    @property
    def weight(self) -> float:
        return TWO_PI / self.n

    def matrix(self) -> np.ndarray:
        return np.diag(self.I0_values) + self.kernel

    def apply(self, q: np.ndarray) -> np.ndarray:
        return self.I0_values * q + self.kernel @ q

    def inner(self, p: np.ndarray, q: np.ndarray) -> float:
        return self.weight * float(np.dot(p, q))

    def quadratic_form(self, q: np.ndarray) -> float:
        """``1/2 <q, L q>``."""
        return 0.5 * self.inner(q, self.apply(q))


def _wave_contour(w: KelvinWave, eta: np.ndarray) -> NodeContour:
    r = w.boundary.radius(eta)
    return NodeContour._trusted(np.column_stack([r * np.cos(eta), r * np.sin(eta)]), True)


def assemble_linearized(w: KelvinWave, N: int = 512) -> LinearizedOperatorMatrix:
    # any N >= 64 works: the periodic rules need equispacing, not alignment with the symmetry
    if N < 64:
        raise ValueError("N must be >= 64")
    if w.beta > 0 and not (w.residual < 1e-8):
        raise ValueError(f"wave is not converged (residual {w.residual:.3g})")
    eta = TWO_PI * np.arange(N) / N
    c = _wave_contour(w, eta)
    r = w.boundary.radius(eta)
    kmat = log_kernel_matrix(c)
    u = _self_velocity(c, kmat)
    drg = -u[:, 1] * np.cos(eta) + u[:, 0] * np.sin(eta)
    i0 = (drg + w.omega * r) / r
    # kernel is symmetric up to roundoff; enforce it exactly
    kmat = 0.5 * (kmat + kmat.T)
    return LinearizedOperatorMatrix(w, eta, i0, kmat, r)


@dataclass(frozen=True, eq=False)
class ConstraintSet:
    """Linear constraints on ``q`` plus the mode family the perturbation may use.

    ``vectors`` are grid samples of the constrained directions, orthonormal
    in ``<,>``.  With ``m_fold`` only modes that are multiples of ``m`` are
    admitted; otherwise every mode ``n >= 2``.
    """

    m: int
    n: int
    vectors: np.ndarray
    m_fold: bool = True

    def admissible_modes(self, n_max: int) -> list[int]:
        if self.m_fold:
            return [k * self.m for k in range(2, n_max // self.m + 1)]
        return [k for k in range(2, n_max + 1) if k != self.m]


def _orthonormal(cols: list[np.ndarray], weight: float) -> np.ndarray:
    a = np.column_stack(cols) * np.sqrt(weight)
    qmat, _ = np.linalg.qr(a)
    return qmat / np.sqrt(weight)


def constraint_set(m: int, N: int, m_fold: bool = True) -> ConstraintSet:
    """Mass (constant), impulse and moment (cos and sin of ``m eta``) constraints.

    Without the m-fold restriction the translation modes ``cos eta, sin eta``
    are also constrained.
    """
    eta = TWO_PI * np.arange(N) / N
    cols = [np.ones(N), np.cos(m * eta), np.sin(m * eta)]
    if not m_fold:
        cols += [np.cos(eta), np.sin(eta)]
    return ConstraintSet(m, N, _orthonormal(cols, TWO_PI / N), m_fold)


def admissible_basis(cs: ConstraintSet, n_max: int | None = None) -> np.ndarray:
    """Columns spanning the admissible subspace, orthonormal in ``<,>``."""
    n = cs.n
    if n_max is None:
        n_max = n // 4
    eta = TWO_PI * np.arange(n) / n
    cols = []
    for k in cs.admissible_modes(n_max):
        cols += [np.cos(k * eta), np.sin(k * eta)]
    basis = _orthonormal(cols, TWO_PI / n)
    # remove any residual overlap with the constraint directions
    w = TWO_PI / n
    basis = basis - cs.vectors @ (w * cs.vectors.T @ basis)
    return _orthonormal(list(basis.T), w)


def project_admissible(cs: ConstraintSet, q: np.ndarray, n_max: int | None = None) -> np.ndarray:
    b = admissible_basis(cs, n_max)
    return b @ ((TWO_PI / cs.n) * (b.T @ q))


def constrained_spectrum(L: LinearizedOperatorMatrix, cs: ConstraintSet,
                         n_max: int | None = None) -> np.ndarray:
    """Eigenvalues (descending) of the Rayleigh quotient ``<q, Lq>/<q, q>`` on the admissible subspace."""
    if cs.n != L.n:
        raise ValueError("constraint grid does not match operator grid")
    b = admissible_basis(cs, n_max)
    a = L.weight * (b.T @ L.matrix() @ b)
    a = 0.5 * (a + a.T)
    try:
        ev = np.linalg.eigvalsh(a)
    except np.linalg.LinAlgError as exc:
        raise RuntimeError(f"eigen-solver failed: {exc}") from exc
    return ev[::-1]


def constrained_max_eigenvalue(L: LinearizedOperatorMatrix, cs: ConstraintSet,
                               n_max: int | None = None) -> float:
    return float(constrained_spectrum(L, cs, n_max)[0])


def disc_limit_eigenvalue(m: int, n: int) -> float:
    if n < 1:
        raise ValueError("n must be >= 1")
    return -0.5 / m + 0.5 / n


# ---------------------------------------------------------------------------
# brute-force oracle


def perturbed_contour(w: KelvinWave, h: np.ndarray) -> NodeContour:
    h = np.asarray(h, dtype=float)
    eta = TWO_PI * np.arange(h.size) / h.size
    r = w.boundary.radius(eta) + h
    if np.any(r <= 0):
        raise ValueError("perturbed radius must stay positive")
    return NodeContour._trusted(np.column_stack([r * np.cos(eta), r * np.sin(eta)]), True)


def energy_difference_bruteforce(w: KelvinWave, h: np.ndarray) -> float:
    """``E[omega_h] - E[omega*]`` from direct energies, ``h`` sampled on ``eta_j = 2 pi j / N``."""
    h = np.asarray(h, dtype=float)
    if np.max(np.abs(h)) > 0.05:
        raise ValueError("perturbation too large for the quadratic regime (sup |h| > 0.05)")
    base = perturbed_contour(w, np.zeros_like(h))
    return energy(perturbed_contour(w, h)) - energy(base)


def enforce_mass_impulse(w: KelvinWave, h: np.ndarray) -> np.ndarray:
    """Add ``c0 + c1 cos(m eta)`` to ``h`` so that mass and angular impulse match the wave exactly."""
    h = np.asarray(h, dtype=float)
    n = h.size
    eta = TWO_PI * np.arange(n) / n
    r = w.boundary.radius(eta)
    cm = np.cos(w.m * eta)

    c = np.zeros(2)
    for _ in range(20):
        rr = r + h + c[0] + c[1] * cm
        f = np.array([np.mean(0.5 * (rr**2 - r**2)), np.mean(0.25 * (rr**4 - r**4))])
        jac = np.array([[np.mean(rr), np.mean(rr * cm)], [np.mean(rr**3), np.mean(rr**3 * cm)]])
        dc = np.linalg.solve(jac, -f)
        c += dc
        if np.max(np.abs(dc)) < 1e-17:
            break
    return h + c[0] + c[1] * cm


def random_admissible_graph(w: KelvinWave, N: int, eps: float, rng: np.random.Generator,
                            modes=(2, 3, 4)) -> np.ndarray:
    """Random m-fold ``h`` with ``|q|`` of size ``eps``, then constrained to exact mass and impulse."""
    eta = TWO_PI * np.arange(N) / N
    q = np.zeros(N)
    for k in modes:
        a, b = rng.standard_normal(2)
        q += a * np.cos(k * w.m * eta) + b * np.sin(k * w.m * eta)
    q *= eps / np.sqrt(np.mean(q**2))
    return enforce_mass_impulse(w, q / w.boundary.radius(eta))


def predicted_difference(L: LinearizedOperatorMatrix, h: np.ndarray) -> float:
    """``1/2 <q, L q>`` with ``q = J0 h``."""
    return L.quadratic_form(L.J0_values * np.asarray(h, dtype=float))
