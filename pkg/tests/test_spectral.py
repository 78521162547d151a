import math
import time

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kelvinlab.spectral import (
    admissible_basis,
    assemble_linearized,
    constrained_max_eigenvalue,
    constrained_spectrum,
    constraint_set,
    disc_limit_eigenvalue,
    energy_difference_bruteforce,
    enforce_mass_impulse,
    predicted_difference,
    project_admissible,
    random_admissible_graph,
)
from kelvinlab.geometry import angular_impulse, area
from kelvinlab.spectral import perturbed_contour
from kelvinlab.vstate import KelvinWave, solve_kelvin

N = 256


@pytest.fixture(scope="module")
def L3():
    return assemble_linearized(solve_kelvin(3, 0.02), 512)


class TestDiscLimit:
    @pytest.mark.parametrize("m", [2, 3, 5])
    def test_multiplier(self, m):
        L = assemble_linearized(KelvinWave.disc(m), N)
        assert np.max(np.abs(L.I0_values + 0.5 / m)) < 1e-8

    def test_kernel_eigenvalues(self):
        L = assemble_linearized(KelvinWave.disc(3), N)
        eta = L.grid
        for n in range(1, 17):
            for f in (np.cos(n * eta), np.sin(n * eta)):
                assert np.max(np.abs(L.kernel @ f - f / (2 * n))) < 1e-8

    def test_small_beta_multiplier(self):
        L = assemble_linearized(solve_kelvin(3, 1e-6), N)
        assert np.max(np.abs(L.I0_values + 1 / 6)) < 1e-5

    def test_first_order_multiplier(self):
        m, beta = 3, 0.05
        L = assemble_linearized(solve_kelvin(m, beta), N)
        assert np.max(np.abs(L.I0_values + 0.5 / m)) <= 1.2 * (0.5 + 0.5 / m) * beta

    def test_formula(self):
        assert disc_limit_eigenvalue(3, 3) == 0
        assert disc_limit_eigenvalue(3, 6) == pytest.approx(-1 / 12)
        assert disc_limit_eigenvalue(2, 4) == pytest.approx(-1 / 8)
        with pytest.raises(ValueError):
            disc_limit_eigenvalue(3, 0)


class TestOperator:
    def test_kernel_symmetric(self, L3):
        assert np.max(np.abs(L3.kernel - L3.kernel.T)) < 1e-12

    @settings(max_examples=10, deadline=None)
    @given(st.integers(0, 2**31 - 1))
    def test_form_symmetric(self, L3, seed):
        rng = np.random.default_rng(seed)
        p, q = rng.standard_normal((2, L3.n))
        assert abs(L3.inner(L3.apply(p), q) - L3.inner(p, L3.apply(q))) < 1e-10

    def test_rejects_small_grid(self):
        with pytest.raises(ValueError):
            assemble_linearized(KelvinWave.disc(3), 32)


class TestConstraints:
    def test_orthonormal(self):
        cs = constraint_set(3, N)
        g = (2 * np.pi / N) * cs.vectors.T @ cs.vectors
        assert np.max(np.abs(g - np.eye(3))) < 1e-12

    def test_rotation_mode_projects_to_zero(self):
        cs = constraint_set(3, N)
        eta = 2 * np.pi * np.arange(N) / N
        assert np.max(np.abs(project_admissible(cs, np.cos(3 * eta)))) < 1e-12
        assert np.max(np.abs(project_admissible(cs, np.ones(N)))) < 1e-12

    def test_basis_respects_symmetry(self):
        # with N a multiple of m, every admissible vector is invariant under rotation by 2 pi / m
        b = admissible_basis(constraint_set(4, N))
        assert np.allclose(np.roll(b, N // 4, axis=0), b, atol=1e-12)

    def test_unrestricted_basis_is_larger(self):
        assert admissible_basis(constraint_set(3, N, m_fold=False)).shape[1] > admissible_basis(constraint_set(3, N)).shape[1]


class TestCoercivity:
    @pytest.mark.parametrize("m", [2, 3, 4])
    @pytest.mark.parametrize("beta_kind", ["0.01", "0.02", "cap"])
    def test_negative(self, m, beta_kind):
        beta = 0.05 * 2 / m if beta_kind == "cap" else float(beta_kind)
        t0 = time.perf_counter()
        L = assemble_linearized(solve_kelvin(m, beta), 512)
        lam = constrained_max_eigenvalue(L, constraint_set(m, 512))
        assert time.perf_counter() - t0 < 30
        assert lam < 0

    def test_m3_value(self, L3):
        lam = constrained_max_eigenvalue(L3, constraint_set(3, 512))
        assert lam <= -0.02
        assert lam == pytest.approx(-1 / 12, abs=0.01)

    def test_symmetry_restriction_is_essential(self, L3):
        lam = constrained_max_eigenvalue(L3, constraint_set(3, 512, m_fold=False))
        assert lam > 0
        assert lam == pytest.approx(1 / 12, abs=0.01)

    def test_grid_convergence(self):
        w = solve_kelvin(3, 0.02)
        a = constrained_max_eigenvalue(assemble_linearized(w, 256), constraint_set(3, 256))
        b = constrained_max_eigenvalue(assemble_linearized(w, 512), constraint_set(3, 512))
        assert abs(a - b) < 1e-8

    def test_spectrum_sorted(self, L3):
        ev = constrained_spectrum(L3, constraint_set(3, 512))
        assert np.all(np.diff(ev) <= 0)


class TestBruteForce:
    def test_zero(self):
        w = solve_kelvin(3, 0.02)
        assert energy_difference_bruteforce(w, np.zeros(N)) == 0.0

    def test_rejects_large(self):
        w = solve_kelvin(3, 0.02)
        with pytest.raises(ValueError):
            energy_difference_bruteforce(w, 0.1 * np.ones(N))

    def test_enforced_constraints(self, rng):
        w = solve_kelvin(3, 0.02)
        h = random_admissible_graph(w, N, 1e-3, rng)
        c0, c1 = perturbed_contour(w, np.zeros(N)), perturbed_contour(w, h)
        assert abs(area(c1) - area(c0)) < 1e-15
        assert abs(angular_impulse(c1) - angular_impulse(c0)) < 1e-15

    def test_single_mode(self, L3):
        w = L3.wave
        eps = 1e-3
        eta = L3.grid
        h = enforce_mass_impulse(w, eps * np.cos(6 * eta) / L3.J0_values)
        got = energy_difference_bruteforce(w, h)
        # <q, L q> = eps^2 pi lambda for q = eps cos(6 eta), lambda close to -1/12
        assert got == pytest.approx(0.5 * math.pi * eps**2 * (-1 / 12), rel=0.1)
        assert got == pytest.approx(predicted_difference(L3, h), rel=0.01)

    def test_random_admissible(self, L3, rng):
        w = L3.wave
        ratios = []
        for _ in range(20):
            h = random_admissible_graph(w, L3.n, 1e-3, rng)
            brute = energy_difference_bruteforce(w, h)
            assert brute < 0
            ratios.append(brute / predicted_difference(L3, h))
        assert 0.9 <= min(ratios) and max(ratios) <= 1.1
