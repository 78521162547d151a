import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from kelvinlab.annulus import (
    AnnulusPerturbation,
    annulus_critical_radius,
    annulus_energy_bruteforce,
    annulus_energy_exact,
    annulus_patch,
    annulus_stream,
    build_annulus,
    coercivity_threshold,
    coercivity_threshold_detail,
    coupling_eigenvalue,
    limit_quadratic_form,
    mode_max_eigenvalue,
    mode_quadratic_form,
    modes_negative,
    sample_stream,
)
from kelvinlab.field import energy

HALF = build_annulus(0.5, 1.0)

radii = st.tuples(st.floats(0.01, 5.0), st.floats(1.01, 20.0)).map(lambda t: (t[0], t[0] * t[1]))


class TestModel:
    def test_constants(self):
        assert HALF.C1 == pytest.approx(0.25 - math.log(2) / 6, abs=1e-12)
        assert HALF.slope_outer == pytest.approx(-math.log(2) / 3 + 1 / 8, abs=1e-12)
        assert abs(HALF.slope_outer + 0.10605) < 1e-5
        assert HALF.slope_inner == pytest.approx(2 * HALF.C1 * 0.5, abs=1e-14)

    def test_stream_values(self):
        assert abs(annulus_stream(HALF, 0.5)) < 1e-12
        assert abs(annulus_stream(HALF, 1.0)) < 1e-12
        assert annulus_stream(HALF, 0.0) == pytest.approx(-HALF.C1 * 0.25, abs=1e-14)

    def test_critical_radius(self):
        r = annulus_critical_radius(HALF)
        assert r > 1.0
        assert annulus_stream(HALF, r - 1e-6) < 0 < annulus_stream(HALF, r + 1e-6)
        inner = np.linspace(1.0 + 1e-6, r - 1e-6, 200)
        assert np.all(annulus_stream(HALF, inner) < 0)

    def test_stream_slope_by_differences(self):
        h = 1e-6
        for r, s in ((0.5, HALF.slope_inner), (1.0, HALF.slope_outer)):
            # psi'' jumps at both radii, so the central difference carries an O(h) error
            fd = (annulus_stream(HALF, r + h) - annulus_stream(HALF, r - h)) / (2 * h)
            assert fd == pytest.approx(s, abs=1e-6)

    def test_rejects_degenerate(self):
        with pytest.raises(ValueError):
            build_annulus(1.0, 1.0)
        with pytest.raises(ValueError):
            build_annulus(-0.1, 1.0)

    @settings(max_examples=1000, deadline=None)
    @given(radii)
    def test_signs_for_any_radii(self, rr):
        m = build_annulus(*rr)
        scale = max(1.0, m.r2**2 * max(1.0, math.log(m.r2)))
        assert abs(annulus_stream(m, m.r1)) < 1e-12 * scale
        assert abs(annulus_stream(m, m.r2)) < 1e-12 * scale
        assert m.C1 > 0
        assert m.slope_inner > 0 > m.slope_outer
        assert m.rstar > m.r2

    def test_exact_energy_matches_contours(self):
        assert energy(annulus_patch(HALF, n=512)) == pytest.approx(annulus_energy_exact(HALF), abs=1e-12)

    def test_plot_samples(self):
        r, g, psi = sample_stream(HALF)
        assert r[0] == 0 and r[-1] == pytest.approx(1.2 * HALF.rstar)
        assert np.allclose(psi, annulus_stream(HALF, r))


class TestModes:
    def test_coupling(self):
        assert coupling_eigenvalue(HALF, 2) == pytest.approx(1 / 16)
        vals = [coupling_eigenvalue(HALF, n) for n in range(1, 30)]
        assert np.all(np.diff(vals) < 0)

    def test_matrix_symmetric_and_limit(self):
        q = mode_quadratic_form(HALF, 10**6)
        assert np.allclose(q, limit_quadratic_form(HALF), atol=1e-6)
        assert np.all(np.diag(limit_quadratic_form(HALF)) < 0)
        q5 = mode_quadratic_form(HALF, 5)
        assert q5[0, 1] == q5[1, 0]
        with pytest.raises(ValueError):
            mode_quadratic_form(HALF, 0)

    def test_threshold(self):
        m = coercivity_threshold(HALF)
        assert m == 5
        assert coercivity_threshold(HALF, n_max_factor=128) == m
        assert not modes_negative(HALF, m - 1, 64 * (m - 1))
        assert coercivity_threshold_detail(HALF).tail_bound < 0

    @pytest.mark.parametrize("rr", [(0.5, 1.0), (0.9, 1.0), (0.1, 1.0), (1.0, 3.0)])
    def test_tail_decreasing(self, rr):
        model = build_annulus(*rr)
        vals = [mode_max_eigenvalue(model, n) for n in range(8, 200)]
        assert np.all(np.diff(vals) < 0)


class TestBruteForce:
    def test_zero(self):
        assert annulus_energy_bruteforce(HALF, AnnulusPerturbation.single_mode(3, 0, 0), 1e-3) == 0.0

    @pytest.mark.parametrize("n", [5, 10, 15])
    @pytest.mark.parametrize("a", [(1.0, 0.0), (0.0, 1.0), (1.0, 1.0)])
    def test_matches_mode_matrix(self, n, a):
        eps = 1e-3
        got = annulus_energy_bruteforce(HALF, AnnulusPerturbation.single_mode(n, *a), eps)
        v = np.array(a)
        pred = math.pi * eps**2 * v @ mode_quadratic_form(HALF, n) @ v
        assert got / pred == pytest.approx(1.0, abs=0.1)

    def test_first_order_without_constraints(self):
        # pure outer inflation changes mass: the energy change is first order in eps
        model = build_annulus(0.5, 1.5)
        pert = AnnulusPerturbation((0.0,), (1.0,))
        d1 = annulus_energy_bruteforce(model, pert, 1e-3, enforce_constraints=False)
        d2 = annulus_energy_bruteforce(model, pert, 2e-3, enforce_constraints=False)
        assert d2 / d1 == pytest.approx(2.0, rel=0.01)

    def test_collision_rejected(self):
        with pytest.raises(ValueError):
            annulus_energy_bruteforce(HALF, AnnulusPerturbation((0.0,), (-1.0,)), 0.6,
                                      enforce_constraints=False)

    def test_threshold_certifies_negative_energy(self, rng):
        m = coercivity_threshold(HALF)
        for _ in range(5):
            c1 = np.zeros(3 * m + 1, dtype=complex)
            c2 = np.zeros(3 * m + 1, dtype=complex)
            for k in (m, 2 * m, 3 * m):
                c1[k], c2[k] = rng.standard_normal(2) + 1j * rng.standard_normal(2)
            pert = AnnulusPerturbation(tuple(c1), tuple(c2))
            assert annulus_energy_bruteforce(HALF, pert, 1e-3) < 0
