import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from kelvinlab.field import (
    disc_energy,
    disc_oracle,
    energy,
    energy_with_error,
    evaluate_csv,
    evaluate_field,
    field_sample,
    node_field,
    stream_at,
    velocity_at,
)
from kelvinlab.geometry import NodeContour, area, rotate

UNIT = NodeContour.circle(1.0, 1024)


def blob(coeffs, n=256):
    def r(t):
        out = np.ones_like(t)
        for k, c in enumerate(coeffs, start=2):
            out += c * np.cos(k * t + 0.7 * k)
        return out

    return NodeContour.polar(r, n)


coeff_lists = st.lists(st.floats(-0.15, 0.15), min_size=1, max_size=3)


class TestDisc:
    def test_stream_centre_and_exterior(self):
        assert abs(stream_at(UNIT, (0.0, 0.0)) - 0.25) < 1e-6
        assert abs(stream_at(UNIT, (2.0, 0.0)) + 0.5 * math.log(2.0)) < 1e-6

    def test_velocity_inside_and_outside(self):
        assert np.allclose(velocity_at(UNIT, (0.5, 0.0)), (0.0, 0.25), atol=1e-6)
        assert np.allclose(velocity_at(UNIT, (2.0, 0.0)), (0.0, 0.25), atol=1e-6)

    def test_agrees_with_oracle(self, rng):
        pts = rng.uniform(-2.5, 2.5, size=(200, 2))
        pts = np.vstack([pts, [[1.0, 0.0], [0.0, 1.0 - 1e-9], [0.7071, 0.7071]]])
        psi, u = evaluate_field(UNIT, pts)
        for p, s, v in zip(pts, psi, u):
            o = disc_oracle(1.0, p)
            assert abs(s - o.stream) < 1e-6
            assert np.allclose(v, o.velocity, atol=1e-6)

    def test_on_node_is_flagged(self):
        s = field_sample(UNIT, UNIT.nodes[7])
        assert s.on_boundary
        assert abs(s.stream) < 1e-10

    def test_oracle_examples(self):
        assert disc_oracle(1.0, (0.0, 0.0)).stream == 0.25
        inside = 0.25 * (1 - 0 - 1)
        assert disc_oracle(1.0, (1.0, 0.0)).stream == pytest.approx(inside, abs=1e-15)
        assert disc_oracle(2.0, (3.0, 0.0)).stream == pytest.approx(-2.0 * math.log(3.0), abs=1e-14)

    def test_energy(self):
        assert abs(energy(UNIT) - math.pi / 16) < 1e-5
        val, _ = quad(lambda r: 0.5 * disc_oracle(2.0, (r, 0.0)).stream * 2 * math.pi * r, 0, 2)
        assert energy(NodeContour.circle(2.0, 512)) == pytest.approx(val, abs=1e-10)
        assert disc_energy(2.0) == pytest.approx(val, abs=1e-12)

    def test_energy_of_polygon_disc(self):
        assert energy(UNIT.as_polygon(4096)) == pytest.approx(math.pi / 16, abs=1e-8)

    def test_energy_error_estimate(self):
        est = energy_with_error(UNIT)
        assert est.converged and est.error < 1e-12
        coarse = energy_with_error(NodeContour.polar(lambda t: 1 + 0.3 * np.cos(9 * t), 24))
        assert not coarse.converged

    def test_split_into_two_far_discs(self):
        # two disjoint discs of half the mass, centres 10 apart: the mutual term is M1 M2 ln(1/d) / (2 pi)
        r = math.sqrt(0.5)
        a = NodeContour.circle(r, 256, (-5.0, 0.0))
        b = NodeContour.circle(r, 256, (5.0, 0.0))
        from kelvinlab.field import _energy_smooth_cross

        e_two = energy(a) + energy(b) + 2 * _energy_smooth_cross(a, b) / (4 * math.pi)
        m_half = math.pi / 2
        predicted = 2 * disc_energy(r) - m_half**2 * math.log(10) / (2 * math.pi)
        assert e_two == pytest.approx(predicted, abs=1e-10)
        assert e_two - energy(UNIT) < 0


class TestGeneralPatches:
    def test_translation_covariance(self):
        c = blob([0.1, -0.05])
        d = np.array([0.3, -1.2])
        for x in ([0.1, 0.2], [2.0, 1.0], c.nodes[3] * 1.001):
            assert stream_at(c.translated(d), np.asarray(x) + d) == pytest.approx(stream_at(c, x), abs=1e-10)

    def test_centrally_symmetric_origin(self):
        ell = NodeContour.polar(lambda t: 1 / np.sqrt(np.cos(t) ** 2 + (np.sin(t) / 0.6) ** 2), 512)
        sq = NodeContour(np.array([[1.0, -1.0], [1.0, 1.0], [-1.0, 1.0], [-1.0, -1.0]]))
        for c in (ell, sq):
            assert np.max(np.abs(velocity_at(c, (0.0, 0.0)))) < 1e-8

    @settings(max_examples=10, deadline=None)
    @given(coeff_lists, st.integers(0, 2**31 - 1))
    def test_velocity_is_perp_gradient(self, coeffs, seed):
        c = blob(coeffs)
        rng = np.random.default_rng(seed)
        pts = rng.uniform(-2, 2, size=(10, 2))
        rad = np.linalg.norm(pts, axis=1)
        th = np.arctan2(pts[:, 1], pts[:, 0])
        dist = np.abs(rad - np.interp(th, np.arctan2(c.nodes[:, 1], c.nodes[:, 0]),
                                      np.linalg.norm(c.nodes, axis=1), period=2 * np.pi))
        pts = pts[dist > 0.05]
        h = 1e-5
        _, u = evaluate_field(c, pts)
        gx = (evaluate_field(c, pts + [h, 0])[0] - evaluate_field(c, pts - [h, 0])[0]) / (2 * h)
        gy = (evaluate_field(c, pts + [0, h])[0] - evaluate_field(c, pts - [0, h])[0]) / (2 * h)
        assert np.allclose(u[:, 0], gy, atol=1e-4)
        assert np.allclose(u[:, 1], -gx, atol=1e-4)

    @settings(max_examples=10, deadline=None)
    @given(coeff_lists)
    def test_sup_norm_bound(self, coeffs):
        c = blob(coeffs)
        pts = np.vstack([c.nodes[::8], 0.5 * c.nodes[::8], 1.5 * c.nodes[::8]])
        _, u = evaluate_field(c, pts)
        assert np.max(np.linalg.norm(u, axis=1)) <= 2.0 * math.sqrt(area(c))

    def test_divergence_free(self):
        c = blob([0.1, 0.05])
        for centre in ([0.2, 0.1], [1.8, 0.3]):
            t = 2 * np.pi * np.arange(256) / 256
            ring = np.asarray(centre) + 0.1 * np.column_stack([np.cos(t), np.sin(t)])
            _, u = evaluate_field(c, ring)
            flux = np.mean(np.sum(u * np.column_stack([np.cos(t), np.sin(t)]), axis=1)) * 2 * np.pi * 0.1
            assert abs(flux) < 1e-10

    @settings(max_examples=10, deadline=None)
    @given(coeff_lists, st.floats(-3, 3))
    def test_energy_rotation_and_reflection(self, coeffs, alpha):
        c = blob(coeffs)
        e = energy(c)
        assert energy(rotate(c, alpha)) == pytest.approx(e, abs=1e-10)
        mirrored = c.nodes[::-1] * np.array([1.0, -1.0])
        # reversing the order keeps counterclockwise orientation; shift so node 0 stays at theta = 0
        mirrored = np.roll(mirrored, 1, axis=0)
        assert energy(NodeContour(mirrored, smooth=True)) == pytest.approx(e, abs=1e-10)

    def test_self_evaluation_matches_targets(self):
        c = blob([0.1, 0.05], n=512)
        psi_nodes, u_nodes = node_field(c)
        psi, u = evaluate_field(c, c.nodes[::16])
        assert np.allclose(psi_nodes[0][::16], psi, atol=1e-7)
        assert np.allclose(u_nodes[0][::16], u, atol=1e-6)

    def test_csv_batch(self, tmp_path):
        src = tmp_path / "pts.csv"
        src.write_text("x,y\n0,0\n2,0\n0.5,0\n")
        dst = tmp_path / "out.csv"
        evaluate_csv(UNIT, src, dst)
        lines = dst.read_text().strip().splitlines()
        assert lines[0] == "x,y,psi,ux,uy"
        vals = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]])
        assert vals[0, 2] == pytest.approx(0.25, abs=1e-6)
        assert vals[2, 4] == pytest.approx(0.25, abs=1e-6)
