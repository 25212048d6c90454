import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from curvdist import manifold as rm
from curvdist.oracles import (
    ConstantCurvatureChart,
    EuclideanChart,
    constant_curvature_chart,
    exact_cc_distance,
    oracle_consistency,
    orthonormal_frame,
)


def frame_pair(cck, t, phi, x=None):
    x = cck.base_point if x is None else x
    e = orthonormal_frame(cck, x)
    u = t * e[0]
    v = t * (math.cos(phi) * e[0] + math.sin(phi) * e[1])
    return x, u, v


class TestExactDistance:
    def test_identical_points(self):
        for k in (1.0, 0.0, -1.0):
            cck = constant_curvature_chart(k)
            assert exact_cc_distance(cck, cck.base_point, cck.base_point) == 0

    def test_quarter_equator(self):
        cck = constant_curvature_chart(1.0)
        d = exact_cc_distance(cck, [math.pi / 2, 0], [math.pi / 2, math.pi / 2])
        assert d == pytest.approx(math.pi / 2, abs=1e-15)

    def test_vertical_half_plane_geodesic(self):
        cck = constant_curvature_chart(-1.0)
        assert exact_cc_distance(cck, [0, 1], [0, math.e]) == pytest.approx(1.0, abs=1e-15)

    def test_scaled_sphere(self):
        cck = constant_curvature_chart(0.25)
        d = exact_cc_distance(cck, [math.pi / 2, 0], [math.pi / 2, 1.0])
        assert d == pytest.approx(2.0, abs=1e-15)

    def test_scaled_half_plane(self):
        cck = constant_curvature_chart(-4.0)
        assert exact_cc_distance(cck, [0, 1], [0, math.e]) == pytest.approx(0.5, abs=1e-15)

    def test_half_plane_small_separation_keeps_precision(self):
        cck = constant_curvature_chart(-1.0)
        assert exact_cc_distance(cck, [0, 1], [1e-9, 1]) == pytest.approx(1e-9, rel=1e-12)

    def test_out_of_domain(self):
        with pytest.raises(rm.DomainError):
            exact_cc_distance(constant_curvature_chart(-1.0), [0, 1], [0, -1])
        with pytest.raises(rm.DomainError):
            exact_cc_distance(constant_curvature_chart(1.0), [0.05, 0], [1, 1])

    @given(
        st.floats(0.2, math.pi - 0.2), st.floats(-3, 3), st.floats(0.2, math.pi - 0.2), st.floats(-3, 3),
        st.floats(0.2, math.pi - 0.2), st.floats(-3, 3),
    )
    def test_sphere_triangle_inequality(self, t1, p1, t2, p2, t3, p3):
        cck = constant_curvature_chart(1.0)
        a, b, c = [t1, p1], [t2, p2], [t3, p3]
        d = lambda x, y: exact_cc_distance(cck, x, y)  # noqa: E731
        assert d(a, c) <= d(a, b) + d(b, c) + 1e-12


class TestCharts:
    @pytest.mark.parametrize("k", [2.0, 1.0, 0.5, 0.0, -0.5, -1.0, -2.0])
    def test_curvature_recovers_k(self, k):
        cck = constant_curvature_chart(k)
        for x in ([1.0, 0.3], [2.0, -1.0]) if k > 0 else ([0.2, 0.7], [-1.0, 2.0]):
            x = np.array(x)
            e = orthonormal_frame(cck, x)
            Rt = rm.curvature_tensor(cck.chart, x)
            assert rm.sectional_curvature(Rt, cck.chart.metric(x), e[0], e[1]) == pytest.approx(k, abs=1e-6)

    @pytest.mark.parametrize("k", [1.0, 0.0, -1.0])
    def test_frame_is_orthonormal(self, k):
        cck = constant_curvature_chart(k)
        e = orthonormal_frame(cck, cck.base_point)
        g = cck.chart.metric(cck.base_point).g
        assert np.allclose(e @ g @ e.T, np.eye(2), atol=1e-15)

    def test_kind_of_chart(self):
        assert isinstance(constant_curvature_chart(0.0).chart, EuclideanChart)
        assert isinstance(constant_curvature_chart(1.0), ConstantCurvatureChart)


class TestConsistency:
    def test_flat_all_equal_coordinate_distance(self):
        cck = constant_curvature_chart(0.0)
        u, v = np.array([0.4, -0.3]), np.array([-1.0, 0.5])
        rec = oracle_consistency(cck, [0.0, 0.0], u, v)
        target = float(np.linalg.norm(u - v))
        for val in (rec.via_closed_form, rec.via_exact, rec.via_bvp):
            assert val == pytest.approx(target, abs=1e-9)

    def test_sphere_orthonormal_scaled(self):
        cck = constant_curvature_chart(1.0)
        x, u, v = frame_pair(cck, 0.3, math.pi / 2)
        rec = oracle_consistency(cck, x, u, v)
        assert rec.converged and rec.spread <= 1e-6

    def test_half_plane_angle(self):
        cck = constant_curvature_chart(-1.0)
        x, u, v = frame_pair(cck, 0.5, math.pi / 6)
        rec = oracle_consistency(cck, x, u, v)
        assert rec.converged and rec.spread <= 1e-6

    @settings(max_examples=15, deadline=None)
    @given(
        k=st.sampled_from([-2.0, -1.0, -0.5, 0.5, 1.0, 2.0]),
        t=st.floats(0.05, 0.6),
        phi=st.floats(0.05, math.pi - 0.05),
    )
    def test_closed_form_is_exact_on_model_spaces(self, k, t, phi):
        # only integration error separates the closed form from the point-to-point formula
        cck = constant_curvature_chart(k)
        x, u, v = frame_pair(cck, t, phi)
        rec = oracle_consistency(cck, x, u, v)
        assert abs(rec.via_closed_form - rec.via_exact) <= 1e-9
