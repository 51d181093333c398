import math

import numpy as np
import pytest

from currentlab.complexes import PLFunction, coordinate_function, distance_function
from currentlab.currents import boundary, mass
from currentlab.fillvol import filling_volume_0d
from currentlab.meshes import (
    disk_mesh,
    euclidean_box_mesh,
    nearest_vertex,
    sphere_mesh,
    equator_vertex,
    torus_patch_mesh,
)
from currentlab.slicedfill import (
    C_E3_BAND_INTEGRAL,
    C_E3_POINTWISE_BETA03,
    C_E3_POINTWISE_MIN,
    ball_context,
    euclidean_h_closed_form,
    h_function,
    h_min_distance,
    sf_k,
    sliced_fill,
    tetra_check,
    _support_atoms,
    _tensor_eval,
)


@pytest.fixture(scope="module")
def box_ball():
    C, T = euclidean_box_mesh(0.65, 8)
    p = nearest_vertex(C, (0.0, 0.0, 0.0))
    ctx = ball_context(T, p, 0.5)
    return C, T, p, ctx


def witnesses_at_mutual_distance(ctx, r):
    coords = ctx.complex.coords()
    sph = ctx.sphere_vertices()
    w1 = min(sph, key=lambda v: np.linalg.norm(coords[v] - np.array([r, 0.0, 0.0])))
    target = np.array([r / 2, r * math.sqrt(3) / 2, 0.0])
    w2 = min(sph, key=lambda v: np.linalg.norm(coords[v] - target))
    return w1, w2


class TestConstants:
    def test_band_integral_matches_closed_form(self):
        t = np.linspace(0.5, 1.5, 2001)
        T1, T2 = np.meshgrid(t, t, indexing="ij")
        H = euclidean_h_closed_form(T1, T2)
        integral = np.trapezoid(np.trapezoid(H, t, axis=1), t)
        assert integral == pytest.approx(C_E3_BAND_INTEGRAL, abs=2e-6)
        assert H.min() == C_E3_POINTWISE_MIN == 0.0

    def test_beta03_pointwise_constant(self):
        t = np.linspace(0.7, 1.3, 1501)
        T1, T2 = np.meshgrid(t, t, indexing="ij")
        H = euclidean_h_closed_form(T1, T2)
        assert H.min() == pytest.approx(C_E3_POINTWISE_BETA03, abs=1e-6)
        assert H.min() > 0

    def test_centre_value(self):
        assert euclidean_h_closed_form(1.0, 1.0) == pytest.approx(2 * math.sqrt(2 / 3))


class TestHFunction:
    def test_euclidean_two_point_configuration(self, box_ball):
        C, T, p, ctx = box_ball
        r = 0.5
        w1, w2 = witnesses_at_mutual_distance(ctx, r)
        h = h_function(T, p, r, [r, r], [w1, w2], context=ctx)
        assert h == pytest.approx(2 * math.sqrt(2 / 3) * r, rel=0.05)

    def test_generic_levels_match_closed_form(self, box_ball):
        C, T, p, ctx = box_ball
        r = 0.5
        w1, w2 = witnesses_at_mutual_distance(ctx, r)
        for t1, t2 in [(0.9, 1.1), (1.2, 0.8)]:
            h = h_function(T, p, r, [t1 * r, t2 * r], [w1, w2], context=ctx)
            expected = r * float(euclidean_h_closed_form(t1, t2))
            assert h == pytest.approx(expected, rel=0.08)

    def test_out_of_band_levels_empty(self, box_ball):
        C, T, p, ctx = box_ball
        r = 0.5
        w1, w2 = witnesses_at_mutual_distance(ctx, r)
        # t beyond s_i + r: the witness level set misses the ball entirely
        assert h_function(T, p, r, [2.5 * r, r], [w1, w2], context=ctx) == 0.0

    def test_sphere_great_circle_profile(self):
        C, T = sphere_mesh(20, 40)
        p1 = equator_vertex(C, 20, 40)
        r = math.pi / 2
        ctx = ball_context(T, 0, r)
        for t in (0.8, 1.4, 2.0):
            h = h_function(T, 0, r, [t], [p1], context=ctx)
            assert h == pytest.approx(min(2 * t, 2 * (math.pi - t)), rel=0.05)

    def test_transport_value_dominates_h(self, box_ball):
        # minimal transport over the slice boundary is at least the minimal
        # pairwise distance between its points
        C, T, p, ctx = box_ball
        r = 0.5
        w1, w2 = witnesses_at_mutual_distance(ctx, r)
        fns = [distance_function(ctx.complex, w) for w in (w1, w2)]
        grids = [np.array([0.95 * r]), np.array([1.05 * r])]

        values = {}

        def leaf(cur):
            values["h"] = h_min_distance(cur, 1e-9 * r)
            B = boundary(cur)
            if B.is_zero():
                values["fill"] = 0.0
            else:
                ids, theta, sigma = _support_atoms(B)
                values["fill"] = filling_volume_0d(
                    B.complex.metric, theta, sigma, point_ids=ids
                ).value
            return 0.0

        _tensor_eval(ctx.current, fns, grids, leaf)
        assert values["fill"] >= values["h"] - 1e-12
        assert values["h"] > 0


class TestSlicedFill:
    def test_disk_coordinate_function(self):
        C, T = disk_mesh(h=0.1)
        f = coordinate_function(C, 0)
        rep = sliced_fill(T, 0, 1.05, functions=[f], grid=32)
        assert rep.integral == pytest.approx(math.pi, rel=0.05)
        assert rep.mass_lower_bound <= rep.ball_mass + 2 * (rep.error_estimate or 0) + 1e-6
        assert rep.lipschitz == [pytest.approx(1.0, rel=1e-6)]

    def test_empty_level_region_contributes_zero(self):
        C, T = disk_mesh(h=0.15)
        ctx = ball_context(T, 0, 0.4)
        far = nearest_vertex(C, (1.0, 0.0))
        rho = distance_function(ctx.complex, far)
        vals, skipped = _tensor_eval(
            ctx.current, [rho], [np.array([3.1, 3.3])], lambda cur: mass(cur)
        )
        assert np.all(vals == 0.0)

    def test_mass_bound_invariant_randomized(self):
        rng = np.random.default_rng(44)
        C, T = disk_mesh(h=0.12)
        for _ in range(5):
            r = float(rng.uniform(0.3, 0.9))
            ctx = ball_context(T, 0, r)
            w = ctx.sphere_vertices()[int(rng.integers(len(ctx.sphere_vertices())))]
            rep = sliced_fill(T, 0, r, witnesses=[w], grid=17, context=ctx)
            tol = 2 * (rep.error_estimate or 0.0) + 1e-6
            assert rep.mass_lower_bound <= rep.ball_mass + tol


class TestSfK:
    def test_k0_is_ball_filling(self):
        C, T = disk_mesh(h=0.1)
        rep = sf_k(T, 0, 0.5, 0)
        assert rep.integral == pytest.approx(math.pi * 0.25, rel=0.05)

    def test_disk_k1_matches_chord_oracle(self):
        # witness on the bounding circle: the slice boundary is the pair of
        # circle-circle intersection points, whose chord is
        # h(t) = 2 r sin(2 arcsin(t / 2r)), so the integral over t in [0, 2r]
        # is 8 r^2 / 3 (substitute u = t / 2r).  All witnesses on the circle
        # give the same value, so the search is orientation-independent.
        C, T = disk_mesh(h=0.1)
        r = 0.8
        rep = sf_k(T, 0, r, 1, candidates=4, grid=24)
        oracle = 8 * r**2 / 3
        assert rep.integral == pytest.approx(oracle, rel=0.05)
        # bounded by the ball mass (area pi r^2), with room to spare
        assert rep.integral <= math.pi * r**2

    def test_budget_monotone(self):
        C, T = disk_mesh(h=0.12)
        small = sf_k(T, 0, 0.7, 1, candidates=2, grid=16)
        large = sf_k(T, 0, 0.7, 1, candidates=6, grid=16)
        assert large.integral >= small.integral - 1e-12

    def test_empty_sphere_warns(self):
        C, T = disk_mesh(h=0.3)
        rep = sf_k(T, 0, 5.0, 1)  # ball swallows everything; sphere empty
        assert rep.integral == 0.0
        assert any("empty" in w for w in rep.warnings)


class TestTetra:
    def test_euclidean_integral_property(self, box_ball):
        C, T, p, ctx = box_ball
        rep = tetra_check(T, p, 0.5, C=0.9 * C_E3_BAND_INTEGRAL, beta=0.5, samples=5, candidates=4, context=ctx)
        assert rep.integral_passed
        assert rep.integral == pytest.approx(C_E3_BAND_INTEGRAL * 0.5**3, rel=0.08)
        # the beta = 1/2 band contains empty configurations even in flat
        # 3-space, so the pointwise flag cannot hold there
        assert not rep.passed
        assert (rep.h_values == 0).sum() > 0
        assert rep.ball_mass >= rep.required_integral

    def test_euclidean_pointwise_property_beta03(self, box_ball):
        C, T, p, ctx = box_ball
        rep = tetra_check(
            T, p, 0.5, C=0.85 * C_E3_POINTWISE_BETA03, beta=0.3, samples=5, candidates=4, context=ctx
        )
        assert rep.passed
        assert rep.integral_passed
        assert rep.h_values.min() >= 0.85 * C_E3_POINTWISE_BETA03 * 0.5

    def test_scale_covariance(self):
        # h scales linearly with the metric
        vals = {}
        for lam in (1.0, 2.0):
            C, T = euclidean_box_mesh(0.65 * lam, 8)
            p = nearest_vertex(C, (0.0, 0.0, 0.0))
            r = 0.5 * lam
            ctx = ball_context(T, p, r)
            coords = ctx.complex.coords()
            sph = ctx.sphere_vertices()
            w1 = min(sph, key=lambda v: np.linalg.norm(coords[v] - np.array([r, 0, 0])))
            w2 = min(
                sph,
                key=lambda v: np.linalg.norm(coords[v] - np.array([r / 2, r * math.sqrt(3) / 2, 0])),
            )
            vals[lam] = h_function(T, p, r, [r, r], [w1, w2], context=ctx)
        assert vals[2.0] == pytest.approx(2.0 * vals[1.0], rel=0.02)

    def test_invalid_parameters(self):
        C, T = disk_mesh(h=0.3)
        from currentlab.metricspace import ArgumentError

        with pytest.raises(ArgumentError):
            tetra_check(T, 0, 0.5, C=0.0, beta=0.5)
        with pytest.raises(ArgumentError):
            tetra_check(T, 0, 0.5, C=0.1, beta=1.5)


@pytest.mark.slow
class TestThinTorusCollapse:
    def test_large_radius_empties_intersections(self):
        eps = 0.4
        r = 2 * eps
        C, T = torus_patch_mesh(eps, half_width=1.3 * r, cells_per_axis=12)
        p = nearest_vertex(C, (0.0, 0.0, 0.0))
        rep = tetra_check(T, p, r, C=0.9 * C_E3_BAND_INTEGRAL, beta=0.5, samples=5, candidates=4)
        assert not rep.passed
        assert not rep.integral_passed
        empty_fraction = (rep.h_values == 0).mean()
        assert empty_fraction >= 0.5
        assert rep.integral <= 0.15 * C_E3_BAND_INTEGRAL * r**3
