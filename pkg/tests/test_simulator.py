"""Tests for plane sampling, cell geometry and the Monte Carlo driver."""

import math

import numpy as np
import pytest

from special.functions import DomainError, ModelParams
from quadrature.integrator import QuadConfig
from engine.exact import mean_volume, moment_bounds
from simulator.process import (
    Hyperplane,
    ZeroCellRealization,
    membership,
    rep_generator,
    sample_process,
)
import simulator.geometry as geometry
from simulator.geometry import (
    clip_halfplane,
    clip_polygon,
    disc_polygon,
    exact_area_2d,
    hitmiss_volume,
    polygon_area,
    polygon_centroid,
    square,
)
from simulator.monte_carlo import (
    choose_radius,
    cross_validate,
    run_simulation,
    truncation_bias,
)


def regular_cell(n_planes: int, distance: float, R: float) -> ZeroCellRealization:
    angles = 2.0 * np.pi * np.arange(n_planes) / n_planes
    normals = np.column_stack([np.cos(angles), np.sin(angles)])
    return ZeroCellRealization(n=2, R=R, normals=normals, distances=np.full(n_planes, distance))


class TestRandomStreams:

    def test_same_key_same_stream(self):
        a = rep_generator(7, 3).random(5)
        b = rep_generator(7, 3).random(5)
        np.testing.assert_array_equal(a, b)

    def test_different_keys_differ(self):
        base = rep_generator(7, 3).random(5)
        assert not np.array_equal(base, rep_generator(7, 4).random(5))
        assert not np.array_equal(base, rep_generator(8, 3).random(5))

    def test_negative_seed(self):
        with pytest.raises(DomainError):
            rep_generator(-1, 0)


class TestSampleProcess:

    def test_expected_plane_count(self, planar_params):
        rng = np.random.default_rng(11)
        counts = [len(sample_process(planar_params, 10.0, rng)) for _ in range(2000)]
        assert np.mean(counts) == pytest.approx(20.0, abs=0.5)

    def test_planes_are_valid(self):
        rng = np.random.default_rng(5)
        cell = sample_process(ModelParams(n=4, r=2.0, gamma=3.0), 2.0, rng)
        np.testing.assert_allclose(np.linalg.norm(cell.normals, axis=1), 1.0)
        assert np.all((cell.distances > 0) & (cell.distances <= 2.0))

    def test_distance_law(self):
        rng = np.random.default_rng(2)
        distances = np.concatenate([
            sample_process(ModelParams(n=2, r=2.0, gamma=5.0), 1.0, rng).distances for _ in range(2000)])
        # density proportional to t on (0, 1]
        assert np.mean(distances) == pytest.approx(2.0 / 3.0, abs=0.01)

    def test_isotropic_normals(self):
        rng = np.random.default_rng(3)
        normals = np.concatenate([
            sample_process(ModelParams(n=2, r=1.0, gamma=10.0), 5.0, rng).normals for _ in range(50)])
        # Rayleigh statistic: N * |mean resultant|^2 is about Exp(1) under isotropy
        statistic = len(normals) * np.sum(np.mean(normals, axis=0) ** 2)
        assert statistic < 10.0

    def test_membership(self):
        cell = regular_cell(4, 1.0, 5.0)
        assert membership(cell, np.zeros(2))
        assert not membership(cell, np.array([1.5, 0.0]))
        np.testing.assert_array_equal(membership(cell, np.array([[0.5, 0.5], [0.0, -2.0]])),
                                      [True, False])

    def test_realization_validation(self):
        with pytest.raises(DomainError):
            ZeroCellRealization(n=2, R=1.0, normals=[[1.0, 0.0]], distances=[2.0])
        with pytest.raises(DomainError):
            Hyperplane(np.array([1.0, 1.0]), 0.5)

    def test_from_planes_round_trip(self):
        planes = [Hyperplane(np.array([0.0, 1.0]), 0.3), Hyperplane(np.array([-1.0, 0.0]), 0.7)]
        cell = ZeroCellRealization.from_planes(2, 1.0, planes)
        assert len(cell) == 2
        assert cell.planes[1].t == pytest.approx(0.7)
        assert len(ZeroCellRealization.from_planes(3, 1.0, [])) == 0


class TestPolygons:

    def test_unit_square(self):
        unit = square(0.5)
        assert polygon_area(unit) == pytest.approx(1.0)
        np.testing.assert_allclose(polygon_centroid(unit), [0.0, 0.0], atol=1e-15)

    def test_halfplane_clip(self):
        half = clip_halfplane(square(1.0), np.array([1.0, 0.0]), 0.0)
        assert polygon_area(half) == pytest.approx(2.0)
        np.testing.assert_allclose(polygon_centroid(half), [-0.5, 0.0], atol=1e-14)

    def test_diagonal_clip(self):
        normal = np.array([1.0, 1.0]) / math.sqrt(2.0)
        triangle = clip_halfplane(square(1.0), normal, 0.0, tol=1e-12)
        assert polygon_area(triangle) == pytest.approx(2.0)
        assert len(triangle) == 3

    def test_clip_to_nothing(self):
        empty = clip_polygon(square(1.0), np.array([[1.0, 0.0], [-1.0, 0.0]]), np.array([-0.5, -0.5]))
        assert len(empty) == 0

    def test_disc_polygons_bracket_circle(self):
        inner = polygon_area(disc_polygon(2.0))
        outer = polygon_area(disc_polygon(2.0, circumscribed=True))
        assert inner < 4.0 * math.pi < outer
        assert np.max(np.abs(disc_polygon(2.0, circumscribed=True))) <= 2.0 + 1e-12


class TestPlanarArea:

    def test_empty_process_gives_disc(self):
        cell = ZeroCellRealization.from_planes(2, 1.0, [])
        bracket = exact_area_2d(cell)
        assert bracket.inner < math.pi < bracket.outer
        assert bracket.gap < 1e-3

    def test_inner_triangle_is_exact(self):
        cell = regular_cell(3, 0.5, 10.0)
        bracket = exact_area_2d(cell)
        assert bracket.gap == 0.0
        assert bracket.area == pytest.approx(3.0 * math.sqrt(3.0) * 0.25)
        np.testing.assert_allclose(bracket.centroid, [0.0, 0.0], atol=1e-12)

    def test_square_cell(self):
        bracket = exact_area_2d(regular_cell(4, 1.0, 3.0))
        assert bracket.area == pytest.approx(4.0)

    def test_rejects_higher_dimension(self):
        with pytest.raises(DomainError):
            exact_area_2d(ZeroCellRealization.from_planes(3, 1.0, []))


class TestHitOrMiss:

    def test_empty_process_gives_ball(self):
        cell = ZeroCellRealization.from_planes(3, 2.0, [])
        estimate, error = hitmiss_volume(cell, 1000, np.random.default_rng(0))
        assert estimate == pytest.approx(32.0 * math.pi / 3.0)
        assert error == 0.0

    def test_unit_cube(self):
        normals = np.vstack([np.eye(3), -np.eye(3)])
        cell = ZeroCellRealization(n=3, R=1.0, normals=normals, distances=np.full(6, 0.5))
        estimate, error = hitmiss_volume(cell, 200_000, np.random.default_rng(1))
        assert error > 0.0
        assert abs(estimate - 1.0) < 5.0 * error

    def test_half_disc(self):
        cell = ZeroCellRealization(n=2, R=1.0, normals=[[1.0, 0.0]], distances=[1e-9])
        estimate, error = hitmiss_volume(cell, 100_000, np.random.default_rng(4))
        assert abs(estimate - math.pi / 2) < 4.0 * error
        bracket = exact_area_2d(cell)
        assert bracket.inner <= math.pi / 2 + 1e-9 <= bracket.outer + 2e-9

    def test_points_are_classified_by_membership(self, monkeypatch):
        calls = []

        def counting(cell, points):
            calls.append(len(points))
            return membership(cell, points)

        monkeypatch.setattr(geometry, 'membership', counting)
        cell = regular_cell(4, 1.0, 3.0)
        hitmiss_volume(cell, 50_000, np.random.default_rng(2))
        assert sum(calls) == 50_000
        assert len(calls) == math.ceil(50_000 / geometry.HITMISS_CHUNK)

    def test_agrees_with_polygon_area(self, planar_params):
        agree = 0
        for rep in range(200):
            rng = rep_generator(5, rep)
            cell = sample_process(planar_params, 6.0, rng)
            bracket = exact_area_2d(cell)
            estimate, error = hitmiss_volume(cell, 20_000, rng)
            agree += abs(estimate - bracket.area) <= 4.0 * error + 0.5 * bracket.gap + 1e-12
        assert agree >= 190

    def test_needs_enough_points(self):
        with pytest.raises(DomainError):
            hitmiss_volume(ZeroCellRealization.from_planes(3, 1.0, []), 10, np.random.default_rng(0))


class TestTruncation:

    @pytest.mark.parametrize('R', [2.0, 10.0, 30.0])
    def test_planar_mean_bias_closed_form(self, planar_params, R):
        # integral of exp(-b |x|) outside the disc of radius R, with b = 2 / pi
        b = 2.0 / math.pi
        expected = 2.0 * math.pi * math.exp(-b * R) * (R / b + 1.0 / b ** 2)
        assert truncation_bias(planar_params, R)[0] == pytest.approx(expected, rel=1e-12)

    def test_bias_decreases_with_radius(self, planar_params):
        small = truncation_bias(planar_params, 2.0)
        large = truncation_bias(planar_params, 8.0)
        assert large[0] < small[0]
        assert large[1] < small[1]

    def test_radius_meets_both_targets(self, planar_params):
        eps = 1e-4
        R = choose_radius(planar_params, eps)
        bias_mean, bias_second = truncation_bias(planar_params, R)
        assert bias_mean <= eps * float(mean_volume(planar_params)) * (1.0 + 1e-9)
        assert bias_second <= eps * float(moment_bounds(planar_params, 2).lower) * (1.0 + 1e-9)
        bias_mean_smaller, bias_second_smaller = truncation_bias(planar_params, 0.9 * R)
        assert (bias_mean_smaller > eps * float(mean_volume(planar_params))
                or bias_second_smaller > eps * float(moment_bounds(planar_params, 2).lower))

    def test_invalid_arguments(self, planar_params):
        with pytest.raises(DomainError):
            truncation_bias(planar_params, 0.0)
        with pytest.raises(DomainError):
            choose_radius(planar_params, 1.5)


class TestRunSimulation:

    def test_deterministic_across_workers(self, planar_params):
        one = run_simulation(planar_params, reps=120, seed=42, workers=1)
        four = run_simulation(planar_params, reps=120, seed=42, workers=4)
        np.testing.assert_array_equal(one.volumes, four.volumes)
        assert one == four

    def test_summary_fields(self, planar_params):
        summary = run_simulation(planar_params, reps=150, seed=1)
        assert summary.reps == 150
        assert summary.m_points == 0
        assert summary.mean_ci_half_width > 0.0
        assert summary.var_ci_half_width > 0.0
        assert summary.second_moment_est == pytest.approx(np.mean(summary.volumes ** 2))
        frame = summary.to_frame()
        assert list(frame.columns[:4]) == ['rep', 'volume', 'std_error', 'gap']
        assert len(frame) == 150

    def test_hit_or_miss_path(self):
        params = ModelParams(n=3, r=2.0, gamma=2.0)
        summary = run_simulation(params, reps=100, m_points=2000, seed=3)
        assert summary.m_points == 2000
        assert summary.centroids is None
        assert summary.std_errors.max() > 0.0

    def test_needs_enough_replications(self, planar_params):
        with pytest.raises(DomainError):
            run_simulation(planar_params, reps=99, seed=0)

    def test_cross_validation_planar(self, fast_quad):
        params = ModelParams(n=2, r=2.0, gamma=1.0)
        summary = run_simulation(params, reps=1000, seed=2024, workers=2)
        check = cross_validate(summary, fast_quad)
        assert check.mean_exact == pytest.approx(4.0 * math.pi)
        assert check.passed, check

    def test_centroids_are_isotropic(self, planar_params):
        summary = run_simulation(planar_params, reps=1000, seed=17, workers=4)
        assert summary.centroids.shape == (1000, 2)
        norms = np.linalg.norm(summary.centroids, axis=1)
        directions = summary.centroids[norms > 0] / norms[norms > 0, None]
        # Rayleigh statistic: N * |mean resultant|^2 is about Exp(1) under isotropy
        statistic = len(directions) * np.sum(np.mean(directions, axis=0) ** 2)
        assert statistic < 10.0
        spread = np.std(summary.centroids, axis=0, ddof=1) / math.sqrt(len(summary.centroids))
        assert np.all(np.abs(np.mean(summary.centroids, axis=0)) < 4.0 * spread)

    def test_doubling_intensity_scales_mean(self):
        one = run_simulation(ModelParams(n=2, r=2.0, gamma=1.0), reps=1000, seed=31, workers=2)
        two = run_simulation(ModelParams(n=2, r=2.0, gamma=2.0), reps=1000, seed=32, workers=2)
        factor = 2.0 ** (-2.0 / 2.0)
        tolerance = (3.0 * math.hypot(two.mean_ci_half_width, factor * one.mean_ci_half_width)
                     + two.truncation_bias_bound_mean + factor * one.truncation_bias_bound_mean
                     + 0.5 * (two.geometric_gap + factor * one.geometric_gap))
        assert abs(two.mean_est - factor * one.mean_est) <= tolerance

    @pytest.mark.slow
    def test_cross_validation_reference_run(self):
        summary = run_simulation(ModelParams(n=2, r=1.0, gamma=1.0), reps=10_000, seed=42, workers=4)
        check = cross_validate(summary)
        assert check.mean_exact == pytest.approx(math.pi ** 3 / 2)
        assert check.passed, check

    @pytest.mark.slow
    def test_cross_validation_three_dimensions(self):
        params = ModelParams(n=3, r=3.0, gamma=1.0)
        summary = run_simulation(params, reps=5000, m_points=100_000, seed=9, workers=4)
        check = cross_validate(summary, QuadConfig(rel_tol=1e-7))
        assert check.mean_ok, check
