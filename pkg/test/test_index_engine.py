"""
Unit tests for zero, fixed point and iterated indices and periodic point search.
"""

import cmath
import math
import os
import sys
import unittest
from unittest import mock

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from scripts.errors import (
    BoundaryAmbiguityError,
    InvalidInputError,
    NonIsolatedError,
    NonIsolatedOrCapExceededError,
)
from scripts.field_model import PolynomialMap, identity_map, linear_map
from scripts.flow_engine import TimeTMap
from scripts import holocenter_config
from scripts import index_engine
from scripts.index_engine import (
    BallRegion,
    IndexConfig,
    fixed_point_index,
    is_simple_fixed_point,
    iterated_index,
    perturbation_sum,
    periodic_points,
    primitive_root_order,
    series_order_1d,
    shub_sullivan_applies,
    zero_index,
)

DISK = BallRegion((0,), 0.5)
BALL = BallRegion((0, 0), 0.5)


def one_dim(*terms):
    return PolynomialMap.from_terms(1, [[(c, [k]) for c, k in terms]])


def quadratic_pair():
    """(x + y^2, y + x^2); the fixed point defect is (y^2, x^2)."""
    return PolynomialMap.from_terms(2, [[(1, [1, 0]), (1, [0, 2])], [(1, [0, 1]), (1, [2, 0])]])


def assert_roots_inside(case, result, region):
    for r in result.roots:
        case.assertLess(float(np.linalg.norm(r - region.center_array)), region.radius)


class TestZeroIndex(unittest.TestCase):
    """Counting preimages of a regular value."""

    def test_cube(self):
        """Verify z^3 has zero index 3 and every root solves z^3 = q."""
        result = zero_index(one_dim((1, 3)), [0], DISK, IndexConfig(seed=0))
        self.assertEqual(result.value, 3)
        self.assertEqual(len(result.roots), 3)
        for r in result.roots:
            self.assertLess(abs(r[0] ** 3 - result.q_used[0]), 1e-10)

    def test_counted_roots_lie_strictly_inside(self):
        """Verify every counted root lies strictly inside the region."""
        region = BallRegion((0.1,), 0.4)
        f = one_dim((-0.001, 0), (0.03, 1), (-0.3, 2), (1, 3))  # (z - 0.1)^3
        result = zero_index(f, [0.1], region, IndexConfig(seed=0))
        self.assertEqual(result.value, 3)
        assert_roots_inside(self, result, region)

    def test_identity_is_simple(self):
        """Verify the identity map has zero index 1 in two dimensions."""
        result = zero_index(identity_map(2), [0, 0], BALL, IndexConfig(seed=0, starts_per_dim=6))
        self.assertEqual(result.value, 1)

    def test_squares_pair(self):
        """Verify (y^2, x^2) has zero index 4 with agreeing retries."""
        f = PolynomialMap.from_terms(2, [[(1, [0, 2])], [(1, [2, 0])]])
        result = zero_index(f, [0, 0], BALL, IndexConfig(seed=0, starts_per_dim=10))
        self.assertEqual(result.value, 4)
        self.assertTrue(result.diagnostics["agreement"])
        assert_roots_inside(self, result, BALL)

    def test_not_a_zero(self):
        """Verify a point where the map does not vanish is rejected."""
        with self.assertRaises(InvalidInputError):
            zero_index(one_dim((1, 1)), [0.2], DISK)

    def test_region_dimension_mismatch(self):
        """Verify a region of the wrong dimension is rejected."""
        with self.assertRaises(InvalidInputError):
            zero_index(one_dim((1, 1)), [0], BALL)

    def test_disagreeing_runs_are_undetermined(self):
        """Verify disagreeing retry counts give an undetermined value."""
        diag = {"residuals": [], "min_separation": None, "min_abs_jacobian_det": None}
        counts = iter([1, 2, 1, 1, 1, 1])

        def fake_solve(g, region, q, cfg, offset):
            return [np.zeros(1, dtype=complex)] * next(counts), dict(diag)

        with mock.patch.object(index_engine, "_solve_in_region", side_effect=fake_solve):
            result = zero_index(one_dim((1, 1)), [0], DISK, IndexConfig(seed=0))
        self.assertIsNone(result.value)
        self.assertFalse(result.certified)
        self.assertEqual(result.to_dict()["value"], "undetermined")


class TestFixedPointIndex(unittest.TestCase):
    """Fixed point indices of polynomial and flow maps."""

    def test_expanding_linear(self):
        """Verify 2z has a simple fixed point at 0."""
        self.assertEqual(fixed_point_index(one_dim((2, 1)), [0], DISK, IndexConfig(seed=0)).value, 1)

    def test_cubic_tangency(self):
        """Verify z + z^3 has fixed point index 3."""
        self.assertEqual(fixed_point_index(one_dim((1, 1), (1, 3)), [0], DISK, IndexConfig(seed=0)).value, 3)

    def test_quadratic_pair(self):
        """Verify (x + y^2, y + x^2) has fixed point index 4."""
        result = fixed_point_index(quadratic_pair(), [0, 0], BALL, IndexConfig(seed=0, starts_per_dim=10))
        self.assertEqual(result.value, 4)

    def test_time_map_of_contraction(self):
        """Verify the time-1 map of z' = -z has a simple fixed point."""
        M = TimeTMap(one_dim((-1, 1)), 1.0)
        cfg = IndexConfig(seed=0, flow_starts=8, retries=1)
        self.assertEqual(fixed_point_index(M, [0], DISK, cfg).value, 1)

    def test_agrees_with_series_order_on_random_germs(self):
        """Verify certified indices equal the vanishing order of f(z) - z on random 1-D germs."""
        rng = np.random.default_rng(11)
        for k in (2, 3, 4):
            for _ in range(2):
                c = rng.uniform(0.5, 1.5) * cmath.exp(2j * math.pi * rng.uniform())
                d = 0.4 * abs(c) * rng.uniform() * cmath.exp(2j * math.pi * rng.uniform())
                f = one_dim((1, 1), (c, k), (d, k + 1))
                result = fixed_point_index(f, [0], DISK, IndexConfig(seed=0))
                self.assertTrue(result.certified)
                self.assertEqual(result.value, series_order_1d(f, 1))
                self.assertEqual(result.value, k)
                assert_roots_inside(self, result, DISK)
        for _ in range(2):
            lam = 1 + 1.5 * cmath.exp(2j * math.pi * rng.uniform())
            c = rng.uniform(0.5, 1.5) * cmath.exp(2j * math.pi * rng.uniform())
            f = one_dim((lam, 1), (c, 2))
            result = fixed_point_index(f, [0], DISK, IndexConfig(seed=0))
            self.assertEqual(result.value, series_order_1d(f, 1))
            self.assertEqual(result.value, 1)


class TestIteratedIndex(unittest.TestCase):
    """Indices of iterates and the identity case."""

    def test_parabolic_square(self):
        """Verify the second iterate of -z + z^2 has index 3."""
        result = iterated_index(one_dim((-1, 1), (1, 2)), 2, [0], DISK, IndexConfig(seed=0))
        self.assertEqual(result.value, 3)

    def test_cube_root_of_unity(self):
        """Verify the third iterate of a cube-root-of-unity multiplier has index 4."""
        lam = cmath.exp(2j * math.pi / 3)
        result = iterated_index(one_dim((lam, 1), (1, 2)), 3, [0], BallRegion((0,), 0.2), IndexConfig(seed=0))
        self.assertEqual(result.value, 4)

    def test_fifth_root_of_unity_iterates_the_map(self):
        """Verify the fifth iterate of a fifth-root multiplier has index 6 through repeated application."""
        lam = cmath.exp(2j * math.pi / 5)
        f = one_dim((lam, 1), (1, 2))
        region = BallRegion((0,), 0.1)
        spy = mock.patch.object(index_engine, "fixed_point_index", wraps=index_engine.fixed_point_index)
        with spy as wrapped:
            result = iterated_index(f, 5, [0], region, IndexConfig(seed=0))
        self.assertIsInstance(wrapped.call_args[0][0], index_engine._IteratedMap)
        self.assertEqual(result.value, 6)
        self.assertEqual(result.value, series_order_1d(f, 5))
        assert_roots_inside(self, result, region)

    def test_rotation_iterate_is_identity(self):
        """Verify the fourth iterate of iz is reported as non-isolated."""
        with self.assertRaises(NonIsolatedError):
            iterated_index(one_dim((1j, 1)), 4, [0], DISK, IndexConfig(seed=0))

    def test_linear_involution_in_two_dims(self):
        """Verify the fourth iterate of diag(-1, i) is reported as non-isolated."""
        with self.assertRaises(NonIsolatedError):
            iterated_index(linear_map(np.diag([-1, 1j])), 4, [0, 0], BALL, IndexConfig(seed=0))

    def test_time_map_iterate_is_identity(self):
        """Verify four quarter turns of z' = iz are reported as non-isolated."""
        M = TimeTMap(one_dim((1j, 1)), math.pi / 2)
        with self.assertRaises(NonIsolatedError):
            iterated_index(M, 4, [0], DISK, IndexConfig(seed=0, flow_starts=8, retries=1))

    def test_time_map_identity_threshold_is_configured(self):
        """Verify the time-map identity check scales with RETURN_IDENTITY_FACTOR."""
        self.assertEqual(index_engine.RETURN_IDENTITY_FACTOR, holocenter_config.RETURN_IDENTITY_FACTOR)
        M = TimeTMap(one_dim((1j, 1)), math.pi / 2)
        sentinel = object()
        with mock.patch.object(index_engine, "RETURN_IDENTITY_FACTOR", 0.0), \
                mock.patch.object(index_engine, "fixed_point_index", return_value=sentinel) as fpi:
            result = iterated_index(M, 4, [0], DISK, IndexConfig(seed=0, flow_starts=8, retries=1))
        self.assertIs(result, sentinel)
        fpi.assert_called_once()

    def test_zero_iterations_rejected(self):
        """Verify m = 0 is rejected."""
        with self.assertRaises(InvalidInputError):
            iterated_index(one_dim((2, 1)), 0, [0], DISK)


class TestSeriesOrder(unittest.TestCase):
    """Vanishing order of f^m(z) - z."""

    def test_second_iterate(self):
        """Verify f^2(z) - z vanishes to order 3 for f = -z + z^2."""
        self.assertEqual(series_order_1d(one_dim((-1, 1), (1, 2)), 2), 3)

    def test_linear(self):
        """Verify 2z - z vanishes to order 1."""
        self.assertEqual(series_order_1d(one_dim((2, 1)), 1), 1)

    def test_quintic(self):
        """Verify z + z^5 gives order 5."""
        self.assertEqual(series_order_1d(one_dim((1, 1), (1, 5)), 1), 5)

    def test_iterates_stay_isolated_when_multipliers_allow(self):
        """Verify the iterate order is finite whenever the multiplier condition holds."""
        cases = [
            (one_dim((1, 1), (1, 2)), m) for m in (1, 2, 3, 4)
        ] + [
            (one_dim((2, 1), (1, 2)), 3),
            (one_dim((cmath.exp(2j * math.pi / 3), 1), (1, 2)), 2),
            (one_dim((cmath.exp(2j * math.pi / 5), 1), (1, 3)), 4),
            (one_dim((0.5j, 1), (1, 2)), 4),
        ]
        for f, m in cases:
            J = f.jacobian_batch(np.zeros(1, dtype=complex))
            self.assertTrue(shub_sullivan_applies(J, m))
            order = series_order_1d(f, m)
            self.assertGreaterEqual(order, 1)
            self.assertLessEqual(order, holocenter_config.DEGREE_CAP)

    def test_identity_exhausts_cap(self):
        """Verify the identity raises NonIsolatedOrCapExceededError."""
        with self.assertRaises(NonIsolatedOrCapExceededError):
            series_order_1d(one_dim((1, 1)), 1)

    def test_needs_one_dimension(self):
        """Verify a two-dimensional map is rejected."""
        with self.assertRaises(InvalidInputError):
            series_order_1d(quadratic_pair(), 1)


class TestPeriodicPoints(unittest.TestCase):
    """Orbits of exact period m."""

    def test_parabolic_has_no_two_cycle(self):
        """Verify -z + z^2 has no orbit of exact period 2 near 0."""
        orbits = periodic_points(one_dim((-1, 1), (1, 2)), 2, BallRegion((0,), 1.0), IndexConfig(seed=0))
        self.assertEqual(orbits, [])

    def test_perturbed_two_cycle(self):
        """Verify -0.9z + z^2 has the 2-cycle -0.05 +- i sqrt(0.0975)."""
        orbits = periodic_points(one_dim((-0.9, 1), (1, 2)), 2, BallRegion((0,), 1.0), IndexConfig(seed=0))
        self.assertEqual(len(orbits), 1)
        self.assertEqual(orbits[0].period, 2)
        expected = [complex(-0.05, math.sqrt(0.0975)), complex(-0.05, -math.sqrt(0.0975))]
        found = sorted((p[0] for p in orbits[0].points), key=lambda z: z.imag)
        for got, want in zip(found, sorted(expected, key=lambda z: z.imag)):
            self.assertLess(abs(got - want), 1e-8)

    def test_single_fixed_point(self):
        """Verify 2z has the single fixed point 0."""
        orbits = periodic_points(one_dim((2, 1)), 1, BallRegion((0,), 1.0), IndexConfig(seed=0))
        self.assertEqual(len(orbits), 1)
        self.assertLess(abs(orbits[0].points[0][0]), 1e-10)

    def test_root_on_boundary(self):
        """Verify a fixed point on the boundary radius raises BoundaryAmbiguityError."""
        f = one_dim((0.5, 1), (1, 2))
        with self.assertRaises(BoundaryAmbiguityError):
            periodic_points(f, 1, DISK, IndexConfig(seed=0))


class TestEigenvalueConditions(unittest.TestCase):
    """Simplicity, iterate isolation and perturbation sums."""

    def test_simple_fixed_point(self):
        """Verify simplicity follows the eigenvalue-one test."""
        self.assertTrue(is_simple_fixed_point(one_dim((2, 1)), [0]))
        self.assertFalse(is_simple_fixed_point(one_dim((1, 1), (1, 3)), [0]))

    def test_iterate_isolation_condition(self):
        """Verify the multiplier condition rejects roots of unity of order dividing m."""
        self.assertFalse(shub_sullivan_applies(np.diag([1, -1]), 2))
        self.assertTrue(shub_sullivan_applies(np.diag([1, -1]), 3))
        self.assertTrue(shub_sullivan_applies([[2]], 5))

    def test_primitive_root_order(self):
        """Verify primitive root orders for e^{2 pi i/3}, 1 and 2."""
        self.assertEqual(primitive_root_order(cmath.exp(2j * math.pi / 3)), 3)
        self.assertEqual(primitive_root_order(1), 1)
        self.assertIsNone(primitive_root_order(2))

    def test_perturbation_splits_cubic(self):
        """Verify a small perturbation splits z + z^3 into three simple fixed points."""
        report = perturbation_sum(one_dim((1, 1), (1, 3)), [1e-2], [0], DISK, IndexConfig(seed=0))
        self.assertEqual(report["base_index"], 3)
        self.assertEqual(report["count"], 3)
        self.assertTrue(all(report["simple"]))
        self.assertTrue(report["sums_match"])

    def test_perturbation_needs_polynomial(self):
        """Verify perturbation sums reject time maps."""
        with self.assertRaises(InvalidInputError):
            perturbation_sum(TimeTMap(one_dim((-1, 1)), 1.0), [0.1], [0], DISK)


if __name__ == '__main__':
    unittest.main()
