"""
Unit tests for polynomial maps: evaluation, Jacobians, composition and parsing.
"""

import cmath
import json
import math
import os
import sys
import tempfile
import unittest

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from scripts.errors import InvalidInputError, ParseError
from scripts.field_model import (
    PolynomialMap,
    compose_truncated,
    evaluate,
    identity_map,
    jacobian_at,
    linear_change,
    linear_map,
    linear_part,
    load_field,
    parse_field,
    perturb_linear,
    scale_time,
    serialize_field,
)


def one_dim(*terms):
    return PolynomialMap.from_terms(1, [[(c, [k]) for c, k in terms]])


def drift_field():
    return PolynomialMap.from_terms(2, [[(1j, [1, 0])], [(-1, [0, 1]), (1, [2, 0])]])


def coefficients(F, l=0):
    return {m.exponents: m.coeff for m in F.coords[l]}


def random_map(rng, n, degree, terms_per_coord=4):
    coords = []
    for _ in range(n):
        row = []
        for _ in range(terms_per_coord):
            exps = [0] * n
            for _ in range(int(rng.integers(1, degree + 1))):
                exps[int(rng.integers(n))] += 1
            row.append((complex(rng.standard_normal(), rng.standard_normal()), exps))
        coords.append(row)
    return PolynomialMap.from_terms(n, coords)


def random_point(rng, n, radius):
    v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return radius * v / np.linalg.norm(v)


class TestEvaluate(unittest.TestCase):
    """Point evaluation and Jacobians."""

    def test_one_dim_value(self):
        """Verify iz + z^2 at z = 1 is 1 + i."""
        P = one_dim((1j, 1), (1, 2))
        np.testing.assert_allclose(evaluate(P, [1]), [1 + 1j])

    def test_two_dim_value(self):
        """Verify (iz, -w + z^2) at (1, 0) is (i, 1)."""
        np.testing.assert_allclose(evaluate(drift_field(), [1, 0]), [1j, 1])

    def test_origin_maps_to_zero(self):
        """Verify a field without constant terms vanishes at the origin."""
        F = drift_field()
        self.assertTrue(F.singular_at_origin)
        np.testing.assert_array_equal(evaluate(F, [0, 0]), [0, 0])

    def test_constant_term_is_not_singular(self):
        """Verify a constant term makes the origin a regular point."""
        F = PolynomialMap.from_terms(1, [[(1, [0]), (1, [1])]])
        self.assertFalse(F.singular_at_origin)

    def test_jacobian_at_origin(self):
        """Verify the Jacobian of the drift field at 0 is diag(i, -1)."""
        np.testing.assert_allclose(jacobian_at(drift_field(), [0, 0]), [[1j, 0], [0, -1]])

    def test_jacobian_off_origin(self):
        """Verify the Jacobian picks up the z^2 term away from 0."""
        np.testing.assert_allclose(jacobian_at(drift_field(), [1, 0]), [[1j, 0], [2, -1]])

    def test_one_dim_jacobian(self):
        """Verify d/dz (iz + z^2) = i + 2z."""
        P = one_dim((1j, 1), (1, 2))
        z = 0.3 - 0.2j
        np.testing.assert_allclose(jacobian_at(P, [z]), [[1j + 2 * z]])

    def test_jacobian_matches_central_differences(self):
        """Verify exact Jacobians agree with central finite differences to 1e-6."""
        rng = np.random.default_rng(23)
        h = 1e-5
        for n in (1, 2, 3):
            F = random_map(rng, n, degree=5)
            for _ in range(5):
                x = random_point(rng, n, 0.5 * rng.uniform())
                J = jacobian_at(F, x)
                fd = np.empty((n, n), dtype=complex)
                for j in range(n):
                    e = np.zeros(n, dtype=complex)
                    e[j] = h
                    fd[:, j] = (evaluate(F, x + e) - evaluate(F, x - e)) / (2 * h)
                self.assertLess(np.max(np.abs(J - fd)), 1e-6)

    def test_batch_matches_pointwise(self):
        """Verify batched evaluation agrees with single-point evaluation."""
        F = drift_field()
        X = np.array([[0.1, 0.2j], [1 - 1j, 0.5], [0, 0]])
        batch = F.evaluate_batch(X)
        for x, y in zip(X, batch):
            np.testing.assert_allclose(evaluate(F, x), y)

    def test_repeated_evaluation_is_bit_identical(self):
        """Verify identical inputs give bit-identical values and Jacobians."""
        rng = np.random.default_rng(29)
        F = random_map(rng, 3, degree=6)
        x = random_point(rng, 3, 0.4)
        np.testing.assert_array_equal(evaluate(F, x), evaluate(F, x.copy()))
        np.testing.assert_array_equal(jacobian_at(F, x), jacobian_at(F, x.copy()))

    def test_dimension_mismatch(self):
        """Verify a point of the wrong length is rejected."""
        with self.assertRaises(InvalidInputError):
            evaluate(drift_field(), [1, 2, 3])

    def test_linear_part(self):
        """Verify linear_part recovers the matrix of a linear map."""
        A = np.array([[1, 2j], [0, -1]])
        np.testing.assert_allclose(linear_part(linear_map(A)), A)


class TestConstruction(unittest.TestCase):
    """Normalization rules of from_terms."""

    def test_duplicates_merge(self):
        """Verify repeated exponents are summed."""
        F = PolynomialMap.from_terms(1, [[(1, [2]), (2j, [2])]])
        self.assertEqual(coefficients(F), {(2,): 1 + 2j})

    def test_cancelled_terms_dropped(self):
        """Verify terms that cancel exactly disappear."""
        F = PolynomialMap.from_terms(1, [[(1, [2]), (-1, [2]), (3, [1])]])
        self.assertEqual(coefficients(F), {(1,): 3})

    def test_tiny_terms_dropped_by_default(self):
        """Verify coefficients below the drop threshold are removed."""
        F = PolynomialMap.from_terms(1, [[(1e-16, [2]), (1, [1])]])
        self.assertEqual(coefficients(F), {(1,): 1})

    def test_canonical_order(self):
        """Verify monomials are sorted by total degree, then exponent tuple."""
        F = PolynomialMap.from_terms(2, [[(1, [0, 2]), (1, [1, 0]), (1, [2, 0]), (1, [1, 1])], [(1, [0, 1])]])
        self.assertEqual([m.exponents for m in F.coords[0]], [(1, 0), (0, 2), (1, 1), (2, 0)])

    def test_negative_exponent(self):
        """Verify negative exponents are rejected."""
        with self.assertRaises(InvalidInputError):
            PolynomialMap.from_terms(1, [[(1, [-1])]])

    def test_degree_cap(self):
        """Verify monomials above the degree cap are rejected."""
        with self.assertRaises(InvalidInputError):
            PolynomialMap.from_terms(1, [[(1, [13])]])

    def test_wrong_coordinate_count(self):
        """Verify the number of coordinates must equal n."""
        with self.assertRaises(InvalidInputError):
            PolynomialMap.from_terms(2, [[(1, [1, 0])]])


class TestComposeTruncated(unittest.TestCase):
    """Truncated Taylor composition."""

    def test_second_iterate(self):
        """Verify (-z + z^2) composed with itself is z - 2z^3 + z^4."""
        f = one_dim((-1, 1), (1, 2))
        self.assertEqual(coefficients(compose_truncated(f, f, 4)), {(1,): 1, (3,): -2, (4,): 1})

    def test_compose_with_identity(self):
        """Verify composing with the identity changes nothing."""
        f = drift_field()
        g = compose_truncated(f, identity_map(2), f.max_degree)
        self.assertEqual(g.coords, f.coords)

    def test_truncation_to_linear(self):
        """Verify truncation to degree 1 keeps only lambda^2 z."""
        lam = cmath.exp(2j * math.pi / 3)
        f = one_dim((lam, 1), (1, 2))
        h = compose_truncated(f, f, 1)
        terms = coefficients(h)
        self.assertEqual(list(terms), [(1,)])
        self.assertAlmostEqual(abs(terms[(1,)] - lam ** 2), 0, places=14)

    def test_remainder_is_higher_order(self):
        """Verify |f(g(x)) - trunc_d(f o g)(x)| <= C |x|^(d+1) near 0."""
        f = PolynomialMap.from_terms(2, [
            [(1, [1, 0]), (1, [0, 2]), (1, [3, 0])],
            [(1, [0, 1]), (2, [1, 1]), (-1, [0, 4])],
        ])
        g = PolynomialMap.from_terms(2, [
            [(1, [1, 0]), (0.5, [0, 2])],
            [(1, [0, 1]), (-1, [2, 0]), (0.3, [1, 1])],
        ])
        rng = np.random.default_rng(31)
        for d in (2, 3, 4):
            h = compose_truncated(f, g, d)
            for r in (0.1, 0.05, 0.02):
                for _ in range(4):
                    x = random_point(rng, 2, r)
                    err = np.linalg.norm(evaluate(f, evaluate(g, x)) - evaluate(h, x))
                    self.assertLessEqual(err, 100 * r ** (d + 1))

    def test_degree_over_cap(self):
        """Verify truncation degrees above the cap are rejected."""
        f = one_dim((1, 1))
        with self.assertRaises(InvalidInputError):
            compose_truncated(f, f, 13)


class TestTransforms(unittest.TestCase):
    """Time rescaling, linear perturbations and linear changes of coordinates."""

    def test_scale_time(self):
        """Verify scaling iz + z^2 by -i gives z - i z^2."""
        G = scale_time(one_dim((1j, 1), (1, 2)), -1j)
        terms = coefficients(G)
        self.assertAlmostEqual(abs(terms[(1,)] - 1), 0, places=15)
        self.assertAlmostEqual(abs(terms[(2,)] + 1j), 0, places=15)

    def test_scale_time_zero_rejected(self):
        """Verify a zero time factor is rejected."""
        with self.assertRaises(InvalidInputError):
            scale_time(one_dim((1, 1)), 0)

    def test_zero_perturbation(self):
        """Verify a zero perturbation leaves the map unchanged."""
        f = one_dim((-1, 1), (1, 2))
        self.assertEqual(perturb_linear(f, [0]).coords, f.coords)

    def test_one_dim_perturbation(self):
        """Verify perturbing -z + z^2 by 0.1 gives -0.9z + z^2."""
        g = perturb_linear(one_dim((-1, 1), (1, 2)), [0.1])
        terms = coefficients(g)
        self.assertAlmostEqual(abs(terms[(1,)] + 0.9), 0, places=15)
        self.assertEqual(terms[(2,)], 1)

    def test_two_dim_perturbation(self):
        """Verify a diagonal perturbation touches only the linear terms."""
        f = PolynomialMap.from_terms(2, [[(1, [1, 0]), (1, [0, 2])], [(1, [0, 1]), (1, [2, 0])]])
        g = perturb_linear(f, [0.1, -0.2])
        np.testing.assert_allclose(linear_part(g), np.diag([1.1, 0.8]))
        self.assertEqual(coefficients(g, 0)[(0, 2)], 1)
        self.assertEqual(coefficients(g, 1)[(2, 0)], 1)

    def test_perturbation_shifts_linear_part_by_diagonal(self):
        """Verify linear_part(perturb_linear(f, eps)) = f'(0) + diag(eps) on random maps."""
        rng = np.random.default_rng(37)
        for n in (1, 2, 4):
            f = random_map(rng, n, degree=3, terms_per_coord=6)
            eps = 1e-2 * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
            g = perturb_linear(f, eps)
            np.testing.assert_allclose(linear_part(g), linear_part(f) + np.diag(eps), atol=1e-15)
            x = random_point(rng, n, 0.3)
            np.testing.assert_allclose(evaluate(g, x), evaluate(f, x) + eps * x, atol=1e-14)

    def test_perturbation_length_mismatch(self):
        """Verify eps must have one entry per coordinate."""
        with self.assertRaises(InvalidInputError):
            perturb_linear(one_dim((1, 1)), [0.1, 0.2])

    def test_linear_change_conjugates(self):
        """Verify linear_change computes Q^-1 F(Q y)."""
        F = drift_field()
        Q = np.array([[0, 1], [1, 0]], dtype=complex)
        G = linear_change(F, Q)
        np.testing.assert_allclose(linear_part(G), np.diag([-1, 1j]))
        y = np.array([0.2 - 0.1j, 0.3j])
        np.testing.assert_allclose(evaluate(G, y), np.linalg.solve(Q, evaluate(F, Q @ y)), atol=1e-15)


class TestParseField(unittest.TestCase):
    """Field document parsing and error locations."""

    def test_parse_text(self):
        """Verify a JSON text document parses into the expected terms."""
        text = '{"n":1,"coords":[[{"re":0,"im":1,"exp":[1]},{"re":1,"im":0,"exp":[2]}]]}'
        P = parse_field(text)
        self.assertEqual(P.n, 1)
        self.assertEqual(coefficients(P), {(1,): 1j, (2,): 1})

    def test_duplicates_merged(self):
        """Verify duplicate monomials in a document are summed."""
        doc = {"n": 1, "coords": [[{"re": 1, "im": 0, "exp": [2]}, {"re": 0.5, "im": 1, "exp": [2]}]]}
        self.assertEqual(coefficients(parse_field(doc)), {(2,): 1.5 + 1j})

    def test_canonical_document_round_trips_exactly(self):
        """Verify a canonical document survives parse and serialize unchanged, tiny coefficients included."""
        doc = {
            "n": 2,
            "name": "tiny-terms",
            "coords": [
                [
                    {"re": 0.1, "im": 1.0 / 3.0, "exp": [1, 0]},
                    {"re": 1e-16, "im": 0.0, "exp": [0, 2]},
                    {"re": -2.5e-300, "im": 7.0, "exp": [2, 0]},
                ],
                [
                    {"re": -1.0, "im": 0.0, "exp": [0, 1]},
                    {"re": 0.0, "im": 3e-17, "exp": [2, 1]},
                ],
            ],
        }
        F = parse_field(doc)
        self.assertEqual(coefficients(F)[(0, 2)], 1e-16)
        self.assertEqual(serialize_field(F), doc)
        self.assertEqual(json.dumps(serialize_field(F), sort_keys=True), json.dumps(doc, sort_keys=True))

    def test_unsorted_document_is_canonicalized(self):
        """Verify an unsorted document serializes in canonical order and reparses to the same map."""
        doc = {"n": 1, "coords": [[{"re": 1.0, "im": 0.0, "exp": [2]}, {"re": 0.0, "im": 1.0, "exp": [1]}]]}
        F = parse_field(doc)
        out = serialize_field(F)
        self.assertEqual([m["exp"] for m in out["coords"][0]], [[1], [2]])
        self.assertEqual(parse_field(out), F)
        self.assertEqual(serialize_field(parse_field(out)), out)

    def test_exponent_length_location(self):
        """Verify an exponent array of the wrong length is located precisely."""
        doc = {"n": 1, "coords": [[{"re": 1, "im": 0, "exp": [1]}, {"re": 1, "im": 0, "exp": [1, 1]}]]}
        with self.assertRaises(ParseError) as ctx:
            parse_field(doc)
        self.assertEqual(ctx.exception.location, "/coords/0/1/exp")

    def test_negative_exponent_rejected(self):
        """Verify negative exponents fail schema validation."""
        doc = {"n": 1, "coords": [[{"re": 1, "im": 0, "exp": [-1]}]]}
        with self.assertRaises(ParseError):
            parse_field(doc)

    def test_wrong_arity(self):
        """Verify a coordinate count different from n is located at /coords."""
        doc = {"n": 2, "coords": [[{"re": 1, "im": 0, "exp": [1, 0]}]]}
        with self.assertRaises(ParseError) as ctx:
            parse_field(doc)
        self.assertEqual(ctx.exception.location, "/coords")

    def test_degree_cap(self):
        """Verify a monomial above the degree cap is rejected."""
        doc = {"n": 1, "coords": [[{"re": 1, "im": 0, "exp": [20]}]]}
        with self.assertRaises(ParseError):
            parse_field(doc)

    def test_malformed_json(self):
        """Verify truncated JSON raises ParseError."""
        with self.assertRaises(ParseError):
            parse_field('{"n": 1, "coords": [')

    def test_missing_field(self):
        """Verify a document without n raises ParseError."""
        with self.assertRaises(ParseError):
            parse_field({"coords": []})

    def test_serialize_then_load(self):
        """Verify a serialized map written to disk loads back unchanged."""
        F = PolynomialMap.from_terms(2, [[(1j, [1, 0])], [(-1, [0, 1]), (1, [2, 0])]], name="drift")
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "field.json")
            with open(path, "w", encoding="utf-8") as f:
                json.dump(serialize_field(F), f)
            G = load_field(path)
        self.assertEqual(G.name, "drift")
        self.assertEqual(G.coords, F.coords)


if __name__ == '__main__':
    unittest.main()
