"""
Holomorphic Polynomial Maps and Their Calculus.

This module represents polynomial maps C^n -> C^n (vector fields F, maps f
and g, perturbations f_eps) as normalized collections of monomials and
provides the calculus the engines build on:

1. Evaluation and exact Jacobians, vectorized over batches of points so the
   multi-start root search can push thousands of Newton iterates at once
2. Taylor-truncated composition f o g, used for iterates f^m
3. Time rescaling cF and the linear perturbation f + diag(eps) z
4. Linear conjugation Q^{-1} F(Q y) for triangular normal forms
5. The JSON field document format (parse and serialize)

Field Document Format:
----------------------
    {"n": 2, "name": "optional",
     "coords": [[{"re": 0, "im": 1, "exp": [1, 0]}],
                [{"re": -1, "im": 0, "exp": [0, 1]}, {"re": 1, "im": 0, "exp": [2, 0]}]]}

Each entry of "coords" lists the monomials of one output coordinate; "exp"
holds n non-negative integers. Duplicate exponent tuples are merged by
adding coefficients, and coefficients with magnitude below COEFF_DROP_TOL
are dropped. Degree and dimension caps are enforced at construction.

Polynomial truncation note: the analysis works with polynomial representatives
of holomorphic germs. Whether a truncation is adequate for a chosen analysis
radius is the caller's responsibility.
"""

import json
from dataclasses import dataclass, field
from typing import Any, Iterable

import jsonschema
import numpy as np

from scripts.errors import InvalidInputError, ParseError
from scripts.holocenter_config import COEFF_DROP_TOL, DEGREE_CAP, DIMENSION_CAP
from scripts.linalg_core import as_cmatrix

Poly = dict[tuple[int, ...], complex]

FIELD_SCHEMA: dict[str, Any] = {
    "type": "object",
    "required": ["n", "coords"],
    "properties": {
        "n": {"type": "integer", "minimum": 1, "maximum": DIMENSION_CAP},
        "name": {"type": "string"},
        "coords": {
            "type": "array",
            "items": {
                "type": "array",
                "items": {
                    "type": "object",
                    "required": ["re", "im", "exp"],
                    "properties": {
                        "re": {"type": "number"},
                        "im": {"type": "number"},
                        "exp": {"type": "array", "items": {"type": "integer", "minimum": 0}},
                    },
                },
            },
        },
    },
}


@dataclass(frozen=True)
class Monomial:
    """
    A single term coeff * x_1^e_1 * ... * x_n^e_n.

    Attributes:
        coeff: Complex coefficient.
        exponents: Tuple of n non-negative integers.
    """
    coeff: complex
    exponents: tuple[int, ...]

    @property
    def degree(self) -> int:
        return sum(self.exponents)


def _normalize(poly: Poly, drop_tol: float = COEFF_DROP_TOL) -> tuple[Monomial, ...]:
    # canonical order: total degree, then exponent tuple
    terms = [
        Monomial(complex(c), e)
        for e, c in poly.items()
        if c != 0 and abs(c) >= drop_tol
    ]
    terms.sort(key=lambda m: (m.degree, m.exponents))
    return tuple(terms)


def _term_arrays(terms: tuple[Monomial, ...], n: int) -> tuple[np.ndarray, np.ndarray]:
    if not terms:
        return np.zeros(0, dtype=complex), np.zeros((0, n), dtype=int)
    coeffs = np.array([m.coeff for m in terms], dtype=complex)
    exps = np.array([m.exponents for m in terms], dtype=int).reshape(len(terms), n)
    return coeffs, exps


@dataclass(frozen=True)
class PolynomialMap:
    """
    A polynomial map C^n -> C^n in normalized monomial form.

    Build instances with `PolynomialMap.from_terms` (or the helpers
    `linear_map`, `identity_map`, `parse_field`); the constructor assumes
    its coordinates are already normalized.

    Attributes:
        n: Ambient dimension.
        coords: One tuple of monomials per output coordinate.
        name: Optional label carried into reports.
    """
    n: int
    coords: tuple[tuple[Monomial, ...], ...]
    name: str | None = None
    _coeffs: tuple = field(init=False, repr=False, compare=False)
    _exps: tuple = field(init=False, repr=False, compare=False)
    _dcoeffs: tuple = field(init=False, repr=False, compare=False)
    _dexps: tuple = field(init=False, repr=False, compare=False)
    _max_degree: int = field(init=False, repr=False, compare=False)

    batched = True

    def __post_init__(self):
        n = self.n
        coeffs, exps, dcoeffs, dexps = [], [], [], []
        max_degree = 0
        for terms in self.coords:
            c, e = _term_arrays(terms, n)
            coeffs.append(c)
            exps.append(e)
            if len(terms):
                max_degree = max(max_degree, int(e.sum(axis=1).max()))
            row_c, row_e = [], []
            for j in range(n):
                mask = e[:, j] > 0
                de = e[mask].copy()
                de[:, j] -= 1
                row_c.append(c[mask] * e[mask, j])
                row_e.append(de)
            dcoeffs.append(tuple(row_c))
            dexps.append(tuple(row_e))
        object.__setattr__(self, "_coeffs", tuple(coeffs))
        object.__setattr__(self, "_exps", tuple(exps))
        object.__setattr__(self, "_dcoeffs", tuple(dcoeffs))
        object.__setattr__(self, "_dexps", tuple(dexps))
        object.__setattr__(self, "_max_degree", max_degree)

    @classmethod
    def from_terms(
        cls,
        n: int,
        coords: Iterable[Iterable[tuple[complex, Iterable[int]]]],
        name: str | None = None,
        drop_tol: float = COEFF_DROP_TOL,
    ) -> "PolynomialMap":
        """
        Build a normalized map from (coefficient, exponents) pairs.

        Duplicate exponents are summed, zero coefficients dropped and each
        coordinate sorted by (total degree, exponent tuple).

        Args:
            n: Ambient dimension.
            coords: n iterables of (coeff, exponents) pairs.
            name: Optional label.
            drop_tol: Coefficients smaller than this in magnitude are dropped.

        Returns:
            The normalized PolynomialMap.

        Raises:
            InvalidInputError: On wrong arity, negative exponents, or a cap
                violation.
        """
        if not 1 <= n <= DIMENSION_CAP:
            raise InvalidInputError(f"dimension {n} outside 1..{DIMENSION_CAP}")
        polys: list[Poly] = []
        for terms in coords:
            poly: Poly = {}
            for coeff, exps in terms:
                e = tuple(int(k) for k in exps)
                if len(e) != n:
                    raise InvalidInputError(f"exponent tuple {e} has length {len(e)}, expected {n}")
                if any(k < 0 for k in e):
                    raise InvalidInputError(f"negative exponent in {e}")
                if sum(e) > DEGREE_CAP:
                    raise InvalidInputError(f"monomial degree {sum(e)} exceeds cap {DEGREE_CAP}")
                c = complex(coeff)
                if not np.isfinite(c):
                    raise InvalidInputError(f"non-finite coefficient for exponents {e}")
                poly[e] = poly[e] + c if e in poly else c
            polys.append(poly)
        if len(polys) != n:
            raise InvalidInputError(f"expected {n} coordinates, got {len(polys)}")
        return cls(n=n, coords=tuple(_normalize(p, drop_tol) for p in polys), name=name)

    @property
    def max_degree(self) -> int:
        return self._max_degree

    @property
    def singular_at_origin(self) -> bool:
        """True when F(0) = 0, i.e. no coordinate has a constant term."""
        return all(m.degree > 0 for terms in self.coords for m in terms)

    def to_polys(self) -> list[Poly]:
        return [{m.exponents: m.coeff for m in terms} for terms in self.coords]

    def _power_table(self, X: np.ndarray) -> np.ndarray:
        # pw[..., j, k] = x_j ** k by repeated multiplication
        D = max(self._max_degree, 1)
        pw = np.empty(X.shape + (D + 1,), dtype=complex)
        pw[..., 0] = 1.0
        for k in range(1, D + 1):
            pw[..., k] = pw[..., k - 1] * X
        return pw

    def _eval_terms(self, pw: np.ndarray, coeffs: np.ndarray, exps: np.ndarray) -> np.ndarray:
        batch_shape = pw.shape[:-2]
        if coeffs.shape[0] == 0:
            return np.zeros(batch_shape, dtype=complex)
        cols = np.broadcast_to(np.arange(self.n), exps.shape)
        values = pw[..., cols, exps].prod(axis=-1)
        return values @ coeffs

    def evaluate_batch(self, X: np.ndarray) -> np.ndarray:
        """Evaluate at points X of shape (..., n); returns shape (..., n)."""
        X = np.asarray(X, dtype=complex)
        pw = self._power_table(X)
        out = np.empty(X.shape, dtype=complex)
        for l in range(self.n):
            out[..., l] = self._eval_terms(pw, self._coeffs[l], self._exps[l])
        return out

    def jacobian_batch(self, X: np.ndarray) -> np.ndarray:
        """Jacobians at points X of shape (..., n); returns shape (..., n, n)."""
        X = np.asarray(X, dtype=complex)
        pw = self._power_table(X)
        out = np.empty(X.shape + (self.n,), dtype=complex)
        for l in range(self.n):
            for j in range(self.n):
                out[..., l, j] = self._eval_terms(pw, self._dcoeffs[l][j], self._dexps[l][j])
        return out


def _as_point(F: PolynomialMap, x) -> np.ndarray:
    v = np.asarray(x, dtype=complex).reshape(-1)
    if v.shape[0] != F.n:
        raise InvalidInputError(f"point has length {v.shape[0]}, expected {F.n}")
    return v


def evaluate(F: PolynomialMap, x) -> np.ndarray:
    """
    Evaluate a polynomial map at a single point.

    Raises:
        InvalidInputError: If x does not have length F.n.
    """
    return F.evaluate_batch(_as_point(F, x))


def jacobian_at(F: PolynomialMap, x) -> np.ndarray:
    """
    Exact Jacobian matrix of F at x, from symbolic monomial derivatives.

    Raises:
        InvalidInputError: If x does not have length F.n.
    """
    return F.jacobian_batch(_as_point(F, x))


def linear_part(F: PolynomialMap) -> np.ndarray:
    """Jacobian at the origin, F'(0)."""
    return F.jacobian_batch(np.zeros(F.n, dtype=complex))


def linear_map(M, name: str | None = None) -> PolynomialMap:
    """The linear map x -> Mx as a PolynomialMap."""
    A = as_cmatrix(M)
    n = A.shape[0]
    unit = np.eye(n, dtype=int)
    coords = [[(A[l, j], unit[j]) for j in range(n)] for l in range(n)]
    return PolynomialMap.from_terms(n, coords, name=name)


def identity_map(n: int) -> PolynomialMap:
    return linear_map(np.eye(n), name="identity")


def _poly_mul(a: Poly, b: Poly, degree: int) -> Poly:
    out: Poly = {}
    for ea, ca in a.items():
        da = sum(ea)
        for eb, cb in b.items():
            if da + sum(eb) > degree:
                continue
            e = tuple(x + y for x, y in zip(ea, eb))
            out[e] = out.get(e, 0j) + ca * cb
    return out


def _poly_add_scaled(acc: Poly, p: Poly, c: complex) -> None:
    for e, v in p.items():
        acc[e] = acc.get(e, 0j) + c * v


def compose_truncated(f: PolynomialMap, g: PolynomialMap, degree: int) -> PolynomialMap:
    """
    Taylor truncation of the composition f o g to total degree <= degree.

    Args:
        f: Outer map.
        g: Inner map, same dimension as f.
        degree: Truncation degree, at most DEGREE_CAP.

    Returns:
        The truncated composition as a normalized PolynomialMap.

    Raises:
        InvalidInputError: On dimension mismatch or degree over the cap.

    Example:
        >>> f = PolynomialMap.from_terms(1, [[(-1, [1]), (1, [2])]])
        >>> compose_truncated(f, f, 4)   # z - 2z^3 + z^4
    """
    if f.n != g.n:
        raise InvalidInputError(f"dimension mismatch: {f.n} vs {g.n}")
    if not 0 <= degree <= DEGREE_CAP:
        raise InvalidInputError(f"truncation degree {degree} outside 0..{DEGREE_CAP}")
    n = f.n
    inner = [{e: c for e, c in p.items() if sum(e) <= degree} for p in g.to_polys()]
    one: Poly = {(0,) * n: 1 + 0j}
    powers: list[list[Poly]] = [[one] for _ in range(n)]

    def power(j: int, k: int) -> Poly:
        while len(powers[j]) <= k:
            powers[j].append(_poly_mul(powers[j][-1], inner[j], degree))
        return powers[j][k]

    coords: list[Poly] = []
    for terms in f.coords:
        acc: Poly = {}
        for mono in terms:
            prod = one
            for j, k in enumerate(mono.exponents):
                if k:
                    prod = _poly_mul(prod, power(j, k), degree)
            _poly_add_scaled(acc, prod, mono.coeff)
        coords.append(acc)
    return PolynomialMap(n=n, coords=tuple(_normalize(p) for p in coords), name=f.name)


def scale_time(F: PolynomialMap, c: complex) -> PolynomialMap:
    """
    Rescale time by a complex factor: returns cF.

    Raises:
        InvalidInputError: If c = 0.
    """
    c = complex(c)
    if c == 0:
        raise InvalidInputError("time factor must be nonzero")
    coords = [{m.exponents: c * m.coeff for m in terms} for terms in F.coords]
    return PolynomialMap(n=F.n, coords=tuple(_normalize(p) for p in coords), name=F.name)


def perturb_linear(f: PolynomialMap, eps) -> PolynomialMap:
    """
    Add eps_l * z_l to coordinate l (a small perturbation of the linear part).

    Raises:
        InvalidInputError: If eps does not have length f.n.
    """
    e = np.asarray(eps, dtype=complex).reshape(-1)
    if e.shape[0] != f.n:
        raise InvalidInputError(f"perturbation has length {e.shape[0]}, expected {f.n}")
    polys = f.to_polys()
    unit = np.eye(f.n, dtype=int)
    for l in range(f.n):
        key = tuple(int(k) for k in unit[l])
        polys[l][key] = polys[l].get(key, 0j) + e[l]
    return PolynomialMap(n=f.n, coords=tuple(_normalize(p) for p in polys), name=f.name)


def linear_change(F: PolynomialMap, Q) -> PolynomialMap:
    """
    Conjugate F by an invertible matrix: G(y) = Q^{-1} F(Q y).

    The linear part transforms as Q^{-1} F'(0) Q, so a Schur basis puts
    G'(0) in triangular form.
    """
    A = as_cmatrix(Q)
    if A.shape[0] != F.n:
        raise InvalidInputError(f"matrix dimension {A.shape[0]} does not match field dimension {F.n}")
    Q_inv = np.linalg.inv(A)
    H = compose_truncated(F, linear_map(A), max(F.max_degree, 1))
    h_polys = H.to_polys()
    coords: list[Poly] = []
    for l in range(F.n):
        acc: Poly = {}
        for k in range(F.n):
            if Q_inv[l, k] != 0:
                _poly_add_scaled(acc, h_polys[k], Q_inv[l, k])
        coords.append(acc)
    return PolynomialMap(n=F.n, coords=tuple(_normalize(p) for p in coords), name=F.name)


def parse_field(document: str | dict[str, Any]) -> PolynomialMap:
    """
    Parse a field document into a normalized PolynomialMap.

    Coefficients are kept exactly as written. Monomials are put in canonical
    order (total degree, then exponent tuple), duplicate exponents summed and
    zero coefficients dropped, so serialize_field reproduces any document
    already in that form bit for bit.

    Args:
        document: JSON text or an already-decoded object.

    Returns:
        The normalized map.

    Raises:
        ParseError: On malformed JSON, schema violations, wrong arity, or cap
            violations. The error's location names the offending element.
    """
    if isinstance(document, str):
        try:
            data = json.loads(document)
        except json.JSONDecodeError as e:
            raise ParseError(f"invalid JSON: {e.msg}", f"line {e.lineno} column {e.colno}")
    else:
        data = document

    errors = sorted(
        jsonschema.Draft202012Validator(FIELD_SCHEMA).iter_errors(data),
        key=lambda err: list(err.absolute_path),
    )
    if errors:
        first = errors[0]
        location = "/" + "/".join(str(p) for p in first.absolute_path)
        raise ParseError(first.message, location)

    n = data["n"]
    coords = data["coords"]
    if len(coords) != n:
        raise ParseError(f"expected {n} coordinates, got {len(coords)}", "/coords")
    terms: list[list[tuple[complex, list[int]]]] = []
    for l, row in enumerate(coords):
        row_terms = []
        for k, mono in enumerate(row):
            location = f"/coords/{l}/{k}/exp"
            if len(mono["exp"]) != n:
                raise ParseError(f"exponent array has length {len(mono['exp'])}, expected {n}", location)
            if sum(mono["exp"]) > DEGREE_CAP:
                raise ParseError(f"degree {sum(mono['exp'])} exceeds cap {DEGREE_CAP}", location)
            coeff = complex(mono["re"], mono["im"])
            if not np.isfinite(coeff):
                raise ParseError("coefficient is not finite", f"/coords/{l}/{k}")
            row_terms.append((coeff, mono["exp"]))
        terms.append(row_terms)
    # parsed coefficients are kept as written; the drop rule applies after arithmetic
    return PolynomialMap.from_terms(n, terms, name=data.get("name"), drop_tol=0.0)


def serialize_field(F: PolynomialMap) -> dict[str, Any]:
    """Inverse of parse_field on documents in canonical order."""
    doc: dict[str, Any] = {"n": F.n}
    if F.name is not None:
        doc["name"] = F.name
    doc["coords"] = [
        [{"re": m.coeff.real, "im": m.coeff.imag, "exp": list(m.exponents)} for m in terms]
        for terms in F.coords
    ]
    return doc


def load_field(path: str) -> PolynomialMap:
    """Read and parse a field document from a UTF-8 file."""
    with open(path, encoding="utf-8") as f:
        return parse_field(f.read())
