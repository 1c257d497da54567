"""
Index Engine: Zero and Fixed-Point Indices of Holomorphic Maps.

This module counts the solutions of f(x) = q near an isolated zero p of a
holomorphic map f, for a small random regular value q. For holomorphic maps
every preimage counts positively, so the zero index pi_f(p) is simply the
number of distinct converged Newton roots inside the region, and the fixed
point index is mu_f(p) = pi_{f - I}(p).

Root Search:
------------
1. |q| = q_radius_factor * min |f| over 64*n boundary samples of the region
2. Newton is started from a deterministic Halton grid of
   min(starts_per_dim^(2n), max_starts) points covering the region (for maps
   without batched evaluation, such as time-T flow maps, flow_starts points)
3. Converged roots are sorted lexicographically and merged at separation_tol

Certification:
--------------
A count is reported as an integer only when every q draw (cfg.retries of
them) on both radii r and 0.8r gives the same count. Otherwise the value is
None ("undetermined"). Roots within separation_tol of the boundary raise
BoundaryAmbiguityError.

Also provided: iterated indices mu_{f^m}(p), the 1-D series-order oracle,
period-m orbits of maps, and the linear-perturbation sum check.
"""

from dataclasses import asdict, dataclass, field
from typing import Any, Protocol

import numpy as np
from scipy.stats import qmc

from scripts.errors import (
    BoundaryAmbiguityError,
    InvalidInputError,
    NonIsolatedError,
    NonIsolatedOrCapExceededError,
    UndeterminedError,
)
from scripts.field_model import (
    PolynomialMap,
    compose_truncated,
    identity_map,
    perturb_linear,
)
from scripts.flow_engine import TimeTMap
from scripts.holocenter_config import (
    BOUNDARY_SAMPLES_PER_DIM,
    DEGREE_CAP,
    EIGEN_TOL,
    FLOW_STARTS,
    MAX_STARTS,
    NEWTON_MAX_ITER,
    RETURN_IDENTITY_FACTOR,
    SERIES_TOL,
    get_default_seed,
)
from scripts.linalg_core import eigenvalues


class HolomorphicMap(Protocol):
    """Anything with a dimension and batched value/Jacobian evaluation."""
    n: int
    batched: bool

    def evaluate_batch(self, X: np.ndarray) -> np.ndarray: ...

    def jacobian_batch(self, X: np.ndarray) -> np.ndarray: ...


@dataclass(frozen=True)
class BallRegion:
    """
    Closed ball {x : |x - center| <= radius} in C^n.

    Attributes:
        center: Center point.
        radius: Positive radius.
    """
    center: tuple[complex, ...]
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(complex(c) for c in np.ravel(self.center)))
        if not self.radius > 0:
            raise InvalidInputError(f"region radius must be positive, got {self.radius}")

    @property
    def n(self) -> int:
        return len(self.center)

    @property
    def center_array(self) -> np.ndarray:
        return np.array(self.center, dtype=complex)

    def scaled(self, factor: float) -> "BallRegion":
        return BallRegion(self.center, self.radius * factor)

    def to_dict(self) -> dict[str, Any]:
        return {"center": list(self.center), "radius": self.radius}


@dataclass(frozen=True)
class IndexConfig:
    """
    Root search and certification settings.

    Attributes:
        q_radius_factor: |q| as a fraction of the boundary minimum of |f|.
        newton_tol: Step-size convergence tolerance.
        starts_per_dim: Grid density; starts_per_dim^(2n) starts before capping.
        retries: Independent q draws per radius.
        separation_tol: Roots closer than this are merged; roots this close to
            the boundary are ambiguous.
        residual_tol: Largest accepted |f(x) - q| at a converged root.
        seed: Seed for q draws and boundary samples.
        max_starts: Cap on batched starts.
        flow_starts: Starts for maps evaluated point by point.
        newton_max_iter: Newton iteration limit.
        series_tol: Truncated-series coefficients below this count as zero.
        eigen_tol: Distance at which an eigenvalue counts as equal to 1.
    """
    q_radius_factor: float = 0.1
    newton_tol: float = 1e-11
    starts_per_dim: int = 24
    retries: int = 3
    separation_tol: float = 1e-7
    residual_tol: float = 1e-8
    seed: int = field(default_factory=get_default_seed)
    max_starts: int = MAX_STARTS
    flow_starts: int = FLOW_STARTS
    newton_max_iter: int = NEWTON_MAX_ITER
    series_tol: float = SERIES_TOL
    eigen_tol: float = EIGEN_TOL

    def __post_init__(self):
        if not 0 < self.q_radius_factor < 1:
            raise InvalidInputError("q_radius_factor must lie in (0, 1)")
        for name in ("newton_tol", "separation_tol", "residual_tol", "series_tol", "eigen_tol"):
            if not getattr(self, name) > 0:
                raise InvalidInputError(f"{name} must be positive")
        for name in ("starts_per_dim", "retries", "max_starts", "flow_starts", "newton_max_iter"):
            if getattr(self, name) < 1:
                raise InvalidInputError(f"{name} must be at least 1")

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


@dataclass
class IndexResult:
    """
    Certified index value with diagnostics.

    Attributes:
        value: Index, or None when retries disagreed (undetermined).
        q_used: Regular value of the reference run (radius r, first draw).
        roots: Distinct roots of the reference run, sorted.
        diagnostics: Residuals, separations, per-run counts.
    """
    value: int | None
    q_used: np.ndarray
    roots: list[np.ndarray]
    diagnostics: dict[str, Any] = field(default_factory=dict)

    @property
    def certified(self) -> bool:
        return self.value is not None

    def to_dict(self) -> dict[str, Any]:
        return {
            "value": self.value if self.value is not None else "undetermined",
            "q": list(self.q_used),
            "roots": [list(r) for r in self.roots],
            "diagnostics": self.diagnostics,
        }


@dataclass
class MapOrbit:
    """
    A periodic orbit of a map: points[j+1] = f(points[j]), indices mod period.
    """
    points: list[np.ndarray]
    period: int

    def to_dict(self) -> dict[str, Any]:
        return {"period": self.period, "points": [list(p) for p in self.points]}


class _FixedPointDefect:
    """x -> f(x) - x, whose zeros are the fixed points of f."""

    def __init__(self, f: HolomorphicMap):
        self.f = f
        self.n = f.n
        self.batched = f.batched

    def evaluate_batch(self, X):
        X = np.asarray(X, dtype=complex)
        return self.f.evaluate_batch(X) - X

    def jacobian_batch(self, X):
        return self.f.jacobian_batch(X) - np.eye(self.n)


class _IteratedMap:
    """The m-fold iterate f^m, with the Jacobian from the chain rule."""

    def __init__(self, f: HolomorphicMap, m: int):
        self.f = f
        self.m = m
        self.n = f.n
        self.batched = f.batched

    def evaluate_batch(self, X):
        Y = np.asarray(X, dtype=complex)
        for _ in range(self.m):
            Y = self.f.evaluate_batch(Y)
        return Y

    def jacobian_batch(self, X):
        Y = np.asarray(X, dtype=complex)
        J = np.broadcast_to(np.eye(self.n, dtype=complex), Y.shape + (self.n,)).copy()
        for _ in range(self.m):
            J = self.f.jacobian_batch(Y) @ J
            Y = self.f.evaluate_batch(Y)
        return J


def _check_region(f: HolomorphicMap, region: BallRegion) -> None:
    if region.n != f.n:
        raise InvalidInputError(f"region has dimension {region.n}, map has {f.n}")


def _boundary_points(region: BallRegion, count: int, rng: np.random.Generator) -> np.ndarray:
    n = region.n
    raw = rng.standard_normal((count, 2 * n))
    raw /= np.linalg.norm(raw, axis=1, keepdims=True)
    return region.center_array + region.radius * (raw[:, :n] + 1j * raw[:, n:])


def _start_points(f: HolomorphicMap, region: BallRegion, cfg: IndexConfig, offset: int) -> np.ndarray:
    n = region.n
    if f.batched:
        count = min(cfg.starts_per_dim ** (2 * n), cfg.max_starts)
    else:
        count = cfg.flow_starts
    sampler = qmc.Halton(d=2 * n, scramble=False)
    sampler.fast_forward(1 + offset * count)
    u = 2.0 * sampler.random(count) - 1.0
    return region.center_array + region.radius * (u[:, :n] + 1j * u[:, n:])


def _newton(g: HolomorphicMap, X0: np.ndarray, q: np.ndarray, cfg: IndexConfig, limit: float) -> tuple[np.ndarray, np.ndarray]:
    """Batched Newton on g(x) = q; returns (points, converged mask)."""
    X = X0.copy()
    n = g.n
    active = np.ones(len(X), dtype=bool)
    converged = np.zeros(len(X), dtype=bool)
    eye = np.eye(n, dtype=complex)
    for _ in range(cfg.newton_max_iter):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        Xa = X[idx]
        R = g.evaluate_batch(Xa) - q
        J = g.jacobian_batch(Xa)
        det = np.linalg.det(J)
        bad = ~np.isfinite(det) | (np.abs(det) < 1e-300) | ~np.all(np.isfinite(R), axis=1)
        J[bad] = eye
        R[bad] = 0.0
        step = np.linalg.solve(J, R[..., None])[..., 0]
        Xa = Xa - step
        X[idx] = Xa
        size = np.linalg.norm(step, axis=1)
        lost = bad | ~np.all(np.isfinite(Xa), axis=1) | (np.linalg.norm(Xa, axis=1) > limit)
        done = ~lost & (size <= cfg.newton_tol * (1.0 + np.linalg.norm(Xa, axis=1)))
        converged[idx[done]] = True
        active[idx[done | lost]] = False
    return X, converged


def _dedupe(points: np.ndarray, tol: float) -> list[np.ndarray]:
    if len(points) == 0:
        return []
    keys = np.column_stack([c for j in range(points.shape[1]) for c in (points[:, j].real, points[:, j].imag)])
    order = np.lexsort(keys.T[::-1])
    kept: list[np.ndarray] = []
    for i in order:
        x = points[i]
        if kept and np.min(np.linalg.norm(np.array(kept) - x, axis=1)) <= tol:
            continue
        kept.append(x)
    return kept


def _solve_in_region(
    g: HolomorphicMap,
    region: BallRegion,
    q: np.ndarray,
    cfg: IndexConfig,
    offset: int,
) -> tuple[list[np.ndarray], dict[str, Any]]:
    starts = _start_points(g, region, cfg, offset)
    center = region.center_array
    limit = 4.0 * region.radius + float(np.linalg.norm(center))
    X, converged = _newton(g, starts, q, cfg, limit)
    candidates = X[converged]
    if len(candidates):
        residual = np.linalg.norm(g.evaluate_batch(candidates) - q, axis=1)
        candidates = candidates[residual <= cfg.residual_tol]
    roots = _dedupe(candidates, cfg.separation_tol)

    inside: list[np.ndarray] = []
    for x in roots:
        dist = float(np.linalg.norm(x - center))
        if abs(dist - region.radius) <= cfg.separation_tol:
            raise BoundaryAmbiguityError(
                f"root at distance {dist:.3e} lies within {cfg.separation_tol:g} of the boundary radius {region.radius:g}"
            )
        if dist < region.radius:
            inside.append(x)

    residuals = [float(np.linalg.norm(g.evaluate_batch(x) - q)) for x in inside]
    if len(inside) > 1:
        pts = np.array(inside)
        gaps = np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=2)
        min_sep = float(np.min(gaps[np.triu_indices(len(inside), k=1)]))
    else:
        min_sep = None
    dets = [complex(np.linalg.det(g.jacobian_batch(x))) for x in inside]
    diag = {
        "starts": int(len(starts)),
        "converged": int(converged.sum()),
        "residuals": residuals,
        "min_separation": min_sep,
        "min_abs_jacobian_det": min((abs(d) for d in dets), default=None),
    }
    return inside, diag


def zero_index(f: HolomorphicMap, p, region: BallRegion, cfg: IndexConfig | None = None) -> IndexResult:
    """
    Zero index pi_f(p): the number of preimages of a small regular value q.

    Args:
        f: Holomorphic map with batched evaluation and Jacobian.
        p: The isolated zero (user-asserted unique zero in the region).
        region: Closed ball containing p.
        cfg: Index configuration.

    Returns:
        IndexResult; value is None when retries disagree.

    Raises:
        InvalidInputError: On dimension mismatch or if f(p) is not ~0.
        BoundaryAmbiguityError: If f is ~0 on the boundary or a root sits on it.

    Example:
        >>> cube = PolynomialMap.from_terms(1, [[(1, [3])]])
        >>> zero_index(cube, [0], BallRegion((0,), 0.5)).value
        3
    """
    cfg = cfg or IndexConfig()
    _check_region(f, region)
    p = np.asarray(p, dtype=complex).reshape(-1)
    if p.shape[0] != f.n:
        raise InvalidInputError(f"point has length {p.shape[0]}, expected {f.n}")
    p_residual = float(np.linalg.norm(f.evaluate_batch(p)))
    if p_residual > cfg.residual_tol:
        raise InvalidInputError(f"p is not a zero of the map (|f(p)|={p_residual:.3e})")

    rng = np.random.default_rng(cfg.seed)
    runs: list[dict[str, Any]] = []
    reference: tuple[np.ndarray, list[np.ndarray], dict[str, Any]] | None = None
    for factor in (1.0, 0.8):
        sub = region.scaled(factor)
        boundary = _boundary_points(sub, BOUNDARY_SAMPLES_PER_DIM * f.n, rng)
        boundary_min = float(np.min(np.linalg.norm(f.evaluate_batch(boundary), axis=1)))
        if boundary_min <= cfg.residual_tol:
            raise BoundaryAmbiguityError(f"map nearly vanishes on the boundary of radius {sub.radius:g}")
        q_mag = cfg.q_radius_factor * boundary_min
        for draw in range(cfg.retries):
            direction = rng.standard_normal(f.n) + 1j * rng.standard_normal(f.n)
            q = q_mag * direction / np.linalg.norm(direction)
            roots, diag = _solve_in_region(f, sub, q, cfg, offset=draw)
            runs.append({"radius": sub.radius, "q_abs": q_mag, "count": len(roots), **diag})
            print(f"[Index] radius={sub.radius:.4g} draw={draw} |q|={q_mag:.3e} roots={len(roots)}")
            if reference is None:
                reference = (q, roots, diag)

    counts = {run["count"] for run in runs}
    value = runs[0]["count"] if len(counts) == 1 else None
    q_ref, roots_ref, diag_ref = reference
    diagnostics = {
        "p_residual": p_residual,
        "agreement": len(counts) == 1,
        "counts": [run["count"] for run in runs],
        "residuals": diag_ref["residuals"],
        "min_separation": diag_ref["min_separation"],
        "min_abs_jacobian_det": diag_ref["min_abs_jacobian_det"],
        "runs": runs,
    }
    if value is None:
        print(f"[Index] Undetermined: counts disagree across retries {diagnostics['counts']}")
    return IndexResult(value=value, q_used=q_ref, roots=roots_ref, diagnostics=diagnostics)


def fixed_point_index(f: HolomorphicMap, p, region: BallRegion, cfg: IndexConfig | None = None) -> IndexResult:
    """Fixed point index mu_f(p) = pi_{f - I}(p)."""
    return zero_index(_FixedPointDefect(f), p, region, cfg)


def _compose_power(f: PolynomialMap, m: int) -> PolynomialMap:
    fm = f
    for _ in range(m - 1):
        fm = compose_truncated(f, fm, DEGREE_CAP)
    return fm


def _identity_defect_vanishes(fm: PolynomialMap, tol: float) -> bool:
    ident = identity_map(fm.n).to_polys()
    for poly, id_poly in zip(fm.to_polys(), ident):
        keys = set(poly) | set(id_poly)
        if any(abs(poly.get(k, 0j) - id_poly.get(k, 0j)) > tol for k in keys):
            return False
    return True


def series_order_1d(f: PolynomialMap, m: int = 1, tol: float = SERIES_TOL) -> int:
    """
    Vanishing order at 0 of f^m(z) - z for a 1-D polynomial germ.

    For holomorphic germs in one variable this equals mu_{f^m}(0).

    Raises:
        InvalidInputError: If f is not 1-D, f(0) != 0, or m < 1.
        NonIsolatedOrCapExceededError: If every coefficient up to the
            degree cap vanishes.

    Example:
        >>> f = PolynomialMap.from_terms(1, [[(-1, [1]), (1, [2])]])
        >>> series_order_1d(f, 2)
        3
    """
    if f.n != 1:
        raise InvalidInputError(f"series order oracle needs n=1, got n={f.n}")
    if m < 1:
        raise InvalidInputError(f"iteration count must be at least 1, got {m}")
    if not f.singular_at_origin:
        raise InvalidInputError("series order oracle needs f(0)=0")
    coeffs = _compose_power(f, m).to_polys()[0]
    coeffs[(1,)] = coeffs.get((1,), 0j) - 1.0
    for k in range(1, DEGREE_CAP + 1):
        if abs(coeffs.get((k,), 0j)) > tol:
            return k
    raise NonIsolatedOrCapExceededError(f"f^{m}(z) - z vanishes up to degree {DEGREE_CAP}")


def iterated_index(
    f: HolomorphicMap,
    m: int,
    p,
    region: BallRegion,
    cfg: IndexConfig | None = None,
) -> IndexResult:
    """
    Fixed point index of the m-fold iterate, mu_{f^m}(p).

    Polynomial maps are composed exactly when deg(f)^m fits the degree cap
    and evaluated by iteration otherwise; time-T maps are iterated.

    Raises:
        NonIsolatedError: If f^m is the identity near p (vanishing truncated
            series, or return errors at integrator tolerance on a sampled circle).
    """
    cfg = cfg or IndexConfig()
    if m < 1:
        raise InvalidInputError(f"iteration count must be at least 1, got {m}")
    _check_region(f, region)
    p_arr = np.asarray(p, dtype=complex).reshape(-1)

    if isinstance(f, PolynomialMap):
        if f.n == 1 and f.singular_at_origin and not np.any(p_arr):
            try:
                series_order_1d(f, m, cfg.series_tol)
            except NonIsolatedOrCapExceededError as e:
                raise NonIsolatedError(str(e))
        fm_series = _compose_power(f, m)
        if _identity_defect_vanishes(fm_series, cfg.series_tol):
            raise NonIsolatedError(f"f^{m} is the identity up to degree {DEGREE_CAP}")
        target = fm_series if f.max_degree ** m <= DEGREE_CAP else _IteratedMap(f, m)
    elif isinstance(f, TimeTMap):
        target = _IteratedMap(f, m)
        circle = _boundary_points(region.scaled(0.5), 8, np.random.default_rng(cfg.seed))
        errors = np.linalg.norm(target.evaluate_batch(circle) - circle, axis=1)
        # error accumulates over m flows
        tol = RETURN_IDENTITY_FACTOR * (f.config.abs_tol + f.config.rel_tol * np.linalg.norm(circle, axis=1))
        if np.all(errors <= tol):
            raise NonIsolatedError("time-map iterate returns every sampled point within integrator tolerance")
    else:
        target = _IteratedMap(f, m)
    return fixed_point_index(target, p_arr, region, cfg)


def _proper_divisors(m: int) -> list[int]:
    return [d for d in range(1, m) if m % d == 0]


def periodic_points(f: HolomorphicMap, m: int, region: BallRegion, cfg: IndexConfig | None = None) -> list[MapOrbit]:
    """
    All orbits of exact period m meeting the region.

    Roots of f^m(x) - x are searched with the multi-start regime of
    zero_index (q = 0); points fixed by f^d for a proper divisor d of m are
    discarded and the rest grouped into cycles.

    Raises:
        UndeterminedError: If retries with independent start sets disagree.
    """
    cfg = cfg or IndexConfig()
    if m < 1:
        raise InvalidInputError(f"period must be at least 1, got {m}")
    _check_region(f, region)
    defect = _FixedPointDefect(_IteratedMap(f, m))
    zero = np.zeros(f.n, dtype=complex)

    runs: list[list[np.ndarray]] = []
    for draw in range(cfg.retries):
        roots, _ = _solve_in_region(defect, region, zero, cfg, offset=draw)
        runs.append(roots)
    counts = [len(r) for r in runs]
    if len(set(counts)) != 1:
        raise UndeterminedError(f"period-{m} root counts disagree across retries: {counts}")

    candidates = []
    for x in runs[0]:
        fixed_by_divisor = any(
            np.linalg.norm(_IteratedMap(f, d).evaluate_batch(x) - x) <= cfg.separation_tol
            for d in _proper_divisors(m)
        )
        if not fixed_by_divisor:
            candidates.append(x)

    orbits: list[MapOrbit] = []
    assigned = [False] * len(candidates)
    for i, x in enumerate(candidates):
        if assigned[i]:
            continue
        points = [x]
        for _ in range(m - 1):
            points.append(f.evaluate_batch(points[-1]))
        for j, y in enumerate(candidates):
            if any(np.linalg.norm(y - pt) <= cfg.separation_tol for pt in points):
                assigned[j] = True
        orbits.append(MapOrbit(points=points, period=m))
    print(f"[Index] period-{m} search: {len(runs[0])} roots, {len(orbits)} orbits")
    return orbits


def has_eigenvalue_one(J, tol: float = EIGEN_TOL) -> bool:
    return bool(np.any(np.abs(eigenvalues(J) - 1.0) <= tol))


def is_simple_fixed_point(f: HolomorphicMap, x, tol: float = EIGEN_TOL) -> bool:
    """A fixed point is simple when f'(x) has no eigenvalue equal to 1."""
    J = f.jacobian_batch(np.asarray(x, dtype=complex).reshape(-1))
    return not has_eigenvalue_one(J, tol)


def shub_sullivan_applies(J, m: int, tol: float = EIGEN_TOL) -> bool:
    """
    True when every eigenvalue of J is 1 or satisfies lambda^m != 1, the
    condition under which an isolated fixed point stays isolated for the
    m-th iterate.
    """
    lam = eigenvalues(J)
    return bool(np.all((np.abs(lam - 1.0) <= tol) | (np.abs(lam ** m - 1.0) > tol)))


def primitive_root_order(lam: complex, tol: float = EIGEN_TOL, m_max: int = 64) -> int | None:
    """Least m >= 1 with lam^m = 1 within tol, or None."""
    power = 1 + 0j
    for m in range(1, m_max + 1):
        power *= lam
        if abs(power - 1.0) <= tol:
            return m
    return None


def perturbation_sum(
    f: HolomorphicMap,
    eps,
    p,
    region: BallRegion,
    cfg: IndexConfig | None = None,
) -> dict[str, Any]:
    """
    Compare mu_f(p) with the fixed points of the perturbed map f + diag(eps) z.

    For small eps the perturbed fixed points in the region are simple and
    their number equals mu_f(p).

    Returns:
        Report with the perturbed fixed points, their simplicity, their
        count, the unperturbed index and whether they agree.
    """
    cfg = cfg or IndexConfig()
    if not isinstance(f, PolynomialMap):
        raise InvalidInputError("perturbation_sum needs a PolynomialMap")
    g = perturb_linear(f, eps)
    base = fixed_point_index(f, p, region, cfg)
    orbits = periodic_points(g, 1, region, cfg)
    points = [orbit.points[0] for orbit in orbits]
    simple = [is_simple_fixed_point(g, x, cfg.eigen_tol) for x in points]
    return {
        "eps": list(np.asarray(eps, dtype=complex).reshape(-1)),
        "fixed_points": [list(x) for x in points],
        "simple": simple,
        "count": len(points),
        "base_index": base.value,
        "sums_match": base.value is not None and all(simple) and len(points) == base.value,
    }
