"""
Built-in acceptance suite (`holocenter selftest`).

Each check exercises the engines on a field with a closed-form or
oracle-backed answer and returns a CheckResult. The suite is deterministic
for a given seed and runs at desk scale.
"""

import cmath
import math
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from scripts.center import (
    CenterConfig,
    Verdict,
    accumulation_probe,
    analyze_spectrum,
    build_disk,
    min_period_scan,
    verify_disk,
)
from scripts.errors import HolocenterError
from scripts.field_model import PolynomialMap, linear_map
from scripts.flow_engine import IntegratorConfig, flow_jacobian, return_error
from scripts.index_engine import (
    BallRegion,
    IndexConfig,
    fixed_point_index,
    iterated_index,
    perturbation_sum,
    series_order_1d,
)
from scripts.linalg_core import expm


def rotation_with_quadratic_drift() -> PolynomialMap:
    """(z, w)' = (i z, -w + z^2); its periodic disk is w = z^2 / (1 + 2i)."""
    return PolynomialMap.from_terms(
        2, [[(1j, [1, 0])], [(-1, [0, 1]), (1, [2, 0])]], name="rotation-quadratic-drift"
    )


def isochronous_quadratic() -> PolynomialMap:
    """z' = i z + z^2, every orbit near 0 has period 2 pi."""
    return PolynomialMap.from_terms(1, [[(1j, [1]), (1, [2])]], name="isochronous-quadratic")


def saddle_node_linear() -> PolynomialMap:
    """(z, w)' = (z, -w), no imaginary eigenvalue."""
    return linear_map(np.diag([1.0, -1.0]), name="saddle")


def one_dim(*terms: tuple[complex, int], name: str | None = None) -> PolynomialMap:
    """1-D polynomial from (coefficient, power) pairs."""
    return PolynomialMap.from_terms(1, [[(c, [k]) for c, k in terms]], name=name)


def random_map(rng: np.random.Generator, n: int, min_gap: float = 0.3) -> PolynomialMap:
    """
    Random polynomial map with f(0) = 0, sigma_min(f'(0) - I) >= min_gap and
    small quadratic and cubic terms.
    """
    while True:
        A = 0.6 * (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)))
        if np.linalg.svd(A - np.eye(n), compute_uv=False).min() >= min_gap:
            break
    unit = np.eye(n, dtype=int)
    coords = []
    for l in range(n):
        terms = [(A[l, j], unit[j]) for j in range(n)]
        for _ in range(2):
            exps = rng.multinomial(int(rng.integers(2, 4)), [1 / n] * n)
            coeff = 0.3 * complex(rng.standard_normal(), rng.standard_normal())
            terms.append((coeff, exps))
        coords.append(terms)
    return PolynomialMap.from_terms(n, coords)


@dataclass
class CheckResult:
    """Outcome of one acceptance check."""
    name: str
    passed: bool
    details: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {"name": self.name, "passed": self.passed, "details": self.details}


def check_flow_jacobian(seed: int) -> CheckResult:
    F = rotation_with_quadratic_drift()
    Y = flow_jacobian(F, 2 * math.pi, [0, 0])
    errors = [float(np.linalg.norm(Y - np.diag([1.0, math.exp(-2 * math.pi)]), 2))]
    rng = np.random.default_rng(seed)
    tight = IntegratorConfig(rel_tol=1e-12, abs_tol=1e-14)
    for _ in range(5):
        n = int(rng.integers(1, 4))
        A = 0.5 * (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)))
        Y = flow_jacobian(linear_map(A), 1.0, np.zeros(n), tight)
        errors.append(float(np.linalg.norm(Y - expm(A, 1.0), 2)))
    return CheckResult("flow jacobian matches matrix exponential", max(errors) <= 1e-8, {"errors": errors})


def check_isochronous_quadratic(seed: int) -> CheckResult:
    P = isochronous_quadratic()
    starts = [0.02, 0.05, 0.1 * cmath.exp(1j * math.pi / 3)]
    full = [return_error(P, 2 * math.pi, [z]) for z in starts]
    fractional = [return_error(P, 2 * math.pi / k, [z]) for z in starts for k in (2, 3)]
    passed = max(full) <= 1e-8 and min(fractional) >= 1e-3
    return CheckResult("isochronous quadratic returns at 2 pi only", passed, {"full": full, "fractional": fractional})


def check_index_suite(seed: int) -> CheckResult:
    cfg = IndexConfig(seed=seed, starts_per_dim=10)
    one_d = [(one_dim((2, 1)), 1), (one_dim((1, 1), (1, 3)), 3)]
    details: dict[str, Any] = {}
    passed = True
    for f, expected in one_d:
        value = fixed_point_index(f, [0], BallRegion((0,), 0.5), cfg).value
        oracle = series_order_1d(f, 1)
        details[f"order {oracle}"] = value
        passed &= value == expected == oracle
    quad = PolynomialMap.from_terms(2, [[(1, [1, 0]), (1, [0, 2])], [(1, [0, 1]), (1, [2, 0])]])
    result = fixed_point_index(quad, [0, 0], BallRegion((0, 0), 0.5), cfg)
    # f - I = (y^2, x^2) = q is solved by x = +-sqrt(q_2), y = +-sqrt(q_1)
    q = result.q_used
    explicit = [np.array([sx * cmath.sqrt(q[1]), sy * cmath.sqrt(q[0])]) for sx in (1, -1) for sy in (1, -1)]
    oracle = sum(1 for r in explicit if np.linalg.norm(r) < 0.5)
    matched = all(min(np.linalg.norm(r - x) for x in result.roots) <= 1e-7 for r in explicit)
    details["quadratic pair"] = result.value
    passed &= result.value == 4 == oracle and matched
    return CheckResult("fixed point index suite", bool(passed), details)


def check_iterated_indices(seed: int) -> CheckResult:
    cfg = IndexConfig(seed=seed)
    cases = [
        (one_dim((-1, 1), (1, 2)), 2, 0.5, 3),
        (one_dim((cmath.exp(2j * math.pi / 3), 1), (1, 2)), 3, 0.2, 4),
    ]
    details = {}
    passed = True
    for f, m, radius, expected in cases:
        value = iterated_index(f, m, [0], BallRegion((0,), radius), cfg).value
        oracle = series_order_1d(f, m)
        details[f"m={m}"] = {"index": value, "series_order": oracle}
        passed &= value == oracle == expected and value > m
    return CheckResult("iterated index exceeds the period", bool(passed), details)


def check_disk(seed: int) -> CheckResult:
    F = rotation_with_quadratic_drift()
    cfg = CenterConfig(seed=seed)
    report = analyze_spectrum(F, cfg.tol_imag)
    disk = build_disk(F, report, 0.05, 6, cfg)
    c22 = disk.coefficient(2, 2)
    others = [abs(disk.coefficient(2, k)) for k in range(1, 7) if k != 2]
    periodicity = verify_disk(F, disk, 1.0, cfg)
    passed = (
        abs(c22 - (0.2 - 0.4j)) <= 1e-6
        and max(others) <= 1e-6
        and periodicity.max_return_error <= 1e-7
        and all(v >= 1e-3 for v in periodicity.minimality.values())
        and periodicity.verdict == Verdict.PASS
    )
    return CheckResult("periodic disk closed form", passed, {
        "c22": c22,
        "max_other": max(others),
        "max_return_error": periodicity.max_return_error,
        "verdict": periodicity.verdict.value,
    })


def check_no_center_control(seed: int) -> CheckResult:
    F = saddle_node_linear()
    cfg = CenterConfig(seed=seed)
    report = analyze_spectrum(F, cfg.tol_imag)
    probe = accumulation_probe(F, 1.0, [1e-1, 1e-2, 1e-3, 1e-4], cfg)
    passed = report.omega is None and not report.imaginary_eigenvalue_present and not probe["found_any"]
    return CheckResult("no imaginary eigenvalue, no accumulated fixed points", passed, {
        "omega": report.omega,
        "found": [e["found"] for e in probe["scales"]],
    })


def check_index_properties(seed: int) -> CheckResult:
    rng = np.random.default_rng(seed)
    cfg = IndexConfig(seed=seed, starts_per_dim=6)
    values = []
    for k in range(50):
        n = 1 if k < 25 else 2
        f = random_map(rng, n)
        values.append(fixed_point_index(f, np.zeros(n), BallRegion((0,) * n, 0.05), cfg).value)
    f = one_dim((1, 1), (1, 3))
    perturbed = []
    for eps in (1e-3, 1e-2):
        result = perturbation_sum(f, [eps], [0], BallRegion((0,), 0.5), IndexConfig(seed=seed))
        perturbed.append(result["count"] == 3 and all(result["simple"]) and result["sums_match"])
    passed = all(v == 1 for v in values) and all(perturbed)
    return CheckResult("simple fixed points and perturbation sums", passed, {
        "non_unit_indices": [v for v in values if v != 1],
        "perturbation": perturbed,
    })


def check_min_period_scan(seed: int) -> CheckResult:
    result = min_period_scan(isochronous_quadratic(), 0.5, 1.0, 10, CenterConfig(seed=seed))
    passed = all(g["ratio"] >= 0.1 for g in result["grid"])
    return CheckResult("no short periods near the singularity", passed, {"min_ratio": result["min_ratio"]})


CHECKS: list[Callable[[int], CheckResult]] = [
    check_flow_jacobian,
    check_isochronous_quadratic,
    check_index_suite,
    check_iterated_indices,
    check_disk,
    check_no_center_control,
    check_index_properties,
    check_min_period_scan,
]


def run_selftest(seed: int = 0) -> list[CheckResult]:
    """
    Run every acceptance check; errors count as failures.

    Returns:
        One CheckResult per check, in suite order.
    """
    results = []
    for check in CHECKS:
        print(f"\n[Selftest] Running {check.__name__}")
        try:
            result = check(seed)
        except HolocenterError as e:
            result = CheckResult(check.__name__, False, {"error": f"{type(e).__name__}: {e}"})
        print(f"[Selftest] {'PASS' if result.passed else 'FAIL'}: {result.name}")
        results.append(result)
    return results
