"""
Periodicity and minimal-period checks.

verify_disk samples a fitted disk and measures return errors at the period
P = 2 pi/|omega| and at the fractions P/k, k = 2..m*, where
m* = floor(2 pi / (T0 |omega|)). Every orbit on the disk has period P/m for
some m <= m*, so large errors at each P/k certify P as the minimal period.

min_period_scan gives a quantitative form of "no periodic orbit of period
T <= T0 meets the sphere |x| = rho": since |phi(T, x) - x| ~ T |F(x)| for
small T, the ratio |phi(T, x) - x| / T must stay above half the sampled
minimum of |F| over the sphere.
"""

import math
from typing import Any

import numpy as np

from scripts.errors import InvalidInputError, PreconditionFailedError
from scripts.field_model import PolynomialMap
from scripts.flow_engine import return_error
from scripts.holocenter_config import BOUNDARY_SAMPLES_PER_DIM

from .CE_disk import disk_point
from .CE_models import CenterConfig, DiskModel, PeriodicityReport, Verdict
from .CE_spectrum import analyze_spectrum

_GOLDEN = (math.sqrt(5) - 1) / 2


def _disk_samples(disk: DiskModel, count: int) -> list[np.ndarray]:
    samples = []
    for j in range(count):
        r = disk.delta * (0.25 + 0.75 * j / (count - 1))
        theta = 2 * math.pi * ((j * _GOLDEN) % 1.0)
        samples.append(disk_point(disk, r * complex(math.cos(theta), math.sin(theta))))
    return samples


def verify_disk(F: PolynomialMap, disk: DiskModel, T0: float, cfg: CenterConfig | None = None) -> PeriodicityReport:
    """
    Check that disk orbits close at the period and not at any shorter P/k.

    Args:
        F: The field the disk was built from.
        disk: Fitted disk.
        T0: Lower bound for admissible periods; 0 < T0 < P.
        cfg: Center configuration.

    Returns:
        PeriodicityReport with verdict PASS when max_return_error <= pass_tol
        and every minimality entry is >= fail_floor.
    """
    cfg = cfg or CenterConfig()
    if disk.n != F.n:
        raise InvalidInputError(f"disk has dimension {disk.n}, field has {F.n}")
    period = disk.period
    if not 0 < T0 < period:
        raise InvalidInputError(f"T0 must lie in (0, {period:.6g}), got {T0}")
    mstar = math.floor(2 * math.pi / (T0 * abs(disk.omega)))

    samples = _disk_samples(disk, cfg.verify_samples)
    errors = [return_error(F, period, x, cfg.integrator) for x in samples]
    max_error = max(errors)
    minimality: dict[int, float] = {}
    for k in range(2, mstar + 1):
        minimality[k] = min(return_error(F, period / k, x, cfg.integrator) for x in samples)

    if max_error <= cfg.pass_tol and all(v >= cfg.fail_floor for v in minimality.values()):
        verdict = Verdict.PASS
    elif max_error >= cfg.fail_floor or any(v <= cfg.pass_tol for v in minimality.values()):
        verdict = Verdict.FAIL
    else:
        verdict = Verdict.INCONCLUSIVE
    print(f"[Disk] Verify: max_return_error={max_error:.3e}, m*={mstar}, verdict={verdict.value}")
    return PeriodicityReport(
        samples=samples,
        return_errors=errors,
        max_return_error=max_error,
        minimality=minimality,
        mstar=mstar,
        T0=T0,
        verdict=verdict,
    )


def _sphere_points(n: int, rho: float, count: int, seed: int) -> np.ndarray:
    if n == 1:
        angles = 2 * math.pi * np.arange(count) / count
        return (rho * np.exp(1j * angles))[:, None]
    raw = np.random.default_rng(seed).standard_normal((count, 2 * n))
    raw /= np.linalg.norm(raw, axis=1, keepdims=True)
    return rho * (raw[:, :n] + 1j * raw[:, n:])


def min_period_scan(
    F: PolynomialMap,
    rho: float,
    T0: float,
    samples: int,
    cfg: CenterConfig | None = None,
) -> dict[str, Any]:
    """
    Scan T in (0, T0] for short periods on the sphere |x| = rho.

    Returns:
        Report with the grid of (T, min ratio), the bound 0.5 * min|F| and
        passed = every ratio stays at or above the bound.

    Raises:
        PreconditionFailedError: If F nearly vanishes on the sphere.
        InvalidInputError: If T0 reaches the period 2 pi/|omega| of F'(0).
    """
    cfg = cfg or CenterConfig()
    if not rho > 0 or not T0 > 0:
        raise InvalidInputError("rho and T0 must be positive")
    if samples < 1:
        raise InvalidInputError(f"samples must be at least 1, got {samples}")

    omega = analyze_spectrum(F, cfg.tol_imag).omega if F.singular_at_origin else None
    if omega is not None and T0 >= 2 * math.pi / abs(omega):
        raise InvalidInputError(f"T0 must be below the period {2 * math.pi / abs(omega):.6g}")

    points = _sphere_points(F.n, rho, BOUNDARY_SAMPLES_PER_DIM * F.n, cfg.seed)
    boundary_min = float(np.min(np.linalg.norm(F.evaluate_batch(points), axis=1)))
    if boundary_min <= cfg.scan_zero_tol:
        raise PreconditionFailedError(f"field nearly vanishes on the sphere |x|={rho:g}; a singularity is too close")
    bound = 0.5 * boundary_min

    grid = []
    for j in range(1, samples + 1):
        T = T0 * j / samples
        ratio = min(return_error(F, T, x, cfg.integrator) for x in points) / T
        grid.append({"T": T, "ratio": ratio})
    min_ratio = min(g["ratio"] for g in grid)
    passed = min_ratio >= bound
    print(f"[Scan] rho={rho:g}, T0={T0:g}: min ratio {min_ratio:.4g} vs bound {bound:.4g} -> {'pass' if passed else 'fail'}")
    return {
        "rho": rho,
        "T0": T0,
        "samples": samples,
        "omega": omega,
        "boundary_min": boundary_min,
        "bound": bound,
        "grid": grid,
        "min_ratio": min_ratio,
        "passed": passed,
    }
