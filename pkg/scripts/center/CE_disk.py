"""
Periodic Analytic Disk Construction.

Under the strong resonance condition the orbits of period P = 2 pi / |omega|
through a neighborhood of 0 form an analytic disk parameterized by the first
coordinate. For fixed x_1 the transverse coordinates solve

    phi_l(P, (x_1, x_2, ..., x_n)) = x_l,    l = 2..n

whose Jacobian at 0 is the transverse block of e^{P F'(0)} minus I. That
block is invertible exactly when no ratio lambda/(omega i) is an integer.

Sampling:
---------
x_1 runs over rings |x_1| = f * delta (f in ring_fractions) with ring_angles
angles each. Every angle is an independent work item: Newton is
warm-started at 0 on the innermost ring and from the previous ring's
solution outward. Work items run on a ThreadPoolExecutor and are
re-assembled in angle order.

Fitting:
--------
c_{l,k} are least-squares coefficients in the scaled variable u = x_1/delta
(k = 1..degree, no constant term), then rescaled by delta^-k. The first
coordinate must return, |phi_1 - x_1| <= identity_tol, on every sample.
"""

import math
from concurrent.futures import ThreadPoolExecutor, as_completed

import numpy as np

from scripts.errors import (
    BlowupError,
    DiskNotFoundError,
    InconsistentDiskError,
    InvalidInputError,
    PreconditionFailedError,
    SingularSystemError,
    StepLimitError,
)
from scripts.field_model import PolynomialMap
from scripts.flow_engine import flow_jacobian, flow_map, flow_with_jacobian
from scripts.holocenter_config import DEGREE_CAP
from scripts.linalg_core import linsolve

from .CE_models import CenterConfig, DiskModel, SpectralReport


def transverse_determinant(F: PolynomialMap, period: float, cfg: CenterConfig) -> complex:
    """det of the transverse block of d phi(period, .)(0) minus I; 1 when n = 1."""
    if F.n == 1:
        return 1.0 + 0j
    Y = flow_jacobian(F, period, np.zeros(F.n, dtype=complex), cfg.integrator)
    return complex(np.linalg.det(Y[1:, 1:] - np.eye(F.n - 1)))


def _solve_transverse(F: PolynomialMap, period: float, x1: complex, guess: np.ndarray, cfg: CenterConfig):
    """Newton for the transverse coordinates at fixed x_1; returns (point, phi_1 error)."""
    n = F.n
    x = np.concatenate([[x1], guess]).astype(complex)
    eye = np.eye(n - 1, dtype=complex)
    icfg = cfg.integrator
    for _ in range(cfg.disk_max_iter):
        y, Y = flow_with_jacobian(F, period, x, icfg)
        residual = y[1:] - x[1:]
        try:
            step = linsolve(Y[1:, 1:] - eye, residual)
        except SingularSystemError as e:
            raise DiskNotFoundError(f"transverse Jacobian singular at x1={x1:.4g}: {e}")
        x[1:] -= step
        size = float(np.linalg.norm(step))
        noise = 10.0 * (icfg.abs_tol + icfg.rel_tol * float(np.linalg.norm(x)))
        if not np.isfinite(size):
            break
        if size <= max(cfg.disk_newton_tol, noise):
            y = flow_with_jacobian(F, period, x, icfg)[0]
            return x, abs(y[0] - x[0])
    raise DiskNotFoundError(f"Newton did not converge at x1={x1:.4g}; delta is too large")


def _solve_angle(F: PolynomialMap, period: float, delta: float, theta: float, cfg: CenterConfig):
    guess = np.zeros(F.n - 1, dtype=complex)
    points = []
    errors = []
    for fraction in cfg.ring_fractions:
        x1 = fraction * delta * complex(math.cos(theta), math.sin(theta))
        if F.n == 1:
            y = flow_map(F, period, np.array([x1]), cfg.integrator)
            x, err = np.array([x1], dtype=complex), abs(y[0] - x1)
        else:
            x, err = _solve_transverse(F, period, x1, guess, cfg)
            guess = x[1:]
        points.append(x)
        errors.append(float(err))
    return points, errors


def build_disk(
    F: PolynomialMap,
    report: SpectralReport,
    delta: float,
    degree: int,
    cfg: CenterConfig | None = None,
) -> DiskModel:
    """
    Construct the periodic analytic disk through the origin.

    Args:
        F: Field with F(0) = 0.
        report: Spectral report of F; must carry omega.
        delta: Parameter radius for x_1.
        degree: Fit degree (1..DEGREE_CAP).
        cfg: Center configuration.

    Returns:
        DiskModel with c_{l,k}, residual_max and diagnostics.

    Raises:
        PreconditionFailedError: If the report has no omega.
        DiskNotFoundError: If the transverse Jacobian is singular, Newton
            diverges, a trajectory escapes, or the fit residual is too large.
        InconsistentDiskError: If the first coordinate does not return.
    """
    cfg = cfg or CenterConfig()
    if report.omega is None:
        raise PreconditionFailedError("no pure imaginary eigenvalue; no disk to build")
    if not delta > 0:
        raise InvalidInputError(f"delta must be positive, got {delta}")
    if not 1 <= degree <= DEGREE_CAP:
        raise InvalidInputError(f"degree must lie in 1..{DEGREE_CAP}, got {degree}")
    if not report.strong_resonance_ok:
        print(f"[Disk] Warning: resonant ratios {report.offending}; the disk may not exist")

    period = 2 * math.pi / abs(report.omega)
    det = transverse_determinant(F, period, cfg)
    print(f"[Disk] Transverse determinant at 0: {abs(det):.3e}")
    if abs(det) <= cfg.ift_det_min:
        raise DiskNotFoundError(f"transverse Jacobian is singular at 0 (|det|={abs(det):.3e})")

    thetas = [2 * math.pi * j / cfg.ring_angles for j in range(cfg.ring_angles)]
    print(f"[Disk] Solving {len(thetas)} angles x {len(cfg.ring_fractions)} rings with {cfg.threads} workers")
    solved: dict[int, tuple[list[np.ndarray], list[float]]] = {}
    try:
        with ThreadPoolExecutor(max_workers=cfg.threads) as executor:
            futures = {
                executor.submit(_solve_angle, F, period, delta, theta, cfg): j
                for j, theta in enumerate(thetas)
            }
            for future in as_completed(futures):
                solved[futures[future]] = future.result()
    except (BlowupError, StepLimitError) as e:
        raise DiskNotFoundError(f"trajectory failed while solving for the disk: {e}")

    points = np.array([x for j in range(len(thetas)) for x in solved[j][0]])
    identity_errors = [e for j in range(len(thetas)) for e in solved[j][1]]
    identity_max = max(identity_errors)
    if identity_max > cfg.identity_tol:
        raise InconsistentDiskError(f"first coordinate fails to return: |phi_1 - x_1| = {identity_max:.3e}")

    if F.n == 1:
        coeffs = np.zeros((0, degree), dtype=complex)
        residual_max = identity_max
    else:
        u = points[:, 0] / delta
        V = u[:, None] ** np.arange(1, degree + 1)[None, :]
        b, *_ = np.linalg.lstsq(V, points[:, 1:], rcond=None)
        residual_max = float(np.max(np.abs(V @ b - points[:, 1:])))
        coeffs = (b / (delta ** np.arange(1, degree + 1))[:, None]).T

    print(f"[Disk] Fit degree {degree}: residual_max={residual_max:.3e}")
    if residual_max > cfg.fit_residual_max:
        raise DiskNotFoundError(
            f"fit residual {residual_max:.3e} exceeds {cfg.fit_residual_max:g}; lower delta or raise degree"
        )
    return DiskModel(
        omega=report.omega,
        delta=delta,
        degree=degree,
        coeffs=coeffs,
        residual_max=residual_max,
        diagnostics={
            "transverse_det": det,
            "identity_error_max": identity_max,
            "samples": int(len(points)),
            "ring_fractions": list(cfg.ring_fractions),
        },
    )


def disk_point(disk: DiskModel, x1: complex) -> np.ndarray:
    """
    Point (x_1, x_2(x_1), ..., x_n(x_1)) of a fitted disk.

    Raises:
        InvalidInputError: If |x1| exceeds the disk radius.
    """
    x1 = complex(x1)
    if abs(x1) > disk.delta * (1 + 1e-12):
        raise InvalidInputError(f"|x1|={abs(x1):.4g} exceeds disk radius {disk.delta:g}")
    powers = x1 ** np.arange(1, disk.degree + 1)
    return np.concatenate([[x1], disk.coeffs @ powers]).astype(complex)
