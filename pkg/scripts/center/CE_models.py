"""
Data Models for the Center Engine.

This module defines the configuration and report types shared by the
spectral analysis, disk construction and periodicity verification modules.

Classes:
    Verdict: Enum of periodicity verdicts.
    CenterConfig: Thresholds and sampling settings for center analyses.
    SpectralReport: Eigenvalue data and resonance conditions of F'(0).
    DiskModel: Fitted periodic analytic disk x_l = sum_k c_{l,k} x_1^k.
    PeriodicityReport: Return errors and minimal-period evidence on a disk.
"""

import math
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Any

import numpy as np

from scripts.errors import InvalidInputError
from scripts.flow_engine import IntegratorConfig
from scripts.holocenter_config import FAIL_FLOOR, PASS_TOL, get_default_seed, get_thread_limit


class Verdict(Enum):
    """
    Outcome of a periodicity check.

    Attributes:
        PASS: All sampled orbits have period 2*pi/|omega| and no shorter one.
        FAIL: A sampled orbit does not return, or returns at a fraction of the period.
        INCONCLUSIVE: Errors fall between pass_tol and fail_floor.
    """
    PASS = "all periods equal 2pi/|omega|"
    FAIL = "fail"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class CenterConfig:
    """
    Settings for the center engine.

    Attributes:
        tol_imag: Tolerance for pure-imaginary and integer-ratio tests.
        pass_tol: Largest return error accepted as periodic.
        fail_floor: Smallest return error accepted as "not returned".
        ring_fractions: Ring radii for disk sampling as fractions of delta.
        ring_angles: Samples per ring.
        disk_newton_tol: Step tolerance for disk and probe Newton.
        disk_max_iter: Newton iteration limit for disk and probe.
        fit_residual_max: Largest least-squares residual of a valid disk.
        identity_tol: Allowed |phi_1 - x_1| on disk samples.
        ift_det_min: Smallest |det| of the transverse Jacobian accepted.
        probe_rtol: Relative residual at which a probe point counts as fixed.
        probe_starts: Newton starts per probe scale.
        verify_samples: Disk points checked by verify_disk.
        scan_zero_tol: min |F| on the scan sphere at or below this is a zero.
        integrator: Integrator settings for every flow evaluation.
        threads: Worker threads for ring and scale work items.
        seed: Seed for sampled directions.
    """
    tol_imag: float = 1e-8
    pass_tol: float = PASS_TOL
    fail_floor: float = FAIL_FLOOR
    ring_fractions: tuple[float, ...] = (0.25, 0.5, 1.0)
    ring_angles: int = 32
    disk_newton_tol: float = 1e-11
    disk_max_iter: int = 30
    fit_residual_max: float = 1e-6
    identity_tol: float = 1e-8
    ift_det_min: float = 1e-8
    probe_rtol: float = 1e-6
    probe_starts: int = 4
    verify_samples: int = 16
    scan_zero_tol: float = 1e-8
    integrator: IntegratorConfig = IntegratorConfig()
    threads: int = field(default_factory=get_thread_limit)
    seed: int = field(default_factory=get_default_seed)

    def __post_init__(self):
        if not self.pass_tol < self.fail_floor:
            raise InvalidInputError("pass_tol must be below fail_floor")
        if not self.ring_fractions or any(not 0 < f <= 1 for f in self.ring_fractions):
            raise InvalidInputError("ring_fractions must lie in (0, 1]")
        object.__setattr__(self, "ring_fractions", tuple(sorted(self.ring_fractions)))
        if self.ring_angles < 1 or self.probe_starts < 1 or self.disk_max_iter < 1 or self.threads < 1:
            raise InvalidInputError("sample counts, iteration limits and threads must be at least 1")
        if self.verify_samples < 16:
            raise InvalidInputError("verify_samples must be at least 16")

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["ring_fractions"] = list(self.ring_fractions)
        d["integrator"] = self.integrator.to_dict()
        return d


@dataclass
class SpectralReport:
    """
    Spectrum of F'(0) and the resonance conditions for a center.

    Attributes:
        eigenvalues: Eigenvalues of F'(0), sorted.
        omega: The chosen eigenvalue is omega*i; None if no nonzero
            pure-imaginary eigenvalue exists.
        ratios: lambda / (omega i) for the remaining eigenvalues.
        imaginary_eigenvalue_present: Necessary condition for a center.
        weak_resonance_ok: No ratio equals an integer k with |k| >= 2
            (guarantees a periodic variety).
        strong_resonance_ok: No ratio equals any integer (guarantees a unique
            periodic analytic disk).
        offending: (eigenvalue, nearest integer) for every integer ratio.
        k_max: Largest |k| tested.
    """
    eigenvalues: np.ndarray
    omega: float | None
    ratios: list[complex] = field(default_factory=list)
    imaginary_eigenvalue_present: bool = False
    weak_resonance_ok: bool = False
    strong_resonance_ok: bool = False
    offending: list[tuple[complex, int]] = field(default_factory=list)
    k_max: int = 0

    @property
    def period(self) -> float | None:
        return 2 * math.pi / abs(self.omega) if self.omega else None

    def to_dict(self) -> dict[str, Any]:
        return {
            "eigenvalues": list(self.eigenvalues),
            "omega": self.omega,
            "period": self.period,
            "ratios": list(self.ratios),
            "imaginary_eigenvalue_present": self.imaginary_eigenvalue_present,
            "weak_resonance_ok": self.weak_resonance_ok,
            "strong_resonance_ok": self.strong_resonance_ok,
            "offending": [{"eigenvalue": lam, "k": k} for lam, k in self.offending],
            "k_max": self.k_max,
        }


@dataclass
class DiskModel:
    """
    Periodic analytic disk {(x_1, x_2(x_1), ..., x_n(x_1)) : |x_1| <= delta}.

    Attributes:
        omega: Rotation rate of the disk orbits.
        delta: Parameter radius.
        degree: Fit degree d.
        coeffs: Array of shape (n - 1, d); coeffs[l - 2, k - 1] = c_{l,k}.
            There is no constant term.
        residual_max: Largest least-squares residual over the samples.
        diagnostics: Transverse Jacobian determinant, identity error, samples.
    """
    omega: float
    delta: float
    degree: int
    coeffs: np.ndarray
    residual_max: float
    diagnostics: dict[str, Any] = field(default_factory=dict)

    @property
    def period(self) -> float:
        return 2 * math.pi / abs(self.omega)

    @property
    def n(self) -> int:
        return self.coeffs.shape[0] + 1

    def coefficient(self, l: int, k: int) -> complex:
        return complex(self.coeffs[l - 2, k - 1])

    def to_dict(self) -> dict[str, Any]:
        return {
            "omega": self.omega,
            "period": self.period,
            "delta": self.delta,
            "degree": self.degree,
            "n": self.n,
            "coeffs": [
                {"l": l + 2, "k": k + 1, "re": float(c.real), "im": float(c.imag)}
                for (l, k), c in np.ndenumerate(self.coeffs)
            ],
            "residual_max": self.residual_max,
            "diagnostics": self.diagnostics,
        }


@dataclass
class PeriodicityReport:
    """
    Return-error evidence for the disk orbits.

    Attributes:
        samples: Disk points probed.
        return_errors: |phi(period, x) - x| per sample.
        max_return_error: Maximum of return_errors.
        minimality: k -> min over samples of |phi(period / k, x) - x|, k = 2..mstar.
        mstar: floor(2 pi / (T0 |omega|)).
        T0: Lower period bound used.
        verdict: Overall verdict.
    """
    samples: list[np.ndarray]
    return_errors: list[float]
    max_return_error: float
    minimality: dict[int, float]
    mstar: int
    T0: float
    verdict: Verdict

    @property
    def passed(self) -> bool:
        return self.verdict == Verdict.PASS

    def to_dict(self) -> dict[str, Any]:
        return {
            "samples": [list(x) for x in self.samples],
            "return_errors": self.return_errors,
            "max_return_error": self.max_return_error,
            "minimality": [{"k": k, "min_return_error": v} for k, v in sorted(self.minimality.items())],
            "mstar": self.mstar,
            "T0": self.T0,
            "verdict": self.verdict.value,
            "passed": self.passed,
        }
