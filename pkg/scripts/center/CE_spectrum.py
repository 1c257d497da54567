"""
Spectral Conditions for Holomorphic Centers.

A singularity of a holomorphic field can only be surrounded by periodic
orbits when F'(0) has a nonzero pure imaginary eigenvalue omega*i. Given
such an eigenvalue, the ratios lambda/(omega i) of the remaining eigenvalues
decide what can be guaranteed:

    no ratio in {+-2, +-3, ...}       a periodic variety through 0 exists
    no ratio in {0, +-1, +-2, ...}    a unique periodic analytic disk exists

This module evaluates both conditions and provides the coordinate change
that moves omega*i to the first diagonal position of F'(0).
"""

import math

import numpy as np
import scipy.linalg

from scripts.errors import InvalidInputError
from scripts.field_model import PolynomialMap, linear_change, linear_part
from scripts.linalg_core import eigenvalues

from .CE_models import SpectralReport


def _select_omega(lam: np.ndarray, tol: float, scale: float) -> int | None:
    candidates = [
        j for j, v in enumerate(lam)
        if abs(v.real) <= tol * scale and abs(v.imag) > tol * scale
    ]
    if not candidates:
        return None
    top = max(abs(lam[j].imag) for j in candidates)
    tied = [j for j in candidates if abs(lam[j].imag) >= top - tol * scale]
    # prefer positive imaginary part among ties
    return max(tied, key=lambda j: (lam[j].imag > 0, abs(lam[j].imag)))


def analyze_spectrum(
    F: PolynomialMap,
    tol_imag: float = 1e-8,
    k_max: int | None = None,
    omega: float | None = None,
) -> SpectralReport:
    """
    Test the eigenvalue conditions for a center at the origin.

    Args:
        F: Polynomial field with F(0) = 0.
        tol_imag: Tolerance for the pure-imaginary and integer tests.
        k_max: Largest |k| tested; defaults to ceil(max|lambda| / |omega|) + 2.
        omega: Use the eigenvalue omega*i instead of the largest pure
            imaginary one.

    Returns:
        SpectralReport. Absence of omega is a report state, not an error.

    Raises:
        InvalidInputError: If F(0) != 0, or omega is given and omega*i is
            not an eigenvalue.

    Example:
        >>> F = linear_map(np.diag([1j, -1]))
        >>> analyze_spectrum(F).strong_resonance_ok
        True
    """
    if not F.singular_at_origin:
        raise InvalidInputError("field does not vanish at the origin")
    A = linear_part(F)
    lam = eigenvalues(A)
    scale = 1.0 + float(np.linalg.norm(A, 2))
    if omega is None:
        chosen = _select_omega(lam, tol_imag, scale)
    else:
        gaps = np.abs(lam - 1j * omega)
        chosen = int(np.argmin(gaps))
        if not omega or gaps[chosen] > tol_imag * scale:
            raise InvalidInputError(f"{1j * omega} is not a nonzero eigenvalue of F'(0)")
    if chosen is None:
        return SpectralReport(eigenvalues=lam, omega=None)

    omega = float(lam[chosen].imag)
    rest = np.delete(lam, chosen)
    ratios = [complex(v / (1j * omega)) for v in rest]
    if k_max is None:
        k_max = math.ceil(float(np.max(np.abs(lam))) / abs(omega)) + 2
    if k_max < 2:
        raise InvalidInputError(f"k_max must be at least 2, got {k_max}")

    offending: list[tuple[complex, int]] = []
    weak_ok = True
    for v, ratio in zip(rest, ratios):
        hits = [k for k in range(-k_max, k_max + 1) if abs(ratio - k) <= tol_imag]
        if hits:
            k = min(hits, key=lambda k: abs(ratio - k))
            offending.append((complex(v), k))
            if abs(k) >= 2:
                weak_ok = False

    report = SpectralReport(
        eigenvalues=lam,
        omega=omega,
        ratios=ratios,
        imaginary_eigenvalue_present=True,
        weak_resonance_ok=weak_ok,
        strong_resonance_ok=not offending,
        offending=offending,
        k_max=k_max,
    )
    print(f"[Spectrum] omega={omega:.6g}, weak={report.weak_resonance_ok}, strong={report.strong_resonance_ok}")
    return report


def adapt_coordinates(F: PolynomialMap, omega: float, tol: float = 1e-8) -> tuple[PolynomialMap, np.ndarray]:
    """
    Move the eigenvalue omega*i to the top-left of an upper-triangular F'(0).

    Uses the complex Schur form F'(0) = Q T Q^H with eigenvalues near
    omega*i sorted first and returns G(y) = Q^H F(Q y).

    Returns:
        Tuple (G, Q) with G'(0) = T.

    Raises:
        InvalidInputError: If omega*i is not an eigenvalue of F'(0).
    """
    A = linear_part(F)
    target = 1j * omega
    scale = 1.0 + float(np.linalg.norm(A, 2))
    _, Q, sdim = scipy.linalg.schur(A, output="complex", sort=lambda v: abs(v - target) <= tol * scale)
    if sdim == 0:
        raise InvalidInputError(f"{target} is not an eigenvalue of F'(0)")
    return linear_change(F, Q), Q
