"""
Configuration Constants for holocenter.

This module centralizes the configuration constants used throughout the
toolkit. It includes the hard dimension and degree caps, default numerical
tolerances for the flow, index and center engines, and helper functions
for reading run-time settings from environment variables.

Configuration Categories:
    Caps: Ambient dimension and polynomial degree limits.
    Polynomial Arithmetic: Coefficient drop threshold after normalization.
    Integration: Default tolerances and trust-ball escape factor.
    Root Search: Newton limits and multi-start budgets.
    Center Analysis: Verdict thresholds for periodicity checks.

Environment Variables:
    HOLOCENTER_THREADS: Maximum worker threads (default 4).
    HOLOCENTER_SEED: Default seed for random regular values (default 0).
"""

import os

from dotenv import load_dotenv

load_dotenv()

# Caps
DIMENSION_CAP = 16
DEGREE_CAP = 12

# Polynomial Arithmetic
COEFF_DROP_TOL = 1e-15  # Coefficients below this magnitude are dropped

# Integration
DEFAULT_REL_TOL = 1e-10
DEFAULT_ABS_TOL = 1e-12
DEFAULT_MAX_STEPS = 200_000
ESCAPE_FACTOR = 10.0  # Escape radius = ESCAPE_FACTOR * trust radius

# Linear Algebra
CONDITION_LIMIT = 1e13  # linsolve refuses systems worse than this
EIGEN_TOL = 1e-8
RESIDUAL_GROWTH = 64.0  # linsolve accepts |Mx - b| <= RESIDUAL_GROWTH * eps * cond(M) * |b|

# Root Search
NEWTON_MAX_ITER = 200
MAX_STARTS = 40_000  # Cap on starts_per_dim ** (2n)
FLOW_STARTS = 48  # Starts for maps without batched evaluation
BOUNDARY_SAMPLES_PER_DIM = 64
SERIES_TOL = 1e-10  # Truncated-series coefficients below this count as zero
RETURN_IDENTITY_FACTOR = 1e3  # Time-map iterate is the identity when return errors stay below this times the integrator tolerance

# Center Analysis
PASS_TOL = 1e-7
FAIL_FLOOR = 1e-3

# Threads
THREADS_DEFAULT = 4


def get_thread_limit() -> int:
    """
    Retrieve the worker thread cap from the environment.

    Returns:
        The HOLOCENTER_THREADS value, or THREADS_DEFAULT when unset.

    Raises:
        ValueError: If HOLOCENTER_THREADS is not a positive integer.
    """
    raw = os.getenv("HOLOCENTER_THREADS")
    if not raw:
        return THREADS_DEFAULT
    try:
        value = int(raw)
    except ValueError:
        raise ValueError(f"HOLOCENTER_THREADS must be an integer, got {raw!r}")
    if value < 1:
        raise ValueError(f"HOLOCENTER_THREADS must be positive, got {value}")
    return value


def get_default_seed() -> int:
    """
    Retrieve the default random seed from the environment.

    Returns:
        The HOLOCENTER_SEED value, or 0 when unset.

    Raises:
        ValueError: If HOLOCENTER_SEED is not a non-negative 64-bit integer.
    """
    raw = os.getenv("HOLOCENTER_SEED")
    if not raw:
        return 0
    try:
        value = int(raw)
    except ValueError:
        raise ValueError(f"HOLOCENTER_SEED must be an integer, got {raw!r}")
    if not 0 <= value < 2**64:
        raise ValueError(f"HOLOCENTER_SEED must fit in an unsigned 64-bit integer, got {value}")
    return value
