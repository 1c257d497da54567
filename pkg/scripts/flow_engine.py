"""
Flow Engine: Time-T Maps of Holomorphic Vector Fields.

This module integrates x' = F(x) in real time over complex state with the
embedded Dormand-Prince 5(4) pair of `scipy.integrate.solve_ivp` and builds
the objects the index and center engines consume:

- flow_map / flow_jacobian: phi(tau, x0) and its Jacobian. The Jacobian is
  integrated jointly with the state through the variational equation
  d/dt Y = F'(x(t)) Y, Y(0) = I, so at x0 = 0 it reproduces e^{tau F'(0)}.
- TimeTMap: the holomorphic map x -> phi(tau, x), usable anywhere a map
  with `evaluate_batch` / `jacobian_batch` is accepted.
- integrate_trajectory: equally spaced samples for CSV export.
- return_error: |phi(tau, x) - x|, the basic periodicity witness.

Trust Ball:
-----------
Holomorphic flows can blow up in finite time (z' = z^2). Every right-hand
side evaluation checks |x| against the escape radius
ESCAPE_FACTOR * trust_radius and aborts with BlowupError; the radius is a
heuristic stand-in for the ball on which the flow is defined and is
reported, not proven. Step budgets are enforced the same way (StepLimitError).

Complex time directions never enter the integrator: rotate the field with
`rotate_time` / `scale_time` instead.
"""

import csv
import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.integrate import solve_ivp

from scripts.errors import BlowupError, InvalidInputError, StepLimitError
from scripts.field_model import PolynomialMap, scale_time
from scripts.holocenter_config import (
    DEFAULT_ABS_TOL,
    DEFAULT_MAX_STEPS,
    DEFAULT_REL_TOL,
    ESCAPE_FACTOR,
)

# Dormand-Prince uses six fresh right-hand side evaluations per step
_EVALS_PER_STEP = 6


@dataclass(frozen=True)
class IntegratorConfig:
    """
    Integrator settings shared by every flow computation.

    Attributes:
        rel_tol: Relative local error tolerance.
        abs_tol: Absolute local error tolerance.
        max_step: Largest allowed step (inf for no limit).
        max_steps: Step budget per integration.
        trust_radius: Radius of the analysis ball; trajectories are aborted
            beyond ESCAPE_FACTOR times this radius.
    """
    rel_tol: float = DEFAULT_REL_TOL
    abs_tol: float = DEFAULT_ABS_TOL
    max_step: float = math.inf
    max_steps: int = DEFAULT_MAX_STEPS
    trust_radius: float = 1.0

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise InvalidInputError("integrator tolerances must be positive")
        if not self.max_step > 0:
            raise InvalidInputError("max_step must be positive")
        if self.max_steps < 1:
            raise InvalidInputError("max_steps must be at least 1")
        if not self.trust_radius > 0:
            raise InvalidInputError("trust_radius must be positive")

    @property
    def escape_radius(self) -> float:
        return ESCAPE_FACTOR * self.trust_radius

    def to_dict(self) -> dict:
        d = asdict(self)
        d["escape_radius"] = self.escape_radius
        return d


@dataclass
class Trajectory:
    """
    Sampled solution of x' = F(x).

    Attributes:
        times: Strictly increasing sample times starting at 0.
        states: Array of shape (len(times), n); states[0] is the initial condition.
    """
    times: np.ndarray
    states: np.ndarray


def _as_state(F: PolynomialMap, x0) -> np.ndarray:
    x = np.asarray(x0, dtype=complex).reshape(-1)
    if x.shape[0] != F.n:
        raise InvalidInputError(f"initial condition has length {x.shape[0]}, expected {F.n}")
    if not np.all(np.isfinite(x)):
        raise InvalidInputError("initial condition has non-finite entries")
    return x


def _integrate(
    F: PolynomialMap,
    tau: float,
    y0: np.ndarray,
    cfg: IntegratorConfig,
    variational: bool,
    t_eval: np.ndarray | None = None,
):
    n = F.n
    radius = cfg.escape_radius
    budget = cfg.max_steps * _EVALS_PER_STEP
    calls = 0

    def rhs(t, y):
        nonlocal calls
        calls += 1
        if calls > budget:
            raise StepLimitError(f"step budget {cfg.max_steps} exhausted at t={t:.6g}")
        x = y[:n]
        norm = float(np.linalg.norm(x))
        if not norm <= radius:
            raise BlowupError(f"|x|={norm:.6g} exceeded escape radius {radius:.6g} at t={t:.6g}")
        dx = F.evaluate_batch(x)
        if not variational:
            return dx
        Y = y[n:].reshape(n, n)
        dY = F.jacobian_batch(x) @ Y
        return np.concatenate([dx, dY.ravel()])

    if float(np.linalg.norm(y0[:n])) > radius:
        raise BlowupError(f"initial condition outside escape radius {radius:.6g}")

    sol = solve_ivp(
        rhs,
        (0.0, float(tau)),
        y0,
        method="RK45",
        rtol=cfg.rel_tol,
        atol=cfg.abs_tol,
        max_step=cfg.max_step,
        t_eval=t_eval,
    )
    if not sol.success:
        last = sol.y[:n, -1] if sol.y.size else y0[:n]
        if float(np.linalg.norm(last)) > 0.5 * radius:
            raise BlowupError(f"integration failed near escape radius: {sol.message}")
        raise StepLimitError(f"integration failed: {sol.message}")
    return sol


def flow_map(F: PolynomialMap, tau: float, x0, cfg: IntegratorConfig | None = None) -> np.ndarray:
    """
    Compute phi(tau, x0) for the holomorphic system x' = F(x).

    Args:
        F: Polynomial vector field.
        tau: Real integration time.
        x0: Initial condition of length F.n.
        cfg: Integrator configuration (defaults when omitted).

    Returns:
        The state at time tau.

    Raises:
        BlowupError: If the trajectory leaves the trust ball.
        StepLimitError: If the step budget is exhausted.
    """
    cfg = cfg or IntegratorConfig()
    x = _as_state(F, x0)
    if tau == 0:
        return x.copy()
    sol = _integrate(F, tau, x, cfg, variational=False)
    return sol.y[:, -1]


def flow_with_jacobian(
    F: PolynomialMap, tau: float, x0, cfg: IntegratorConfig | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """
    Integrate the state together with its variational equation.

    Returns:
        Tuple (phi(tau, x0), d phi(tau, x) / dx at x0).
    """
    cfg = cfg or IntegratorConfig()
    x = _as_state(F, x0)
    n = F.n
    if tau == 0:
        return x.copy(), np.eye(n, dtype=complex)
    y0 = np.concatenate([x, np.eye(n, dtype=complex).ravel()])
    sol = _integrate(F, tau, y0, cfg, variational=True)
    y = sol.y[:, -1]
    return y[:n], y[n:].reshape(n, n)


def flow_jacobian(F: PolynomialMap, tau: float, x0, cfg: IntegratorConfig | None = None) -> np.ndarray:
    """
    Jacobian of x -> phi(tau, x) at x0 via the variational equations.

    At x0 = 0 for a field with F(0) = 0 this equals expm(F'(0), tau).
    """
    return flow_with_jacobian(F, tau, x0, cfg)[1]


def integrate_trajectory(
    F: PolynomialMap,
    x0,
    t_end: float,
    samples: int,
    cfg: IntegratorConfig | None = None,
) -> Trajectory:
    """
    Sample a trajectory at equally spaced times including both endpoints.

    Raises:
        InvalidInputError: If samples < 2 or t_end <= 0.
    """
    if samples < 2:
        raise InvalidInputError(f"samples must be at least 2, got {samples}")
    if not t_end > 0:
        raise InvalidInputError(f"t_end must be positive, got {t_end}")
    cfg = cfg or IntegratorConfig()
    x = _as_state(F, x0)
    times = np.linspace(0.0, float(t_end), samples)
    sol = _integrate(F, t_end, x, cfg, variational=False, t_eval=times)
    states = sol.y.T.copy()
    states[0] = x
    return Trajectory(times=times, states=states)


@dataclass(frozen=True)
class TimeTMap:
    """
    The time-tau map x -> phi(tau, x) of a polynomial field.

    Implements the same batched-map protocol as PolynomialMap, one flow
    integration per point.

    Attributes:
        field: Polynomial vector field.
        tau: Positive time.
        config: Integrator configuration.
    """
    field: PolynomialMap
    tau: float
    config: IntegratorConfig = IntegratorConfig()

    batched = False

    def __post_init__(self):
        if not self.tau > 0:
            raise InvalidInputError(f"tau must be positive, got {self.tau}")

    @property
    def n(self) -> int:
        return self.field.n

    @property
    def name(self) -> str | None:
        return self.field.name

    def evaluate_batch(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=complex)
        flat = X.reshape(-1, self.n)
        out = np.array([flow_map(self.field, self.tau, x, self.config) for x in flat])
        return out.reshape(X.shape)

    def jacobian_batch(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=complex)
        flat = X.reshape(-1, self.n)
        out = np.array([flow_jacobian(self.field, self.tau, x, self.config) for x in flat])
        return out.reshape(X.shape + (self.n,))


def map_iterate(M, m: int, x) -> np.ndarray:
    """
    Apply a map m times.

    Works for TimeTMap (Phi_tau^m, which agrees with the flow at time m*tau)
    and for exact maps such as PolynomialMap.

    Raises:
        InvalidInputError: If m < 1 or x has the wrong length.
    """
    if m < 1:
        raise InvalidInputError(f"iteration count must be at least 1, got {m}")
    y = np.asarray(x, dtype=complex).reshape(-1)
    if y.shape[0] != M.n:
        raise InvalidInputError(f"point has length {y.shape[0]}, expected {M.n}")
    for _ in range(m):
        y = M.evaluate_batch(y)
    return y


def return_error(F: PolynomialMap, tau: float, x, cfg: IntegratorConfig | None = None) -> float:
    """Euclidean return error |phi(tau, x) - x|."""
    x = _as_state(F, x)
    return float(np.linalg.norm(flow_map(F, tau, x, cfg) - x))


def rotate_time(F: PolynomialMap, angle: float) -> PolynomialMap:
    """Replace real time t by e^{i angle} t; stable/unstable sets become periodic ones."""
    return scale_time(F, complex(math.cos(angle), math.sin(angle)))


def write_trajectory_csv(trajectory: Trajectory, path: str) -> None:
    """
    Write a trajectory as CSV: header t,re_1,im_1,...,re_n,im_n with
    17 significant digits per value.
    """
    n = trajectory.states.shape[1]
    header = ["t"] + [f"{part}_{j + 1}" for j in range(n) for part in ("re", "im")]
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(header)
        for t, state in zip(trajectory.times, trajectory.states):
            row = [format(float(t), ".17g")]
            for v in state:
                row.append(format(float(v.real), ".17g"))
                row.append(format(float(v.imag), ".17g"))
            writer.writerow(row)
