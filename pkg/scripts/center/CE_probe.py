"""
Accumulated fixed-point probe.

When F'(0) has an eigenvalue omega*i, the time-(2 pi/|omega|) map Phi has
fixed points other than 0 arbitrarily close to 0. For each scale s the probe
runs Newton on Phi(x) - x from probe_starts points with |x| in [s/2, s] and
records whether it lands on a nonzero fixed point with |x| <= s.

The fixed set of Phi near a center is not isolated, so Newton takes
minimum-norm least-squares steps instead of solving with Phi' - I.
Trajectories that leave the trust ball count as "not found" for that start.
"""

import math
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import replace
from typing import Any

import numpy as np

from scripts.errors import BlowupError, InvalidInputError, StepLimitError
from scripts.field_model import PolynomialMap
from scripts.flow_engine import IntegratorConfig, flow_with_jacobian

from .CE_models import CenterConfig


def _probe_start(
    F: PolynomialMap,
    period: float,
    x0: np.ndarray,
    scale: float,
    cfg: CenterConfig,
    icfg: IntegratorConfig,
) -> dict[str, Any]:
    x = x0.copy()
    floor = 10.0 * cfg.disk_newton_tol
    eye = np.eye(F.n, dtype=complex)
    try:
        for it in range(cfg.disk_max_iter):
            y, Y = flow_with_jacobian(F, period, x, icfg)
            residual = float(np.linalg.norm(y - x))
            norm = float(np.linalg.norm(x))
            if norm <= floor:
                return {"found": False, "point": x, "residual": residual, "iterations": it, "reason": "collapsed to 0"}
            if residual <= cfg.probe_rtol * norm:
                found = norm <= scale
                return {"found": found, "point": x, "residual": residual, "iterations": it,
                        "reason": "fixed point" if found else "outside scale"}
            # directions flatter than probe_rtol are tangent to the fixed set
            step, *_ = np.linalg.lstsq(Y - eye, y - x, rcond=cfg.probe_rtol)
            x = x - step
    except (BlowupError, StepLimitError) as e:
        return {"found": False, "point": x, "residual": None, "iterations": None, "reason": str(e)}
    return {"found": False, "point": x, "residual": None, "iterations": cfg.disk_max_iter, "reason": "no convergence"}


def _probe_scale(F: PolynomialMap, period: float, scale: float, cfg: CenterConfig, rng_seed: int) -> dict[str, Any]:
    rng = np.random.default_rng(rng_seed)
    # absolute error must stay below probe_rtol * scale
    icfg = replace(cfg.integrator, abs_tol=min(cfg.integrator.abs_tol, cfg.integrator.rel_tol * scale))
    count = cfg.probe_starts
    attempts = []
    for j in range(count):
        direction = rng.standard_normal(F.n) + 1j * rng.standard_normal(F.n)
        direction /= np.linalg.norm(direction)
        radius = scale * (0.5 + 0.5 * j / max(count - 1, 1))
        attempt = _probe_start(F, period, radius * direction, scale, cfg, icfg)
        attempts.append(attempt)
        if attempt["found"]:
            break
    hit = next((a for a in attempts if a["found"]), None)
    return {
        "scale": scale,
        "found": hit is not None,
        "point": list(hit["point"]) if hit else None,
        "residual": hit["residual"] if hit else None,
        "attempts": [{k: v for k, v in a.items() if k != "point"} for a in attempts],
    }


def accumulation_probe(F: PolynomialMap, omega: float, scales: list[float], cfg: CenterConfig | None = None) -> dict[str, Any]:
    """
    Look for nonzero fixed points of the time-(2 pi/|omega|) map at each scale.

    Args:
        F: Field with F(0) = 0.
        omega: Rotation rate from analyze_spectrum.
        scales: Positive probe radii.
        cfg: Center configuration.

    Returns:
        Report with one entry per scale (in the given order) and found_all.

    Raises:
        InvalidInputError: If omega is 0 or a scale is not positive.
    """
    cfg = cfg or CenterConfig()
    if not omega:
        raise InvalidInputError("omega must be nonzero")
    if not scales or any(not s > 0 for s in scales):
        raise InvalidInputError("scales must be a non-empty list of positive radii")
    period = 2 * math.pi / abs(omega)

    print(f"[Probe] Probing {len(scales)} scales at period {period:.6g}")
    entries: dict[int, dict[str, Any]] = {}
    with ThreadPoolExecutor(max_workers=cfg.threads) as executor:
        futures = {
            executor.submit(_probe_scale, F, period, float(s), cfg, cfg.seed + j): j
            for j, s in enumerate(scales)
        }
        for future in as_completed(futures):
            j = futures[future]
            entries[j] = future.result()
            print(f"[Probe] scale={entries[j]['scale']:.3g} found={entries[j]['found']}")

    ordered = [entries[j] for j in range(len(scales))]
    return {
        "omega": omega,
        "period": period,
        "scales": ordered,
        "found_all": all(e["found"] for e in ordered),
        "found_any": any(e["found"] for e in ordered),
    }
