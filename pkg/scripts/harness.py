"""
Scenario Harness for holocenter.

A scenario document names a field, optionally a command, and
command-specific parameters:

    {"command": "index", "field": {...}, "parameters": {"m": 1, "radius": 0.5}}

The harness validates the document and its parameters with jsonschema before
any computation starts, dispatches to the engines, writes
<out>/<command>.json plus a .meta.json sidecar and maps the outcome to an exit
status:

    0  success
    1  analysis failure (verdict failed, integrator blowup, undetermined
       index under --strict, ...)
    2  input error (unreadable or invalid scenario, unknown command)
"""

import json
import math
import os
from dataclasses import dataclass, field
from typing import Any, Callable

import jsonschema
import numpy as np

from scripts.center import (
    CenterConfig,
    Verdict,
    accumulation_probe,
    adapt_coordinates,
    analyze_spectrum,
    build_disk,
    min_period_scan,
    verify_disk,
)
from scripts.errors import HolocenterError, InvalidInputError, ParseError, PreconditionFailedError
from scripts.field_model import PolynomialMap, parse_field, scale_time, serialize_field
from scripts.flow_engine import IntegratorConfig, TimeTMap, integrate_trajectory, rotate_time, write_trajectory_csv
from scripts.index_engine import (
    BallRegion,
    IndexConfig,
    fixed_point_index,
    iterated_index,
    perturbation_sum,
    periodic_points,
    zero_index,
)
from scripts.reporting import print_summary, write_meta, write_report

COMMANDS = ("spectrum", "index", "iterated-index", "disk", "verify", "orbit", "probe", "scan", "selftest")

EXIT_OK = 0
EXIT_ANALYSIS = 1
EXIT_INPUT = 2

_COMPLEX = {
    "oneOf": [
        {"type": "number"},
        {
            "type": "object",
            "properties": {"re": {"type": "number"}, "im": {"type": "number"}},
            "required": ["re", "im"],
            "additionalProperties": False,
        },
    ]
}
_VECTOR = {"type": "array", "items": _COMPLEX, "minItems": 1}
_POSITIVE = {"type": "number", "exclusiveMinimum": 0}

_COMMON = {
    "time_factor": _COMPLEX,
    "time_angle": {"type": "number"},
    "integrator": {
        "type": "object",
        "properties": {
            "rel_tol": _POSITIVE,
            "abs_tol": _POSITIVE,
            "max_step": _POSITIVE,
            "max_steps": {"type": "integer", "minimum": 1},
            "trust_radius": _POSITIVE,
        },
        "additionalProperties": False,
    },
}

_INDEX_OPTIONS = {
    "radius": _POSITIVE,
    "center": _VECTOR,
    "map": {"enum": ["polynomial", "flow"]},
    "tau": _POSITIVE,
    "q_radius_factor": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
    "newton_tol": _POSITIVE,
    "starts_per_dim": {"type": "integer", "minimum": 1},
    "retries": {"type": "integer", "minimum": 1},
    "separation_tol": _POSITIVE,
}

_CENTER_OPTIONS = {
    "tol_imag": _POSITIVE,
    "pass_tol": _POSITIVE,
    "fail_floor": _POSITIVE,
    "ring_angles": {"type": "integer", "minimum": 1},
    "verify_samples": {"type": "integer", "minimum": 16},
}

_DISK_OPTIONS = {
    "delta": _POSITIVE,
    "degree": {"type": "integer", "minimum": 1},
    "adapt": {"type": "boolean"},
}


def _params(properties: dict[str, Any], required: list[str] | None = None) -> dict[str, Any]:
    return {
        "type": "object",
        "properties": {**_COMMON, **properties},
        "required": required or [],
        "additionalProperties": False,
    }


PARAMETER_SCHEMAS: dict[str, dict[str, Any]] = {
    "spectrum": _params({"tol_imag": _POSITIVE, "k_max": {"type": "integer", "minimum": 2}, "omega": {"type": "number"}}),
    "index": _params({
        **_INDEX_OPTIONS,
        "m": {"type": "integer", "minimum": 1},
        "kind": {"enum": ["fixed", "zero"]},
        "eps": _VECTOR,
    }),
    "iterated-index": _params({**_INDEX_OPTIONS, "m": {"type": "integer", "minimum": 1}}, ["m"]),
    "disk": _params({**_CENTER_OPTIONS, **_DISK_OPTIONS}),
    "verify": _params({**_CENTER_OPTIONS, **_DISK_OPTIONS, "T0": _POSITIVE}),
    "orbit": _params({
        **_INDEX_OPTIONS,
        "mode": {"enum": ["trajectory", "periodic"]},
        "x0": _VECTOR,
        "t_end": _POSITIVE,
        "samples": {"type": "integer", "minimum": 2},
        "m": {"type": "integer", "minimum": 1},
    }, ["mode"]),
    "probe": _params({**_CENTER_OPTIONS, "omega": {"type": "number"}, "scales": {"type": "array", "items": _POSITIVE, "minItems": 1}}),
    "scan": _params({**_CENTER_OPTIONS, "rho": _POSITIVE, "T0": _POSITIVE, "samples": {"type": "integer", "minimum": 1}}),
    "selftest": _params({}),
}

SCENARIO_SCHEMA = {
    "type": "object",
    "properties": {
        "command": {"enum": list(COMMANDS)},
        "field": {"type": "object"},
        "parameters": {"type": "object"},
    },
    "required": ["field"],
    "additionalProperties": False,
}


@dataclass
class ScenarioSpec:
    """
    A validated scenario.

    Attributes:
        command: Recognized command name.
        field: Parsed vector field or map.
        parameters: Validated command parameters.
        output_dir: Directory receiving reports.
    """
    command: str
    field: PolynomialMap
    parameters: dict[str, Any] = field(default_factory=dict)
    output_dir: str = "holocenter-out"


def _first_error(validator: jsonschema.Draft202012Validator, data: Any, prefix: str) -> None:
    errors = sorted(validator.iter_errors(data), key=lambda err: list(err.absolute_path))
    if errors:
        first = errors[0]
        location = prefix + "".join(f"/{p}" for p in first.absolute_path)
        raise ParseError(first.message, location or "/")


def parse_scenario(document: str | dict[str, Any], command: str, output_dir: str = "holocenter-out") -> ScenarioSpec:
    """
    Validate a scenario document against the command requested on the CLI.

    Raises:
        InvalidInputError: If the command is unknown or contradicts the document.
        ParseError: On malformed JSON, schema violations or an invalid field.
    """
    if command not in COMMANDS:
        raise InvalidInputError(f"unknown command: {command}")
    if isinstance(document, str):
        try:
            data = json.loads(document)
        except json.JSONDecodeError as e:
            raise ParseError(f"invalid JSON: {e.msg}", f"line {e.lineno} column {e.colno}")
    else:
        data = document

    _first_error(jsonschema.Draft202012Validator(SCENARIO_SCHEMA), data, "")
    if "command" in data and data["command"] != command:
        raise InvalidInputError(f"scenario is for command '{data['command']}', not '{command}'")
    parameters = data.get("parameters", {})
    _first_error(jsonschema.Draft202012Validator(PARAMETER_SCHEMAS[command]), parameters, "/parameters")

    try:
        F = parse_field(data["field"])
    except ParseError as e:
        raise ParseError(e.message, "/field" + e.location)
    if "time_factor" in parameters:
        F = scale_time(F, _complex(parameters["time_factor"]))
    if "time_angle" in parameters:
        F = rotate_time(F, parameters["time_angle"])
    return ScenarioSpec(command=command, field=F, parameters=parameters, output_dir=output_dir)


def load_scenario(path: str, command: str, output_dir: str = "holocenter-out") -> ScenarioSpec:
    """Read a scenario file; unreadable files are input errors."""
    try:
        with open(path, encoding="utf-8") as f:
            text = f.read()
    except OSError as e:
        raise InvalidInputError(f"cannot read scenario {path}: {e.strerror}")
    return parse_scenario(text, command, output_dir)


def _complex(value: Any) -> complex:
    if isinstance(value, dict):
        return complex(value["re"], value["im"])
    return complex(value)


def _vector(values: list[Any] | None, n: int, name: str) -> np.ndarray:
    if values is None:
        return np.zeros(n, dtype=complex)
    v = np.array([_complex(x) for x in values], dtype=complex)
    if v.shape[0] != n:
        raise InvalidInputError(f"{name} has length {v.shape[0]}, expected {n}")
    return v


def _integrator(params: dict[str, Any]) -> IntegratorConfig:
    return IntegratorConfig(**params.get("integrator", {}))


def _index_config(params: dict[str, Any], seed: int) -> IndexConfig:
    keys = ("q_radius_factor", "newton_tol", "starts_per_dim", "retries", "separation_tol")
    return IndexConfig(seed=seed, **{k: params[k] for k in keys if k in params})


def _center_config(params: dict[str, Any], seed: int) -> CenterConfig:
    keys = ("tol_imag", "pass_tol", "fail_floor", "ring_angles", "verify_samples")
    return CenterConfig(seed=seed, integrator=_integrator(params), **{k: params[k] for k in keys if k in params})


def _index_target(spec: ScenarioSpec):
    params = spec.parameters
    if params.get("map", "polynomial") == "flow":
        if "tau" not in params:
            raise InvalidInputError("map 'flow' needs a positive tau")
        return TimeTMap(spec.field, params["tau"], _integrator(params))
    return spec.field


def _region(spec: ScenarioSpec) -> BallRegion:
    params = spec.parameters
    return BallRegion(tuple(_vector(params.get("center"), spec.field.n, "center")), params.get("radius", 0.5))


@dataclass
class Outcome:
    """Report payload, exit status and summary highlights of one command."""
    report: dict[str, Any]
    status: int = EXIT_OK
    highlights: dict[str, Any] = field(default_factory=dict)


def _run_spectrum(spec: ScenarioSpec, seed: int, strict: bool) -> Outcome:
    p = spec.parameters
    report = analyze_spectrum(spec.field, p.get("tol_imag", 1e-8), p.get("k_max"), p.get("omega"))
    return Outcome(
        report={"spectrum": report, "config": {"tol_imag": p.get("tol_imag", 1e-8), "k_max": report.k_max}},
        highlights={"omega": report.omega, "strong_resonance_ok": report.strong_resonance_ok},
    )


def _index_outcome(result, cfg: IndexConfig, region: BallRegion, strict: bool, extra: dict[str, Any]) -> Outcome:
    status = EXIT_ANALYSIS if strict and result.value is None else EXIT_OK
    value = result.value if result.value is not None else "undetermined"
    return Outcome(
        report={"index": result, "region": region, "config": cfg, **extra},
        status=status,
        highlights={"index": value},
    )


def _run_index(spec: ScenarioSpec, seed: int, strict: bool) -> Outcome:
    p = spec.parameters
    cfg = _index_config(p, seed)
    region = _region(spec)
    target = _index_target(spec)
    point = region.center_array
    m = p.get("m", 1)
    kind = p.get("kind", "fixed")
    extra: dict[str, Any] = {"kind": kind, "m": m}
    if kind == "zero":
        if m != 1:
            raise InvalidInputError("zero index takes no iteration count")
        result = zero_index(target, point, region, cfg)
    elif m == 1:
        result = fixed_point_index(target, point, region, cfg)
    else:
        result = iterated_index(target, m, point, region, cfg)
    if "eps" in p:
        extra["perturbation"] = perturbation_sum(spec.field, _vector(p["eps"], spec.field.n, "eps"), point, region, cfg)
    if isinstance(target, TimeTMap):
        extra["integrator"] = target.config
    return _index_outcome(result, cfg, region, strict, extra)


def _run_iterated_index(spec: ScenarioSpec, seed: int, strict: bool) -> Outcome:
    p = spec.parameters
    cfg = _index_config(p, seed)
    region = _region(spec)
    result = iterated_index(_index_target(spec), p["m"], region.center_array, region, cfg)
    return _index_outcome(result, cfg, region, strict, {"kind": "fixed", "m": p["m"]})


def _disk_for(spec: ScenarioSpec, cfg: CenterConfig):
    p = spec.parameters
    F = spec.field
    report = analyze_spectrum(F, cfg.tol_imag)
    if report.omega is None:
        raise PreconditionFailedError("F'(0) has no nonzero pure imaginary eigenvalue")
    Q = None
    if p.get("adapt", False):
        F, Q = adapt_coordinates(F, report.omega, cfg.tol_imag)
        report = analyze_spectrum(F, cfg.tol_imag)
    disk = build_disk(F, report, p.get("delta", 0.05), p.get("degree", 6), cfg)
    extra = {"spectrum": report, "config": cfg}
    if Q is not None:
        extra["coordinates"] = {"Q": Q, "field": serialize_field(F)}
    return F, disk, extra


def _run_disk(spec: ScenarioSpec, seed: int, strict: bool) -> Outcome:
    cfg = _center_config(spec.parameters, seed)
    _, disk, extra = _disk_for(spec, cfg)
    return Outcome(
        report={"disk": disk, **extra},
        highlights={"period": disk.period, "residual_max": disk.residual_max},
    )


def _run_verify(spec: ScenarioSpec, seed: int, strict: bool) -> Outcome:
    cfg = _center_config(spec.parameters, seed)
    F, disk, extra = _disk_for(spec, cfg)
    T0 = spec.parameters.get("T0", disk.period / 8)
    periodicity = verify_disk(F, disk, T0, cfg)
    return Outcome(
        report={"disk": disk, "periodicity": periodicity, **extra},
        status=EXIT_OK if periodicity.verdict == Verdict.PASS else EXIT_ANALYSIS,
        highlights={"verdict": periodicity.verdict.value, "max_return_error": periodicity.max_return_error},
    )


def _run_orbit(spec: ScenarioSpec, seed: int, strict: bool) -> Outcome:
    p = spec.parameters
    F = spec.field
    if p["mode"] == "trajectory":
        icfg = _integrator(p)
        x0 = _vector(p.get("x0"), F.n, "x0")
        trajectory = integrate_trajectory(F, x0, p.get("t_end", 2 * math.pi), p.get("samples", 101), icfg)
        os.makedirs(spec.output_dir, exist_ok=True)
        csv_path = os.path.join(spec.output_dir, "orbit.csv")
        write_trajectory_csv(trajectory, csv_path)
        print(f"[Flow] Wrote {len(trajectory.times)} samples to {csv_path}")
        return Outcome(
            report={
                "mode": "trajectory",
                "x0": x0,
                "t_end": float(trajectory.times[-1]),
                "final_state": trajectory.states[-1],
                "csv": "orbit.csv",
                "integrator": icfg,
            },
            highlights={"samples": len(trajectory.times)},
        )
    cfg = _index_config(p, seed)
    region = _region(spec)
    m = p.get("m", 1)
    orbits = periodic_points(_index_target(spec), m, region, cfg)
    return Outcome(
        report={"mode": "periodic", "period": m, "orbits": orbits, "region": region, "config": cfg},
        highlights={"orbits": len(orbits)},
    )


def _run_probe(spec: ScenarioSpec, seed: int, strict: bool) -> Outcome:
    p = spec.parameters
    cfg = _center_config(p, seed)
    omega = p.get("omega")
    if omega is None:
        omega = analyze_spectrum(spec.field, cfg.tol_imag).omega
        if omega is None:
            raise InvalidInputError("no omega given and F'(0) has no pure imaginary eigenvalue")
    result = accumulation_probe(spec.field, omega, p.get("scales", [1e-1, 1e-2, 1e-3, 1e-4]), cfg)
    return Outcome(
        report={"probe": result, "config": cfg},
        status=EXIT_ANALYSIS if strict and not result["found_all"] else EXIT_OK,
        highlights={"found_all": result["found_all"]},
    )


def _run_scan(spec: ScenarioSpec, seed: int, strict: bool) -> Outcome:
    p = spec.parameters
    cfg = _center_config(p, seed)
    result = min_period_scan(spec.field, p.get("rho", 0.5), p.get("T0", 1.0), p.get("samples", 20), cfg)
    return Outcome(
        report={"scan": result, "config": cfg},
        status=EXIT_OK if result["passed"] else EXIT_ANALYSIS,
        highlights={"min_ratio": result["min_ratio"], "bound": result["bound"]},
    )


HANDLERS: dict[str, Callable[[ScenarioSpec, int, bool], Outcome]] = {
    "spectrum": _run_spectrum,
    "index": _run_index,
    "iterated-index": _run_iterated_index,
    "disk": _run_disk,
    "verify": _run_verify,
    "orbit": _run_orbit,
    "probe": _run_probe,
    "scan": _run_scan,
}


def exit_status_for(error: Exception) -> int:
    """Map an exception to the documented exit status."""
    if isinstance(error, (InvalidInputError, ParseError)):
        return EXIT_INPUT
    if isinstance(error, HolocenterError):
        return EXIT_ANALYSIS
    if isinstance(error, ValueError):
        return EXIT_INPUT
    return EXIT_ANALYSIS


def run_scenario(spec: ScenarioSpec, seed: int, strict: bool = False, argv: list[str] | None = None) -> int:
    """
    Execute a validated scenario and persist its report.

    Args:
        spec: Validated scenario.
        seed: Seed for every randomized choice.
        strict: Treat undetermined or unconfirmed results as failures.
        argv: Command line recorded in the sidecar.

    Returns:
        Exit status (0, 1 or 2).
    """
    print(f"[Harness] Running '{spec.command}' on field '{spec.field.name or 'unnamed'}' (n={spec.field.n})")
    handler = HANDLERS.get(spec.command)
    if handler is None:
        print(f"::error::unknown command: {spec.command}")
        return EXIT_INPUT
    report_path = None
    try:
        outcome = handler(spec, seed, strict)
        payload = {
            "command": spec.command,
            "field": serialize_field(spec.field),
            "parameters": spec.parameters,
            "seed": seed,
            "result": outcome.report,
        }
        report_path = write_report(spec.output_dir, spec.command, payload)
        status = outcome.status
        highlights = outcome.highlights
    except (HolocenterError, ValueError) as e:
        status = exit_status_for(e)
        print(f"::error::{type(e).__name__}: {e}")
        highlights = {"error": type(e).__name__}
        write_report(spec.output_dir, spec.command, {
            "command": spec.command,
            "parameters": spec.parameters,
            "seed": seed,
            "error": {"type": type(e).__name__, "message": str(e)},
        })
    write_meta(spec.output_dir, spec.command, argv or [], seed, status)
    print_summary(spec.command, status, highlights, report_path)
    return status
