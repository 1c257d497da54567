"""
Report Writing and Summary Output for holocenter.

Reports are deterministic JSON documents: keys sorted, complex numbers
rendered as {"re": ..., "im": ...}, floats in their shortest round-trip
decimal form (at most 17 significant digits), non-finite values as the
strings "inf", "-inf" and "nan". Anything run-specific (timestamp, argv)
goes to a separate <command>.meta.json sidecar so identical scenarios give
byte-identical reports.
"""

import json
import math
import os
from datetime import datetime, timezone
from enum import Enum
from typing import Any

import numpy as np


def _float(value: float) -> float | str:
    if math.isfinite(value):
        return value
    if math.isnan(value):
        return "nan"
    return "inf" if value > 0 else "-inf"


def to_jsonable(obj: Any) -> Any:
    """
    Convert report payloads (numpy arrays, complex numbers, enums, objects
    with to_dict) into plain JSON-compatible values.
    """
    if hasattr(obj, "to_dict"):
        return to_jsonable(obj.to_dict())
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return _float(float(obj))
    if isinstance(obj, (complex, np.complexfloating)):
        c = complex(obj)
        return {"re": _float(c.real), "im": _float(c.imag)}
    return obj


def dumps_report(payload: Any) -> str:
    """Render a payload as canonical report text."""
    return json.dumps(to_jsonable(payload), sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_report(out_dir: str, command: str, payload: Any) -> str:
    """
    Write <out_dir>/<command>.json.

    Returns:
        Path of the written report.
    """
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, f"{command}.json")
    with open(path, "w", encoding="utf-8") as f:
        f.write(dumps_report(payload))
    return path


def write_meta(out_dir: str, command: str, argv: list[str], seed: int, status: int) -> str:
    """Write the <command>.meta.json sidecar with run-specific data."""
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, f"{command}.meta.json")
    meta = {
        "command": command,
        "argv": list(argv),
        "seed": seed,
        "status": status,
        "timestamp": datetime.now(timezone.utc).isoformat(),
    }
    with open(path, "w", encoding="utf-8") as f:
        json.dump(meta, f, sort_keys=True, indent=2)
        f.write("\n")
    return path


def print_summary(command: str, status: int, highlights: dict[str, Any], report_path: str | None) -> None:
    """
    Print a human-readable summary of one scenario run.

    Args:
        command: The command that ran.
        status: Exit status about to be returned.
        highlights: Short key facts to list (index value, verdict, ...).
        report_path: Where the report was written, if anywhere.
    """
    print("\n" + "=" * 60)
    print("           HOLOCENTER RUN SUMMARY")
    print("=" * 60)
    print(f"\nCommand: {command}")
    print(f"Status:  {status} ({'ok' if status == 0 else 'failed'})")
    if highlights:
        print("\nHighlights:")
        for key, value in highlights.items():
            print(f"  {key + ':':<24} {value}")
    if report_path:
        print(f"\nReport: {report_path}")
    print("=" * 60)
