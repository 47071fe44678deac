"""Versioned, deterministic JSON reports."""

from __future__ import annotations

import hashlib
import json
import math
from typing import Any

import numpy as np

SCHEMA_VERSION = "1.0"

CSV_COLUMNS_DOC = "s, chart coordinates, velocity components (v-prefixed), g_vv"


def sanitize(obj: Any) -> Any:
    """Plain JSON types; non-finite floats become the strings 'nan', 'inf', '-inf'."""
    if isinstance(obj, dict):
        return {str(k): sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [sanitize(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [sanitize(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if obj is None or isinstance(obj, str):
        return obj
    try:
        return float(obj)  # mpmath numbers
    except (TypeError, ValueError):
        return str(obj)


def fingerprint(parameters: dict, audits: dict) -> dict:
    payload = json.dumps(sanitize({"parameters": parameters, "audits": audits}), sort_keys=True)
    return {
        "parameters": sanitize(parameters),
        "construction_audits": sanitize(audits),
        "sha256": hashlib.sha256(payload.encode()).hexdigest(),
    }


def build_report(scenario: str, parameters: dict, suites: list[dict], audits: dict) -> dict:
    checks = [c for s in suites for c in s["checks"]]
    return sanitize({
        "schema_version": SCHEMA_VERSION,
        "scenario": scenario,
        "fingerprint": fingerprint(parameters, audits),
        "csv_columns": CSV_COLUMNS_DOC,
        "suites": suites,
        "summary": {
            "checks": len(checks),
            "failed": [c["name"] for c in checks if not c["pass"]],
        },
        "overall_pass": bool(checks) and all(c["pass"] for c in checks),
    })


def dumps(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2, allow_nan=False) + "\n"
