"""Canonical JSON output, model digests, run manifests, shipped schemas.

Floats are rendered with 17 significant digits (``%.17g``), which
round-trips every IEEE double exactly, so identical inputs produce
byte-identical output files.  Integral floats keep a trailing ``.0`` to
preserve their type through a round trip.
"""

from __future__ import annotations

import datetime
import hashlib
import json
import math
from importlib import resources

import numpy as np

from . import __version__

TOOL_NAME = "sca-ising"


def format_float(value: float) -> str:
    """Deterministic float token with exact round-trip."""
    if math.isnan(value) or math.isinf(value):
        raise ValueError("non-finite float in JSON output")
    text = f"{value:.17g}"
    if not any(c in text for c in ".eE"):
        text += ".0"
    return text


def _render(obj, indent: int, level: int) -> str:
    pad = " " * (indent * level)
    inner = " " * (indent * (level + 1))
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return format_float(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, (list, tuple, np.ndarray)):
        items = list(obj)
        if not items:
            return "[]"
        if all(not isinstance(i, (dict, list, tuple, np.ndarray)) for i in items):
            return "[" + ", ".join(_render(i, indent, 0) for i in items) + "]"
        body = ",\n".join(inner + _render(i, indent, level + 1) for i in items)
        return "[\n" + body + "\n" + pad + "]"
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        parts = []
        for key, value in obj.items():
            if not isinstance(key, str):
                raise TypeError(f"JSON object keys must be strings, got {key!r}")
            parts.append(inner + json.dumps(key) + ": " + _render(value, indent, level + 1))
        return "{\n" + ",\n".join(parts) + "\n" + pad + "}"
    raise TypeError(f"cannot render {type(obj).__name__} as JSON")


def dumps_canonical(obj, indent: int = 2) -> str:
    """Pretty, deterministic JSON text (no trailing newline)."""
    return _render(obj, indent, 0)


def _render_compact_sorted(obj) -> str:
    if obj is None or isinstance(obj, (bool, str)):
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return format_float(float(obj))
    if isinstance(obj, (list, tuple, np.ndarray)):
        return "[" + ",".join(_render_compact_sorted(i) for i in obj) + "]"
    if isinstance(obj, dict):
        keys = sorted(obj)
        return "{" + ",".join(json.dumps(k) + ":" + _render_compact_sorted(obj[k]) for k in keys) + "}"
    raise TypeError(f"cannot render {type(obj).__name__} as JSON")


def canonical_digest(obj) -> str:
    """SHA-256 hex digest of the compact, key-sorted canonical form."""
    return hashlib.sha256(_render_compact_sorted(obj).encode("utf-8")).hexdigest()


def build_manifest(
    command: str,
    parameters: dict,
    model_digest: str | None,
    seed: int | None,
    duration_seconds: float,
) -> dict:
    """Run metadata written as a sidecar next to saved outputs."""
    return {
        "tool": TOOL_NAME,
        "version": __version__,
        "command": command,
        "parameters": parameters,
        "model_digest": model_digest,
        "seed": seed,
        "duration_seconds": duration_seconds,
        "created_utc": datetime.datetime.now(datetime.timezone.utc).isoformat(),
    }


def load_schema(kind: str) -> dict:
    """Load one of the shipped JSON schemas by name (e.g. "model", "plan")."""
    path = resources.files("sca_ising").joinpath("schemas", f"{kind}.schema.json")
    return json.loads(path.read_text(encoding="utf-8"))


def validate_output(kind: str, payload) -> None:
    """Validate a document against a shipped schema; raises on mismatch."""
    import jsonschema

    jsonschema.validate(payload, load_schema(kind))
