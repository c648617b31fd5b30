"""Circuit directories: ``manifest.json`` plus one SMX file per factor."""

from __future__ import annotations

import json
from fractions import Fraction
from pathlib import Path

from .builder import Circuit
from .field import Field
from .serialize import FormatError, from_inline, read_smx, to_inline, write_smx
from .sparse import SparseMatrix

MANIFEST = "manifest.json"


def _jsonable(value):
    if isinstance(value, SparseMatrix):
        return to_inline(value)
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, (str, int, float, bool)) or value is None:
        return value
    return str(value)


def save_circuit(c: Circuit, out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    names = []
    for i, f in enumerate(c.factors):
        name = f"f{i}.smx"
        write_smx(f, out / name)
        names.append(name)
    manifest = {
        "depth": c.depth,
        "dims": c.dims,
        "factors": names,
        "size": c.size,
        "per_layer": c.per_layer,
        "field": c.field.tag,
        "params": _jsonable(c.meta),
    }
    (out / MANIFEST).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return out


def load_circuit(path) -> Circuit:
    """Load a circuit directory and check the manifest against the factor files."""
    root = Path(path)
    try:
        manifest = json.loads((root / MANIFEST).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise FormatError(f"cannot read {root / MANIFEST}: {exc}") from exc
    factors = [read_smx(root / name) for name in manifest["factors"]]
    c = Circuit(factors, dict(manifest.get("params", {})))
    if c.depth != manifest["depth"] or c.dims != manifest["dims"]:
        raise FormatError("manifest depth/dims disagree with the factor files")
    if c.per_layer != manifest["per_layer"] or c.size != manifest["size"]:
        raise FormatError("manifest sizes disagree with the factor files")
    return c


def target_of(c: Circuit) -> tuple[SparseMatrix, int] | None:
    """``(unit, power)`` recorded in the circuit metadata, if any."""
    unit = c.meta.get("target_unit")
    power = c.meta.get("target_power")
    if unit is None or power is None:
        return None
    if isinstance(unit, dict):
        unit = from_inline(unit, c.field)
    return unit, int(power)
