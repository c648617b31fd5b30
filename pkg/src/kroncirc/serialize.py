"""Text and JSON formats: SMX matrices and their inline JSON form."""

from __future__ import annotations

import json
from pathlib import Path

from .field import Field, FieldError
from .sparse import SparseMatrix


class FormatError(ValueError):
    """Raised on malformed SMX or JSON input."""


def to_smx(m: SparseMatrix) -> str:
    fmt = m.field.format
    lines = [f"SMX {m.rows} {m.cols} {m.nnz} {m.field.tag}"]
    lines.extend(f"{r} {c} {fmt(v)}" for r, c, v in m.entries)
    return "\n".join(lines) + "\n"


def from_smx(text: str) -> SparseMatrix:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise FormatError("empty SMX input")
    head = lines[0].split()
    if len(head) != 5 or head[0] != "SMX":
        raise FormatError(f"bad SMX header: {lines[0]!r}")
    try:
        rows, cols, nnz = int(head[1]), int(head[2]), int(head[3])
        field = Field.from_tag(head[4])
    except (ValueError, FieldError) as exc:
        raise FormatError(f"bad SMX header: {lines[0]!r}") from exc
    body = lines[1:]
    if len(body) != nnz:
        raise FormatError(f"header says {nnz} entries, found {len(body)}")
    r, c, v = [], [], []
    for ln in body:
        parts = ln.split()
        if len(parts) != 3:
            raise FormatError(f"bad SMX entry line: {ln!r}")
        r.append(int(parts[0]))
        c.append(int(parts[1]))
        v.append(field.parse(parts[2]))
    m = SparseMatrix.from_coo(rows, cols, r, c, v, field, sum_duplicates=False)
    if m.nnz != nnz:
        raise FormatError("SMX body stores explicit zeros")
    return m


def write_smx(m: SparseMatrix, path) -> None:
    Path(path).write_text(to_smx(m))


def read_smx(path) -> SparseMatrix:
    return from_smx(Path(path).read_text())


def to_inline(m: SparseMatrix) -> dict:
    fmt = m.field.format
    return {"rows": m.rows, "cols": m.cols, "entries": [[r, c, fmt(v)] for r, c, v in m.entries]}


def from_inline(obj: dict, field: Field) -> SparseMatrix:
    try:
        entries = [(int(r), int(c), field(v) if isinstance(v, str) else field(int(v))) for r, c, v in obj["entries"]]
        return SparseMatrix.from_coo(
            int(obj["rows"]),
            int(obj["cols"]),
            [e[0] for e in entries],
            [e[1] for e in entries],
            [e[2] for e in entries],
            field,
            sum_duplicates=False,
        )
    except (KeyError, TypeError) as exc:
        raise FormatError(f"bad inline matrix: {exc}") from exc


def dump_json(obj, path) -> None:
    Path(path).write_text(json.dumps(obj, indent=1, sort_keys=True) + "\n")


def load_json(path):
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: {exc}") from exc
