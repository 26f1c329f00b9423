"""JSON matrix files, CSV tables and the append-only run log."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .symplectic import Layout, convert_layout

SYMMETRY_TOL = 1e-9


class InputError(ValueError):
    """Malformed input with a machine-readable ``code`` and a location hint."""

    def __init__(self, code: str, message: str, location: str | None = None):
        super().__init__(message)
        self.code = code
        self.location = location

    def as_dict(self) -> dict:
        out = {"code": self.code, "message": str(self)}
        if self.location is not None:
            out["location"] = self.location
        return out


@dataclass(frozen=True)
class LoadedMatrix:
    """A matrix converted to ``xxpp``, remembering the layout it was stored in."""

    matrix: np.ndarray
    source_layout: Layout
    mean: np.ndarray | None = None
    path: str | None = None

    @property
    def n_modes(self) -> int:
        return self.matrix.shape[0] // 2


def _field(payload: dict, name: str, path: str):
    if name not in payload:
        raise InputError("PARSE", f"missing field '{name}'", f"{path}:{name}")
    return payload[name]


def parse_matrix(payload: dict, path: str = "<input>", check_symmetric: bool = True) -> LoadedMatrix:
    """Validate a decoded matrix document and convert it to ``xxpp``.

    Raises:
        InputError: with code ``PARSE``, ``SHAPE`` or ``ASYMMETRIC``
    """
    if not isinstance(payload, dict):
        raise InputError("PARSE", "top level must be a JSON object", path)
    n = _field(payload, "n_modes", path)
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise InputError("SHAPE", "n_modes must be a positive integer", f"{path}:n_modes")
    try:
        layout = Layout(str(payload.get("layout", "xxpp")).lower())
    except ValueError:
        raise InputError("PARSE", "layout must be 'xxpp' or 'xpxp'", f"{path}:layout") from None
    rows = _field(payload, "matrix", path)
    if not isinstance(rows, list) or len(rows) != 2 * n:
        got = len(rows) if isinstance(rows, list) else type(rows).__name__
        raise InputError("SHAPE", f"matrix must have {2 * n} rows, got {got}", f"{path}:matrix")
    for i, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != 2 * n:
            got = len(row) if isinstance(row, list) else type(row).__name__
            raise InputError("SHAPE", f"row {i} must have {2 * n} entries, got {got}", f"{path}:matrix[{i}]")
        for j, x in enumerate(row):
            if isinstance(x, bool) or not isinstance(x, (int, float)) or not math.isfinite(x):
                raise InputError("PARSE", f"entry is not a finite number: {x!r}", f"{path}:matrix[{i}][{j}]")
    m = np.array(rows, dtype=float)
    if check_symmetric:
        diff = np.abs(m - m.T)
        i, j = np.unravel_index(int(np.argmax(diff)), diff.shape)
        scale = max(1.0, float(np.max(np.abs(m))))
        if diff[i, j] > SYMMETRY_TOL * scale:
            raise InputError(
                "ASYMMETRIC",
                f"entries ({i},{j}) and ({j},{i}) differ by {diff[i, j]:.3e}",
                f"{path}:matrix[{i}][{j}]",
            )
    mean = payload.get("mean")
    if mean is not None:
        if not isinstance(mean, list) or len(mean) != 2 * n:
            raise InputError("SHAPE", f"mean must have {2 * n} entries", f"{path}:mean")
        mean = convert_layout(np.array(mean, dtype=float), layout, Layout.XXPP)
    return LoadedMatrix(convert_layout(m, layout, Layout.XXPP), layout, mean, path)


def load_matrix(path: str | os.PathLike, check_symmetric: bool = True) -> LoadedMatrix:
    """Read a matrix file; JSON syntax errors report line and column."""
    path = str(path)
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError("PARSE", f"cannot read file: {exc.strerror}", path) from None
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError("PARSE", exc.msg, f"{path}:{exc.lineno}:{exc.colno}") from None
    return parse_matrix(payload, path, check_symmetric)


def matrix_document(m: np.ndarray, layout: Layout | str = Layout.XXPP, mean: np.ndarray | None = None) -> dict:
    """JSON-ready document for an ``xxpp`` matrix, stored in ``layout``."""
    layout = Layout(layout)
    m = np.asarray(m, dtype=float)
    doc = {
        "n_modes": m.shape[0] // 2,
        "layout": layout.value,
        "matrix": convert_layout(m, Layout.XXPP, layout).tolist(),
    }
    if mean is not None:
        doc["mean"] = convert_layout(np.asarray(mean, dtype=float), Layout.XXPP, layout).tolist()
    return doc


def dumps(obj) -> str:
    # float repr is the shortest string that round-trips, so files are byte-stable
    return json.dumps(obj, indent=1, allow_nan=False)


def save_matrix(path: str | os.PathLike, m: np.ndarray, layout: Layout | str = Layout.XXPP, mean=None) -> None:
    Path(path).write_text(dumps(matrix_document(m, layout, mean)) + "\n")


def csv_text(rows: Sequence[dict] | Sequence[Sequence], header: Sequence[str] | None = None) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    rows = list(rows)
    if rows and isinstance(rows[0], dict):
        header = header or list(rows[0])
        writer.writerow(header)
        writer.writerows([[r[k] for k in header] for r in rows])
    else:
        if header:
            writer.writerow(header)
        writer.writerows(rows)
    return buf.getvalue()


def save_csv(path: str | os.PathLike, rows, header: Sequence[str] | None = None) -> None:
    Path(path).write_text(csv_text(rows, header))


def digest(obj) -> str:
    blob = json.dumps(obj, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()


def _previous_digests(path: Path) -> Iterable[tuple[str, str]]:
    if not path.exists():
        return
    with path.open() as fh:
        for line in fh:
            try:
                rec = json.loads(line)
            except json.JSONDecodeError:
                continue
            yield rec.get("inputs_digest"), rec.get("config_digest")


def append_run_record(path: str | os.PathLike, record: dict) -> dict:
    """Append one JSON line with a single ``O_APPEND`` write; flags repeated digests."""
    path = Path(path)
    key = (record["inputs_digest"], record["config_digest"])
    record = {**record, "rerun": any(prev == key for prev in _previous_digests(path))}
    line = (json.dumps(record, sort_keys=True, default=str) + "\n").encode()
    fd = os.open(path, os.O_WRONLY | os.O_APPEND | os.O_CREAT, 0o644)
    try:
        os.write(fd, line)
    finally:
        os.close(fd)
    return record
