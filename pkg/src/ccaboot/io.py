"""CSV / JSON persistence with all-or-nothing writes."""

from __future__ import annotations

import contextlib
import csv
import hashlib
import io
import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .errors import InvalidInputError


def format_float(x: float) -> str:
    # repr gives the shortest string that round-trips an IEEE double.
    return repr(float(x))


def atomic_write_text(path, text: str) -> None:
    """Write ``text`` to a temporary sibling of ``path`` and rename it into place."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        with contextlib.suppress(FileNotFoundError):
            os.unlink(tmp)
        raise


def matrix_to_csv_text(M, header: list[str] | None = None) -> str:
    M = np.atleast_2d(np.asarray(M, dtype=float))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if header is not None:
        w.writerow(header)
    for row in M:
        w.writerow([format_float(v) for v in row])
    return buf.getvalue()


def write_matrix_csv(path, M, header: list[str] | None = None) -> None:
    atomic_write_text(path, matrix_to_csv_text(M, header))


def read_matrix_csv(path, *, header: bool = False) -> np.ndarray:
    """Read a numeric CSV matrix, one observation per row.

    With ``header=True`` the first row is skipped.
    """
    path = Path(path)
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if header:
        rows = rows[1:]
    if not rows:
        raise InvalidInputError(f"{path}: no data rows")
    width = len(rows[0])
    try:
        data = [[float(v) for v in r] for r in rows]
    except ValueError as exc:
        raise InvalidInputError(f"{path}: non-numeric entry ({exc})") from None
    if any(len(r) != width for r in data):
        raise InvalidInputError(f"{path}: ragged rows")
    return np.array(data, dtype=float)


def rows_to_csv_text(header: list[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([format_float(v) if isinstance(v, (float, np.floating)) else v for v in r])
    return buf.getvalue()


def json_text(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def write_json(path, obj) -> None:
    atomic_write_text(path, json_text(obj))


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def commit_files(directory, files: dict[str, str]) -> None:
    """Write several text files so that none is left behind if any write fails.

    All contents are staged as temporaries first and renamed into place only
    once every temporary exists. If a rename fails, files created by earlier
    renames in the same call are removed again.
    """
    directory = Path(directory)
    staged: list[tuple[str, Path]] = []
    created: list[Path] = []
    try:
        for name, text in files.items():
            fd, tmp = tempfile.mkstemp(prefix=f".{name}.", suffix=".tmp", dir=directory)
            staged.append((tmp, directory / name))
            with os.fdopen(fd, "w", newline="") as fh:
                fh.write(text)
        for tmp, dest in staged:
            existed = dest.exists()
            os.replace(tmp, dest)
            if not existed:
                created.append(dest)
    except BaseException:
        for tmp, _ in staged:
            with contextlib.suppress(FileNotFoundError):
                os.unlink(tmp)
        for dest in created:
            with contextlib.suppress(FileNotFoundError):
                os.unlink(dest)
        raise
