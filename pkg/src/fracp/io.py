"""CSV persistence for radial profiles and planar grids.

Values are written with ``repr`` so a store/load round trip is bitwise exact.
"""

from __future__ import annotations

import hashlib
import math
from pathlib import Path

import numpy as np

from .errors import DomainError, ParseError, SchemaError
from .profiles import PlanarGrid, RadialProfile

PROFILE_HEADER = "r,u"


def store_profile(u: RadialProfile, path) -> Path:
    """Write ``u`` as CSV with header ``r,u`` and one row per node."""
    path = Path(path)
    lines = [PROFILE_HEADER]
    lines += [f"{r!r},{v!r}" for r, v in zip(u.nodes.tolist(), u.values.tolist())]
    path.write_text("\n".join(lines) + "\n")
    return path


def _parse_float(text: str, line: int, what: str) -> float:
    try:
        x = float(text)
    except ValueError:
        raise ParseError(line, f"{what} is not a number: {text!r}") from None
    if not math.isfinite(x):
        raise ParseError(line, f"{what} is not finite: {text!r}")
    return x


def load_profile(path) -> RadialProfile:
    """Read a profile written by :func:`store_profile`.

    Raises
    ------
    SchemaError
        The first line is not ``r,u``.
    ParseError
        A row is malformed or ``r`` is not strictly increasing from 0; the
        error carries the 1-based line number.
    """
    path = Path(path)
    rows = path.read_text().splitlines()
    if not rows or rows[0].strip().replace(" ", "") != PROFILE_HEADER:
        got = rows[0] if rows else "<empty file>"
        raise SchemaError(f"{path}: expected header 'r,u', got {got!r}")
    r, v = [], []
    for k, row in enumerate(rows[1:], start=2):
        if not row.strip():
            continue
        parts = row.split(",")
        if len(parts) != 2:
            raise ParseError(k, f"expected 2 fields, got {len(parts)}")
        rk = _parse_float(parts[0], k, "r")
        vk = _parse_float(parts[1], k, "u")
        if not r and rk != 0.0:
            raise ParseError(k, f"first node must be r = 0, got {rk!r}")
        if r and rk <= r[-1]:
            raise ParseError(k, f"r is not strictly increasing ({rk!r} after {r[-1]!r})")
        r.append(rk)
        v.append(vk)
    if len(r) < 2:
        raise ParseError(len(rows), "a profile needs at least two rows")
    return RadialProfile(np.array(r), np.array(v))


def store_grid(f: PlanarGrid, path) -> Path:
    """Write a planar grid: ``L=<v>``, ``n=<v>``, then ``n`` comma-separated rows."""
    path = Path(path)
    lines = [f"L={f.L!r}", f"n={f.n}"]
    lines += [",".join(repr(x) for x in row) for row in f.values.tolist()]
    path.write_text("\n".join(lines) + "\n")
    return path


def load_grid(path) -> PlanarGrid:
    path = Path(path)
    rows = path.read_text().splitlines()
    if len(rows) < 2 or not rows[0].startswith("L=") or not rows[1].startswith("n="):
        raise SchemaError(f"{path}: expected two header lines 'L=<value>' and 'n=<value>'")
    L = _parse_float(rows[0][2:], 1, "L")
    try:
        n = int(rows[1][2:])
    except ValueError:
        raise ParseError(2, f"n is not an integer: {rows[1][2:]!r}") from None
    data = [row for row in rows[2:] if row.strip()]
    if len(data) != n:
        raise ParseError(len(rows), f"expected {n} data rows, got {len(data)}")
    vals = np.empty((n, n))
    for k, row in enumerate(data):
        parts = row.split(",")
        if len(parts) != n:
            raise ParseError(k + 3, f"expected {n} fields, got {len(parts)}")
        vals[k] = [_parse_float(p, k + 3, "value") for p in parts]
    try:
        return PlanarGrid(L, n, vals)
    except DomainError as exc:
        raise ParseError(2, str(exc)) from None


def file_digest(path) -> str:
    """sha256 hex digest of a file's bytes."""
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()
