"""
Self-describing text snapshots of a State.

    thermotumor-snapshot
    format_version 1
    dim 2
    cells 4 4
    extent 1.0 1.0
    time 0.25
    phi
    <one value per line, row-major, shortest round-trip repr>
    theta
    ...
    sigma
    ...
"""
import logging
import math
import os
import tempfile
from pathlib import Path
from typing import Dict, List, Union

import numpy as np

from thermotumor.core.exceptions import OutputError, SnapshotFormatError
from thermotumor.models.grid import Field, Grid
from thermotumor.models.state import State

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

MAGIC = "thermotumor-snapshot"
FORMAT_VERSION = 1
BLOCKS = ("phi", "theta", "sigma")


def format_snapshot(state: State) -> str:
    grid = state.grid
    lines = [
        MAGIC,
        f"format_version {FORMAT_VERSION}",
        f"dim {grid.dim}",
        "cells " + " ".join(str(n) for n in grid.cells),
        "extent " + " ".join(repr(length) for length in grid.extent),
        f"time {state.t!r}",
    ]
    for name in BLOCKS:
        lines.append(name)
        lines.extend(repr(float(v)) for v in getattr(state, name).values)
    return "\n".join(lines) + "\n"


def write_snapshot(state: State, path: PathLike) -> Path:
    """Write atomically: a temporary sibling is renamed over ``path``"""
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(prefix=path.name + ".", suffix=".tmp", dir=path.parent)
        try:
            with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as handle:
                handle.write(format_snapshot(state))
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
    except OSError as exc:
        raise OutputError(f"cannot write snapshot {path}: {exc.strerror}", context={"path": str(path)}) from exc
    return path


def _header_value(lines: List[str], index: int, key: str, source: str) -> List[str]:
    if index >= len(lines):
        raise SnapshotFormatError(f"{source}: truncated header, missing {key!r}", context={"path": source})
    parts = lines[index].split()
    if not parts or parts[0] != key:
        raise SnapshotFormatError(
            f"{source}: line {index + 1}: expected {key!r}", context={"path": source, "line": index + 1})
    return parts[1:]


def parse_snapshot(text: str, source: str = "<string>") -> State:
    """Parse a whole snapshot; nothing is returned unless every block is valid"""
    lines = text.splitlines()
    if not lines or lines[0].strip() != MAGIC:
        raise SnapshotFormatError(f"{source}: not a thermotumor snapshot", context={"path": source})

    try:
        version = int(_header_value(lines, 1, "format_version", source)[0])
        dim = int(_header_value(lines, 2, "dim", source)[0])
        cells = tuple(int(n) for n in _header_value(lines, 3, "cells", source))
        extent = tuple(float(v) for v in _header_value(lines, 4, "extent", source))
        t = float(_header_value(lines, 5, "time", source)[0])
    except (IndexError, ValueError) as exc:
        raise SnapshotFormatError(f"{source}: malformed header: {exc}", context={"path": source}) from None

    if version != FORMAT_VERSION:
        raise SnapshotFormatError(
            f"{source}: unsupported format_version {version} (expected {FORMAT_VERSION})",
            context={"path": source, "format_version": version},
        )
    if len(cells) != dim or len(extent) != dim:
        raise SnapshotFormatError(f"{source}: header dim does not match cells/extent", context={"path": source})
    try:
        grid = Grid(cells, extent)
    except ValueError as exc:
        raise SnapshotFormatError(f"{source}: invalid grid: {exc}", context={"path": source}) from None

    size = grid.size
    expected = 6 + len(BLOCKS) * (size + 1)
    body = lines[6:]
    if len(lines) != expected:
        raise SnapshotFormatError(
            f"{source}: shape mismatch, expected {expected} lines for {size} cells, found {len(lines)}",
            context={"path": source, "expected_lines": expected, "lines": len(lines)},
        )

    values: Dict[str, np.ndarray] = {}
    for block, name in enumerate(BLOCKS):
        start = block * (size + 1)
        label = body[start].strip()
        if label != name:
            raise SnapshotFormatError(
                f"{source}: line {6 + start + 1}: expected block {name!r}, found {label!r}",
                context={"path": source, "line": 6 + start + 1},
            )
        try:
            block_values = [float(v) for v in body[start + 1:start + 1 + size]]
        except ValueError as exc:
            raise SnapshotFormatError(f"{source}: block {name!r}: {exc}", context={"path": source}) from None
        if not all(math.isfinite(v) for v in block_values):
            raise SnapshotFormatError(f"{source}: block {name!r} holds non-finite values", context={"path": source})
        values[name] = np.array(block_values)

    if not (math.isfinite(t) and t >= 0):
        raise SnapshotFormatError(f"{source}: invalid time {t!r}", context={"path": source})
    return State(Field(grid, values["phi"]), Field(grid, values["theta"]), Field(grid, values["sigma"]), t)


def read_snapshot(path: PathLike) -> State:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise OutputError(f"cannot read snapshot {path}: {exc.strerror}", context={"path": str(path)}) from exc
    return parse_snapshot(text, str(path))
