"""Plain-text adjacency formats.

Edge list: a header ``n=<n> directed=1 selfloops=1`` followed by one
1-indexed ``i j`` pair per line. Dense: one row per line, entries separated
by single spaces.
"""
from __future__ import annotations

import os
import re
import tempfile
from pathlib import Path

import numpy as np

_HEADER = re.compile(r"^n=(\d+)\s+directed=1\s+selfloops=1\s*$")


def atomic_write_text(path, text: str):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def format_edgelist(A) -> str:
    A = np.asarray(A)
    n = A.shape[0]
    lines = [f"n={n} directed=1 selfloops=1"]
    for i, j in zip(*np.nonzero(A)):
        lines.append(f"{i + 1} {j + 1}")
    return "\n".join(lines) + "\n"


def parse_edgelist(text: str) -> np.ndarray:
    lines = text.splitlines()
    if not lines:
        raise ValueError("empty edge list")
    m = _HEADER.match(lines[0].strip())
    if m is None:
        raise ValueError(f"bad edge-list header: {lines[0]!r}")
    n = int(m.group(1))
    A = np.zeros((n, n), dtype=np.uint8)
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ValueError(f"line {lineno}: expected 'i j'")
        i, j = int(parts[0]), int(parts[1])
        if not (1 <= i <= n and 1 <= j <= n):
            raise ValueError(f"line {lineno}: node id out of range 1..{n}")
        A[i - 1, j - 1] = 1
    return A


def format_dense(A) -> str:
    A = np.asarray(A)
    return "".join(" ".join(str(int(v)) for v in row) + "\n" for row in A)


def parse_dense(text: str) -> np.ndarray:
    rows = [line.split() for line in text.splitlines() if line.strip()]
    A = np.array(rows, dtype=np.int64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("dense adjacency must be square")
    if not np.isin(A, (0, 1)).all():
        raise ValueError("dense adjacency entries must be 0 or 1")
    return A.astype(np.uint8)


def write_adjacency(A, path, fmt: str = "edgelist"):
    if fmt == "edgelist":
        atomic_write_text(path, format_edgelist(A))
    elif fmt == "dense":
        atomic_write_text(path, format_dense(A))
    else:
        raise ValueError(f"unknown adjacency format {fmt!r}")


def read_adjacency(path) -> np.ndarray:
    """Read either format; the edge-list header decides."""
    text = Path(path).read_text()
    first = text.lstrip().split("\n", 1)[0]
    if first.startswith("n="):
        return parse_edgelist(text)
    return parse_dense(text)
