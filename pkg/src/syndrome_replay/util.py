"""Small shared helpers: canonical CSV emission, SHA-256 digests, line counts.

Every artifact this package writes must be byte-identical across reruns, so
all text output funnels through the helpers here: UTF-8, LF line endings,
trailing newline, and reals formatted to exactly six decimal places with
round-half-even (Python's default float formatting mode).
"""
from __future__ import annotations

import hashlib
from pathlib import Path
from typing import Iterable, Sequence

EMPTY_SHA256 = "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"


def format_real(value: float) -> str:
    """Canonical 6-decimal rendering used in every CSV cell holding a real."""
    return f"{value:.6f}"


def render_csv(header: Sequence[str], rows: Iterable[Sequence[str]]) -> bytes:
    """Render a canonical CSV: comma-joined cells, LF endings, trailing newline.

    Cells are written verbatim; callers must pre-format numbers.  None of the
    emitted tables contain commas, quotes, or newlines inside cells, so no
    quoting layer is needed (and omitting one keeps the bytes predictable).
    """
    lines = [",".join(header)]
    for row in rows:
        for cell in row:
            if any(ch in cell for ch in ',"\n\r'):
                raise ValueError(f"cell not representable in canonical CSV: {cell!r}")
        lines.append(",".join(row))
    return ("\n".join(lines) + "\n").encode("utf-8")


def write_csv(path: str | Path, header: Sequence[str], rows: Iterable[Sequence[str]]) -> None:
    Path(path).write_bytes(render_csv(header, rows))


def sha256_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def sha256_file(path: str | Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def count_lines(path: str | Path) -> int:
    """Number of newline-terminated records in a file (trailing LF per line)."""
    data = Path(path).read_bytes()
    if not data:
        return 0
    n = data.count(b"\n")
    if not data.endswith(b"\n"):
        n += 1
    return n
