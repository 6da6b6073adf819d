"""SourceDist dumps: ``cell,prob`` CSV and 8-bit PGM heat maps."""

from __future__ import annotations

import csv

import numpy as np

from .core import Grid2D
from .errors import DomainMismatchError


def write_source_csv(p, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["cell", "prob"])
        for c, v in enumerate(np.asarray(p, dtype=np.float64)):
            w.writerow([c, repr(float(v))])


def read_source_csv(path) -> dict[int, float]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != ["cell", "prob"]:
            raise DomainMismatchError(f"{path}: expected header cell,prob")
        return {int(r["cell"]): float(r["prob"]) for r in reader}


def as_array(dump: dict[int, float]) -> np.ndarray:
    n = max(dump) + 1 if dump else 0
    if set(dump) != set(range(n)):
        raise DomainMismatchError("dump does not cover a contiguous cell range")
    return np.array([dump[c] for c in range(n)])


def diff_maps(a, b) -> float:
    """L-infinity distance between two SourceDist dumps (dicts, arrays or CSV paths)."""
    da, db = (_load(x) for x in (a, b))
    if set(da) != set(db):
        raise DomainMismatchError(f"dumps cover different cells ({len(da)} vs {len(db)})")
    return max((abs(da[c] - db[c]) for c in da), default=0.0)


def _load(x) -> dict[int, float]:
    if isinstance(x, dict):
        return x
    if isinstance(x, (str, bytes)) or hasattr(x, "__fspath__"):
        return read_source_csv(x)
    return {c: float(v) for c, v in enumerate(np.asarray(x, dtype=np.float64))}


def pgm_bytes(p, grid: Grid2D) -> bytes:
    """Binary PGM (P5) with one pixel per cell, value round(255 * p / max p).

    Image row 0 is grid row 0, so the picture is flipped relative to the usual
    y-up map view.
    """
    a = np.asarray(p, dtype=np.float64)
    if a.shape != (grid.n_cells,):
        raise DomainMismatchError(f"distribution has {a.size} entries, grid has {grid.n_cells} cells")
    top = a.max()
    pix = np.zeros(a.size, dtype=np.uint8) if top <= 0 else np.rint(255.0 * a / top).astype(np.uint8)
    header = f"P5\n{grid.width} {grid.height}\n255\n".encode("ascii")
    return header + pix.tobytes()


def write_pgm(p, grid: Grid2D, path) -> None:
    with open(path, "wb") as fh:
        fh.write(pgm_bytes(p, grid))


def read_pgm(path) -> np.ndarray:
    """Return the (height, width) uint8 pixel array of a P5 file written by :func:`write_pgm`."""
    data = open(path, "rb").read()
    parts = data.split(b"\n", 3)
    if len(parts) != 4 or parts[0] != b"P5":
        raise ValueError(f"{path}: not a binary PGM")
    width, height = (int(v) for v in parts[1].split())
    if int(parts[2]) != 255:
        raise ValueError(f"{path}: only 8-bit PGM is supported")
    pix = np.frombuffer(parts[3], dtype=np.uint8)
    if pix.size != width * height:
        raise ValueError(f"{path}: truncated pixel data")
    return pix.reshape(height, width)
