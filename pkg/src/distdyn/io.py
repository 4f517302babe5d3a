"""Plain CSV/JSON writers for estimates and results.

Floats are written with ``repr`` and JSON with sorted keys, so identical
inputs give byte-identical files.
"""

from __future__ import annotations

import csv
import hashlib
import json
import os
from typing import Iterable, Sequence

from .density import DensityGrid1D, KernelGrid2D
from .dynamics import ErgodicResult

MANIFEST = "MANIFEST.sha256"


def _num(v) -> str:
    return repr(float(v))


def write_rows(path, header: Sequence[str], rows: Iterable[Sequence]):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow(row)


def write_json(path, obj):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False))
        fh.write("\n")


def write_density(path, density: DensityGrid1D, column: str = "density"):
    write_rows(path, ("x", column),
               ((_num(x), _num(v)) for x, v in zip(density.grid.points, density.values)))


def write_kernel(path, kernel: KernelGrid2D):
    """Long format ``x, y, value, flagged``; one line per grid cell."""
    gx, gy = kernel.grid_x.points, kernel.grid_y.points

    def rows():
        for i, x in enumerate(gx):
            flag = int(kernel.flagged[i])
            for j, y in enumerate(gy):
                yield _num(x), _num(y), _num(kernel.values[i, j]), flag

    write_rows(path, ("x", "y", "value", "flagged"), rows())


def write_ergodic(stem, result: ErgodicResult, extra: dict = None):
    """``<stem>.csv`` with the density and bands plus ``<stem>.json`` metadata."""
    grid = result.grid
    lo = result.band_lo.values if result.band_lo is not None else None
    hi = result.band_hi.values if result.band_hi is not None else None
    header = ["x", "density"] + (["band_lo", "band_hi"] if lo is not None else [])

    def rows():
        for k, x in enumerate(grid.points):
            row = [_num(x), _num(result.density.values[k])]
            if lo is not None:
                row += [_num(lo[k]), _num(hi[k])]
            yield row

    write_rows(f"{stem}.csv", header, rows())
    meta = {
        "grid": grid.spec(),
        "iterations": result.iterations,
        "residual": float(result.residual),
        "converged": bool(result.converged),
        "replications": result.replications,
        "coverage": result.coverage,
        "local_maxima": [float(v) for v in result.density.local_maxima()],
    }
    meta.update(extra or {})
    write_json(f"{stem}.json", meta)


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(directory, files: Iterable[str] = None) -> str:
    """Checksum ``files`` (default: everything under ``directory`` except the
    manifest itself) into ``MANIFEST.sha256``."""
    if files is None:
        files = [os.path.join(root, name) for root, _, names in os.walk(directory) for name in names]
    entries = []
    for full in files:
        rel = os.path.relpath(full, directory).replace(os.sep, "/")
        if rel != MANIFEST:
            entries.append((rel, sha256_file(full)))
    entries.sort()
    path = os.path.join(directory, MANIFEST)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for rel, digest in entries:
            fh.write(f"{digest}  {rel}\n")
    return path


def verify_manifest(directory) -> list:
    """Names of files whose checksum no longer matches; empty when intact."""
    bad = []
    with open(os.path.join(directory, MANIFEST), encoding="utf-8") as fh:
        for line in fh:
            digest, rel = line.rstrip("\n").split("  ", 1)
            full = os.path.join(directory, rel)
            if not os.path.exists(full) or sha256_file(full) != digest:
                bad.append(rel)
    return bad


def triangular_rows(labels: Sequence[str], cells: dict):
    """Upper-triangular table: rows are all labels but the last, columns all
    but the first; ``cells[(i, j)]`` fills position ``i < j``."""
    header = [""] + list(labels[1:])
    rows = []
    for i, lab in enumerate(labels[:-1]):
        row = [lab]
        for j in range(1, len(labels)):
            row.append(_num(cells[(i, j)]) if j > i and (i, j) in cells else "")
        rows.append(row)
    return header, rows
