"""File formats: sinogram and image CSV, 16-bit PGM, sweep CSVs and run manifests.

Floats are written with ``repr`` (shortest string that round-trips), so
reading a file and writing it again reproduces it byte for byte.
"""

from __future__ import annotations

import csv
import io
import json
import math
import platform
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .experiments import ExperimentRecord, SweepResult
from .transforms import Image, Sinogram, SinogramGrid

__all__ = [
    "format_float",
    "parse_float",
    "format_p",
    "write_sinogram_csv",
    "read_sinogram_csv",
    "write_image_csv",
    "read_image_csv",
    "write_pgm",
    "read_pgm",
    "write_image",
    "SWEEP_COLUMNS",
    "SLOPE_COLUMNS",
    "write_sweep_csv",
    "read_sweep_csv",
    "slopes_path",
    "write_manifest",
    "manifest_path",
    "write_rows",
]

SWEEP_COLUMNS = ("kind", "phantom", "nu", "p", "k", "L", "error", "trials", "seed", "wall_ms")
SLOPE_COLUMNS = ("kind", "phantom", "nu", "p", "slope", "intercept", "residual", "fit_from")


def format_float(x) -> str:
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(x)


def parse_float(text: str) -> float:
    return float(text)


def format_p(p) -> str:
    """Exponents print as integers when integral, 'inf' for infinity, repr otherwise."""
    p = float(p)
    if math.isinf(p):
        return "inf"
    return str(int(p)) if p.is_integer() else repr(p)


def _fmt_optional(x) -> str:
    return "" if x is None else format_float(x)


def _csv_text(rows) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    return buf.getvalue()


def write_rows(path, header, rows) -> Path:
    path = Path(path)
    path.write_text(_csv_text([list(header), *rows]), encoding="utf-8")
    return path


# --- sinograms ---------------------------------------------------------------


def write_sinogram_csv(path, sino: Sinogram) -> Path:
    """Header ``d,M,N,L``, one line with those values, then 2M+1 rows of N samples."""
    g = sino.grid
    rows = [["d", "M", "N", "L"], [format_float(g.d), str(g.M), str(g.N), format_float(g.L)]]
    rows += [[format_float(v) for v in row] for row in sino.values]
    path = Path(path)
    path.write_text(_csv_text(rows), encoding="utf-8")
    return path


def read_sinogram_csv(path) -> Sinogram:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if len(rows) < 3 or [c.strip() for c in rows[0]] != ["d", "M", "N", "L"]:
        raise ValueError(f"{path}: expected header 'd,M,N,L'")
    d, M, N, L = rows[1]
    grid = SinogramGrid(d=float(d), M=int(M), N=int(N), L=float(L))
    values = np.array([[float(v) for v in row] for row in rows[2:]], dtype=float)
    if values.shape != grid.shape:
        raise ValueError(f"{path}: data shape {values.shape} does not match grid {grid.shape}")
    return Sinogram(grid, values)


# --- images ------------------------------------------------------------------


def write_image_csv(path, img) -> Path:
    values = np.asarray(getattr(img, "values", img), dtype=float)
    path = Path(path)
    path.write_text(_csv_text([[format_float(v) for v in row] for row in values]), encoding="utf-8")
    return path


def read_image_csv(path) -> Image:
    with open(path, newline="", encoding="utf-8") as fh:
        values = np.array([[float(v) for v in row] for row in csv.reader(fh) if row], dtype=float)
    return Image(values)


def _scale_path(path: Path) -> Path:
    return path.with_name(path.name + ".scale.txt")


def write_pgm(path, img) -> Path:
    """Binary 16-bit PGM, min-max scaled; the scaling goes to ``<path>.scale.txt``.

    Pixel value v maps to round((v - min) / (max - min) * 65535); a constant
    image maps to 0.  Row 0 of the file is the top of the image (largest y).
    """
    values = np.asarray(getattr(img, "values", img), dtype=float)
    lo, hi = float(values.min()), float(values.max())
    span = hi - lo
    scaled = np.zeros_like(values) if span == 0 else (values - lo) / span * 65535.0
    data = np.flipud(np.rint(scaled)).astype(">u2")
    path = Path(path)
    header = f"P5\n{values.shape[1]} {values.shape[0]}\n65535\n".encode("ascii")
    path.write_bytes(header + data.tobytes())
    _scale_path(path).write_text(f"min={format_float(lo)}\nmax={format_float(hi)}\n", encoding="utf-8")
    return path


def read_pgm(path) -> Image:
    """Inverse of :func:`write_pgm` up to the 16-bit quantisation."""
    path = Path(path)
    raw = path.read_bytes()
    parts = raw.split(maxsplit=4)
    if parts[0] != b"P5" or int(parts[3]) != 65535:
        raise ValueError(f"{path}: not a 16-bit binary PGM")
    width, height = int(parts[1]), int(parts[2])
    data = np.frombuffer(parts[4][: 2 * width * height], dtype=">u2").reshape(height, width)
    scale = dict(line.split("=", 1) for line in _scale_path(path).read_text().split())
    lo, hi = float(scale["min"]), float(scale["max"])
    return Image(np.flipud(data.astype(float)) / 65535.0 * (hi - lo) + lo)


def write_image(path, img) -> Path:
    """CSV or PGM chosen by the file extension."""
    path = Path(path)
    if path.suffix.lower() == ".pgm":
        return write_pgm(path, img)
    return write_image_csv(path, img)


# --- sweeps ------------------------------------------------------------------


def _record_row(r: ExperimentRecord):
    return [
        r.kind, r.phantom, str(r.nu), format_p(r.p), str(r.k), format_float(r.L), format_float(r.error),
        str(r.trials), "" if r.seed is None else str(r.seed), _fmt_optional(r.wall_ms),
    ]


def slopes_path(path) -> Path:
    """results.csv -> results.slopes.csv"""
    path = Path(path)
    return path.with_name(path.stem + ".slopes.csv")


def write_sweep_csv(path, result: SweepResult, write_slopes: bool = True) -> Path:
    """Write the records and, next to them, ``<stem>.slopes.csv`` with one fit per series."""
    path = write_rows(path, SWEEP_COLUMNS, [_record_row(r) for r in result.records])
    if write_slopes:
        names = {(r.kind, r.nu, r.p): r.phantom for r in result.records}
        rows = []
        for (kind, nu, p), fit in result.slopes.items():
            fields = ["", "", ""] if fit is None else [format_float(v) for v in fit]
            rows.append([kind, names[(kind, nu, p)], str(nu), format_p(p), *fields,
                         "" if result.fit_from is None else str(result.fit_from)])
        write_rows(slopes_path(path), SLOPE_COLUMNS, rows)
    return path


def read_sweep_csv(path) -> SweepResult:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != SWEEP_COLUMNS:
            raise ValueError(f"{path}: expected columns {','.join(SWEEP_COLUMNS)}")
        records = [
            ExperimentRecord(
                kind=row["kind"], phantom=row["phantom"], nu=int(row["nu"]), p=float(row["p"]),
                k=int(row["k"]), error=float(row["error"]), trials=int(row["trials"]),
                seed=int(row["seed"]) if row["seed"] else None,
                wall_ms=float(row["wall_ms"]) if row["wall_ms"] else None,
            )
            for row in reader
        ]
    return SweepResult(records)


# --- manifests ---------------------------------------------------------------


def manifest_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".manifest.json")


def _jsonable(value):
    if isinstance(value, float) and math.isinf(value):
        return "inf"
    if isinstance(value, Path):
        return str(value)
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, np.generic):
        return value.item()
    return value


def write_manifest(output, command: str, config: dict, seeds=None) -> Path:
    """Sidecar ``<output>.manifest.json`` with the resolved configuration."""
    from . import __version__

    doc = {
        "command": command,
        "config": _jsonable(config),
        "version": __version__,
        "numpy": np.__version__,
        "python": platform.python_version(),
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "seeds": _jsonable(seeds or {}),
    }
    path = manifest_path(output)
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path
