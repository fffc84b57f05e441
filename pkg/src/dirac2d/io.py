"""Persistence of counting series: gnuplot-friendly CSV and a JSON mirror."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .counting import CountingSeries
from .errors import DomainError

CSV_COLUMNS = ["lambda", "count", "operator", "L", "m", "gamma", "Gamma2", "Gamma3"]


def _model_fields(meta: dict) -> dict:
    return {k: meta.get(k, math.nan) for k in ("gamma", "Gamma2", "Gamma3")}


def _num(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def export_series(series: CountingSeries, path: str | Path, fmt: str = "csv") -> Path:
    """Write a series; model parameters gamma, Gamma2, Gamma3 are read from ``series.meta``."""
    path = Path(path)
    meta = series.meta
    model = _model_fields(meta)
    if fmt == "json":
        payload = {
            "lambda": [float(x) for x in series.lambda_grid],
            "count": [c.item() for c in series.counts],
            "meta": meta,
        }
        path.write_text(json.dumps(payload, sort_keys=True, indent=1))
        return path
    if fmt != "csv":
        raise DomainError(f"unknown format {fmt!r}")
    with path.open("w", newline="") as fh:
        fh.write("# " + json.dumps(meta, sort_keys=True) + "\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for lam, c in zip(series.lambda_grid, series.counts):
            writer.writerow([repr(float(lam)), _num(c), meta.get("operator", ""), meta.get("L", ""),
                             _num(meta.get("m", math.nan)), _num(model["gamma"]),
                             _num(model["Gamma2"]), _num(model["Gamma3"])])
    return path


def _parse_count(text: str):
    try:
        return int(text)
    except ValueError:
        return float(text)


def load_series(path: str | Path) -> CountingSeries:
    path = Path(path)
    if path.suffix == ".json":
        payload = json.loads(path.read_text())
        return CountingSeries(np.array(payload["lambda"], dtype=float), np.array(payload["count"]), payload["meta"])
    meta: dict = {}
    body = []
    with path.open() as fh:
        for line in fh:
            if line.startswith("#"):
                try:
                    meta.update(json.loads(line[1:]))
                except json.JSONDecodeError:
                    pass
            else:
                body.append(line)
    rows = list(csv.DictReader(body))
    lams = np.array([float(r["lambda"]) for r in rows], dtype=float)
    counts = np.array([_parse_count(r["count"]) for r in rows]) if rows else np.array([], dtype=np.int64)
    return CountingSeries(lams, counts, meta)
