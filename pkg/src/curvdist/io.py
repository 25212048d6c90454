"""Flat-file formats: landmark datasets, distance matrices, curve tables.

Dataset files are plain text::

    # curvdist landmark dataset
    d 2
    m 4
    n 3
    sigma 1.0
    data
    q0 0.0 0.0 1.0 0.0 0.8 1.0 0.2 1.0
    ...

Header lines are ``key value`` pairs; optional keys such as
``template`` (d*m coordinates) may follow the required ones. Each record after
``data`` is a label followed by the d*m coordinates, landmark-major.
Matrices and tables are CSV with a single ``#`` header line.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .pipeline import Dataset, DistanceMatrix

DATASET_MAGIC = "# curvdist landmark dataset"


def fmt(x) -> str:
    return repr(float(x))


def write_dataset(path, dataset: Dataset, d: int, m: int, sigma: float = 1.0, template=None):
    labels = dataset.labels or [f"q{i}" for i in range(dataset.n)]
    lines = [DATASET_MAGIC, f"d {d}", f"m {m}", f"n {dataset.n}", f"sigma {fmt(sigma)}"]
    if template is not None:
        lines.append("template " + " ".join(fmt(x) for x in template))
    lines.append("data")
    for label, row in zip(labels, dataset.points):
        lines.append(label + " " + " ".join(fmt(x) for x in row))
    Path(path).write_text("\n".join(lines) + "\n")


def read_dataset(path):
    """Returns ``(dataset, header)``; ``header`` holds d, m, n, sigma and optional template."""
    lines = [ln.strip() for ln in Path(path).read_text().splitlines()]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    header: dict = {}
    it = iter(lines)
    for ln in it:
        if ln == "data":
            break
        key, _, value = ln.partition(" ")
        header[key] = value
    else:
        raise ValueError(f"{path}: missing 'data' section")
    for key in ("d", "m", "n"):
        if key not in header:
            raise ValueError(f"{path}: missing header field {key!r}")
        header[key] = int(header[key])
    header["sigma"] = float(header.get("sigma", 1.0))
    if "template" in header:
        header["template"] = np.array([float(x) for x in header["template"].split()])
    labels, rows = [], []
    for ln in it:
        label, *coords = ln.split()
        labels.append(label)
        rows.append([float(x) for x in coords])
    points = np.array(rows, dtype=float)
    if points.shape != (header["n"], header["d"] * header["m"]):
        raise ValueError(
            f"{path}: expected {header['n']} records of {header['d'] * header['m']} coordinates"
        )
    return Dataset(points, labels), header


def write_matrix(path, values, header: str):
    rows = [",".join(fmt(x) for x in row) for row in np.atleast_2d(values)]
    Path(path).write_text("# " + header + "\n" + "\n".join(rows) + "\n")


def write_distance_matrix(path, dm: DistanceMatrix):
    write_matrix(path, dm.values, f"method={dm.method},n={dm.n},bvp_count={dm.bvp_count}")


def read_distance_matrix(path) -> DistanceMatrix:
    text = Path(path).read_text().splitlines()
    meta = dict(kv.split("=", 1) for kv in text[0].lstrip("# ").split(","))
    values = np.array([[float(x) for x in ln.split(",")] for ln in text[1:] if ln.strip()])
    return DistanceMatrix(values, meta.get("method", "unknown"), int(meta.get("bvp_count", 0)))


def write_table(path, columns: list[str], rows):
    lines = ["# " + ",".join(columns)]
    lines += [",".join(fmt(x) for x in row) for row in rows]
    Path(path).write_text("\n".join(lines) + "\n")


def read_table(path):
    text = Path(path).read_text().splitlines()
    columns = text[0].lstrip("# ").split(",")
    data = np.array([[float(x) for x in ln.split(",")] for ln in text[1:] if ln.strip()])
    return columns, data


def write_json(path, payload):
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
