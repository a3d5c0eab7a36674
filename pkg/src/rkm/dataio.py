"""Dataset file formats.

Binary layout: magic "RKM1", uint32 n, uint32 N, then n*N little-endian
float64 in column-major order (one sample per column), then N uint32 labels.
CSV layout: header row, one sample per row with the label last, floats
printed with 17 significant digits so values round-trip exactly.
"""

from __future__ import annotations

import csv
import struct

import numpy as np

from .errors import ValidationError
from .model import Dataset

MAGIC = b"RKM1"


def write_dataset_binary(ds: Dataset, path):
    pts = np.asarray(ds.points, dtype="<f8")
    labels = np.asarray(ds.labels, dtype="<u4")
    n, count = pts.shape
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", n, count))
        fh.write(pts.ravel(order="F").tobytes())
        fh.write(labels.tobytes())


def read_dataset_binary(path, seed: int = 0) -> Dataset:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != MAGIC:
            raise ValidationError(f"bad magic {magic!r}; not a dataset file")
        n, count = struct.unpack("<II", fh.read(8))
        pts = np.frombuffer(fh.read(8 * n * count), dtype="<f8")
        if pts.size != n * count:
            raise ValidationError("dataset file truncated")
        pts = pts.reshape((n, count), order="F")
        labels = np.frombuffer(fh.read(4 * count), dtype="<u4")
        if labels.size != count:
            raise ValidationError("dataset file truncated")
    return Dataset(pts.astype(np.float64), labels.astype(np.int64), seed)


def write_dataset_csv(ds: Dataset, path):
    n = ds.dim
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"x{i}" for i in range(n)] + ["label"])
        for col in range(ds.size):
            row = [format(v, ".17g") for v in ds.points[:, col]]
            writer.writerow(row + [int(ds.labels[col])])


def read_dataset_csv(path, seed: int = 0) -> Dataset:
    with open(path, "r", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if not header or header[-1] != "label":
            raise ValidationError("dataset CSV must end with a 'label' column")
        cols = []
        labels = []
        for row in reader:
            cols.append([float(v) for v in row[:-1]])
            labels.append(int(row[-1]))
    if not cols:
        raise ValidationError("dataset CSV has no rows")
    points = np.asarray(cols, dtype=np.float64).T
    return Dataset(points, np.asarray(labels, dtype=np.int64), seed)


def write_rows_csv(path, header, rows, digits=12):
    """Small helper for result tables: floats at `digits` significant
    figures, everything else verbatim, empty string for None."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            out = []
            for v in row:
                if v is None:
                    out.append("")
                elif isinstance(v, float):
                    out.append(format(v, f".{digits}g"))
                else:
                    out.append(v)
            writer.writerow(out)
