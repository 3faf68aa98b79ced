"""Deterministic CSV / JSON / manifest writers shared by the scenario runner.

Numbers are printed with 9 significant digits ('%.9g'), headers are
mandatory, and JSON is emitted with sorted keys, so identical runs produce
byte-identical artifacts.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

FLOAT_FMT = "%.9g"


def write_csv(path, columns: list[tuple[str, np.ndarray]],
              int_columns: frozenset[str] = frozenset()) -> None:
    """Write named columns of equal length; ints as integers, floats at 9
    significant digits."""
    names = [name for name, _ in columns]
    arrays = [np.asarray(arr) for _, arr in columns]
    n = len(arrays[0])
    if any(len(a) != n for a in arrays):
        raise ValueError("columns must have equal length")
    fmts = ["%d" if name in int_columns else FLOAT_FMT for name in names]
    row_fmt = ",".join(fmts) + "\n"
    path = Path(path)
    with path.open("w", newline="") as fh:
        fh.write(",".join(names) + "\n")
        chunk = 65536
        for start in range(0, n, chunk):
            block = [a[start:start + chunk] for a in arrays]
            fh.writelines(row_fmt % row for row in zip(*block))


def read_csv(path) -> dict[str, np.ndarray]:
    """Read a CSV written by :func:`write_csv` into named float columns."""
    path = Path(path)
    with path.open() as fh:
        header = fh.readline().strip()
        if not header:
            raise ValueError(f"{path}: empty CSV")
        names = header.split(",")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    if data.size == 0:
        return {name: np.empty(0) for name in names}
    if data.shape[1] != len(names):
        raise ValueError(f"{path}: {data.shape[1]} columns but {len(names)} headers")
    return {name: data[:, i] for i, name in enumerate(names)}


def write_json(path, payload: dict) -> None:
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def read_json(path) -> dict:
    return json.loads(Path(path).read_text())


def sha256_file(path) -> str:
    digest = hashlib.sha256()
    with Path(path).open("rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            digest.update(block)
    return digest.hexdigest()
