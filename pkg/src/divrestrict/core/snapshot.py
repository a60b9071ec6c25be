"""Plain binary field snapshots.

Layout: one ASCII header line

    DRFIELD v1 dim=<d> n=<n> L=<L repr> rank=<r> ncomp=<c> dtype=float64-le

terminated by a newline, followed by ``ncomp * n**d`` little-endian doubles in
C (row-major) order of ``values``, component index slowest.
"""
from __future__ import annotations

import numpy as np

from .fields import Field, field_like
from .grid import Grid

MAGIC = "DRFIELD"
VERSION = "v1"


def save_field(path, f: Field) -> None:
    g = f.grid
    head = (
        f"{MAGIC} {VERSION} dim={g.dim} n={g.n} L={g.L!r} rank={f.rank} "
        f"ncomp={f.ncomp} dtype=float64-le\n"
    )
    with open(path, "wb") as fh:
        fh.write(head.encode("ascii"))
        fh.write(np.ascontiguousarray(f.values, dtype="<f8").tobytes())


def load_field(path) -> Field:
    with open(path, "rb") as fh:
        head = fh.readline().decode("ascii").split()
        if len(head) < 2 or head[0] != MAGIC or head[1] != VERSION:
            raise ValueError(f"{path}: not a {MAGIC} {VERSION} snapshot")
        meta = dict(tok.split("=", 1) for tok in head[2:])
        if meta.get("dtype") != "float64-le":
            raise ValueError(f"{path}: unsupported dtype {meta.get('dtype')}")
        grid = Grid(int(meta["dim"]), int(meta["n"]), float(meta["L"]))
        rank = int(meta["rank"])
        data = np.frombuffer(fh.read(), dtype="<f8")
    shape = (grid.dim,) * rank + grid.shape
    if data.size != int(np.prod(shape)):
        raise ValueError(f"{path}: expected {int(np.prod(shape))} samples, found {data.size}")
    return field_like(grid, data.reshape(shape).astype(float))
