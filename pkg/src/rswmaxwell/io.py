"""File formats: the binary field container, CSV slices and JSON-lines records.

Binary container layout (all integers little-endian)::

    offset  size  content
    0       8     magic b"RSWMAX01"
    8       4     uint32 header length H
    12      H     UTF-8 JSON header
    12+H    ...   arrays, back to back, in header order

The header holds ``kind`` ("medium" or "state"), ``shape`` [nx, ny, nz],
``lengths`` [Lx, Ly, Lz], ``unit_mode``, and ``arrays``: a list of
``{"name", "dtype", "components"}``.  ``dtype`` is ``"<f8"`` (float64) or
``"<c16"`` (complex128 stored as interleaved re, im float64 pairs).  Each
component is ``nx*ny*nz`` values in x-fastest order (index ``i + nx*(j +
ny*k)``).  Media store ``eps`` then ``mu``; states store one complex array
``state`` plus ``representation`` (em, F, psi or phi) and ``t``.
"""

from __future__ import annotations

import csv
import json
import struct
from pathlib import Path

import numpy as np

from .grid import Grid
from .medium import MediumSpec

MAGIC = b"RSWMAX01"
REPRESENTATIONS = ("em", "F", "psi", "phi")


class FormatError(ValueError):
    pass


def _pack(header: dict, arrays) -> bytes:
    head = json.dumps(header, sort_keys=True).encode("utf-8")
    parts = [MAGIC, struct.pack("<I", len(head)), head]
    for a, spec in zip(arrays, header["arrays"]):
        a = np.asarray(a, dtype=np.dtype(spec["dtype"]))
        for comp in a.reshape((-1,) + a.shape[-3:]):
            parts.append(np.ravel(comp, order="F").tobytes())
    return b"".join(parts)


def _unpack(data: bytes):
    if data[:8] != MAGIC:
        raise FormatError("not a field container (bad magic bytes)")
    (hlen,) = struct.unpack("<I", data[8:12])
    header = json.loads(data[12:12 + hlen].decode("utf-8"))
    shape = tuple(header["shape"])
    npts = int(np.prod(shape))
    pos = 12 + hlen
    arrays = {}
    for spec in header["arrays"]:
        dt = np.dtype(spec["dtype"])
        ncomp = int(spec["components"])
        nbytes = ncomp * npts * dt.itemsize
        if pos + nbytes > len(data):
            raise FormatError(f"container truncated while reading {spec['name']!r}")
        flat = np.frombuffer(data[pos:pos + nbytes], dtype=dt)
        comps = [flat[c * npts:(c + 1) * npts].reshape(shape, order="F") for c in range(ncomp)]
        arrays[spec["name"]] = np.array(comps[0] if spec.get("scalar") else np.stack(comps))
        pos += nbytes
    if pos != len(data):
        raise FormatError(f"{len(data) - pos} trailing bytes after the last array")
    return header, arrays


def _grid_header(grid: Grid, unit_mode: str) -> dict:
    return {"shape": list(grid.shape), "lengths": list(grid.lengths), "unit_mode": unit_mode}


def write_medium(path, eps, mu, grid: Grid, unit_mode: str = "natural"):
    grid.check(eps)
    grid.check(mu)
    header = dict(_grid_header(grid, unit_mode), kind="medium", arrays=[
        {"name": "eps", "dtype": "<f8", "components": 1, "scalar": True},
        {"name": "mu", "dtype": "<f8", "components": 1, "scalar": True},
    ])
    Path(path).write_bytes(_pack(header, [eps, mu]))


def read_medium(path):
    """Load a sampled medium; returns ``(MediumSpec, Grid)``."""
    header, arrays = _unpack(Path(path).read_bytes())
    if header.get("kind") != "medium":
        raise FormatError(f"{path} holds a {header.get('kind')!r}, not a medium")
    grid = Grid(tuple(header["shape"]), tuple(header["lengths"]))
    return MediumSpec.sampled(arrays["eps"], arrays["mu"], grid, header["unit_mode"]), grid


def write_state(path, state, grid: Grid, representation: str, t: float = 0.0, unit_mode: str = "natural"):
    if representation not in REPRESENTATIONS:
        raise FormatError(f"representation must be one of {REPRESENTATIONS}")
    state = np.asarray(state, dtype=complex)
    grid.check(state)
    header = dict(_grid_header(grid, unit_mode), kind="state", representation=representation, t=float(t),
                  arrays=[{"name": "state", "dtype": "<c16", "components": int(state.shape[0])}])
    Path(path).write_bytes(_pack(header, [state]))


def read_state(path):
    """Returns ``(state, grid, meta)`` where ``meta`` has representation, t and unit_mode."""
    header, arrays = _unpack(Path(path).read_bytes())
    if header.get("kind") != "state":
        raise FormatError(f"{path} holds a {header.get('kind')!r}, not a state")
    grid = Grid(tuple(header["shape"]), tuple(header["lengths"]))
    meta = {k: header[k] for k in ("representation", "t", "unit_mode")}
    return arrays["state"], grid, meta


def write_slice_csv(path, state, grid: Grid, y_index: int = 0):
    """The x-z plane at ``y_index`` as rows ``x,z,component,re,im``."""
    state = np.asarray(state)
    x = np.arange(grid.shape[0]) * grid.spacing[0]
    z = np.arange(grid.shape[2]) * grid.spacing[2]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "z", "component", "re", "im"])
        for c in range(state.shape[0]):
            plane = state[c, :, y_index, :]
            for i in range(grid.shape[0]):
                for k in range(grid.shape[2]):
                    v = plane[i, k]
                    w.writerow([repr(float(x[i])), repr(float(z[k])), c, repr(float(v.real)), repr(float(v.imag))])


def write_jsonl(path, records):
    with open(path, "w") as fh:
        for r in records:
            fh.write(json.dumps(r, sort_keys=True) + "\n")


def read_jsonl(path):
    with open(path) as fh:
        return [json.loads(line) for line in fh if line.strip()]
