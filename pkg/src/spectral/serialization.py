# src/spectral/serialization.py

import json
import numpy as np

from src.spectral.core import SpectralField, TorusGrid
from src.utils.errors import StructuralError

FORMAT_TAG = "parapde-field/1"


def _centered_modes(grid):
    """Mode tuples in row-major order over the centered lattice -band..band."""
    ks = np.arange(-grid.band, grid.band + 1)
    if grid.dim == 1:
        return [(int(k),) for k in ks]
    return [(int(a), int(b)) for a in ks for b in ks]


def field_to_records(field):
    """List of [k..., re, im] rows for a single (unbatched) field."""
    if field.batch_shape:
        raise StructuralError("Only unbatched fields can be serialized")
    rows = []
    for k in _centered_modes(field.grid):
        c = field.coeffs[field.grid.index_of(k)]
        rows.append([*k, float(c.real), float(c.imag)])
    return rows


def field_to_json(field):
    """
    Serialize a field as JSON.

    Layout: {"format", "dim", "modes_per_axis", "real", "modes": [[k..., re, im], ...]}
    with modes row-major over k_i = -band..band.
    """
    payload = {
        "format": FORMAT_TAG,
        "dim": field.grid.dim,
        "modes_per_axis": field.grid.modes_per_axis,
        "real": field.real_flag,
        "modes": field_to_records(field),
    }
    return json.dumps(payload)


def field_from_json(text):
    payload = json.loads(text)
    if payload.get("format") != FORMAT_TAG:
        raise StructuralError(f"Unknown field format {payload.get('format')!r}")
    grid = TorusGrid(int(payload["dim"]), int(payload["modes_per_axis"]))
    coeffs = np.zeros(grid.shape, dtype=np.complex128)
    for row in payload["modes"]:
        k = tuple(int(v) for v in row[:grid.dim])
        coeffs[grid.index_of(k)] = complex(row[grid.dim], row[grid.dim + 1])
    return SpectralField(grid, coeffs, bool(payload["real"]))


def replica_rows(field, replica_ids=None):
    """
    Flatten a replica-batched 1d/2d field into (replica, k, re, im) rows for CSV streaming.
    """
    if len(field.batch_shape) != 1:
        raise StructuralError("Expected exactly one leading replica axis")
    ids = range(field.batch_shape[0]) if replica_ids is None else replica_ids
    modes = _centered_modes(field.grid)
    rows = []
    for r, rid in enumerate(ids):
        single = field[r]
        for k in modes:
            c = single.coeffs[field.grid.index_of(k)]
            label = k[0] if field.grid.dim == 1 else f"{k[0]}:{k[1]}"
            rows.append((int(rid), label, float(c.real), float(c.imag)))
    return rows
