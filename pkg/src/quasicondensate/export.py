"""CSV/JSON writers and ensemble dumps.

Numbers are written with ``repr`` (shortest round-trip form), so files are
full double precision and independent of the locale.
"""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .ensembles import FieldEnsemble, PhononEnsemble
from .modes import SpatialGrid

SCHEMA_VERSION = "quasicondensate-results/1"


def _num(x) -> str:
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(x)


def write_rows(path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([v if isinstance(v, str) else (str(v) if isinstance(v, (int, np.integer))
                                                       else _num(v)) for v in row])
    return path


def read_rows(path) -> tuple:
    with open(path, newline="", encoding="utf-8") as fh:
        r = csv.reader(fh)
        header = next(r)
        return header, [row for row in r]


def correlation_to_csv(result, path) -> Path:
    """Long-form CSV for any CorrelationResult.

    matrix: ``z1, z2, value, stderr, value_imag``; stationary:
    ``separation, value, stderr``; npoint: ``quantity, value, stderr``.
    """
    if result.kind == "matrix":
        z = result.coords
        V = result.values
        rows = ((z[i], z[j], V[i, j].real, result.stderr[i, j], V[i, j].imag)
                for i in range(len(z)) for j in range(len(z)))
        return write_rows(path, ["z1", "z2", "value", "stderr", "value_imag"], rows)
    if result.kind == "stationary":
        return write_rows(path, ["separation", "value", "stderr"],
                          zip(result.coords, result.values, result.stderr))
    if result.kind == "npoint":
        names = ["G", "G_connected", "G_disconnected"]
        return write_rows(path, ["quantity", "value", "stderr"],
                          zip(names, result.values, result.stderr))
    raise ValueError(f"unknown correlation kind {result.kind!r}")


def histogram_to_csv(hist, path) -> Path:
    return write_rows(path, ["bin_low", "bin_high", "weight"],
                      zip(hist.edges[:-1], hist.edges[1:], hist.weights))


def profile_to_csv(profile, path) -> Path:
    return write_rows(path, ["z", "rho"], zip(profile.z, profile.density))


def ripple_to_csv(curve, path) -> Path:
    return write_rows(path, ["x", "value", "stderr"], zip(curve.x, curve.g2, curve.stderr))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else str(x)
    return obj


def write_json(data: dict, path) -> Path:
    """JSON summary stamped with the schema version."""
    path = Path(path)
    payload = {"schema_version": SCHEMA_VERSION, **_jsonable(data)}
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def save_ensemble(ens, path) -> Path:
    """``.npz`` dump with a JSON header (seed, sampler, basis/grid)."""
    path = Path(path)
    if isinstance(ens, PhononEnsemble):
        header = {"type": "phonon", **ens.describe()}
        arrays = {"amplitudes": ens.amplitudes}
    elif isinstance(ens, FieldEnsemble):
        header = {"type": "field", "grid": {"length": ens.grid.length, "n": ens.grid.n}, **ens.meta}
        arrays = {"phi": ens.phi}
        if ens.nu is not None:
            arrays["nu"] = ens.nu
    else:
        raise TypeError("expected a PhononEnsemble or FieldEnsemble")
    np.savez(path, header=np.array(json.dumps(_jsonable(header), sort_keys=True)), **arrays)
    return path


def load_ensemble(path, basis=None):
    """Inverse of ``save_ensemble``; phonon ensembles need the matching ``basis``."""
    with np.load(path, allow_pickle=False) as data:
        header = json.loads(str(data["header"]))
        if header["type"] == "field":
            g = header.pop("grid")
            header.pop("type")
            nu = data["nu"] if "nu" in data else None
            return FieldEnsemble(data["phi"], SpatialGrid(g["length"], g["n"]), nu, header)
        if basis is None:
            raise ValueError("a phonon ensemble needs its ModeBasis to be reloaded")
        if basis.describe()["omegas"] != header["basis"]["omegas"]:
            raise ValueError("basis does not match the stored ensemble")
        return PhononEnsemble(data["amplitudes"], basis, header["sampler"], header["seed"],
                              header["time"], header["sector"])
