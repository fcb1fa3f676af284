"""Byte-reproducible chain files.

A chain file is an ``.npz`` archive written with fixed zip timestamps and a
fixed member order, so identical draws always produce identical bytes.
Manifests are JSON with sorted keys.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import zipfile
from pathlib import Path

import numpy as np

_EPOCH = (1980, 1, 1, 0, 0, 0)


def write_npz(path: str | Path, arrays: dict[str, np.ndarray]) -> Path:
    path = Path(path)
    with zipfile.ZipFile(path, "w", compression=zipfile.ZIP_DEFLATED) as zf:
        for name in sorted(arrays):
            buf = io.BytesIO()
            np.lib.format.write_array(buf, np.asarray(arrays[name]), allow_pickle=False)
            info = zipfile.ZipInfo(f"{name}.npy", date_time=_EPOCH)
            info.compress_type = zipfile.ZIP_DEFLATED
            info.external_attr = 0o644 << 16
            zf.writestr(info, buf.getvalue())
    return path


def read_npz(path: str | Path) -> dict[str, np.ndarray]:
    with np.load(path, allow_pickle=False) as f:
        return {k: f[k] for k in f.files}


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), default=_json_default)


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (tuple, set)):
        return list(o)
    raise TypeError(f"cannot serialize {type(o).__name__}")


def config_hash(config: dict) -> str:
    return hashlib.sha256(canonical_json(config).encode()).hexdigest()


def write_json(path: str | Path, obj) -> Path:
    path = Path(path)
    path.write_text(json.dumps(obj, sort_keys=True, indent=1, default=_json_default) + "\n")
    return path


def chain_arrays(result) -> dict[str, np.ndarray]:
    """Arrays stored for a Tensor VAR or baseline chain result."""
    out = {
        "N": np.array(result.N), "P": np.array(result.P),
        "H": result.H, "sv_mu": result.sv_mu, "sv_psi": result.sv_psi,
        "sv_sigma": result.sv_sigma, "h_last": result.h_last,
    }
    if hasattr(result, "B"):
        out["B"] = result.B
        out["rank_trajectory"] = result.rank_trajectory
        if result.D is not None:
            out["D"] = result.D
    else:
        out["A"] = result.A
    return out


def write_rank_trajectory(path: str | Path, ranks: np.ndarray) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["iteration", "rank"])
        w.writerows((int(m), int(r)) for m, r in ranks)
    return path
