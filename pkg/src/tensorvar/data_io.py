"""Quarterly macro panels: transformation codes, standardization, ordering.

Input is a wide CSV whose first column holds quarterly dates (``YYYY-Qn``)
and whose header names the series, plus a spec CSV with columns
``name, tcode, group, category``. Supported transformation codes:

2  first difference
5  first difference of logs
6  second difference of logs
"""

from __future__ import annotations

import csv
import json
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError

TCODES = {2: 1, 5: 1, 6: 2}  # code -> differencing order
GROUPS = ("slow", "policy", "fast")
POLICY_NAME = "FEDFUNDS"
_DATE = re.compile(r"^\s*(\d{4})-?Q([1-4])\s*$", re.IGNORECASE)


@dataclass(frozen=True)
class SeriesSpec:
    name: str
    tcode: int
    group: str
    category: int

    def __post_init__(self):
        if self.tcode not in TCODES:
            raise DataError(f"series {self.name}: transformation code {self.tcode} is not supported (use 2, 5 or 6)")
        if self.group not in GROUPS:
            raise DataError(f"series {self.name}: group must be one of {GROUPS}, got {self.group!r}")
        if not 1 <= self.category <= 8:
            raise DataError(f"series {self.name}: category must be in 1..8")


@dataclass(frozen=True)
class Scaler:
    names: tuple
    mean: np.ndarray
    std: np.ndarray

    def inverse(self, Z: np.ndarray) -> np.ndarray:
        return np.asarray(Z) * self.std + self.mean

    def to_json(self) -> str:
        return json.dumps({"names": list(self.names), "mean": self.mean.tolist(), "std": self.std.tolist()},
                          indent=1, sort_keys=True)


def transform(values, tcode: int) -> np.ndarray:
    """Apply a transformation code; the result is shorter by the differencing order."""
    x = np.asarray(values, dtype=float)
    if tcode not in TCODES:
        raise DataError(f"transformation code {tcode} is not supported (use 2, 5 or 6)")
    if tcode in (5, 6):
        if np.any(x <= 0):
            raise DataError(f"code {tcode} takes logs and needs strictly positive values")
        x = np.log(x)
    return np.diff(x, n=TCODES[tcode])


def parse_quarter(text: str) -> tuple[int, int]:
    m = _DATE.match(text)
    if not m:
        raise DataError(f"unrecognized quarterly date {text!r}; expected YYYY-Qn")
    return int(m.group(1)), int(m.group(2))


def read_specs(path: str | Path) -> list[SeriesSpec]:
    specs = []
    with Path(path).open(newline="") as fh:
        for k, row in enumerate(csv.DictReader(fh), start=2):
            try:
                specs.append(SeriesSpec(row["name"].strip(), int(row["tcode"]), row["group"].strip().lower(),
                                        int(row["category"])))
            except (KeyError, ValueError) as exc:
                raise DataError(f"{path}:{k}: malformed spec row ({exc})") from exc
    policy = [s for s in specs if s.group == "policy"]
    if len(policy) != 1:
        raise DataError(f"exactly one policy series is required, found {len(policy)}")
    return specs


def read_panel(path: str | Path):
    """Returns ``(dates, names, values)`` from a wide quarterly CSV."""
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    if len(rows) < 2:
        raise DataError(f"{path}: no data rows")
    names = [h.strip() for h in rows[0][1:]]
    dates, values = [], []
    for k, row in enumerate(rows[1:], start=2):
        if not row or not row[0].strip():
            continue
        dates.append(parse_quarter(row[0]))
        try:
            values.append([float(v) if v.strip() else np.nan for v in row[1:]])
        except ValueError as exc:
            raise DataError(f"{path}:{k}: non-numeric value ({exc})") from exc
    arr = np.array(values, dtype=float)
    if arr.shape[1] != len(names):
        raise DataError(f"{path}: ragged rows")
    return dates, names, arr


def transform_panel(values: np.ndarray, names: list[str], specs: list[SeriesSpec]):
    """Transform every spec'd series and trim all to a common length."""
    by_name = {n: i for i, n in enumerate(names)}
    max_order = max(TCODES[s.tcode] for s in specs)
    cols = []
    for s in specs:
        if s.name not in by_name:
            raise DataError(f"series {s.name} is missing from the panel")
        tx = transform(values[:, by_name[s.name]], s.tcode)
        cols.append(tx[max_order - TCODES[s.tcode]:])
    out = np.column_stack(cols)
    if np.any(~np.isfinite(out)):
        raise DataError("transformed panel contains missing or non-finite values")
    return out, max_order


def order_columns(specs: list[SeriesSpec]) -> list[int]:
    """Column order: slow block, the policy rate, then the fast block."""
    return ([i for i, s in enumerate(specs) if s.group == "slow"]
            + [i for i, s in enumerate(specs) if s.group == "policy"]
            + [i for i, s in enumerate(specs) if s.group == "fast"])


def standardize_and_order(panel: np.ndarray, specs: list[SeriesSpec]):
    """Center, scale and reorder columns; returns ``(panel, scaler, ordered specs)``."""
    panel = np.asarray(panel, dtype=float)
    order = order_columns(specs)
    panel = panel[:, order]
    specs = [specs[i] for i in order]
    mean = panel.mean(axis=0)
    std = panel.std(axis=0)
    bad = [specs[i].name for i in np.flatnonzero(std == 0)]
    if bad:
        raise DataError(f"zero-variance series: {', '.join(bad)}")
    scaler = Scaler(tuple(s.name for s in specs), mean, std)
    return (panel - mean) / std, scaler, specs


def load_dataset(panel_path: str | Path, spec_path: str | Path):
    """Read, transform, standardize and order a panel; returns ``(Z, dates, scaler, specs)``."""
    dates, names, values = read_panel(panel_path)
    specs = read_specs(spec_path)
    tx, drop = transform_panel(values, names, specs)
    Z, scaler, specs = standardize_and_order(tx, specs)
    return Z, dates[drop:], scaler, specs


def write_standardized(path: str | Path, Z: np.ndarray, dates, scaler: Scaler) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["date", *scaler.names])
        for (y, q), row in zip(dates, Z, strict=True):
            w.writerow([f"{y}-Q{q}", *(repr(float(v)) for v in row)])
    path.with_suffix(".scaler.json").write_text(scaler.to_json())
