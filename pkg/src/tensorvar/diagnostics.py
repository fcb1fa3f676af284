"""Autocorrelation, inefficiency factors and accuracy metrics for MCMC output."""

from __future__ import annotations

import csv
import logging
import math
from pathlib import Path

import numpy as np

log = logging.getLogger(__name__)


def _as_chain(chain) -> np.ndarray:
    x = np.asarray(chain, dtype=float).ravel()
    if not np.all(np.isfinite(x)):
        raise ValueError("chain contains non-finite values")
    return x


def autocorr(chain, max_lag: int | None = None) -> np.ndarray:
    """Sample autocorrelations ``rho_0..rho_max_lag`` (biased normalization).

    A constant chain has no defined autocorrelation; it is reported as 1 at
    lag 0 and 0 elsewhere with a warning.
    """
    x = _as_chain(chain)
    n = x.size
    if max_lag is None:
        max_lag = n - 1
    if not 0 <= max_lag < n:
        raise ValueError(f"max_lag must be in [0, {n - 1}], got {max_lag}")
    xc = x - x.mean()
    c0 = float(np.dot(xc, xc)) / n
    if c0 <= 0.0:
        log.warning("constant chain: autocorrelation set to the unit impulse")
        out = np.zeros(max_lag + 1)
        out[0] = 1.0
        return out
    m = 1 << (2 * n - 1).bit_length()
    f = np.fft.rfft(xc, m)
    acov = np.fft.irfft(f * np.conj(f), m)[:max_lag + 1] / n
    rho = acov / c0
    rho[0] = 1.0
    return np.clip(rho, -1.0, 1.0)


def inefficiency_factor(chain) -> float:
    """``1 + 2 sum rho_k`` truncated by Geyer's initial positive sequence.

    Pairs ``rho_{2k} + rho_{2k+1}`` are summed while positive. The result is
    floored at ``1 / log10(n)`` so that the effective sample size never
    exceeds ``n log10(n)``.
    """
    x = _as_chain(chain)
    n = x.size
    if n < 4:
        raise ValueError("need at least 4 draws")
    rho = autocorr(x)
    if np.all(rho[1:] == 0.0) and np.var(x) == 0.0:
        return 1.0
    tau = -1.0
    for k in range(0, n - 1, 2):
        pair = rho[k] + rho[k + 1]
        if pair <= 0.0:
            break
        tau += 2.0 * pair
    return max(tau, 1.0 / math.log10(n))


def ess(chain) -> float:
    x = _as_chain(chain)
    return x.size / inefficiency_factor(x)


def coeff_mse(A_hat, A_true) -> float:
    A_hat = np.asarray(A_hat, dtype=float)
    A_true = np.asarray(A_true, dtype=float)
    if A_hat.shape != A_true.shape:
        raise ValueError(f"shape mismatch: {A_hat.shape} vs {A_true.shape}")
    return float(np.mean((A_hat - A_true) ** 2))


def margin_table(B_draws: np.ndarray, N: int, P: int) -> list[dict]:
    """IF and ESS for every margin of an aligned ``(n, 2N+P, R)`` stack."""
    rows = []
    names = [("B1", i) for i in range(N)] + [("B2", i) for i in range(N)] + [("B3", p) for p in range(P)]
    for row, (block, i) in enumerate(names):
        for r in range(B_draws.shape[2]):
            chain = B_draws[:, row, r]
            f = inefficiency_factor(chain)
            rows.append({"block": block, "row": i + 1, "column": r + 1, "if": f, "ess": chain.size / f})
    return rows


def write_csv(rows: list[dict], path: str | Path, header: list[str] | None = None) -> Path:
    path = Path(path)
    if header is None:
        header = list(rows[0]) if rows else []
    with path.open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=header, lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow({k: (repr(float(v)) if isinstance(v, (float, np.floating)) else v) for k, v in row.items()})
    return path
