"""Synthetic Tensor VAR(3) datasets with known CP coefficients."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy import linalg

from .errors import ConfigError, ScenarioInfeasible
from .tensor import CpTensor3, coefficient_matrix

# Half-widths of the uniform margin distributions: B1, B2, then B3 rows 1-3.
MARGIN_BOUNDS = {
    (10, 3): {"B1": 1.0, "B2": 1.0, "B3": (1.0, 0.5, 0.1)},
    (20, 5): {"B1": 1.0, "B2": 1.0, "B3": (1.0, 0.2, 0.1)},
    (50, 10): {"B1": 1.0, "B2": 0.6, "B3": (0.6, 0.2, 0.1)},
}
WARM_UP = 100
MAX_TRIES = 1000


@dataclass(frozen=True)
class Scenario:
    N: int = 10
    R_true: int = 3
    P: int = 3
    T: int = 300
    seed: int = 0
    margin_ranges: dict = field(default=None)

    def __post_init__(self):
        if self.margin_ranges is None:
            object.__setattr__(self, "margin_ranges", default_bounds(self.N, self.R_true, self.P))
        if len(self.margin_ranges["B3"]) != self.P:
            raise ConfigError("B3 bounds need one entry per lag")
        if self.T <= self.P:
            raise ConfigError("T must exceed P")


def default_bounds(N: int, R: int, P: int) -> dict:
    """Tabulated bounds for the three reference scenarios, else the (10, 3) column.

    Lags beyond the third reuse the narrowest bound.
    """
    b = MARGIN_BOUNDS.get((N, R), MARGIN_BOUNDS[(10, 3)])
    rows = tuple(b["B3"][min(p, 2)] for p in range(P))
    return {"B1": b["B1"], "B2": b["B2"], "B3": rows}


def companion(A: np.ndarray) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    N, NP = A.shape
    F = np.zeros((NP, NP))
    F[:N] = A
    F[N:, :NP - N] = np.eye(NP - N)
    return F


def spectral_radius(A: np.ndarray) -> float:
    return float(np.max(np.abs(np.linalg.eigvals(companion(A)))))


def stationarity_check(A: np.ndarray) -> bool:
    return spectral_radius(A) < 1.0 - 1e-6


def stationary_covariance(A: np.ndarray, Sigma: np.ndarray | None = None) -> np.ndarray:
    """Unconditional covariance of ``y_t`` from the discrete Lyapunov equation."""
    F = companion(A)
    N = A.shape[0]
    Q = np.zeros_like(F)
    Q[:N, :N] = np.eye(N) if Sigma is None else Sigma
    return linalg.solve_discrete_lyapunov(F, Q)[:N, :N]


def draw_margins(s: Scenario, rng: np.random.Generator) -> CpTensor3:
    b = s.margin_ranges
    R = s.R_true
    B1 = rng.uniform(-b["B1"], b["B1"], size=(s.N, R))
    B2 = rng.uniform(-b["B2"], b["B2"], size=(s.N, R))
    B3 = np.vstack([rng.uniform(-w, w, size=R) for w in b["B3"]])
    return CpTensor3(B1, B2, B3)


def simulate_var(A: np.ndarray, T: int, rng: np.random.Generator, warm_up: int = WARM_UP) -> np.ndarray:
    """``T`` observations of a zero-mean Gaussian VAR with identity error covariance."""
    N, NP = A.shape
    P = NP // N
    Y = np.zeros((T + warm_up + P, N))
    eps = rng.standard_normal(Y.shape)
    for t in range(P, Y.shape[0]):
        x = Y[t - P:t][::-1].ravel()
        Y[t] = A @ x + eps[t]
    return Y[warm_up + P:]


def simulate_dataset(s: Scenario, rng: np.random.Generator | None = None):
    """Returns ``(data, truth)`` with ``data`` of shape ``(T, N)``."""
    if rng is None:
        rng = np.random.default_rng(s.seed)
    for _ in range(MAX_TRIES):
        truth = draw_margins(s, rng)
        A = coefficient_matrix(truth)
        if stationarity_check(A):
            return simulate_var(A, s.T, rng), truth
    raise ScenarioInfeasible(f"no stationary draw in {MAX_TRIES} attempts for scenario {s}")


def dataset_seeds(base_seed: int, count: int) -> list[int]:
    ss = np.random.SeedSequence(base_seed)
    return [int(c.generate_state(1)[0]) for c in ss.spawn(count)]


def write_dataset(data: np.ndarray, truth: CpTensor3, scenario: Scenario, directory: Path, name: str,
                  extra: dict | None = None):
    directory = Path(directory)
    data_path = directory / f"{name}.csv"
    header = ",".join(f"y{i + 1}" for i in range(data.shape[1]))
    np.savetxt(data_path, data, delimiter=",", header=header, comments="", fmt="%.17g")
    meta = {
        "scenario": {k: v for k, v in asdict(scenario).items()},
        "B1": truth.B1.tolist(), "B2": truth.B2.tolist(), "B3": truth.B3.tolist(),
        "A": coefficient_matrix(truth).tolist(),
    }
    if extra:
        meta.update(extra)
    truth_path = directory / f"{name}_truth.json"
    truth_path.write_text(json.dumps(meta, sort_keys=True, indent=1))
    return data_path, truth_path


def read_truth(path: str | Path) -> CpTensor3:
    meta = json.loads(Path(path).read_text())
    return CpTensor3(np.array(meta["B1"]), np.array(meta["B2"]), np.array(meta["B3"]))
