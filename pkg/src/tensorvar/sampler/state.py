"""Mutable containers for one MCMC chain."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from ..priors import NormalGammaState
from ..tensor import CpTensor3, lag_design, lag_matrices


@dataclass(frozen=True)
class TvarData:
    """Targets and lagged regressors for a VAR(P).

    ``y`` is ``(T, N)``, ``x`` is ``(T, N*P)`` with ``x[t] = (y_{t-1}', ..., y_{t-P}')'``
    and ``X`` holds the same values as ``(T, N, P)`` lag matrices.
    """

    y: np.ndarray
    x: np.ndarray
    X: np.ndarray
    P: int

    @classmethod
    def from_panel(cls, Y: np.ndarray, P: int) -> "TvarData":
        y, x = lag_design(Y, P)
        return cls(y, x, lag_matrices(x, y.shape[1], P), P)

    @classmethod
    def empty(cls, N: int, P: int) -> "TvarData":
        return cls(np.zeros((0, N)), np.zeros((0, N * P)), np.zeros((0, N, P)), P)

    @property
    def T(self) -> int:
        return self.y.shape[0]

    def panel(self) -> np.ndarray:
        """The original ``(T + P, N)`` panel."""
        if self.T == 0:
            return np.zeros((0, self.N))
        head = self.x[0].reshape(self.P, self.N)[::-1]
        return np.vstack([head, self.y])

    @property
    def N(self) -> int:
        return self.y.shape[1]


@dataclass
class VolatilityState:
    """Per-series AR(1) log-variance ``h_t = mu + psi (h_{t-1} - mu) + sigma eta_t``.

    ``log_s`` is ``(T, N)``; ``h0`` is the pre-sample state.
    """

    mu: np.ndarray
    psi: np.ndarray
    sigma: np.ndarray
    log_s: np.ndarray
    h0: np.ndarray

    def __post_init__(self):
        self.mu = np.asarray(self.mu, dtype=float).copy()
        self.psi = np.asarray(self.psi, dtype=float).copy()
        self.sigma = np.asarray(self.sigma, dtype=float).copy()
        self.log_s = np.asarray(self.log_s, dtype=float).copy()
        self.h0 = np.asarray(self.h0, dtype=float).copy()
        if np.any(np.abs(self.psi) >= 1) or np.any(self.sigma <= 0):
            raise ValueError("volatility state needs |psi| < 1 and sigma > 0")

    @classmethod
    def initial(cls, T: int, N: int, level: np.ndarray | float = 0.0) -> "VolatilityState":
        mu = np.broadcast_to(np.asarray(level, dtype=float), (N,)).copy()
        return cls(mu, np.full(N, 0.5), np.full(N, 0.3), np.tile(mu, (T, 1)), mu.copy())

    def h_path(self) -> np.ndarray:
        return np.vstack([self.h0[None, :], self.log_s])

    def copy(self) -> "VolatilityState":
        return VolatilityState(self.mu, self.psi, self.sigma, self.log_s, self.h0)


class NormalPrior:
    """Fixed ``N(0, sd^2)`` prior on every margin."""

    def __init__(self, N: int, P: int, R: int, sd: float = 1.0):
        self.N, self.P, self.sd = N, P, float(sd)
        self._R = R

    @property
    def R(self) -> int:
        return self._R

    def prior_sd_matrix(self) -> np.ndarray:
        return np.full((2 * self.N + self.P, self._R), self.sd)

    def update(self, B, rng) -> None:
        return None


@dataclass
class ModelState:
    """Everything one chain carries between sweeps.

    ``D`` holds own-lag coefficients as ``(N, P)``; entry ``(i, p)`` multiplies
    ``y_{t-p-1, i}`` in equation ``i``. ``None`` for the plain Tensor VAR.
    """

    cp: CpTensor3
    H: np.ndarray
    vol: VolatilityState
    prior: Any
    ng_H: NormalGammaState
    D: np.ndarray | None = None
    ng_D: NormalGammaState | None = None
    sweep: int = 0
    skipped_moves: int = 0
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        H = np.asarray(self.H, dtype=float)
        N = H.shape[0]
        if H.shape != (N, N) or not np.allclose(np.diag(H), 1.0) or np.any(np.triu(H, 1) != 0):
            raise ValueError("H must be unit lower triangular")
        self.H = H
        if self.D is not None:
            self.D = np.asarray(self.D, dtype=float)
            if self.D.shape != (self.cp.N, self.cp.P):
                raise ValueError(f"own-lag matrix must be {(self.cp.N, self.cp.P)}")

    @property
    def N(self) -> int:
        return self.cp.N

    @property
    def R(self) -> int:
        return self.cp.R


def own_lag_fit(D: np.ndarray | None, X: np.ndarray) -> np.ndarray:
    """``D x_t`` for every t, shape ``(T, N)``."""
    if D is None:
        return np.zeros(X.shape[:2])
    return np.einsum("tip,ip->ti", X, D)


def h_lower_indices(N: int):
    return np.tril_indices(N, -1)
