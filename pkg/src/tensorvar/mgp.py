"""Multiplicative Gamma Prior on the CP margins.

Every margin ``beta[j][i, r]`` is ``N(0, 1 / (phi * tau_r))`` with a local
precision ``phi ~ Gamma(nu/2, nu/2)`` and a column precision
``tau_r = delta_1 * ... * delta_r``, ``delta_1 ~ Gamma(a1, 1)``,
``delta_l ~ Gamma(a2, 1)``. Gammas are shape-rate throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

HYPER_PRIOR = (5.0, 1.0)  # Gamma(shape, rate) prior on a1 and a2


@dataclass
class MgpState:
    """MGP hyperparameters for a ``(2N+P) x R`` tensor matrix.

    ``Phi`` is laid out like the tensor matrix (rows ``0..N-1`` for ``B1``,
    ``N..2N-1`` for ``B2``, the last ``P`` for ``B3``). ``tau`` is always the
    cumulative product of ``delta``.
    """

    Phi: np.ndarray
    delta: np.ndarray
    a1: float
    a2: float
    nu: float
    N: int
    P: int
    mh_step: float = 0.2
    accepted: dict = field(default_factory=lambda: {"a1": 0, "a2": 0, "tries": 0})
    hyper_prior: tuple = HYPER_PRIOR

    def __post_init__(self):
        self.Phi = np.asarray(self.Phi, dtype=float)
        self.delta = np.asarray(self.delta, dtype=float)
        if self.Phi.shape != (2 * self.N + self.P, self.delta.size):
            raise ValueError(f"Phi shape {self.Phi.shape} inconsistent with "
                             f"N={self.N}, P={self.P}, R={self.delta.size}")
        if np.any(self.Phi <= 0) or np.any(self.delta <= 0):
            raise ValueError("Phi and delta must be strictly positive")

    @property
    def R(self) -> int:
        return self.delta.size

    @property
    def tau(self) -> np.ndarray:
        return np.cumprod(self.delta)

    def prior_sd_matrix(self) -> np.ndarray:
        return 1.0 / np.sqrt(self.Phi * self.tau[None, :])

    def update(self, B: np.ndarray, rng: np.random.Generator) -> None:
        """Full MGP hyperparameter sweep: local precisions, multipliers, a1/a2."""
        update_phi(self, B, rng)
        update_delta(self, B, rng)
        update_a1_a2(self, rng)

    def copy(self) -> "MgpState":
        return self.resized(self.Phi.copy(), self.delta.copy())

    def resized(self, Phi: np.ndarray, delta: np.ndarray) -> "MgpState":
        """Same hyperparameters with new local and column precisions."""
        return MgpState(Phi, delta, self.a1, self.a2, self.nu, self.N, self.P, self.mh_step,
                        dict(self.accepted), self.hyper_prior)


def block_offset(j: int, N: int) -> int:
    if j not in (1, 2, 3):
        raise IndexError(f"axis index must be 1, 2 or 3, got {j}")
    return (j - 1) * N


def prior_sd(state: MgpState, j: int, i: int, r: int) -> float:
    """Prior standard deviation of margin ``i`` (0-based) in column ``r`` of ``B_j``."""
    rows = state.P if j == 3 else state.N
    if not 0 <= i < rows:
        raise IndexError(f"row {i} out of range for B{j} with {rows} rows")
    if not 0 <= r < state.R:
        raise IndexError(f"column {r} out of range for rank {state.R}")
    phi = state.Phi[block_offset(j, state.N) + i, r]
    return math.sqrt(1.0 / (phi * state.tau[r]))


def draw_prior(N: int, P: int, R: int, rng: np.random.Generator, *,
               a1: float = 5.0, a2: float = 5.0, nu: float = 3.0) -> MgpState:
    """Fresh MGP state from its prior with fixed ``a1``, ``a2``."""
    Phi = rng.gamma(nu / 2.0, 2.0 / nu, size=(2 * N + P, R))
    delta = np.empty(R)
    delta[0] = rng.gamma(a1, 1.0)
    if R > 1:
        delta[1:] = rng.gamma(a2, 1.0, size=R - 1)
    return MgpState(Phi, delta, a1, a2, nu, N, P)


def draw_margins(state: MgpState, rng: np.random.Generator) -> np.ndarray:
    """Tensor matrix drawn from ``N(0, 1/(phi tau))``."""
    return rng.standard_normal(state.Phi.shape) * state.prior_sd_matrix()


def update_phi(state: MgpState, B: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    B = np.asarray(B, dtype=float)
    if B.shape != state.Phi.shape:
        raise ValueError(f"tensor matrix shape {B.shape} != Phi shape {state.Phi.shape}")
    rate = 0.5 * (state.nu + state.tau[None, :] * B * B)
    state.Phi = rng.gamma((state.nu + 1.0) / 2.0, 1.0 / rate)
    return state.Phi


def update_delta(state: MgpState, B: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Sequential Gibbs draws of ``delta_1..delta_R`` using the freshest values."""
    B = np.asarray(B, dtype=float)
    rows, R = state.Phi.shape
    col_ss = np.sum(state.Phi * B * B, axis=0)
    delta = state.delta
    for k in range(R):
        tau_minus = np.cumprod(delta)[k:] / delta[k]
        shape = (state.a1 if k == 0 else state.a2) + 0.5 * rows * (R - k)
        rate = 1.0 + 0.5 * np.dot(tau_minus, col_ss[k:])
        delta[k] = rng.gamma(shape, 1.0 / rate)
    state.delta = delta
    return delta


def log_target_a1(a: float, delta1: float, prior=HYPER_PRIOR) -> float:
    sh, rt = prior
    return (sh - 1.0) * math.log(a) - rt * a + (a - 1.0) * math.log(delta1) - gammaln(a)


def log_target_a2(a: float, delta_rest: np.ndarray, prior=HYPER_PRIOR) -> float:
    sh, rt = prior
    k = delta_rest.size
    return (sh - 1.0) * math.log(a) - rt * a + (a - 1.0) * float(np.sum(np.log(delta_rest))) - k * gammaln(a)


def mh_log_scale(current: float, log_target, step: float, rng: np.random.Generator):
    """One random-walk Metropolis step on ``log(x)``; returns ``(value, accepted)``."""
    prop = current * math.exp(step * rng.standard_normal())
    log_ratio = log_target(prop) - log_target(current) + math.log(prop) - math.log(current)
    if math.log(rng.random()) < log_ratio:
        return prop, True
    return current, False


def update_a1_a2(state: MgpState, rng: np.random.Generator):
    d1 = state.delta[0]
    rest = state.delta[1:]
    hp = state.hyper_prior
    state.a1, acc1 = mh_log_scale(state.a1, lambda a: log_target_a1(a, d1, hp), state.mh_step, rng)
    state.a2, acc2 = mh_log_scale(state.a2, lambda a: log_target_a2(a, rest, hp), state.mh_step, rng)
    state.accepted["a1"] += int(acc1)
    state.accepted["a2"] += int(acc2)
    state.accepted["tries"] += 1
    return acc1, acc2
