"""Unrestricted Bayesian VARs used as forecasting competitors.

All share the triangular error factorization and stochastic volatility of
the Tensor VAR sampler; they differ only in the coefficient prior:

``flat``        ``N(0, 10)`` on every coefficient
``minnesota``   hierarchical Minnesota with ``lambda1``, ``lambda2`` learned
``ssvs``        spike-and-slab mixture with inclusion indicators
``ng``          normal-gamma global-local shrinkage
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .errors import ConfigError
from .mgp import mh_log_scale
from .priors import NormalGammaState, ng_update
from .sampler.blocks import draw_H, draw_rows
from .sampler.state import TvarData, VolatilityState
from .sampler.sv import draw_sv

KINDS = ("flat", "minnesota", "ssvs", "ng")
FLAT_VARIANCE = 10.0
SSVS_SPIKE = 1e-4
SSVS_SLAB = 4.0


def ar_residual_variance(Y: np.ndarray, order: int = 5) -> np.ndarray:
    """OLS residual variance of an AR(``order``) with intercept, per column."""
    Y = np.asarray(Y, dtype=float)
    T, N = Y.shape
    if T <= 2 * order + 1:
        raise ValueError(f"need more than {2 * order + 1} observations for an AR({order}) fit")
    out = np.empty(N)
    for i in range(N):
        y = Y[order:, i]
        X = np.column_stack([np.ones(T - order)] + [Y[order - k - 1:T - k - 1, i] for k in range(order)])
        beta, *_ = np.linalg.lstsq(X, y, rcond=None)
        e = y - X @ beta
        dof = max(y.size - X.shape[1], 1)
        out[i] = float(e @ e) / dof
    return np.maximum(out, 1e-12)


def minnesota_variances(lambda1: float, lambda2: float, sigma_hat: np.ndarray, P: int) -> np.ndarray:
    """Prior variances laid out like the ``N x NP`` coefficient matrix."""
    s = np.asarray(sigma_hat, dtype=float)
    N = s.size
    ratio = s[:, None] / s[None, :]
    own = np.eye(N, dtype=bool)
    out = np.empty((N, N * P))
    for p in range(1, P + 1):
        block = np.where(own, lambda1 ** 2 / p ** 2, lambda1 ** 2 * lambda2 * ratio / p ** 2)
        out[:, (p - 1) * N:p * N] = block
    return out


def ssvs_inclusion_prob(a, spike: float = SSVS_SPIKE, slab: float = SSVS_SLAB, prior: float = 0.5):
    """``P(gamma = 1 | a)`` for the two-component normal mixture prior."""
    a = np.asarray(a, dtype=float)
    l1 = math.log(prior) - 0.5 * math.log(2 * math.pi * slab) - 0.5 * a * a / slab
    l0 = math.log1p(-prior) - 0.5 * math.log(2 * math.pi * spike) - 0.5 * a * a / spike
    return np.exp(l1 - np.logaddexp(l0, l1))


@dataclass
class MinnesotaState:
    lambda1: float = 0.2
    lambda2: float = 0.5
    sigma_hat: np.ndarray | None = None
    shape: float = 0.01
    rate: float = 0.01
    mh_step: float = 0.2
    accepted: int = 0


@dataclass
class SsvsState:
    gamma: np.ndarray
    spike: float = SSVS_SPIKE
    slab: float = SSVS_SLAB
    prior_inclusion: float = 0.5


@dataclass
class StdVarState:
    A: np.ndarray
    prior_kind: str
    prior_state: Any
    H: np.ndarray
    vol: VolatilityState
    ng_H: NormalGammaState
    sweep: int = 0

    def prior_variances(self) -> np.ndarray:
        N, K = self.A.shape
        if self.prior_kind == "flat":
            return np.full((N, K), FLAT_VARIANCE)
        if self.prior_kind == "minnesota":
            s = self.prior_state
            return minnesota_variances(s.lambda1, s.lambda2, s.sigma_hat, K // N)
        if self.prior_kind == "ssvs":
            s = self.prior_state
            return np.where(s.gamma, s.slab, s.spike)
        return self.prior_state.variances().reshape(N, K)


def init_std_var(data: TvarData, kind: str, rng: np.random.Generator) -> StdVarState:
    if kind not in KINDS:
        raise ConfigError(f"unknown baseline prior {kind!r}; expected one of {KINDS}")
    N, P, T = data.N, data.P, data.T
    K = N * P
    if kind == "flat":
        ps = None
    elif kind == "minnesota":
        Y = data.panel()
        sig = ar_residual_variance(Y) if Y.shape[0] > 12 else np.ones(N)
        ps = MinnesotaState(sigma_hat=sig)
    elif kind == "ssvs":
        ps = SsvsState(gamma=np.ones((N, K), dtype=bool))
    else:
        ps = NormalGammaState.default(N * K)
    level = np.log(np.maximum(data.y.var(axis=0), 1e-8)) if T > 1 else np.zeros(N)
    return StdVarState(np.zeros((N, K)), kind, ps, np.eye(N), VolatilityState.initial(T, N, level),
                       NormalGammaState.default(N * (N - 1) // 2))


def _minnesota_log_target(l1, l2, A, st: MinnesotaState):
    V = minnesota_variances(l1, l2, st.sigma_hat, A.shape[1] // A.shape[0])
    lp = (st.shape - 1) * (math.log(l1) + math.log(l2)) - st.rate * (l1 + l2)
    return lp - 0.5 * float(np.sum(np.log(V) + A * A / V))


def update_prior(state: StdVarState, rng: np.random.Generator) -> None:
    A = state.A
    if state.prior_kind == "minnesota":
        st = state.prior_state
        st.lambda1, acc1 = mh_log_scale(st.lambda1, lambda v: _minnesota_log_target(v, st.lambda2, A, st),
                                        st.mh_step, rng)
        st.lambda2, acc2 = mh_log_scale(st.lambda2, lambda v: _minnesota_log_target(st.lambda1, v, A, st),
                                        st.mh_step, rng)
        st.accepted += int(acc1) + int(acc2)
    elif state.prior_kind == "ssvs":
        st = state.prior_state
        p = ssvs_inclusion_prob(A, st.spike, st.slab, st.prior_inclusion)
        st.gamma = rng.random(A.shape) < p
    elif state.prior_kind == "ng":
        ng_update(state.prior_state, A.ravel(), rng)


def std_var_sweep(state: StdVarState, data: TvarData, rng: np.random.Generator) -> StdVarState:
    state.sweep += 1
    V = state.prior_variances()
    state.A = draw_rows(data.y, state.H, state.vol.log_s, lambda j: data.x, state.A, V, rng, state.sweep)
    resid = data.y - data.x @ state.A.T
    if data.N > 1:
        state.H = draw_H(resid, state.vol.log_s, state.ng_H.variances(), rng, state.sweep)
    if data.T > 0:
        draw_sv(resid @ state.H.T, state.vol, rng)
    update_prior(state, rng)
    if data.N > 1:
        ng_update(state.ng_H, state.H[np.tril_indices(data.N, -1)], rng)
    return state


@dataclass
class StdVarResult:
    N: int
    P: int
    A: np.ndarray
    H: np.ndarray
    sv_mu: np.ndarray
    sv_psi: np.ndarray
    sv_sigma: np.ndarray
    h_last: np.ndarray
    seconds: float = 0.0
    final_state: StdVarState | None = field(default=None, repr=False)

    @property
    def n_draws(self) -> int:
        return self.A.shape[0]


def run_std_var(data: TvarData, kind: str, burn_in: int, draws: int, rng, thin: int = 1) -> StdVarResult:
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    state = init_std_var(data, kind, rng)
    keep = {k: [] for k in ("A", "H", "mu", "psi", "sigma", "h")}
    t0 = time.perf_counter()
    for m in range(1, burn_in + draws + 1):
        std_var_sweep(state, data, rng)
        if m > burn_in and (m - burn_in) % thin == 0:
            keep["A"].append(state.A.copy())
            keep["H"].append(state.H.copy())
            keep["mu"].append(state.vol.mu.copy())
            keep["psi"].append(state.vol.psi.copy())
            keep["sigma"].append(state.vol.sigma.copy())
            keep["h"].append(state.vol.log_s[-1].copy() if data.T else state.vol.h0.copy())
    return StdVarResult(data.N, data.P, np.stack(keep["A"]), np.stack(keep["H"]), np.stack(keep["mu"]),
                        np.stack(keep["psi"]), np.stack(keep["sigma"]), np.stack(keep["h"]),
                        time.perf_counter() - t0, state)
