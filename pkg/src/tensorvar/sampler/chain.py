"""Full Gibbs sweeps and chain driver for the Tensor VAR."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError
from ..mgp import MgpState
from ..priors import NormalGammaState, alpha_grid, mdgdp_draw_prior, ng_update
from ..rank import AdaptConfig, adapt_step, initial_rank
from ..tensor import CpTensor3, coefficient_matrix
from .blocks import draw_block, draw_D, draw_H
from .interweave import PAIRS, interweave_step
from .state import ModelState, NormalPrior, TvarData, VolatilityState, own_lag_fit
from .sv import SvPrior, draw_sv

PRIORS = ("normal", "mgp", "mdgdp")


@dataclass(frozen=True)
class ChainConfig:
    """Settings for one chain.

    ``R_init`` defaults to ``ceil(5 log N)`` when rank adaptation is on and
    to that same value otherwise. ``adapt`` is only valid with the MGP prior.
    """

    burn_in: int = 2000
    draws: int = 2000
    thin: int = 1
    prior: str = "mgp"
    interweave: bool = True
    own_lag: bool = False
    adapt: bool = True
    R_init: int | None = None
    nu: float = 3.0
    a1: float = 2.0
    a2: float = 3.0
    alpha0: float = -1.0
    alpha1: float = -5e-4
    m_tilde: int = 200
    mag_threshold: float = 1e-3
    prop_threshold: float = 0.9
    normal_sd: float = 1.0
    init_sd: float = 0.1
    ng_c0: float = 0.01
    ng_d0: float = 0.01
    sv_prior: SvPrior = SvPrior()

    def __post_init__(self):
        if self.prior not in PRIORS:
            raise ConfigError(f"prior must be one of {PRIORS}, got {self.prior!r}")
        if self.draws < 1 or self.thin < 1 or self.burn_in < 0:
            raise ConfigError("need draws >= 1, thin >= 1 and burn_in >= 0")
        if self.thin > self.draws:
            raise ConfigError("thin larger than draws would store nothing")
        if self.adapt and self.prior != "mgp":
            raise ConfigError("rank adaptation requires the MGP prior")
        if self.R_init is not None and self.R_init < 1:
            raise ConfigError("R_init must be positive")

    def adapt_config(self, N: int) -> AdaptConfig | None:
        if not self.adapt or self.burn_in <= self.m_tilde:
            return None
        return AdaptConfig(R_star=self.rank0(N), m_burn=self.burn_in, alpha0=self.alpha0, alpha1=self.alpha1,
                           m_tilde=self.m_tilde, mag_threshold=self.mag_threshold,
                           prop_threshold=self.prop_threshold)

    def rank0(self, N: int) -> int:
        return self.R_init if self.R_init is not None else initial_rank(N)


@dataclass
class ChainResult:
    """Stored draws after burn-in plus chain bookkeeping.

    ``B`` is ``(n, 2N+P, R)``; ``h_last`` holds the final log-variance of each
    series per draw, as needed for forecasting.
    """

    N: int
    P: int
    B: np.ndarray
    H: np.ndarray
    sv_mu: np.ndarray
    sv_psi: np.ndarray
    sv_sigma: np.ndarray
    h_last: np.ndarray
    rank_trajectory: np.ndarray
    D: np.ndarray | None = None
    seconds: float = 0.0
    skipped_moves: int = 0
    final_state: ModelState | None = field(default=None, repr=False)

    @property
    def n_draws(self) -> int:
        return self.B.shape[0]

    @property
    def R(self) -> int:
        return self.B.shape[2]

    def cp(self, k: int) -> CpTensor3:
        return CpTensor3.from_stacked(self.B[k], self.N, self.P)

    def coefficient_draws(self) -> np.ndarray:
        """``(n, N, N*P)`` tensor-part coefficient matrices."""
        return np.stack([coefficient_matrix(self.cp(k)) for k in range(self.n_draws)])

    def own_lag_matrices(self) -> np.ndarray:
        """``(n, N, N*P)`` own-lag parts (zeros when there is no ``D``)."""
        n, N, P = self.n_draws, self.N, self.P
        out = np.zeros((n, N, N * P))
        if self.D is not None:
            for p in range(P):
                out[:, np.arange(N), p * N + np.arange(N)] = self.D[:, :, p]
        return out


def make_prior(kind: str, N: int, P: int, R: int, cfg: ChainConfig, rng: np.random.Generator):
    if kind == "normal":
        return NormalPrior(N, P, R, cfg.normal_sd)
    if kind == "mgp":
        return MgpState(np.ones((2 * N + P, R)), np.ones(R), cfg.a1, cfg.a2, cfg.nu, N, P)
    state = mdgdp_draw_prior(N, P, R, rng, alpha_grid(R))
    state.W = np.ones_like(state.W)
    state.tau_g = 1.0
    state.phi_mix = np.full(R, 1.0 / R)
    return state


def init_state(data: TvarData, cfg: ChainConfig, rng: np.random.Generator) -> ModelState:
    N, P, T = data.N, data.P, data.T
    R = cfg.rank0(N)
    B = cfg.init_sd * rng.standard_normal((2 * N + P, R))
    cp = CpTensor3.from_stacked(B, N, P)
    level = np.log(np.maximum(data.y.var(axis=0), 1e-8)) if T > 1 else np.zeros(N)
    vol = VolatilityState.initial(T, N, level)
    prior = make_prior(cfg.prior, N, P, R, cfg, rng)
    ng_H = NormalGammaState.default(N * (N - 1) // 2, c0=cfg.ng_c0, d0=cfg.ng_d0)
    D = ng_D = None
    if cfg.own_lag:
        D = np.zeros((N, P))
        ng_D = NormalGammaState.default(N * P, c0=cfg.ng_c0, d0=cfg.ng_d0)
    return ModelState(cp=cp, H=np.eye(N), vol=vol, prior=prior, ng_H=ng_H, D=D, ng_D=ng_D)


def margin_sweep(state: ModelState, data: TvarData, rng: np.random.Generator, interweave: bool = True) -> ModelState:
    """Base draws of ``B1``, ``B2``, ``B3``, each followed by its interweaving move."""
    sd = state.prior.prior_sd_matrix()
    cp = state.cp
    for j, pair in zip((1, 2, 3), PAIRS, strict=True):
        cp = draw_block(j, cp, state.H, state.vol.log_s, data, sd, rng, state.D, state.sweep)
        if interweave:
            cp, skipped = interweave_step(cp, pair, sd, rng)
            state.skipped_moves += skipped
    state.cp = cp
    return state


def gibbs_sweep(state: ModelState, data: TvarData, rng: np.random.Generator, cfg: ChainConfig,
                adapt: AdaptConfig | None = None) -> ModelState:
    """One iteration: margins, own lags, H, volatilities, then hyperparameters."""
    state.sweep += 1
    margin_sweep(state, data, rng, cfg.interweave)
    a_fit = data.x @ coefficient_matrix(state.cp).T
    if state.D is not None:
        prior_var = state.ng_D.variances().reshape(state.D.shape)
        state.D = draw_D(state.D, a_fit, state.H, state.vol.log_s, data, prior_var, rng, state.sweep)
    resid = data.y - a_fit - own_lag_fit(state.D, data.X)
    if state.N > 1:
        state.H = draw_H(resid, state.vol.log_s, state.ng_H.variances(), rng, state.sweep)
    if data.T > 0:
        draw_sv(resid @ state.H.T, state.vol, rng, cfg.sv_prior)
    state.prior.update(state.cp.stacked(), rng)
    if state.N > 1:
        ng_update(state.ng_H, state.H[np.tril_indices(state.N, -1)], rng)
    if state.D is not None:
        ng_update(state.ng_D, state.D.ravel(), rng)
    if adapt is not None:
        state.cp, state.prior, _ = adapt_step(state.cp, state.prior, state.sweep, adapt, rng)
    return state


def run_chain(data: TvarData, cfg: ChainConfig, rng: np.random.Generator | int,
              state: ModelState | None = None) -> ChainResult:
    """Run ``burn_in + draws`` sweeps and keep every ``thin``-th post burn-in draw."""
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    N, P = data.N, data.P
    if state is None:
        state = init_state(data, cfg, rng)
    adapt = cfg.adapt_config(N)
    total = cfg.burn_in + cfg.draws
    n_keep = cfg.draws // cfg.thin
    ranks = np.empty((total, 2), dtype=np.int64)
    kept = {"B": [], "H": [], "mu": [], "psi": [], "sigma": [], "h": [], "D": []}
    start = time.perf_counter()
    for m in range(1, total + 1):
        gibbs_sweep(state, data, rng, cfg, adapt)
        ranks[m - 1] = (m, state.R)
        if m > cfg.burn_in and (m - cfg.burn_in) % cfg.thin == 0:
            kept["B"].append(state.cp.stacked())
            kept["H"].append(state.H.copy())
            kept["mu"].append(state.vol.mu.copy())
            kept["psi"].append(state.vol.psi.copy())
            kept["sigma"].append(state.vol.sigma.copy())
            kept["h"].append(state.vol.log_s[-1].copy() if data.T else state.vol.h0.copy())
            if state.D is not None:
                kept["D"].append(state.D.copy())
    seconds = time.perf_counter() - start
    assert len(kept["B"]) == n_keep
    return ChainResult(
        N=N, P=P,
        B=np.stack(kept["B"]),
        H=np.stack(kept["H"]),
        sv_mu=np.stack(kept["mu"]),
        sv_psi=np.stack(kept["psi"]),
        sv_sigma=np.stack(kept["sigma"]),
        h_last=np.stack(kept["h"]),
        rank_trajectory=ranks,
        D=np.stack(kept["D"]) if kept["D"] else None,
        seconds=seconds,
        skipped_moves=state.skipped_moves,
        final_state=state,
    )
