"""Adaptive rank inference during burn-in.

At iteration ``m`` in ``(m_tilde, m_burn]`` the rank changes with probability
``p(m) = exp(alpha0 + alpha1 * m)``: inactive columns are dropped if there are
any, otherwise one column is appended from the MGP prior.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .mgp import MgpState
from .tensor import CpTensor3, cp_components


@dataclass(frozen=True)
class AdaptConfig:
    R_star: int
    m_burn: int
    alpha0: float = -1.0
    alpha1: float = -5e-4
    m_tilde: int = 200
    mag_threshold: float = 1e-3
    prop_threshold: float = 0.9

    def __post_init__(self):
        if self.R_star < 1:
            raise ValueError("R_star must be a positive integer")
        if not self.m_tilde < self.m_burn:
            raise ValueError(f"m_tilde ({self.m_tilde}) must be smaller than m_burn ({self.m_burn})")
        if self.alpha0 > 0 or self.alpha1 >= 0:
            raise ValueError("need alpha0 <= 0 and alpha1 < 0")
        if not 0 < self.prop_threshold < 1:
            raise ValueError("prop_threshold must lie in (0, 1)")
        if self.mag_threshold <= 0:
            raise ValueError("mag_threshold must be positive")

    @classmethod
    def for_series(cls, N: int, m_burn: int, **kw) -> "AdaptConfig":
        return cls(R_star=initial_rank(N), m_burn=m_burn, **kw)

    def prob(self, m: int | np.ndarray):
        return np.exp(self.alpha0 + self.alpha1 * np.asarray(m, dtype=float))


def initial_rank(N: int) -> int:
    return max(1, math.ceil(5.0 * math.log(N)))


def small_proportion(components: np.ndarray, mag_threshold: float) -> np.ndarray:
    """Fraction of entries below ``mag_threshold`` in each ``components[r]``."""
    comps = np.asarray(components)
    flat = comps.reshape(comps.shape[0], -1)
    return np.mean(np.abs(flat) < mag_threshold, axis=1)


def inactive_columns(components: np.ndarray, cfg: AdaptConfig) -> np.ndarray:
    return np.flatnonzero(small_proportion(components, cfg.mag_threshold) > cfg.prop_threshold)


def adapt_step(cp: CpTensor3, mgp: MgpState, m: int, cfg: AdaptConfig, rng: np.random.Generator,
               u: float | None = None):
    """Possibly resize ``cp`` and ``mgp``; returns ``(cp, mgp, change)``.

    ``change`` is the signed rank change. ``u`` overrides the uniform used
    for the trigger. The uniform is only drawn inside the adaptation window,
    so calls outside it leave ``rng`` untouched.
    """
    if not cfg.m_tilde < m <= cfg.m_burn:
        return cp, mgp, 0
    if u is None:
        u = rng.random()
    if cfg.prob(m) < u:
        return cp, mgp, 0
    inactive = inactive_columns(cp_components(cp), cfg)
    R = cp.R
    if inactive.size:
        keep = np.setdiff1d(np.arange(R), inactive)
        if keep.size == 0:
            # never drop to rank zero: keep the column with the largest tensor norm
            norms = np.linalg.norm(cp_components(cp).reshape(R, -1), axis=1)
            keep = np.array([int(np.argmax(norms))])
        if keep.size == R:
            return cp, mgp, 0
        new_cp = cp.select(keep)
        new_mgp = mgp.resized(mgp.Phi[:, keep], mgp.delta[keep])
        return new_cp, new_mgp, keep.size - R
    rows = mgp.Phi.shape[0]
    new_delta = rng.gamma(mgp.a2, 1.0)
    new_phi = rng.gamma(mgp.nu / 2.0, 2.0 / mgp.nu, size=rows)
    delta = np.append(mgp.delta, new_delta)
    tau_new = np.prod(delta)
    col = rng.standard_normal(rows) / np.sqrt(new_phi * tau_new)
    B = np.column_stack([cp.stacked(), col])
    new_mgp = mgp.resized(np.column_stack([mgp.Phi, new_phi]), delta)
    return CpTensor3.from_stacked(B, cp.N, cp.P), new_mgp, 1
