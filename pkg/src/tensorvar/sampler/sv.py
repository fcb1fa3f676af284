"""Stochastic volatility updates for orthogonalized residuals.

Log-variances follow ``h_t = mu + psi (h_{t-1} - mu) + sigma eta_t`` with
``h_0 ~ N(mu, sigma^2 / (1 - psi^2))``. The log-squared residuals are
approximated by a seven-component normal mixture, the paths are drawn by
FFBS, and ``(mu, psi, sigma)`` are updated in the centered parameterization
followed by one interweaving step through the non-centered one.

Priors: ``mu ~ N(0, 100)``, ``(1 + psi) / 2 ~ Beta(5, 1.5)``,
``sigma^2 ~ Gamma(1/2, rate 1/2)`` (equivalently ``sigma ~ N(0, 1)`` up to sign).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import kernels
from .state import VolatilityState

LOG_OFFSET = 1e-8


@dataclass(frozen=True)
class SvPrior:
    mu_mean: float = 0.0
    mu_var: float = 100.0
    beta_a: float = 5.0
    beta_b: float = 1.5
    sigma2_rate: float = 0.5  # Gamma(1/2, rate) prior on sigma^2


def log_sq(resid: np.ndarray) -> np.ndarray:
    return np.log(resid * resid + LOG_OFFSET)


def draw_indicators(obs: np.ndarray, log_s: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    u = rng.random(obs.shape)
    return kernels.ksc_indicators(obs - log_s, u)


def draw_log_vol(obs: np.ndarray, z: np.ndarray, vol: VolatilityState, rng: np.random.Generator) -> np.ndarray:
    """FFBS draw of ``h_0..h_T`` given mixture indicators; returns ``(T+1, N)``."""
    noise = rng.standard_normal((obs.shape[0] + 1, obs.shape[1]))
    return kernels.ffbs(np.ascontiguousarray(obs), kernels.KSC_MEAN[z], kernels.KSC_VAR[z],
                        vol.mu, vol.psi, vol.sigma ** 2, noise)


def _log_psi_prior(psi, prior: SvPrior):
    return (prior.beta_a - 1.0) * np.log1p(psi) + (prior.beta_b - 1.0) * np.log1p(-psi)


def _log_h0(h0, mu, psi, sigma2):
    v = sigma2 / (1.0 - psi * psi)
    return -0.5 * np.log(v) - 0.5 * (h0 - mu) ** 2 / v


def update_centered(h: np.ndarray, vol: VolatilityState, rng: np.random.Generator,
                    prior: SvPrior = SvPrior()) -> None:
    """Metropolis-within-Gibbs for ``sigma^2``, ``mu``, ``psi`` given paths ``h`` (T+1, N)."""
    T = h.shape[0] - 1
    mu, psi, sigma2 = vol.mu.copy(), vol.psi.copy(), vol.sigma ** 2
    N = mu.size

    # sigma^2: proposal from the likelihood kernel, accept by prior ratio
    e = (h[1:] - mu) - psi * (h[:-1] - mu)
    ss = np.sum(e * e, axis=0) + (1.0 - psi * psi) * (h[0] - mu) ** 2
    shape = 0.5 * (T + 1) - 1.0
    prop = (0.5 * ss) / rng.gamma(shape, 1.0, size=N)
    log_acc = (-0.5 * np.log(prop) - prior.sigma2_rate * prop) - (-0.5 * np.log(sigma2) - prior.sigma2_rate * sigma2)
    take = np.log(rng.random(N)) < log_acc
    sigma2 = np.where(take, prop, sigma2)

    # mu: conjugate normal
    prec = 1.0 / prior.mu_var + ((1.0 - psi * psi) + T * (1.0 - psi) ** 2) / sigma2
    num = prior.mu_mean / prior.mu_var + ((1.0 - psi * psi) * h[0]
                                          + (1.0 - psi) * np.sum(h[1:] - psi * h[:-1], axis=0)) / sigma2
    mu = num / prec + rng.standard_normal(N) / np.sqrt(prec)

    # psi: regression proposal on t = 1..T, correct for prior and h_0 term
    xc = h[:-1] - mu
    yc = h[1:] - mu
    sxx = np.sum(xc * xc, axis=0)
    psi_hat = np.sum(xc * yc, axis=0) / sxx
    prop = psi_hat + np.sqrt(sigma2 / sxx) * rng.standard_normal(N)
    u = rng.random(N)
    inside = np.abs(prop) < 1.0
    prop_safe = np.where(inside, prop, 0.0)
    log_acc = (_log_psi_prior(prop_safe, prior) + _log_h0(h[0], mu, prop_safe, sigma2)
               - _log_psi_prior(psi, prior) - _log_h0(h[0], mu, psi, sigma2))
    take = inside & (np.log(u) < log_acc)
    psi = np.where(take, prop, psi)

    vol.mu, vol.psi, vol.sigma = mu, psi, np.sqrt(sigma2)


def update_noncentered(obs: np.ndarray, z: np.ndarray, h: np.ndarray, vol: VolatilityState,
                       rng: np.random.Generator, prior: SvPrior = SvPrior()) -> np.ndarray:
    """Redraw ``(mu, sigma)`` given standardized paths; returns the implied ``h``."""
    sigma = vol.sigma
    h_tilde = (h - vol.mu) / sigma
    y = obs - kernels.KSC_MEAN[z]
    w = 1.0 / kernels.KSC_VAR[z]
    N = obs.shape[1]
    mu_new = np.empty(N)
    sig_new = np.empty(N)
    prior_prec = np.diag([1.0 / prior.mu_var, 2.0 * prior.sigma2_rate])
    prior_b = np.array([prior.mu_mean / prior.mu_var, 0.0])
    for n in range(N):
        Xn = np.column_stack([np.ones(obs.shape[0]), h_tilde[1:, n]])
        prec = prior_prec + (Xn * w[:, n, None]).T @ Xn
        b = prior_b + Xn.T @ (w[:, n] * y[:, n])
        c = np.linalg.cholesky(prec)
        mean = np.linalg.solve(prec, b)
        draw = mean + np.linalg.solve(c.T, rng.standard_normal(2))
        mu_new[n], sig_new[n] = draw
    h_new = mu_new + sig_new * h_tilde
    sig_abs = np.abs(sig_new)
    ok = sig_abs > 0
    vol.mu = np.where(ok, mu_new, vol.mu)
    vol.sigma = np.where(ok, sig_abs, vol.sigma)
    return np.where(ok, h_new, h)


def draw_sv(resid: np.ndarray, vol: VolatilityState, rng: np.random.Generator,
            prior: SvPrior = SvPrior(), interweave: bool = True) -> VolatilityState:
    """Full SV update for orthogonalized residuals ``resid`` of shape (T, N)."""
    obs = log_sq(resid)
    z = draw_indicators(obs, vol.log_s, rng)
    h = draw_log_vol(obs, z, vol, rng)
    update_centered(h, vol, rng, prior)
    if interweave:
        h = update_noncentered(obs, z, h, vol, rng, prior)
    vol.h0 = h[0].copy()
    vol.log_s = h[1:].copy()
    return vol
