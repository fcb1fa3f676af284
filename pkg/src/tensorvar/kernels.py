"""Inner loops that dominate sampler runtime.

Each kernel exists in two forms: a loop-level function compiled by numba
(``*_nb``) and a numpy twin (``*_np``). The public names bind to one of them
according to :mod:`tensorvar._accel`. All randomness is either passed in as
pre-drawn arrays or pulled from a ``np.random.Generator``, which numba reads
with the same bit stream as numpy.
"""

from __future__ import annotations

import math

import numpy as np

from ._accel import NUMBA_AVAILABLE, njit, select

# Kim-Shephard-Chib seven-component normal mixture for log(chi^2_1).
KSC_PROB = np.array([0.00730, 0.10556, 0.00002, 0.04395, 0.34001, 0.24566, 0.25750])
KSC_MEAN = np.array([-10.12999, -3.97281, -8.56686, 2.77786, 0.61942, 1.79518, -1.08819]) - 1.2704
KSC_VAR = np.array([5.79596, 2.61369, 5.17950, 0.16735, 0.64009, 0.34023, 1.26261])


# ---------------------------------------------------------------------------
# GIG(lam, chi, psi), density ~ x^(lam-1) exp(-(chi/x + psi x)/2).
# Devroye (2014) rejection on the log scale for the two-parameter form
# x^(lam-1) exp(-omega (x + 1/x) / 2), lam >= 0; lam < 0 by reciprocal.

def _build_gig(jit):
    @jit
    def log_kernel(x, alpha, lam):
        return -alpha * (math.cosh(x) - 1.0) - lam * (math.exp(x) - x - 1.0)

    @jit
    def log_kernel_slope(x, alpha, lam):
        return -alpha * math.sinh(x) - lam * (math.exp(x) - 1.0)

    @jit
    def two_param(lam, omega, rng):
        alpha = math.sqrt(omega * omega + lam * lam) - lam

        x = -log_kernel(1.0, alpha, lam)
        if 0.5 <= x <= 2.0:
            t = 1.0
        elif x > 2.0:
            t = math.sqrt(2.0 / (alpha + lam))
        else:
            t = math.log(4.0 / (alpha + 2.0 * lam))

        x = -log_kernel(-1.0, alpha, lam)
        if 0.5 <= x <= 2.0:
            s = 1.0
        elif x > 2.0:
            s = math.sqrt(4.0 / (alpha * math.cosh(1.0) + lam))
        elif alpha == 0.0:
            s = 1.0 / lam
        else:
            s = math.log(1.0 + 1.0 / alpha + math.sqrt(1.0 / (alpha * alpha) + 2.0 / alpha))
            if lam > 0.0:
                s = min(1.0 / lam, s)

        eta = -log_kernel(t, alpha, lam)
        zeta = -log_kernel_slope(t, alpha, lam)
        theta = -log_kernel(-s, alpha, lam)
        xi = log_kernel_slope(-s, alpha, lam)
        p = 1.0 / xi
        r = 1.0 / zeta
        td = t - r * eta
        sd = s - p * theta
        q = td + sd

        while True:
            U = rng.random()
            V = rng.random()
            W = rng.random()
            if U < q / (p + q + r):
                rnd = -sd + q * V
            elif U < (q + r) / (p + q + r):
                rnd = td - r * math.log(V)
            else:
                rnd = -sd + p * math.log(V)
            if rnd < -sd:
                g = math.exp(-theta + xi * (rnd + s))
            elif rnd > td:
                g = math.exp(-eta - zeta * (rnd - t))
            else:
                g = 1.0
            if W * g <= math.exp(log_kernel(rnd, alpha, lam)):
                break
        return math.exp(rnd) * (lam / omega + math.sqrt(1.0 + lam * lam / (omega * omega)))

    @jit
    def draw(lam, chi, psi, rng):
        if chi == 0.0:
            return rng.gamma(lam, 2.0 / psi)
        if psi == 0.0:
            return 1.0 / rng.gamma(-lam, 2.0 / chi)
        omega = math.sqrt(chi * psi)
        scale = math.sqrt(chi / psi)
        if lam < 0.0:
            return scale / two_param(-lam, omega, rng)
        return scale * two_param(lam, omega, rng)

    @jit
    def fill(lam, chi, psi, rng, out):
        for k in range(out.shape[0]):
            out[k] = draw(lam[k], chi[k], psi[k], rng)
        return out

    return draw, fill


gig_draw_np, gig_fill_np = _build_gig(lambda f: f)
if NUMBA_AVAILABLE:
    import numba as _numba

    gig_draw_nb, gig_fill_nb = _build_gig(_numba.njit)
else:  # pragma: no cover
    gig_draw_nb, gig_fill_nb = gig_draw_np, gig_fill_np
gig_draw = select(gig_draw_nb, gig_draw_np)
gig_fill = select(gig_fill_nb, gig_fill_np)


# ---------------------------------------------------------------------------
# Stochastic volatility: mixture indicators and forward-filter backward-sample.
# Arrays are (T, N) for observations and (T + 1, N) for states (row 0 is h_0).

def ksc_indicators_np(resid, u):
    """Sample mixture components for ``resid = log(e^2) - h`` given uniforms ``u``."""
    d = resid[..., None] - KSC_MEAN
    logw = np.log(KSC_PROB) - 0.5 * np.log(KSC_VAR) - 0.5 * d * d / KSC_VAR
    logw -= logw.max(axis=-1, keepdims=True)
    w = np.exp(logw)
    cdf = np.cumsum(w, axis=-1)
    cdf /= cdf[..., -1:]
    idx = (u[..., None] > cdf).sum(axis=-1)
    return np.minimum(idx, KSC_PROB.size - 1)


def _ksc_indicators_loop(resid, u, prob, mean, var):
    T, N = resid.shape
    K = prob.shape[0]
    out = np.empty((T, N), dtype=np.int64)
    logw = np.empty(K)
    for t in range(T):
        for n in range(N):
            mx = -np.inf
            for k in range(K):
                d = resid[t, n] - mean[k]
                logw[k] = math.log(prob[k]) - 0.5 * math.log(var[k]) - 0.5 * d * d / var[k]
                if logw[k] > mx:
                    mx = logw[k]
            tot = 0.0
            for k in range(K):
                logw[k] = math.exp(logw[k] - mx)
                tot += logw[k]
            acc = 0.0
            j = K - 1
            for k in range(K):
                acc += logw[k] / tot
                if u[t, n] <= acc:
                    j = k
                    break
            out[t, n] = j
    return out


def ffbs_np(obs, obs_mean, obs_var, mu, phi, sigma2, z):
    """Draw AR(1) log-variance paths given Gaussian observations.

    ``obs``, ``obs_mean``, ``obs_var`` are ``(T, N)``; ``mu``, ``phi``,
    ``sigma2`` are length ``N``; ``z`` holds ``(T + 1, N)`` standard normals.
    Returns ``h`` of shape ``(T + 1, N)`` with ``h[0]`` the initial state.
    """
    T, N = obs.shape
    m = np.empty((T + 1, N))
    C = np.empty((T + 1, N))
    m[0] = mu
    C[0] = sigma2 / (1.0 - phi * phi)
    for t in range(1, T + 1):
        a = mu + phi * (m[t - 1] - mu)
        R = phi * phi * C[t - 1] + sigma2
        K = R / (R + obs_var[t - 1])
        m[t] = a + K * (obs[t - 1] - obs_mean[t - 1] - a)
        C[t] = (1.0 - K) * R
    h = np.empty((T + 1, N))
    h[T] = m[T] + np.sqrt(np.maximum(C[T], 0.0)) * z[T]
    for t in range(T - 1, -1, -1):
        R = phi * phi * C[t] + sigma2
        G = C[t] * phi / R
        mean = m[t] + G * (h[t + 1] - mu - phi * (m[t] - mu))
        var = np.maximum(C[t] - G * G * R, 0.0)
        h[t] = mean + np.sqrt(var) * z[t]
    return h


def _ffbs_loop(obs, obs_mean, obs_var, mu, phi, sigma2, z):
    T, N = obs.shape
    h = np.empty((T + 1, N))
    m = np.empty(T + 1)
    C = np.empty(T + 1)
    for n in range(N):
        m[0] = mu[n]
        C[0] = sigma2[n] / (1.0 - phi[n] * phi[n])
        for t in range(1, T + 1):
            a = mu[n] + phi[n] * (m[t - 1] - mu[n])
            R = phi[n] * phi[n] * C[t - 1] + sigma2[n]
            K = R / (R + obs_var[t - 1, n])
            m[t] = a + K * (obs[t - 1, n] - obs_mean[t - 1, n] - a)
            C[t] = (1.0 - K) * R
        h[T, n] = m[T] + math.sqrt(max(C[T], 0.0)) * z[T, n]
        for t in range(T - 1, -1, -1):
            R = phi[n] * phi[n] * C[t] + sigma2[n]
            G = C[t] * phi[n] / R
            mean = m[t] + G * (h[t + 1, n] - mu[n] - phi[n] * (m[t] - mu[n]))
            var = max(C[t] - G * G * R, 0.0)
            h[t, n] = mean + math.sqrt(var) * z[t, n]
    return h


_ksc_loop_nb = njit(_ksc_indicators_loop)
ffbs_nb = njit(_ffbs_loop)


def ksc_indicators_nb(resid, u):
    return _ksc_loop_nb(np.ascontiguousarray(resid), np.ascontiguousarray(u), KSC_PROB, KSC_MEAN, KSC_VAR)


ksc_indicators = select(ksc_indicators_nb, ksc_indicators_np)
ffbs = select(ffbs_nb, ffbs_np)
