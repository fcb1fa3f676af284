"""Gaussian full conditionals for the margins, D and H.

The observation equation ``H (y_t - A x_t - D x_t) = S_t^{1/2} u_t`` is
whitened as ``L_t = S_t^{-1/2} H`` so that every block becomes a stacked
homoskedastic regression with ``T * N`` rows.

Vectorization conventions for the margin blocks:

* block 1: ``vec(B1)`` column-major, index ``r * N + i``
* block 2: ``vec(B2')``, index ``i * R + r``
* block 3: ``vec(B3)`` column-major, index ``r * P + p``
"""

from __future__ import annotations

import numpy as np
from scipy import linalg

from ..errors import NumericalError
from ..tensor import CpTensor3
from .state import TvarData, own_lag_fit


def whitening(H: np.ndarray, log_s: np.ndarray) -> np.ndarray:
    """``L_t = diag(exp(-h_t / 2)) H`` for every t, shape ``(T, N, N)``."""
    isd = np.exp(-0.5 * log_s)
    return isd[:, :, None] * H[None, :, :]


def block_design(j: int, cp: CpTensor3, X: np.ndarray, L: np.ndarray) -> np.ndarray:
    """Whitened design for block ``j``, shape ``(T * N, K_j)``."""
    T, N, P = X.shape
    R = cp.R
    if j == 1:
        f = np.einsum("tip,ir,pr->tr", X, cp.B2, cp.B3)
        Z = f[:, None, :, None] * L[:, :, None, :]  # (t, n, r, i)
        return Z.reshape(T * N, R * N)
    C = L @ cp.B1  # (T, N, R)
    if j == 2:
        G = X @ cp.B3  # (T, N, R): G[t, i2, r]
        Z = C[:, :, None, :] * G[:, None, :, :]  # (t, n, i2, r)
        return Z.reshape(T * N, N * R)
    if j == 3:
        G = np.einsum("tip,ir->tpr", X, cp.B2)  # (T, P, R)
        Z = C[:, :, :, None] * G.transpose(0, 2, 1)[:, None, :, :]  # (t, n, r, p)
        return Z.reshape(T * N, R * P)
    raise ValueError(f"block index must be 1, 2 or 3, got {j}")


def block_prior_sd(j: int, sd: np.ndarray, N: int, P: int) -> np.ndarray:
    """Prior sds of block ``j`` in its vectorization order."""
    if j == 1:
        return sd[:N].ravel(order="F")
    if j == 2:
        return sd[N:2 * N].ravel(order="C")
    if j == 3:
        return sd[2 * N:2 * N + P].ravel(order="F")
    raise ValueError(f"block index must be 1, 2 or 3, got {j}")


def block_to_matrix(j: int, v: np.ndarray, N: int, P: int, R: int) -> np.ndarray:
    if j == 1:
        return v.reshape(N, R, order="F")
    if j == 2:
        return v.reshape(N, R, order="C")
    return v.reshape(P, R, order="F")


def replace_block(cp: CpTensor3, j: int, M: np.ndarray) -> CpTensor3:
    blocks = [cp.B1, cp.B2, cp.B3]
    blocks[j - 1] = M
    return CpTensor3(*blocks)


def gaussian_factor(Z: np.ndarray, target: np.ndarray, prior_isd: np.ndarray, sweep: int | None = None):
    """Posterior of ``c`` in ``target = Z c + N(0, I)`` with prior ``N(0, diag(1/prior_isd^2))``.

    Returns ``(mean, U)`` where ``U`` is upper triangular with ``U'U`` equal to
    the precision. The Cholesky factor of the (Jacobi-scaled) normal
    equations is used when it exists; otherwise ``U`` comes from a QR
    factorization of ``Z`` stacked over the prior rows, which stays accurate
    when ``Z'Z`` is numerically singular (explosive or badly scaled data).
    """
    prior_isd = np.asarray(prior_isd, dtype=float)
    if Z.shape[0] == 0:
        return np.zeros(prior_isd.size), np.diag(prior_isd)
    G = Z.T @ Z
    G[np.diag_indices_from(G)] += prior_isd ** 2
    rhs = Z.T @ target
    d = np.sqrt(np.diag(G))
    try:
        U = linalg.cholesky(G / np.outer(d, d), lower=False, check_finite=True) * d[None, :]
        mean = linalg.solve_triangular(U, linalg.solve_triangular(U, rhs, trans="T"))
    except (linalg.LinAlgError, ValueError):
        Q, U = linalg.qr(np.vstack([Z, np.diag(prior_isd)]), mode="economic", check_finite=False)
        if not (np.all(np.isfinite(U)) and np.all(np.abs(np.diag(U)) > 0)):
            raise NumericalError("singular or non-finite full conditional", sweep) from None
        mean = linalg.solve_triangular(U, Q[:Z.shape[0]].T @ target)
    if not np.all(np.isfinite(mean)):
        raise NumericalError("non-finite full-conditional mean", sweep)
    return mean, U


def draw_from_factor(mean: np.ndarray, U: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Draw ``N(mean, (U'U)^{-1})``."""
    return mean + linalg.solve_triangular(U, rng.standard_normal(mean.size))


def _block_factor(j, cp, H, log_s, data, prior_sd, D, sweep):
    N, P = cp.N, cp.P
    prior_isd = 1.0 / block_prior_sd(j, np.asarray(prior_sd, float), N, P)
    if data.T == 0:
        return gaussian_factor(np.zeros((0, prior_isd.size)), np.zeros(0), prior_isd, sweep)
    L = whitening(H, log_s)
    target = np.einsum("tnm,tm->tn", L, data.y - own_lag_fit(D, data.X)).ravel()
    return gaussian_factor(block_design(j, cp, data.X, L), target, prior_isd, sweep)


def b_block_moments(j: int, cp: CpTensor3, H: np.ndarray, log_s: np.ndarray, data: TvarData,
                    prior_sd: np.ndarray, D: np.ndarray | None = None, sweep: int | None = None):
    """Mean and precision of the Gaussian full conditional of block ``j``.

    Parameters
    ----------
    prior_sd : ndarray
        ``(2N+P, R)`` prior standard deviations of the margins.

    Returns
    -------
    mean : ndarray
    precision : ndarray
    """
    mean, U = _block_factor(j, cp, H, log_s, data, prior_sd, D, sweep)
    return mean, U.T @ U


def mvn_from_precision(mean: np.ndarray, precision: np.ndarray, rng: np.random.Generator,
                       sweep: int | None = None) -> np.ndarray:
    """Draw ``N(mean, precision^{-1})`` through the Cholesky factor of the precision."""
    try:
        c = linalg.cholesky(precision, lower=False)
    except linalg.LinAlgError as exc:
        raise NumericalError(f"precision matrix is not positive definite: {exc}", sweep) from exc
    return draw_from_factor(mean, c, rng)


def draw_block(j: int, cp: CpTensor3, H, log_s, data, prior_sd, rng, D=None, sweep=None) -> CpTensor3:
    mean, U = _block_factor(j, cp, H, log_s, data, prior_sd, D, sweep)
    v = draw_from_factor(mean, U, rng)
    return replace_block(cp, j, block_to_matrix(j, v, cp.N, cp.P, cp.R))


# ---------------------------------------------------------------------------
# Row-wise regressions under a triangular error factorization

def _triangular_row_factor(j, resid_wo_j, H, log_s, Z, prior_var, sweep):
    prior_isd = 1.0 / np.sqrt(np.asarray(prior_var, float))
    if Z.shape[0] == 0:
        return gaussian_factor(Z, np.zeros(0), prior_isd, sweep)
    w2 = np.exp(-log_s[:, j:])  # 1 / s_{t,n}
    hj = H[j:, j]
    E = resid_wo_j @ H[j:, :].T  # (T, N - j)
    c = w2 @ (hj * hj)  # sum_n H[n,j]^2 / s_{t,n}, positive since H[j,j] = 1
    sc = np.sqrt(c)
    return gaussian_factor(Z * sc[:, None], ((w2 * E) @ hj) / sc, prior_isd, sweep)


def triangular_row_moments(j: int, resid_wo_j: np.ndarray, H: np.ndarray, log_s: np.ndarray,
                           Z: np.ndarray, prior_var: np.ndarray, sweep: int | None = None):
    """Moments of the coefficients entering only equation ``j`` of ``y_t``.

    Equation ``j`` of ``y_t - fit_t`` has the form ``Z_t @ c`` where ``c`` is
    the unknown row. Every whitened equation ``n >= j`` of
    ``S_t^{-1/2} H (y_t - fit_t)`` contains it with loading ``H[n, j]``, so
    the precision is ``diag(1/prior_var) + Z' diag(c_t) Z`` with
    ``c_t = sum_n H[n, j]^2 / s_{t,n}``.

    Parameters
    ----------
    resid_wo_j : ndarray
        ``(T, N)`` residuals computed with row ``j``'s coefficients set to zero.
    Z : ndarray
        ``(T, K)`` regressors of row ``j``.
    prior_var : ndarray
        Length-``K`` prior variances (zero prior mean).
    """
    mean, U = _triangular_row_factor(j, resid_wo_j, H, log_s, Z, prior_var, sweep)
    return mean, U.T @ U


def draw_rows(resid_base: np.ndarray, H: np.ndarray, log_s: np.ndarray, regressors, coefs: np.ndarray,
              prior_var: np.ndarray, rng: np.random.Generator, sweep: int | None = None) -> np.ndarray:
    """Sequentially redraw coefficient rows ``coefs[j]`` for ``j = 0..N-1``.

    ``resid_base`` is ``y`` minus every fitted part except the rows being
    drawn. ``regressors(j)`` returns the ``(T, K)`` design of row ``j``.
    ``prior_var`` has the same shape as ``coefs``.
    """
    coefs = np.array(coefs, dtype=float, copy=True)
    N = coefs.shape[0]
    T = resid_base.shape[0]
    fits = np.stack([regressors(j) @ coefs[j] for j in range(N)], axis=1) if T else np.zeros((0, N))
    for j in range(N):
        Zj = regressors(j)
        fits[:, j] = 0.0
        mean, U = _triangular_row_factor(j, resid_base - fits, H, log_s, Zj, prior_var[j], sweep)
        coefs[j] = draw_from_factor(mean, U, rng)
        if T:
            fits[:, j] = Zj @ coefs[j]
    return coefs


def draw_D(D: np.ndarray, cp_fit: np.ndarray, H: np.ndarray, log_s: np.ndarray, data: TvarData,
           prior_var: np.ndarray, rng: np.random.Generator, sweep: int | None = None) -> np.ndarray:
    """Redraw the own-lag matrix; ``cp_fit`` is ``A x_t`` for every t."""
    return draw_rows(data.y - cp_fit, H, log_s, lambda j: data.X[:, j, :], D, prior_var, rng, sweep)


def _h_row_factor(i, resid, log_s, prior_var, sweep):
    w = np.exp(-0.5 * log_s[:, i])
    Zi = -resid[:, :i] * w[:, None]
    return gaussian_factor(Zi, resid[:, i] * w, 1.0 / np.sqrt(np.asarray(prior_var, float)), sweep)


def h_row_moments(i: int, resid: np.ndarray, log_s: np.ndarray, prior_var: np.ndarray,
                  sweep: int | None = None):
    """Moments of ``H[i, :i]`` given residuals ``e_t = y_t - fit_t``."""
    mean, U = _h_row_factor(i, resid, log_s, prior_var, sweep)
    return mean, U.T @ U


def draw_H(resid: np.ndarray, log_s: np.ndarray, prior_var: np.ndarray, rng: np.random.Generator,
           sweep: int | None = None) -> np.ndarray:
    """Unit lower-triangular ``H`` from row-wise regressions.

    ``prior_var`` lists the strict-lower entries in row-major order.
    """
    N = resid.shape[1]
    H = np.eye(N)
    pos = 0
    for i in range(1, N):
        mean, U = _h_row_factor(i, resid, log_s, prior_var[pos:pos + i], sweep)
        H[i, :i] = draw_from_factor(mean, U, rng)
        pos += i
    return H
