import numpy as np
import pytest
from scipy import linalg

from tensorvar.errors import NumericalError
from tensorvar.sampler import blocks
from tensorvar.sampler.blocks import (b_block_moments, block_to_matrix, draw_block, draw_D, draw_H, gaussian_factor,
                                      h_row_moments, mvn_from_precision, replace_block, triangular_row_moments)
from tensorvar.sampler.state import TvarData, own_lag_fit
from tensorvar.tensor import CpTensor3, coefficient_matrix


def random_problem(rng, N=3, P=2, R=2, T=25):
    cp = CpTensor3(rng.normal(size=(N, R)), rng.normal(size=(N, R)), rng.normal(size=(P, R)))
    data = TvarData.from_panel(rng.normal(size=(T + P, N)), P)
    H = np.eye(N)
    H[np.tril_indices(N, -1)] = rng.normal(size=N * (N - 1) // 2)
    log_s = rng.normal(scale=0.5, size=(T, N))
    sd = rng.uniform(0.5, 2.0, size=(2 * N + P, R))
    return cp, data, H, log_s, sd


def naive_moments(j, cp, data, H, log_s, sd, D=None):
    """Columns of the design are whitened fitted values of unit vectors of the block."""
    N, P, R = cp.N, cp.P, cp.R
    K = {1: N * R, 2: N * R, 3: P * R}[j]
    cols = []
    for k in range(K):
        e = np.zeros(K)
        e[k] = 1.0
        A = coefficient_matrix(replace_block(cp, j, block_to_matrix(j, e, N, P, R)))
        fit = data.x @ A.T
        cols.append(np.concatenate([np.exp(-0.5 * log_s[t]) * (H @ fit[t]) for t in range(data.T)]))
    Z = np.column_stack(cols)
    resid = data.y - own_lag_fit(D, data.X)
    target = np.concatenate([np.exp(-0.5 * log_s[t]) * (H @ resid[t]) for t in range(data.T)])
    block_sd = {1: sd[:N].ravel(order="F"), 2: sd[N:2 * N].ravel(), 3: sd[2 * N:].ravel(order="F")}[j]
    prec = Z.T @ Z + np.diag(block_sd ** -2.0)
    return np.linalg.solve(prec, Z.T @ target), prec


def test_vectorization_maps():
    N, P, R = 3, 2, 2
    v = np.arange(N * R, dtype=float)
    assert block_to_matrix(1, v, N, P, R)[2, 1] == 1 * N + 2
    assert block_to_matrix(2, v, N, P, R)[2, 1] == 2 * R + 1
    assert block_to_matrix(3, np.arange(P * R, dtype=float), N, P, R)[1, 1] == 1 * P + 1


@pytest.mark.parametrize("j", [1, 2, 3])
def test_block_moments_match_naive_design(j, rng):
    cp, data, H, log_s, sd = random_problem(rng)
    D = rng.normal(scale=0.3, size=(cp.N, cp.P))
    mean, prec = b_block_moments(j, cp, H, log_s, data, sd, D)
    m0, p0 = naive_moments(j, cp, data, H, log_s, sd, D)
    assert np.allclose(prec, p0, rtol=1e-8, atol=1e-8)
    assert np.allclose(mean, m0, rtol=1e-8, atol=1e-8)


def test_scalar_conjugate_case():
    # N = P = R = 1 with B1 = B2 = 1: y_t = b3 y_{t-1} + e_t
    y = np.array([0.5, -1.0, 0.3, 2.0, 1.1])
    data = TvarData.from_panel(y[:, None], 1)
    cp = CpTensor3(np.ones((1, 1)), np.ones((1, 1)), np.zeros((1, 1)))
    sd = np.full((3, 1), 2.0)
    mean, prec = b_block_moments(3, cp, np.eye(1), np.zeros((4, 1)), data, sd)
    xx = np.sum(y[:-1] ** 2)
    assert prec[0, 0] == pytest.approx(xx + 0.25, rel=1e-12)
    assert mean[0] == pytest.approx(np.sum(y[:-1] * y[1:]) / (xx + 0.25), rel=1e-12)


def test_no_data_returns_prior(rng):
    cp, _, H, _, sd = random_problem(rng)
    mean, prec = b_block_moments(1, cp, H, np.zeros((0, 3)), TvarData.empty(3, 2), sd)
    assert np.all(mean == 0)
    assert np.allclose(prec, np.diag(sd[:3].ravel(order="F") ** -2.0))


def test_draw_block_distribution(rng):
    cp, data, H, log_s, sd = random_problem(rng, T=10)
    mean, prec = b_block_moments(3, cp, H, log_s, data, sd)
    draws = np.array([draw_block(3, cp, H, log_s, data, sd, rng).B3.ravel(order="F") for _ in range(20_000)])
    cov = np.linalg.inv(prec)
    se = np.sqrt(np.diag(cov) / len(draws))
    assert np.all(np.abs(draws.mean(0) - mean) < 4 * se)
    assert np.allclose(np.cov(draws.T), cov, rtol=0.05, atol=0.05 * np.abs(cov).max())


def test_mvn_from_precision_rejects_indefinite(rng):
    with pytest.raises(NumericalError):
        mvn_from_precision(np.zeros(2), np.array([[1.0, 2.0], [2.0, 1.0]]), rng, sweep=7)


class TestGaussianFactor:
    def test_factor_identity(self, rng):
        Z, y, isd = rng.normal(size=(30, 4)), rng.normal(size=30), rng.uniform(0.5, 2, 4)
        mean, U = gaussian_factor(Z, y, isd)
        prec = Z.T @ Z + np.diag(isd ** 2)
        assert np.allclose(U, np.triu(U))
        assert np.allclose(U.T @ U, prec, rtol=1e-10)
        assert np.allclose(mean, np.linalg.solve(prec, Z.T @ y), rtol=1e-10)

    def test_qr_fallback_agrees(self, rng, monkeypatch):
        Z, y, isd = rng.normal(size=(30, 4)), rng.normal(size=30), rng.uniform(0.5, 2, 4)
        m0, U0 = gaussian_factor(Z, y, isd)

        def fail(*a, **k):
            raise linalg.LinAlgError("forced")
        monkeypatch.setattr(blocks.linalg, "cholesky", fail)
        m1, U1 = gaussian_factor(Z, y, isd)
        assert np.allclose(m1, m0, rtol=1e-10)
        assert np.allclose(U1.T @ U1, U0.T @ U0, rtol=1e-10)

    def test_ill_conditioned(self, rng):
        # nearly collinear columns with huge scale: normal equations lose all precision
        base = rng.normal(size=50) * 1e9
        Z = np.column_stack([base, base * (1 + 1e-15), rng.normal(size=50)])
        y = rng.normal(size=50)
        isd = np.array([1e-3, 1e-3, 1.0])
        mean, U = gaussian_factor(Z, y, isd)
        stacked = np.vstack([Z, np.diag(isd)])
        ref = np.linalg.lstsq(stacked, np.concatenate([y, np.zeros(3)]), rcond=None)[0]
        assert np.all(np.isfinite(mean))
        assert np.allclose(Z @ mean, Z @ ref, atol=1e-6 * np.abs(y).max())


def explicit_row_moments(j, resid_wo_j, H, log_s, Z, prior_var):
    """Stack every whitened equation by hand."""
    rows, target = [], []
    T, N = resid_wo_j.shape
    for t in range(T):
        for n in range(N):
            w = np.exp(-0.5 * log_s[t, n])
            rows.append(w * H[n, j] * Z[t])
            target.append(w * H[n] @ resid_wo_j[t])
    A, b = np.array(rows), np.array(target)
    prec = A.T @ A + np.diag(1.0 / prior_var)
    return np.linalg.solve(prec, A.T @ b), prec


@pytest.mark.parametrize("j", [0, 1])
def test_triangular_rows_match_explicit_stacking(j, rng):
    T, K = 20, 3
    H = np.array([[1.0, 0.0], [0.7, 1.0]])
    resid, Z = rng.normal(size=(T, 2)), rng.normal(size=(T, K))
    log_s, pv = rng.normal(size=(T, 2)), rng.uniform(0.5, 2, K)
    m, p = triangular_row_moments(j, resid, H, log_s, Z, pv)
    m0, p0 = explicit_row_moments(j, resid, H, log_s, Z, pv)
    assert np.allclose(p, p0, rtol=1e-10)
    assert np.allclose(m, m0, rtol=1e-10)


def test_draw_D_identity_H_is_ridge(rng):
    """With H = I and unit variances each row of D is a ridge regression."""
    N, P, T = 3, 2, 40
    data = TvarData.from_panel(rng.normal(size=(T + P, N)), P)
    pv = np.full((N, P), 0.5)
    draws = np.array([draw_D(np.zeros((N, P)), np.zeros((T, N)), np.eye(N), np.zeros((T, N)), data, pv, rng)
                      for _ in range(4000)])
    for j in range(N):
        Z = data.X[:, j, :]
        prec = Z.T @ Z + np.diag(1 / pv[j])
        ridge = np.linalg.solve(prec, Z.T @ data.y[:, j])
        m, p = triangular_row_moments(j, data.y, np.eye(N), np.zeros((T, N)), Z, pv[j])
        assert np.allclose(m, ridge, rtol=1e-8) and np.allclose(p, prec, rtol=1e-8)
        se = np.sqrt(np.diag(np.linalg.inv(prec)) / len(draws))
        assert np.all(np.abs(draws[:, j].mean(0) - ridge) < 4 * se)


def test_h_row_moments_gls(rng):
    T, i = 30, 2
    resid, log_s = rng.normal(size=(T, 3)), rng.normal(size=(T, 3))
    pv = np.array([0.8, 1.5])
    m, p = h_row_moments(i, resid, log_s, pv)
    w = np.exp(-log_s[:, i])
    X = -resid[:, :i]
    prec = (X * w[:, None]).T @ X + np.diag(1 / pv)
    assert np.allclose(p, prec, rtol=1e-10)
    assert np.allclose(m, np.linalg.solve(prec, (X * w[:, None]).T @ resid[:, i]), rtol=1e-10)


def test_draw_H_shape(rng):
    assert np.array_equal(draw_H(rng.normal(size=(5, 1)), np.zeros((5, 1)), np.zeros(0), rng), np.eye(1))
    H = draw_H(rng.normal(size=(5, 3)), np.zeros((5, 3)), np.ones(3), rng)
    assert np.array_equal(np.diag(H), np.ones(3)) and np.all(np.triu(H, 1) == 0)
