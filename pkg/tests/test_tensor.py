import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tensorvar.tensor import (CpTensor3, coefficient_matrix, cp_components, cp_compose, factor_form_predict,
                              lag_design, lag_matrices, mode1_matricize, outer3, unfold_to_tensor)


def random_cp(rng, N=4, P=2, R=3):
    return CpTensor3(rng.standard_normal((N, R)), rng.standard_normal((N, R)), rng.standard_normal((P, R)))


def brute_compose(cp):
    N, P, R = cp.N, cp.P, cp.R
    out = np.zeros((N, N, P))
    for i, j, p in itertools.product(range(N), range(N), range(P)):
        for r in range(R):
            out[i, j, p] += cp.B1[i, r] * cp.B2[j, r] * cp.B3[p, r]
    return out


class TestOuter3:
    def test_unit_vectors(self):
        t = outer3([1, 0], [0, 1], [1])
        expected = np.zeros((2, 2, 1))
        expected[0, 1, 0] = 1.0
        assert np.array_equal(t, expected)

    def test_zero_vector_annihilates(self):
        assert not outer3([1, 2], [0, 0], [3, 4]).any()

    def test_triple_loop(self):
        b1, b2, b3 = np.array([2.0, 1.0]), np.array([1.0, 3.0]), np.array([1.0, 0.5])
        t = outer3(b1, b2, b3)
        for i, j, p in itertools.product(range(2), range(2), range(2)):
            assert t[i, j, p] == b1[i] * b2[j] * b3[p]

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            outer3([1, 2], [1, 2, 3], [1])


class TestCompose:
    def test_rank_one_ones(self):
        cp = CpTensor3(np.ones((3, 1)), np.ones((3, 1)), np.ones((2, 1)))
        assert np.array_equal(cp_compose(cp), np.ones((3, 3, 2)))

    def test_brute_force(self, rng):
        cp = random_cp(rng, N=4, P=2, R=3)
        assert np.allclose(cp_compose(cp), brute_compose(cp), rtol=0, atol=1e-12)

    def test_components_sum(self, rng):
        cp = random_cp(rng)
        comps = cp_components(cp)
        assert comps.shape == (3, 4, 4, 2)
        assert np.allclose(comps.sum(axis=0), cp_compose(cp), atol=1e-12)

    @pytest.mark.parametrize("pair", [(0, 1), (1, 2), (2, 0)])
    def test_scaling_invariance(self, rng, pair):
        cp = random_cp(rng)
        s = rng.uniform(0.2, 3.0, size=cp.R) * rng.choice([-1, 1], size=cp.R)
        blocks = [cp.B1, cp.B2, cp.B3]
        blocks[pair[0]] = blocks[pair[0]] / s
        blocks[pair[1]] = blocks[pair[1]] * s
        assert np.allclose(cp_compose(CpTensor3(*blocks)), cp_compose(cp), rtol=0, atol=1e-12)

    def test_permutation_invariance(self, rng):
        cp = random_cp(rng)
        perm = rng.permutation(cp.R)
        assert np.allclose(cp_compose(cp.select(perm)), cp_compose(cp), rtol=0, atol=1e-12)

    def test_linearity_in_columns(self, rng):
        cp = random_cp(rng, R=4)
        a, b = cp.select([0, 1]), cp.select([2, 3])
        assert np.allclose(cp_compose(a) + cp_compose(b), cp_compose(cp), atol=1e-12)

    def test_stacked_roundtrip(self, rng):
        cp = random_cp(rng)
        back = CpTensor3.from_stacked(cp.stacked(), cp.N, cp.P)
        assert np.array_equal(back.stacked(), cp.stacked())

    def test_invalid(self):
        with pytest.raises(ValueError):
            CpTensor3(np.ones((3, 2)), np.ones((3, 1)), np.ones((2, 2)))
        with pytest.raises(ValueError):
            CpTensor3(np.ones((3, 2)), np.ones((3, 2)), np.full((2, 2), np.nan))


class TestMatricize:
    def test_zero(self):
        assert not mode1_matricize(np.zeros((3, 3, 2))).any()

    def test_index_map(self):
        e1, e2 = np.array([1.0, 0.0]), np.array([0.0, 1.0])
        A = mode1_matricize(outer3(e1, e2, e1))
        expected = np.zeros((2, 4))
        expected[0, 1] = 1.0  # row 1, column 2 (1-based)
        assert np.array_equal(A, expected)

    def test_unfold_roundtrip(self, rng):
        t = rng.standard_normal((3, 3, 4))
        assert np.array_equal(unfold_to_tensor(mode1_matricize(t), 4), t)

    def test_coefficient_matrix_matches(self, rng):
        cp = random_cp(rng)
        assert np.allclose(coefficient_matrix(cp), mode1_matricize(cp_compose(cp)), atol=1e-12)

    def test_predict_consistency(self, rng):
        cp = random_cp(rng, N=4, P=3, R=2)
        A = mode1_matricize(cp_compose(cp))
        for _ in range(20):
            X = rng.standard_normal((4, 3))
            x = X.T.ravel()  # (y_{t-1}', ..., y_{t-P}')'
            yhat, _ = factor_form_predict(cp, X)
            assert np.allclose(A @ x, yhat, rtol=0, atol=1e-10)


class TestFactorForm:
    def test_zero_input(self, rng):
        yhat, f = factor_form_predict(random_cp(rng), np.zeros((4, 2)))
        assert not yhat.any() and not f.any()

    def test_sum_of_ones(self, rng):
        N, P = 4, 3
        B1 = rng.standard_normal((N, 1))
        cp = CpTensor3(B1, np.ones((N, 1)), np.ones((P, 1)))
        yhat, f = factor_form_predict(cp, np.ones((N, P)))
        assert f[0] == N * P
        assert np.allclose(yhat, B1[:, 0] * N * P)

    def test_batch(self, rng):
        cp = random_cp(rng)
        X = rng.standard_normal((5, 4, 2))
        yhat, _ = factor_form_predict(cp, X)
        for t in range(5):
            assert np.allclose(yhat[t], factor_form_predict(cp, X[t])[0])

    def test_bad_shape(self, rng):
        with pytest.raises(ValueError):
            factor_form_predict(random_cp(rng), np.ones((3, 2)))


def test_lag_design_layout():
    Y = np.arange(12, dtype=float).reshape(6, 2)
    y, x = lag_design(Y, 2)
    assert np.array_equal(y, Y[2:])
    assert np.array_equal(x[0], np.concatenate([Y[1], Y[0]]))
    X = lag_matrices(x, 2, 2)
    assert np.array_equal(X[0][:, 0], Y[1]) and np.array_equal(X[0][:, 1], Y[0])
    with pytest.raises(ValueError):
        lag_design(Y[:2], 2)


@settings(max_examples=50, deadline=None)
@given(N=st.integers(1, 5), P=st.integers(1, 4), R=st.integers(1, 4), seed=st.integers(0, 2**32 - 1))
def test_property_representations_agree(N, P, R, seed):
    rng = np.random.default_rng(seed)
    cp = random_cp(rng, N, P, R)
    X = rng.standard_normal((N, P))
    yhat, _ = factor_form_predict(cp, X)
    assert np.allclose(coefficient_matrix(cp) @ X.T.ravel(), yhat, rtol=0, atol=1e-10)
