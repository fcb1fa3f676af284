"""Third-order CP tensors for the coefficient array of a Tensor VAR.

The coefficient tensor has shape ``(N, N, P)``: entry ``(i1, i2, p)`` is the
effect of lag ``p + 1`` of series ``i2`` on series ``i1``. A rank-``R`` CP
tensor is held as its three factor matrices ``B1`` (response loading, N x R),
``B2`` (predictor loading, N x R) and ``B3`` (temporal loading, P x R).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class CpTensor3:
    B1: np.ndarray
    B2: np.ndarray
    B3: np.ndarray

    def __post_init__(self):
        B1 = np.asarray(self.B1, dtype=float)
        B2 = np.asarray(self.B2, dtype=float)
        B3 = np.asarray(self.B3, dtype=float)
        if B1.ndim != 2 or B2.ndim != 2 or B3.ndim != 2:
            raise ValueError("factor matrices must be 2-D")
        if B1.shape != B2.shape:
            raise ValueError(f"B1 {B1.shape} and B2 {B2.shape} must share shape (N, R)")
        if B3.shape[1] != B1.shape[1]:
            raise ValueError("B3 must have the same number of columns as B1 and B2")
        if B1.shape[1] < 1:
            raise ValueError("rank must be at least 1")
        for name, arr in (("B1", B1), ("B2", B2), ("B3", B3)):
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} has non-finite entries")
        object.__setattr__(self, "B1", B1)
        object.__setattr__(self, "B2", B2)
        object.__setattr__(self, "B3", B3)

    @property
    def N(self) -> int:
        return self.B1.shape[0]

    @property
    def P(self) -> int:
        return self.B3.shape[0]

    @property
    def R(self) -> int:
        return self.B1.shape[1]

    def stacked(self) -> np.ndarray:
        """Tensor matrix: ``B1``, ``B2``, ``B3`` stacked row-wise, (2N+P) x R."""
        return np.vstack([self.B1, self.B2, self.B3])

    @classmethod
    def from_stacked(cls, B: np.ndarray, N: int, P: int) -> "CpTensor3":
        B = np.asarray(B, dtype=float)
        if B.shape[0] != 2 * N + P:
            raise ValueError(f"tensor matrix has {B.shape[0]} rows, expected {2 * N + P}")
        return cls(B[:N], B[N:2 * N], B[2 * N:])

    def select(self, columns) -> "CpTensor3":
        cols = np.asarray(columns, dtype=int)
        return CpTensor3(self.B1[:, cols], self.B2[:, cols], self.B3[:, cols])


def outer3(b1, b2, b3) -> np.ndarray:
    """Three-way outer product; entry ``(i, j, p)`` is ``b1[i] * b2[j] * b3[p]``."""
    b1 = np.asarray(b1, dtype=float)
    b2 = np.asarray(b2, dtype=float)
    b3 = np.asarray(b3, dtype=float)
    if b1.ndim != 1 or b2.ndim != 1 or b3.ndim != 1:
        raise ValueError("outer3 expects three 1-D vectors")
    if b1.shape != b2.shape:
        raise ValueError(f"b1 and b2 must have equal length, got {b1.size} and {b2.size}")
    return b1[:, None, None] * b2[None, :, None] * b3[None, None, :]


def cp_components(cp: CpTensor3) -> np.ndarray:
    """Per-column rank-one tensors, shape ``(R, N, N, P)``."""
    return np.einsum("ir,jr,pr->rijp", cp.B1, cp.B2, cp.B3)


def cp_compose(cp: CpTensor3) -> np.ndarray:
    """Dense ``(N, N, P)`` tensor ``sum_r B1[:, r] o B2[:, r] o B3[:, r]``."""
    return np.einsum("ir,jr,pr->ijp", cp.B1, cp.B2, cp.B3)


def mode1_matricize(t: np.ndarray) -> np.ndarray:
    """Mode-1 unfolding ``(N, N, P) -> (N, N*P)``.

    Column ``p * N + i2`` holds entry ``(i1, i2, p)`` so that the result
    multiplies the lag-stacked regressor ``(y_{t-1}', ..., y_{t-P}')'``.
    """
    t = np.asarray(t, dtype=float)
    if t.ndim != 3 or t.shape[0] != t.shape[1]:
        raise ValueError(f"expected an (N, N, P) tensor, got shape {t.shape}")
    N, _, P = t.shape
    return t.transpose(0, 2, 1).reshape(N, N * P)


def unfold_to_tensor(A: np.ndarray, P: int) -> np.ndarray:
    """Inverse of :func:`mode1_matricize`."""
    A = np.asarray(A, dtype=float)
    N = A.shape[0]
    if A.shape[1] != N * P:
        raise ValueError(f"coefficient matrix shape {A.shape} does not match P={P}")
    return A.reshape(N, P, N).transpose(0, 2, 1)


def coefficient_matrix(cp: CpTensor3) -> np.ndarray:
    """The N x NP VAR coefficient matrix implied by ``cp``."""
    B1, B2, B3 = cp.B1, cp.B2, cp.B3
    # (N, P, N) -> column p * N + i2
    return np.einsum("ir,pr,jr->ipj", B1, B3, B2).reshape(cp.N, cp.N * cp.P)


def factor_form_predict(cp: CpTensor3, X: np.ndarray):
    """Fitted value via the factor representation.

    ``X`` is the N x P lag matrix ``(y_{t-1}, ..., y_{t-P})``. Returns
    ``(yhat, factors)`` with ``factors[r] = sum_{i,p} B2[i, r] B3[p, r] X[i, p]``.
    A leading batch axis on ``X`` (shape ``(T, N, P)``) is supported.
    """
    X = np.asarray(X, dtype=float)
    if X.shape[-2:] != (cp.N, cp.P):
        raise ValueError(f"lag matrix must have trailing shape {(cp.N, cp.P)}, got {X.shape}")
    factors = np.einsum("...ip,ir,pr->...r", X, cp.B2, cp.B3)
    yhat = factors @ cp.B1.T
    return yhat, factors


def lag_design(Y: np.ndarray, P: int):
    """Split a ``(T_total, N)`` panel into targets and lag-stacked regressors.

    Returns ``(y, x)`` with ``y`` of shape ``(T_total - P, N)`` and ``x`` of
    shape ``(T_total - P, N * P)`` where ``x[t] = (y_{t-1}', ..., y_{t-P}')'``.
    """
    Y = np.asarray(Y, dtype=float)
    T_total, N = Y.shape
    if T_total <= P:
        raise ValueError(f"need more than P={P} observations, got {T_total}")
    y = Y[P:]
    x = np.hstack([Y[P - p - 1:T_total - p - 1] for p in range(P)])
    return y, x


def lag_matrices(x: np.ndarray, N: int, P: int) -> np.ndarray:
    """Reshape lag-stacked regressors ``(T, N*P)`` into ``(T, N, P)`` lag matrices."""
    x = np.asarray(x, dtype=float)
    return x.reshape(x.shape[0], P, N).transpose(0, 2, 1)
