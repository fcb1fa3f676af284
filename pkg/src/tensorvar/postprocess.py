"""Label and sign alignment of CP margins across posterior draws.

Columns of every draw are permuted to match a pivot draw by a greedy search
on the temporal loadings ``B3``. Signs are then fixed on ``B1`` and ``B2``,
and ``B3`` absorbs the product of both flips so that every column's
three-way outer product, and hence the tensor, is unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .rank import AdaptConfig, small_proportion
from .tensor import CpTensor3, cp_components


@dataclass(frozen=True)
class Alignment:
    """Result of matching one draw: ``perm[r]`` is the source column placed at ``r``."""

    perm: np.ndarray
    signs: np.ndarray  # (3, R) flips applied to B1, B2, B3 after permutation


def condition_numbers(B3_draws: np.ndarray) -> np.ndarray:
    """Largest singular value of each ``B3`` draw, stacked as ``(n, P, R)``."""
    return np.linalg.norm(np.asarray(B3_draws, dtype=float), ord=2, axis=(1, 2))


def select_pivot(B3_draws) -> int:
    """Index of the draw whose ``sigma_max(B3)`` is the (lower) median."""
    kappa = condition_numbers(np.asarray(B3_draws))
    if kappa.size == 0:
        raise ValueError("cannot pick a pivot from an empty collection")
    order = np.argsort(kappa, kind="stable")
    return int(order[(kappa.size - 1) // 2])


def _distance_matrix(B3: np.ndarray, pivot_B3: np.ndarray) -> np.ndarray:
    """``theta[r, c]``: distance from draw column ``r`` to ``(pivot, -pivot)[c]``."""
    both = np.concatenate([pivot_B3, -pivot_B3], axis=1)
    diff = B3[:, :, None] - both[:, None, :]
    return np.sqrt(np.sum(diff * diff, axis=0))


def greedy_permutation(B3: np.ndarray, pivot_B3: np.ndarray) -> np.ndarray:
    """Greedy label matching; ``perm[c]`` is the draw column assigned to pivot column ``c``.

    Ties go to the lowest row index, then the lowest column index.
    """
    R = B3.shape[1]
    theta = _distance_matrix(B3, pivot_B3)
    perm = np.full(R, -1, dtype=int)
    for _ in range(R):
        k = int(np.argmin(theta))
        r, c = divmod(k, 2 * R)
        target = c % R
        perm[target] = r
        theta[r, :] = np.inf
        theta[:, target] = np.inf
        theta[:, target + R] = np.inf
    return perm


def match_draw(B1: np.ndarray, B2: np.ndarray, B3: np.ndarray, pivot: CpTensor3):
    """Align one draw to ``pivot``; returns ``(CpTensor3, Alignment)``."""
    if B1.shape[1] != pivot.R:
        raise ValueError(f"draw rank {B1.shape[1]} differs from pivot rank {pivot.R}")
    perm = greedy_permutation(B3, pivot.B3)
    A1, A2, A3 = B1[:, perm].copy(), B2[:, perm].copy(), B3[:, perm].copy()
    signs = np.ones((3, pivot.R))
    for j, (M, P_) in enumerate(((A1, pivot.B1), (A2, pivot.B2))):
        keep = np.sum((M - P_) ** 2, axis=0)
        flip = np.sum((M + P_) ** 2, axis=0)
        s = np.where(flip < keep, -1.0, 1.0)
        M *= s
        signs[j] = s
    signs[2] = signs[0] * signs[1]
    A3 *= signs[2]
    return CpTensor3(A1, A2, A3), Alignment(perm, signs)


def align_draws(B_draws: np.ndarray, N: int, P: int, pivot_index: int | None = None):
    """Align a ``(n, 2N+P, R)`` stack; returns ``(aligned stack, pivot index, alignments)``."""
    B_draws = np.asarray(B_draws, dtype=float)
    if B_draws.shape[0] == 0:
        raise ValueError("no draws to align")
    if pivot_index is None:
        pivot_index = select_pivot(B_draws[:, 2 * N:])
    pivot = CpTensor3.from_stacked(B_draws[pivot_index], N, P)
    out = np.empty_like(B_draws)
    aligns = []
    for k, B in enumerate(B_draws):
        cp, al = match_draw(B[:N], B[N:2 * N], B[2 * N:], pivot)
        out[k] = cp.stacked()
        aligns.append(al)
    return out, pivot_index, aligns


def final_rank_shrink(B_draws: np.ndarray, N: int, P: int, cfg: AdaptConfig):
    """Drop columns whose average small-entry proportion exceeds ``prop_threshold``.

    Returns ``(reduced draws, kept column indices)``. At least one column,
    the one with the lowest average proportion, is always kept.
    """
    B_draws = np.asarray(B_draws, dtype=float)
    props = np.stack([small_proportion(cp_components(CpTensor3.from_stacked(B, N, P)), cfg.mag_threshold)
                      for B in B_draws])
    avg = props.mean(axis=0)
    keep = np.flatnonzero(avg <= cfg.prop_threshold)
    if keep.size == 0:
        keep = np.array([int(np.argmin(avg))])
    return B_draws[:, :, keep], keep
