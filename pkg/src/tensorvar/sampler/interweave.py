"""Interweaving moves between the base and the rescaled parameterizations.

A move on the pair ``(src, dst)`` fixes ``B*_src = B_src D^{-1}`` and
``B*_dst = B_dst D`` with ``D = diag(first row of B_src)``, draws a new
squared first row from its GIG conditional and maps back. The tensor is
unchanged because each column is only rescaled by ``d`` and ``1/d``.
"""

from __future__ import annotations

import logging

import numpy as np

from ..gig import sample_gig
from ..tensor import CpTensor3

log = logging.getLogger(__name__)

# (source block, destination block), applied after base draws of B1, B2, B3.
PAIRS = ((1, 2), (2, 3), (3, 1))


def pair_gig_params(src: np.ndarray, dst: np.ndarray, sd_src: np.ndarray, sd_dst: np.ndarray, r: int):
    """``(lam, chi, psi)`` for the squared first-row margin of column ``r``.

    ``src``/``dst`` are the starred (rescaled) blocks, so ``src[0, r] == 1``.
    """
    lam = 0.5 * (src.shape[0] - dst.shape[0])
    chi = float(np.sum((dst[:, r] / sd_dst[:, r]) ** 2))
    psi = float(np.sum((src[1:, r] / sd_src[1:, r]) ** 2)) + 1.0 / sd_src[0, r] ** 2
    return lam, chi, psi


def interweave_pair(B_src: np.ndarray, B_dst: np.ndarray, sd_src: np.ndarray, sd_dst: np.ndarray,
                    rng: np.random.Generator):
    """One interweaving move; returns ``(new_src, new_dst, n_skipped)``.

    Signs of the first-row entries are kept. Columns whose first-row entry is
    exactly zero, or whose partner column is identically zero, are skipped.
    """
    B_src = np.array(B_src, dtype=float, copy=True)
    B_dst = np.array(B_dst, dtype=float, copy=True)
    skipped = 0
    for r in range(B_src.shape[1]):
        d = B_src[0, r]
        if d == 0.0:
            skipped += 1
            log.debug("interweaving skipped: zero first-row entry in column %d", r)
            continue
        star_src = B_src[:, r] / d
        star_dst = B_dst[:, r] * d
        lam, chi, psi = pair_gig_params(star_src[:, None], star_dst[:, None], sd_src[:, [r]], sd_dst[:, [r]], 0)
        if chi == 0.0:
            skipped += 1
            log.debug("interweaving skipped: zero partner column %d", r)
            continue
        d_new = np.copysign(np.sqrt(sample_gig(lam, chi, psi, rng)), d)
        B_src[:, r] = star_src * d_new
        B_src[0, r] = d_new
        B_dst[:, r] = star_dst / d_new
    return B_src, B_dst, skipped


def _split(sd: np.ndarray, N: int, P: int):
    return sd[:N], sd[N:2 * N], sd[2 * N:2 * N + P]


def interweave_step(cp: CpTensor3, pair: tuple, prior_sd: np.ndarray, rng: np.random.Generator):
    """Apply the move for ``pair`` (one of :data:`PAIRS`) to ``cp``."""
    src, dst = pair
    blocks = [cp.B1, cp.B2, cp.B3]
    sds = _split(prior_sd, cp.N, cp.P)
    new_src, new_dst, skipped = interweave_pair(blocks[src - 1], blocks[dst - 1], sds[src - 1], sds[dst - 1], rng)
    blocks[src - 1] = new_src
    blocks[dst - 1] = new_dst
    return CpTensor3(*blocks), skipped
