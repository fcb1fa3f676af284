"""Generalized Inverse Gaussian draws with parameter validation.

Density ``p(x) ~ x^(lam-1) exp(-(chi/x + psi x)/2)`` on ``x > 0``.
"""

from __future__ import annotations

import numpy as np

from . import kernels


def _check(lam: float, chi: float, psi: float) -> None:
    if not (np.isfinite(lam) and np.isfinite(chi) and np.isfinite(psi)):
        raise ValueError(f"GIG parameters must be finite, got ({lam}, {chi}, {psi})")
    if chi < 0 or psi < 0:
        raise ValueError(f"GIG requires chi >= 0 and psi >= 0, got chi={chi}, psi={psi}")
    if chi == 0 and psi == 0:
        raise ValueError("GIG undefined with chi = psi = 0")
    if chi == 0 and lam <= 0:
        raise ValueError(f"GIG with chi = 0 requires lam > 0, got lam={lam}")
    if psi == 0 and lam >= 0:
        raise ValueError(f"GIG with psi = 0 requires lam < 0, got lam={lam}")


def sample_gig(lam: float, chi: float, psi: float, rng: np.random.Generator) -> float:
    """One draw from GIG(lam, chi, psi).

    Raises
    ------
    ValueError
        If the parameters fall outside the region where the density is proper.
    """
    lam, chi, psi = float(lam), float(chi), float(psi)
    _check(lam, chi, psi)
    return kernels.gig_draw(lam, chi, psi, rng)


def sample_gig_array(lam, chi, psi, rng: np.random.Generator) -> np.ndarray:
    """Elementwise GIG draws; arguments broadcast against each other."""
    lam, chi, psi = np.broadcast_arrays(np.asarray(lam, float), np.asarray(chi, float), np.asarray(psi, float))
    shape = lam.shape
    lam, chi, psi = (np.array(a, dtype=float).ravel() for a in (lam, chi, psi))
    for k in range(lam.size):
        _check(lam[k], chi[k], psi[k])
    out = np.empty(lam.size)
    kernels.gig_fill(lam, chi, psi, rng, out)
    return out.reshape(shape)
