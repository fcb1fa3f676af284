"""Normal-gamma shrinkage for H and D, and the M-DGDP prior on CP margins.

Normal-gamma: ``c_k ~ N(0, (2 / lambda2) * psi_k)``, ``psi_k ~ Gamma(a, a)``,
``lambda2 ~ Gamma(c0, d0)``, ``a ~ Exp(1)``.

M-DGDP (multiway Dirichlet generalized double Pareto): for block ``j``,
column ``r`` and row ``k``, ``beta ~ N(0, phi_r * tau * w)``,
``w ~ Exp(lambda_jr / 2)``, ``lambda_jr ~ Gamma(a_lam, b_lam)``,
``Phi ~ Dirichlet(alpha, ..., alpha)``, ``tau ~ Gamma(R alpha, alpha R^(1/3))``,
``alpha`` uniform on a finite grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from .gig import sample_gig_array
from .mgp import mh_log_scale

_CHI_FLOOR = 1e-300
_PHI_FLOOR = 1e-300


# ---------------------------------------------------------------------------
# Normal-gamma

@dataclass
class NormalGammaState:
    """Global-local normal-gamma scales for a coefficient vector.

    Attributes
    ----------
    lambda2 : float
        Global parameter; prior variance of coefficient ``k`` is
        ``2 * psi[k] / lambda2``.
    psi : ndarray
        Local scales, one per coefficient.
    a : float
        Shape of the local scale prior ``Gamma(a, a)``.
    """

    lambda2: float
    psi: np.ndarray
    a: float
    c0: float = 0.01
    d0: float = 0.01
    mh_step: float = 0.2
    accepted: int = 0
    tries: int = 0

    def __post_init__(self):
        self.psi = np.asarray(self.psi, dtype=float).copy()
        if not (self.lambda2 > 0 and self.a > 0 and np.all(self.psi > 0)):
            raise ValueError("normal-gamma scales must be positive")

    @classmethod
    def default(cls, size: int, **kw) -> "NormalGammaState":
        return cls(lambda2=1.0, psi=np.ones(size), a=1.0, **kw)

    def variances(self) -> np.ndarray:
        return 2.0 * self.psi / self.lambda2


def ng_log_target_a(a: float, psi: np.ndarray) -> float:
    """Log posterior of ``a`` given the local scales, ``Exp(1)`` prior."""
    k = psi.size
    return -a + k * (a * math.log(a) - gammaln(a)) + (a - 1.0) * float(np.sum(np.log(psi))) - a * float(np.sum(psi))


def ng_update(state: NormalGammaState, coeffs, rng: np.random.Generator) -> NormalGammaState:
    """Gibbs sweep over ``psi``, ``lambda2`` then a Metropolis step for ``a``."""
    c = np.asarray(coeffs, dtype=float).ravel()
    if c.size != state.psi.size:
        raise ValueError(f"expected {state.psi.size} coefficients, got {c.size}")
    if c.size == 0:
        return state
    chi = np.maximum(state.lambda2 * c * c / 2.0, _CHI_FLOOR)
    state.psi = sample_gig_array(state.a - 0.5, chi, 2.0 * state.a, rng)
    # guard against underflow to exactly zero for extreme shrinkage
    np.maximum(state.psi, 1e-300, out=state.psi)
    shape = state.c0 + 0.5 * c.size
    rate = state.d0 + float(np.sum(c * c / (4.0 * state.psi)))
    state.lambda2 = rng.gamma(shape, 1.0 / rate)
    psi = state.psi
    state.a, acc = mh_log_scale(state.a, lambda a: ng_log_target_a(a, psi), state.mh_step, rng)
    state.accepted += int(acc)
    state.tries += 1
    return state


# ---------------------------------------------------------------------------
# M-DGDP

A_LAMBDA = 3.0
B_LAMBDA = A_LAMBDA ** (1.0 / 6.0)


def alpha_grid(R: int, size: int = 10) -> np.ndarray:
    """Equally spaced grid on ``[R^-3, R^-0.01]``."""
    if size == 1:
        return np.array([float(R) ** -3])
    return np.linspace(float(R) ** -3, float(R) ** -0.01, size)


@dataclass
class MdgdpState:
    """M-DGDP hyperparameters for a ``(2N+P) x R`` tensor matrix.

    ``W`` is laid out like the tensor matrix; ``lambda_rate`` is ``(3, R)``
    with one rate per block and column.
    """

    phi_mix: np.ndarray
    tau_g: float
    W: np.ndarray
    lambda_rate: np.ndarray
    alpha: float
    N: int
    P: int
    grid: np.ndarray = field(default=None)

    def __post_init__(self):
        self.phi_mix = np.asarray(self.phi_mix, dtype=float)
        self.W = np.asarray(self.W, dtype=float)
        self.lambda_rate = np.asarray(self.lambda_rate, dtype=float)
        R = self.phi_mix.size
        if self.grid is None:
            self.grid = alpha_grid(R)
        self.grid = np.asarray(self.grid, dtype=float)
        if self.W.shape != (2 * self.N + self.P, R) or self.lambda_rate.shape != (3, R):
            raise ValueError("M-DGDP state dimensions are inconsistent")
        if abs(self.phi_mix.sum() - 1.0) > 1e-12 or np.any(self.phi_mix < 0):
            raise ValueError("phi_mix must lie on the simplex")

    @property
    def R(self) -> int:
        return self.phi_mix.size

    def block_rows(self):
        N, P = self.N, self.P
        return (slice(0, N), slice(N, 2 * N), slice(2 * N, 2 * N + P))

    def row_lambda(self) -> np.ndarray:
        """``lambda_rate`` expanded to the tensor-matrix layout."""
        return np.repeat(self.lambda_rate, [self.N, self.N, self.P], axis=0)

    def prior_variance_matrix(self) -> np.ndarray:
        return self.phi_mix[None, :] * self.tau_g * self.W

    def prior_sd_matrix(self) -> np.ndarray:
        return np.sqrt(self.prior_variance_matrix())

    def b_tau(self, alpha: float | None = None) -> float:
        a = self.alpha if alpha is None else alpha
        return a * self.R ** (1.0 / 3.0)

    def update(self, B: np.ndarray, rng: np.random.Generator) -> None:
        mdgdp_update(self, B, rng)


def mdgdp_draw_prior(N: int, P: int, R: int, rng: np.random.Generator, grid=None) -> MdgdpState:
    grid = alpha_grid(R) if grid is None else np.asarray(grid, dtype=float)
    alpha = float(grid[rng.integers(grid.size)])
    tau = max(rng.gamma(R * alpha, 1.0 / (alpha * R ** (1.0 / 3.0))), _PHI_FLOOR)
    phi = rng.dirichlet(np.full(R, alpha)) if R > 1 else np.ones(1)
    phi = _renormalize(phi)
    lam = rng.gamma(A_LAMBDA, 1.0 / B_LAMBDA, size=(3, R))
    lam_rows = np.repeat(lam, [N, N, P], axis=0)
    W = rng.exponential(2.0 / lam_rows)
    return MdgdpState(phi, tau, W, lam, alpha, N, P, grid)


def mdgdp_draw_margins(state: MdgdpState, rng: np.random.Generator) -> np.ndarray:
    return rng.standard_normal(state.W.shape) * state.prior_sd_matrix()


def _renormalize(phi: np.ndarray) -> np.ndarray:
    # small alpha makes Dirichlet weights underflow; keep them strictly positive
    phi = np.maximum(phi, _PHI_FLOOR)
    s = phi.sum()
    if not s > 0:
        phi = np.full(phi.size, 1.0 / phi.size)
        s = 1.0
    return phi / s


def mdgdp_log_alpha(alpha: float, phi: np.ndarray, tau: float) -> float:
    """Log of ``Dirichlet(phi; alpha) * Gamma(tau; R alpha, alpha R^(1/3))``."""
    R = phi.size
    b = alpha * R ** (1.0 / 3.0)
    out = (R * alpha) * math.log(b) - gammaln(R * alpha) + (R * alpha - 1.0) * math.log(tau) - b * tau
    if R > 1:
        out += gammaln(R * alpha) - R * gammaln(alpha) + (alpha - 1.0) * float(np.sum(np.log(np.maximum(phi, 1e-300))))
    return out


def mdgdp_update(state: MdgdpState, B, rng: np.random.Generator) -> MdgdpState:
    """One Gibbs sweep of the M-DGDP hyperparameters given the margins.

    Order: ``w``, ``lambda``, then ``(tau, Phi)`` jointly through
    ``psi_r = phi_r tau ~ GIG`` followed by normalization, then ``alpha``.
    """
    B = np.asarray(getattr(B, "stacked", lambda: B)(), dtype=float)
    if B.shape != state.W.shape:
        raise ValueError(f"tensor matrix shape {B.shape} != {state.W.shape}")
    B2 = B * B
    scale = state.phi_mix[None, :] * state.tau_g
    lam_rows = state.row_lambda()
    chi = np.maximum(B2 / scale, _CHI_FLOOR)
    state.W = sample_gig_array(0.5, chi, lam_rows, rng)
    np.maximum(state.W, 1e-300, out=state.W)

    rows = np.array([state.N, state.N, state.P], dtype=float)[:, None]
    wsum = np.stack([state.W[s].sum(axis=0) for s in state.block_rows()])
    state.lambda_rate = rng.gamma(A_LAMBDA + rows, 1.0 / (B_LAMBDA + 0.5 * wsum))

    # psi_r = phi_r * tau are independent Gamma(alpha, b_tau) a priori when a_tau = R alpha
    Q = np.maximum(np.sum(B2 / state.W, axis=0), _CHI_FLOOR)
    p_total = B.shape[0]
    psi = sample_gig_array(state.alpha - 0.5 * p_total, Q, 2.0 * state.b_tau(), rng)
    psi = np.maximum(psi, 1e-300)
    state.tau_g = float(psi.sum())
    state.phi_mix = _renormalize(psi / state.tau_g)

    if state.grid.size == 1:
        state.alpha = float(state.grid[0])
    else:
        logp = np.array([mdgdp_log_alpha(a, state.phi_mix, state.tau_g) for a in state.grid])
        prob = np.exp(logp - logp.max())
        prob /= prob.sum()
        state.alpha = float(state.grid[rng.choice(state.grid.size, p=prob)])
    return state
