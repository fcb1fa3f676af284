"""Gibbs sampler for the CP Tensor VAR with stochastic volatility."""

from .blocks import b_block_moments, draw_D, draw_H, mvn_from_precision, triangular_row_moments
from .chain import ChainConfig, ChainResult, gibbs_sweep, init_state, margin_sweep, run_chain
from .interweave import interweave_pair, interweave_step
from .state import ModelState, NormalPrior, TvarData, VolatilityState
from .sv import draw_sv

__all__ = [
    "ChainConfig", "ChainResult", "ModelState", "NormalPrior", "TvarData", "VolatilityState",
    "b_block_moments", "draw_D", "draw_H", "draw_sv", "gibbs_sweep", "init_state",
    "interweave_pair", "interweave_step", "margin_sweep", "mvn_from_precision", "run_chain",
    "triangular_row_moments",
]
