"""Multi-step density forecasts and expanding-window evaluation.

For each posterior draw the log-volatilities are simulated forward from
their AR(1) law. Given that path the ``h``-step predictive of the VAR is
Gaussian with mean ``J F^h z_T`` and covariance
``sum_k Psi_{h-k} Omega_{T+k} Psi_{h-k}'``, where ``F`` is the companion
matrix and ``Omega_t = H^{-1} S_t H^{-T}``. Point forecasts average the
per-draw means; log predictive density scores average the per-draw
densities on the log scale with log-sum-exp.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from collections.abc import Callable

import numpy as np
from scipy.special import logsumexp

from .errors import ConfigError, TensorVarError
from .simulate import companion

log = logging.getLogger(__name__)

SCORE_COLUMNS = ["model", "window_end", "horizon", "series", "metric", "value"]
MODELS = ("tensor_mgp", "tensor_mgp_ownlag", "tensor_mdgdp", "flat", "minnesota", "ssvs", "ng")


@dataclass
class PosteriorDraws:
    """Model-agnostic posterior draws needed for forecasting.

    ``A`` is ``(n, N, N*P)`` including any own-lag part.
    """

    A: np.ndarray
    H: np.ndarray
    sv_mu: np.ndarray
    sv_psi: np.ndarray
    sv_sigma: np.ndarray
    h_last: np.ndarray

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def N(self) -> int:
        return self.A.shape[1]

    @property
    def P(self) -> int:
        return self.A.shape[2] // self.A.shape[1]

    @classmethod
    def from_chain(cls, res) -> "PosteriorDraws":
        A = res.coefficient_draws() + res.own_lag_matrices()
        return cls(A, res.H, res.sv_mu, res.sv_psi, res.sv_sigma, res.h_last)

    @classmethod
    def from_std_var(cls, res) -> "PosteriorDraws":
        return cls(res.A, res.H, res.sv_mu, res.sv_psi, res.sv_sigma, res.h_last)

    def subset(self, idx) -> "PosteriorDraws":
        return PosteriorDraws(self.A[idx], self.H[idx], self.sv_mu[idx], self.sv_psi[idx],
                              self.sv_sigma[idx], self.h_last[idx])


@dataclass
class PredictiveDraws:
    """Per-draw ``h``-step predictive moments and one simulated value each."""

    mean: np.ndarray  # (L, N)
    cov: np.ndarray  # (L, N, N)
    sample: np.ndarray  # (L, N)
    log_vol: np.ndarray  # (L, h, N) simulated log-variances for steps 1..h

    def point(self) -> np.ndarray:
        return self.mean.mean(axis=0)


def simulate_log_vol(post: PosteriorDraws, h: int, rng: np.random.Generator) -> np.ndarray:
    """``(n, h, N)`` forward paths of the log-variances."""
    n, N = post.h_last.shape
    out = np.empty((n, h, N))
    prev = post.h_last
    for k in range(h):
        prev = post.sv_mu + post.sv_psi * (prev - post.sv_mu) + post.sv_sigma * rng.standard_normal((n, N))
        out[:, k] = prev
    return out


def predictive_draws(post: PosteriorDraws, history: np.ndarray, h: int, rng: np.random.Generator,
                     log_vol: np.ndarray | None = None) -> PredictiveDraws:
    """Predictive moments of ``y_{T+h}`` given the last ``P`` rows of ``history``."""
    if h < 1:
        raise ValueError(f"horizon must be >= 1, got {h}")
    N, P = post.N, post.P
    history = np.asarray(history, dtype=float)
    if history.shape[0] < P or history.shape[1] != N:
        raise ValueError(f"history must have at least P={P} rows of {N} series")
    z = history[-P:][::-1].ravel()
    if log_vol is None:
        log_vol = simulate_log_vol(post, h, rng)
    L = post.n
    means = np.empty((L, N))
    covs = np.empty((L, N, N))
    samples = np.empty((L, N))
    eye = np.eye(N)
    for l in range(L):
        F = companion(post.A[l])
        Hinv = np.linalg.solve(post.H[l], eye)
        state = z.copy()
        sim = z.copy()
        Psi = [eye]
        Fk = np.eye(N * P)
        for _ in range(1, h):
            Fk = F @ Fk
            Psi.append(Fk[:N, :N])
        cov = np.zeros((N, N))
        for k in range(1, h + 1):
            Omega = (Hinv * np.exp(log_vol[l, k - 1])[None, :]) @ Hinv.T
            Pk = Psi[h - k]
            cov += Pk @ Omega @ Pk.T
            state = F @ state
            eps = Hinv @ (np.exp(0.5 * log_vol[l, k - 1]) * rng.standard_normal(N))
            sim = F @ sim
            sim[:N] += eps
        means[l] = state[:N]
        covs[l] = 0.5 * (cov + cov.T)
        samples[l] = sim[:N]
    return PredictiveDraws(means, covs, samples, log_vol)


# ---------------------------------------------------------------------------
# Scores

def msfe(sqerrs) -> float:
    return float(np.mean(np.asarray(sqerrs, dtype=float)))


def rmsfe(model_sqerrs, benchmark_sqerrs) -> float:
    bench = msfe(benchmark_sqerrs)
    if bench == 0.0:
        raise ZeroDivisionError("benchmark MSFE is zero")
    return msfe(model_sqerrs) / bench


def joint_msfe(sqerrs) -> float:
    """``sqerrs`` is ``(windows, N)``; average over windows then series."""
    return float(np.mean(np.asarray(sqerrs, dtype=float).mean(axis=1)))


def normal_logpdf(x, mean, var):
    return -0.5 * (np.log(2.0 * np.pi * var) + (x - mean) ** 2 / var)


def lpds_marginal(means, variances, realized) -> np.ndarray:
    """Per-series LPDS from ``L`` Gaussian components; returns length ``N``."""
    lp = normal_logpdf(np.asarray(realized)[None, :], np.asarray(means), np.asarray(variances))
    return logsumexp(lp, axis=0) - math.log(lp.shape[0])


def mvn_logpdf(x, means, covs) -> np.ndarray:
    """Log density of ``x`` under each of ``L`` Gaussians."""
    L, N = means.shape
    d = x[None, :] - means
    c = np.linalg.cholesky(covs)
    sol = np.linalg.solve(c, d[:, :, None])[:, :, 0]
    logdet = 2.0 * np.sum(np.log(np.diagonal(c, axis1=1, axis2=2)), axis=1)
    return -0.5 * (N * math.log(2.0 * math.pi) + logdet + np.sum(sol * sol, axis=1))


def lpds_joint(means, covs, realized) -> float:
    lp = mvn_logpdf(np.asarray(realized, float), np.asarray(means, float), np.asarray(covs, float))
    return float(logsumexp(lp) - math.log(lp.size))


def alpl(lpds_values) -> float:
    return float(np.mean(lpds_values))


# ---------------------------------------------------------------------------
# Expanding windows

@dataclass(frozen=True)
class ForecastConfig:
    """Expanding-window settings.

    ``window_start`` is the number of observations in the first training
    sample; windows advance by one observation until ``n_windows`` are done
    or the data run out for the longest horizon.
    """

    horizons: tuple = (1, 2, 4)
    window_start: int = 100
    n_windows: int | None = None
    L: int = 200
    models: tuple = ("flat", "tensor_mgp")
    P: int = 3
    burn_in: int = 2000
    draws: int = 2000
    seed: int = 0
    benchmark: str = "flat"

    def __post_init__(self):
        if not self.horizons or any(h < 1 for h in self.horizons):
            raise ConfigError("horizons must be a nonempty set of positive integers")
        if self.L < 100:
            raise ConfigError("L must be at least 100")
        for m in self.models:
            if m not in MODELS:
                raise ConfigError(f"unknown model {m!r}; expected one of {MODELS}")
        if self.window_start <= self.P + 1:
            raise ConfigError("window_start must exceed P + 1")

    def window_ends(self, T_total: int) -> list[int]:
        last = T_total - max(self.horizons)
        ends = list(range(self.window_start, last + 1))
        if self.n_windows is not None:
            ends = ends[:self.n_windows]
        return ends


Estimator = Callable[[np.ndarray, np.random.Generator], PosteriorDraws]


def make_estimator(model: str, cfg: ForecastConfig) -> Estimator:
    """Fit function ``(train_panel, rng) -> PosteriorDraws`` for a model id."""
    from .baselines import KINDS, run_std_var
    from .sampler import ChainConfig, TvarData, run_chain

    def fit(panel: np.ndarray, rng: np.random.Generator) -> PosteriorDraws:
        data = TvarData.from_panel(panel, cfg.P)
        if model in KINDS:
            return PosteriorDraws.from_std_var(run_std_var(data, model, cfg.burn_in, cfg.draws, rng))
        prior = "mdgdp" if model == "tensor_mdgdp" else "mgp"
        ccfg = ChainConfig(burn_in=cfg.burn_in, draws=cfg.draws, prior=prior, own_lag=model.endswith("ownlag"),
                           adapt=prior == "mgp", mag_threshold=5e-4, prop_threshold=0.95,
                           m_tilde=min(200, max(cfg.burn_in - 1, 0)))
        return PosteriorDraws.from_chain(run_chain(data, ccfg, rng))

    return fit


def cell_rng(seed: int, model_index: int, window_index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, model_index, window_index]))


def _pick(n: int, L: int) -> np.ndarray:
    return np.linspace(0, n - 1, L).round().astype(int)


def score_window(post: PosteriorDraws, train: np.ndarray, future: np.ndarray, horizons, L: int,
                 rng: np.random.Generator, scale: np.ndarray, center: np.ndarray) -> list[tuple]:
    """Score rows ``(horizon, series, metric, value)`` on the original data scale.

    ``train`` is standardized; ``future[h-1]`` is the realized value of
    ``y_{T+h}`` on the original scale.
    """
    post = post.subset(_pick(post.n, L))
    rows = []
    hmax = max(horizons)
    vol = simulate_log_vol(post, hmax, rng)
    for h in sorted(horizons):
        pd = predictive_draws(post, train, h, rng, log_vol=vol[:, :h])
        means = pd.mean * scale + center
        covs = pd.cov * np.outer(scale, scale)
        realized = future[h - 1]
        point = means.mean(axis=0)
        sq = (point - realized) ** 2
        lp = lpds_marginal(means, np.diagonal(covs, axis1=1, axis2=2), realized)
        for i in range(train.shape[1]):
            rows.append((h, str(i + 1), "forecast", float(point[i])))
            rows.append((h, str(i + 1), "realized", float(realized[i])))
            rows.append((h, str(i + 1), "sqerr", float(sq[i])))
            rows.append((h, str(i + 1), "lpds", float(lp[i])))
        rows.append((h, "joint", "sqerr", float(sq.mean())))
        rows.append((h, "joint", "lpds", lpds_joint(means, covs, realized)))
    return rows


def _read_done(path: Path) -> set:
    done = set()
    if path.exists():
        with path.open() as fh:
            for row in csv.DictReader(fh):
                if row["metric"] in ("lpds", "failed") and row["series"] == "joint":
                    done.add((row["model"], int(row["window_end"])))
    return done


def expanding_window_run(cfg: ForecastConfig, data: np.ndarray, out_dir: str | Path,
                         estimators: dict[str, Estimator] | None = None) -> Path:
    """Fit every model on every window and append scores to ``scores.csv``.

    Cells already present in the file are skipped, so an interrupted run
    resumes where it stopped. Each cell uses its own seed derived from
    ``(cfg.seed, model index, window index)``.
    """
    data = np.asarray(data, dtype=float)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "scores.csv"
    if estimators is None:
        estimators = {m: make_estimator(m, cfg) for m in cfg.models}
    done = _read_done(path)
    new_file = not path.exists()
    ends = cfg.window_ends(data.shape[0])
    if not ends:
        raise ConfigError("no forecast windows fit in the data")
    with path.open("a", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if new_file:
            w.writerow(SCORE_COLUMNS)
            fh.flush()
        for wi, end in enumerate(ends):
            raw = data[:end]
            center = raw.mean(axis=0)
            scale = raw.std(axis=0)
            if np.any(scale == 0):
                raise ConfigError(f"zero-variance series in window ending at {end}")
            train = (raw - center) / scale
            future = data[end:end + max(cfg.horizons)]
            for mi, model in enumerate(estimators):
                if (model, end) in done:
                    continue
                rng = cell_rng(cfg.seed, mi, wi)
                try:
                    post = estimators[model](train, rng)
                    rows = score_window(post, train, future, cfg.horizons, cfg.L, rng, scale, center)
                except (TensorVarError, np.linalg.LinAlgError, FloatingPointError, ValueError) as exc:
                    log.warning("model %s failed on window %d: %s", model, end, exc)
                    rows = [(h, "joint", "failed", 1.0) for h in sorted(cfg.horizons)]
                w.writerows([(model, end, h, s, m, repr(v)) for h, s, m, v in rows])
                fh.flush()
    return path


def read_scores(path: str | Path) -> list[dict]:
    with Path(path).open() as fh:
        rows = list(csv.DictReader(fh))
    for r in rows:
        r["window_end"] = int(r["window_end"])
        r["horizon"] = int(r["horizon"])
        r["value"] = float(r["value"])
    return rows


def summarize(rows: list[dict], benchmark: str = "flat") -> list[dict]:
    """RMSFE against ``benchmark`` and ALPL per model, horizon and series.

    Only windows where both the model and the benchmark produced scores
    enter a comparison.
    """
    table: dict = {}
    for r in rows:
        table.setdefault((r["model"], r["horizon"], r["series"], r["metric"]), {})[r["window_end"]] = r["value"]
    out = []
    keys = sorted({(m, h, s) for (m, h, s, metric) in table if metric == "sqerr"})
    for model, h, s in keys:
        sq = table[(model, h, s, "sqerr")]
        bench = table.get((benchmark, h, s, "sqerr"), {})
        common = sorted(set(sq) & set(bench))
        rel = rmsfe([sq[w] for w in common], [bench[w] for w in common]) if common else float("nan")
        lp = table.get((model, h, s, "lpds"), {})
        out.append({"model": model, "horizon": h, "series": s, "rmsfe": rel,
                    "msfe": msfe(list(sq.values())), "alpl": alpl(list(lp.values())) if lp else float("nan"),
                    "windows": len(sq)})
    return out
