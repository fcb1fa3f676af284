"""Command-line entry point: ``tensorvar {simulate,fit,postprocess,diagnose,forecast}``.

Every run reads one YAML config, writes its artifacts into ``--out`` and
stamps them with a hash of the fully resolved config. Outputs are staged in
a temporary directory and moved into place only on success.

Exit codes: 0 success, 1 unexpected error, 2 invalid config, 3 data
problem, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import copy
import csv
import logging
import shutil
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from ._accel import backend_name
from .errors import ConfigError, DataError, TensorVarError
from .io import (chain_arrays, config_hash, read_npz, write_json, write_npz, write_rank_trajectory)

log = logging.getLogger("tensorvar")

MODES = ("simulate", "fit", "postprocess", "diagnose", "forecast")
MODELS = ("tensor_mgp", "tensor_mgp_ownlag", "tensor_mdgdp", "flat", "minnesota", "ssvs", "ng")

DEFAULTS = {
    "model": "tensor_mgp",
    "P": 3,
    "data": None,
    "interweave": True,
    "chain": {"burn_in": 2000, "draws": 2000, "thin": 1, "seed": 0},
    "adapt": {"enabled": True, "R_init": None, "alpha0": -1.0, "alpha1": -5e-4, "m_tilde": 200,
              "mag_threshold": 1e-3, "prop_threshold": 0.9},
    "mgp": {"nu": 3.0, "a1": 2.0, "a2": 3.0},
    "simulate": {"N": 10, "R_true": 3, "T": 300, "datasets": 10, "seed": 0},
    "postprocess": {"chain": None},
    "diagnose": {"chain": None, "truth": None, "max_lag": 100},
    "forecast": {"data": None, "horizons": [1, 2, 4], "window_start": 100, "n_windows": None, "L": 200,
                 "models": ["flat", "tensor_mgp"], "burn_in": 2000, "draws": 2000, "seed": 0,
                 "benchmark": "flat"},
}

_INT, _FLOAT, _BOOL, _STR = "int", "float", "bool", "str"
SCHEMA = {
    "model": (_STR, MODELS), "P": (_INT, 1), "data": ("paths", None), "interweave": (_BOOL, None),
    "chain": {"burn_in": (_INT, 0), "draws": (_INT, 1), "thin": (_INT, 1), "seed": (_INT, 0)},
    "adapt": {"enabled": (_BOOL, None), "R_init": ("int?", 1), "alpha0": (_FLOAT, None), "alpha1": (_FLOAT, None),
              "m_tilde": (_INT, 0), "mag_threshold": (_FLOAT, None), "prop_threshold": (_FLOAT, None)},
    "mgp": {"nu": (_FLOAT, None), "a1": (_FLOAT, None), "a2": (_FLOAT, None)},
    "simulate": {"N": (_INT, 1), "R_true": (_INT, 1), "T": (_INT, 2), "datasets": (_INT, 1), "seed": (_INT, 0)},
    "postprocess": {"chain": ("path?", None)},
    "diagnose": {"chain": ("path?", None), "truth": ("path?", None), "max_lag": (_INT, 1)},
    "forecast": {"data": ("path?", None), "horizons": ("intlist", 1), "window_start": (_INT, 1),
                 "n_windows": ("int?", 1), "L": (_INT, 100), "models": ("models", None),
                 "burn_in": (_INT, 0), "draws": (_INT, 1), "seed": (_INT, 0), "benchmark": (_STR, MODELS)},
}


# ---------------------------------------------------------------------------
# Configuration

def _marks(node, prefix=()):
    out = {}
    if isinstance(node, yaml.MappingNode):
        for k, v in node.value:
            key = prefix + (k.value,)
            out[key] = k.start_mark.line + 1
            out.update(_marks(v, key))
    return out


def _check_value(kind, bound, value, where):
    if kind in ("int", "int?"):
        if value is None and kind == "int?":
            return
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{where}: expected an integer, got {value!r}")
        if bound is not None and value < bound:
            raise ConfigError(f"{where}: must be >= {bound}, got {value}")
    elif kind == "float":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{where}: expected a number, got {value!r}")
    elif kind == "bool":
        if not isinstance(value, bool):
            raise ConfigError(f"{where}: expected true or false, got {value!r}")
    elif kind == "str":
        if not isinstance(value, str) or (bound is not None and value not in bound):
            raise ConfigError(f"{where}: expected one of {list(bound)}, got {value!r}")
    elif kind in ("path?",):
        if value is not None and not isinstance(value, str):
            raise ConfigError(f"{where}: expected a path, got {value!r}")
    elif kind == "paths":
        is_list = isinstance(value, list) and all(isinstance(v, str) for v in value)
        ok = value is None or isinstance(value, str) or is_list
        if not ok:
            raise ConfigError(f"{where}: expected a path or a list of paths")
    elif kind == "intlist":
        if not isinstance(value, list) or not value or not all(isinstance(v, int) and v >= bound for v in value):
            raise ConfigError(f"{where}: expected a nonempty list of positive integers")
    elif kind == "models":
        if not isinstance(value, list) or not value or any(v not in MODELS for v in value):
            raise ConfigError(f"{where}: models must be a nonempty list drawn from {list(MODELS)}")


def load_config(path: str | Path | None, overrides: dict | None = None) -> dict:
    """Parse and validate a YAML config; errors cite ``file:line``."""
    cfg = copy.deepcopy(DEFAULTS)
    base = Path(".")
    marks = {}
    name = "<defaults>"
    if path is not None:
        path = Path(path)
        name = str(path)
        base = path.parent
        try:
            text = path.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        try:
            node = yaml.compose(text)
            raw = yaml.safe_load(text) or {}
        except yaml.YAMLError as exc:
            raise ConfigError(f"{path}: invalid YAML: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError(f"{path}:1: top level must be a mapping")
        marks = _marks(node) if node is not None else {}
        for key, value in raw.items():
            where = f"{name}:{marks.get((key,), '?')}"
            if key == "mode":
                continue
            if key not in SCHEMA:
                raise ConfigError(f"{where}: unknown key {key!r}")
            spec = SCHEMA[key]
            if isinstance(spec, dict):
                if not isinstance(value, dict):
                    raise ConfigError(f"{where}: section {key!r} must be a mapping")
                for sub, v in value.items():
                    w = f"{name}:{marks.get((key, sub), '?')}"
                    if sub not in spec:
                        raise ConfigError(f"{w}: unknown key {key}.{sub}")
                    _check_value(*spec[sub], v, f"{w} ({key}.{sub})")
                    cfg[key][sub] = v
            else:
                _check_value(*spec, value, f"{where} ({key})")
                cfg[key] = value
    for k, v in (overrides or {}).items():
        if v is None:
            continue
        if k == "seed":
            for section in ("chain", "simulate", "forecast"):
                cfg[section]["seed"] = int(v)
    a = cfg["adapt"]
    if not (a["alpha0"] <= 0 and a["alpha1"] < 0 and 0 < a["prop_threshold"] < 1 and a["mag_threshold"] > 0):
        raise ConfigError(f"{name}:{marks.get(('adapt',), '?')}: adapt needs alpha0 <= 0, alpha1 < 0, "
                          "0 < prop_threshold < 1 and mag_threshold > 0")
    # resolve relative paths against the config location
    def res(p):
        return None if p is None else str((base / p).resolve()) if not Path(p).is_absolute() else p
    if isinstance(cfg["data"], list):
        cfg["data"] = [res(p) for p in cfg["data"]]
    else:
        cfg["data"] = res(cfg["data"])
    for section, key in (("postprocess", "chain"), ("diagnose", "chain"), ("diagnose", "truth"), ("forecast", "data")):
        cfg[section][key] = res(cfg[section][key])
    return cfg


# ---------------------------------------------------------------------------
# Helpers

def read_data_csv(path: str | Path) -> np.ndarray:
    """Numeric panel from a CSV with a header row; a leading date column is dropped."""
    path = Path(path)
    try:
        with path.open(newline="") as fh:
            rows = [r for r in csv.reader(fh) if r]
    except OSError as exc:
        raise DataError(f"cannot read data file {path}: {exc}") from exc
    if len(rows) < 2:
        raise DataError(f"{path}: no data rows")
    body = rows[1:]
    try:
        float(body[0][0])
        start = 0
    except ValueError:
        start = 1
    try:
        arr = np.array([[float(v) for v in r[start:]] for r in body])
    except ValueError as exc:
        raise DataError(f"{path}: non-numeric entry ({exc})") from exc
    if arr.ndim != 2 or not np.all(np.isfinite(arr)):
        raise DataError(f"{path}: data must be a complete numeric table")
    return arr


def chain_config(cfg: dict, model: str | None = None):
    from .sampler import ChainConfig
    model = model or cfg["model"]
    prior = {"tensor_mgp": "mgp", "tensor_mgp_ownlag": "mgp", "tensor_mdgdp": "mdgdp"}[model]
    c, a, g = cfg["chain"], cfg["adapt"], cfg["mgp"]
    return ChainConfig(
        burn_in=c["burn_in"], draws=c["draws"], thin=c["thin"], prior=prior, interweave=cfg["interweave"],
        own_lag=model == "tensor_mgp_ownlag", adapt=a["enabled"] and prior == "mgp", R_init=a["R_init"],
        nu=g["nu"], a1=g["a1"], a2=g["a2"], alpha0=a["alpha0"], alpha1=a["alpha1"], m_tilde=a["m_tilde"],
        mag_threshold=a["mag_threshold"], prop_threshold=a["prop_threshold"])


def _manifest(cfg: dict, mode: str, **extra) -> dict:
    m = {"mode": mode, "config": cfg, "config_hash": config_hash(cfg), "version": __version__,
         "backend": backend_name()}
    m.update(extra)
    return m


def fit_one(panel: np.ndarray, cfg: dict, seed, out: Path) -> dict:
    """Fit the configured model and write ``chain.npz`` plus side files into ``out``."""
    from .baselines import KINDS, run_std_var
    from .sampler import TvarData, run_chain
    data = TvarData.from_panel(panel, cfg["P"])
    rng = np.random.default_rng(seed)
    model = cfg["model"]
    if model in KINDS:
        res = run_std_var(data, model, cfg["chain"]["burn_in"], cfg["chain"]["draws"], rng, cfg["chain"]["thin"])
        extra = {"n_draws": res.n_draws}
    else:
        res = run_chain(data, chain_config(cfg), rng)
        write_rank_trajectory(out / "rank_trajectory.csv", res.rank_trajectory)
        extra = {"n_draws": res.n_draws, "final_rank": int(res.R),
                 "rank_trajectory": "rank_trajectory.csv"}
    log.info("fitted %s in %.1f s", model, res.seconds)
    write_npz(out / "chain.npz", chain_arrays(res))
    return extra


def _seeds(seed: int, count: int) -> list[int]:
    return [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(seed).spawn(count)]


# ---------------------------------------------------------------------------
# Modes

def do_simulate(cfg: dict, out: Path, threads: int) -> None:
    from .simulate import Scenario, simulate_dataset, write_dataset
    s = cfg["simulate"]
    seeds = _seeds(s["seed"], s["datasets"])

    def one(k):
        sc = Scenario(N=s["N"], R_true=s["R_true"], P=cfg["P"], T=s["T"], seed=seeds[k])
        data, truth = simulate_dataset(sc)
        write_dataset(data, truth, sc, out, f"dataset_{k + 1:02d}", {"config_hash": config_hash(cfg)})

    with ThreadPoolExecutor(max_workers=max(1, threads)) as ex:
        list(ex.map(one, range(s["datasets"])))
    write_json(out / "manifest.json", _manifest(cfg, "simulate", seeds=seeds))


def do_fit(cfg: dict, out: Path, threads: int) -> None:
    paths = cfg["data"]
    if paths is None:
        raise ConfigError("fit needs 'data' (a CSV path or a list of paths)")
    if isinstance(paths, str):
        panel = read_data_csv(paths)
        extra = fit_one(panel, cfg, cfg["chain"]["seed"], out)
        write_json(out / "manifest.json", _manifest(cfg, "fit", seed=cfg["chain"]["seed"], **extra))
        return
    seeds = _seeds(cfg["chain"]["seed"], len(paths))

    def one(k):
        sub = out / f"fit_{k + 1:02d}"
        sub.mkdir()
        extra = fit_one(read_data_csv(paths[k]), cfg, seeds[k], sub)
        write_json(sub / "manifest.json", _manifest(cfg, "fit", seed=seeds[k], data=paths[k], **extra))

    with ThreadPoolExecutor(max_workers=max(1, threads)) as ex:
        list(ex.map(one, range(len(paths))))
    write_json(out / "manifest.json", _manifest(cfg, "fit", seeds=seeds))


def _load_chain(directory) -> dict:
    if directory is None:
        raise ConfigError("a chain directory is required ('chain' key)")
    path = Path(directory) / "chain.npz"
    if not path.exists():
        raise DataError(f"no chain file at {path}")
    return read_npz(path)


def do_postprocess(cfg: dict, out: Path, threads: int) -> None:
    from .postprocess import align_draws, final_rank_shrink
    from .rank import AdaptConfig
    ch = _load_chain(cfg["postprocess"]["chain"])
    if "B" not in ch:
        raise DataError("post-processing applies to Tensor VAR chains only")
    N, P = int(ch["N"]), int(ch["P"])
    aligned, pivot, _ = align_draws(ch["B"], N, P)
    a = cfg["adapt"]
    acfg = AdaptConfig(R_star=max(1, aligned.shape[2]), m_burn=a["m_tilde"] + 1, m_tilde=a["m_tilde"],
                       mag_threshold=a["mag_threshold"], prop_threshold=a["prop_threshold"])
    reduced, keep = final_rank_shrink(aligned, N, P, acfg)
    write_npz(out / "aligned.npz", {"N": np.array(N), "P": np.array(P), "B": reduced, "B_aligned": aligned,
                                    "kept_columns": keep})
    write_json(out / "manifest.json", _manifest(cfg, "postprocess", pivot=pivot, final_rank=int(keep.size),
                                                kept_columns=keep))


def do_diagnose(cfg: dict, out: Path, threads: int) -> None:
    from .diagnostics import autocorr, coeff_mse, margin_table, write_csv
    from .postprocess import align_draws
    from .simulate import read_truth
    from .tensor import CpTensor3, coefficient_matrix
    d = cfg["diagnose"]
    ch = _load_chain(d["chain"])
    N, P = int(ch["N"]), int(ch["P"])
    summary = {}
    if "B" in ch:
        aligned_path = Path(d["chain"]) / "aligned.npz"
        B = read_npz(aligned_path)["B"] if aligned_path.exists() else align_draws(ch["B"], N, P)[0]
        rows = margin_table(B, N, P)
        write_csv(rows, out / "if_ess.csv")
        lag = min(d["max_lag"], B.shape[0] - 1)
        acf_rows = []
        for r in range(B.shape[2]):
            rho = autocorr(B[:, 0, r], lag)
            acf_rows += [{"column": r + 1, "lag": k, "acf": float(v)} for k, v in enumerate(rho)]
        write_csv(acf_rows, out / "acf_b1_row1.csv")
        trace = [{"draw": k + 1, **{f"col{r + 1}": float(B[k, 0, r]) for r in range(B.shape[2])}}
                 for k in range(B.shape[0])]
        write_csv(trace, out / "trace_b1_row1.csv")
        for block in ("B1", "B2", "B3"):
            vals = [r["if"] for r in rows if r["block"] == block]
            summary[f"median_if_{block}"] = float(np.median(vals))
        A_draws = np.stack([coefficient_matrix(CpTensor3.from_stacked(b, N, P)) for b in ch["B"]])
        if "D" in ch:
            for p in range(P):
                A_draws[:, np.arange(N), p * N + np.arange(N)] += ch["D"][:, :, p]
    else:
        A_draws = ch["A"]
    if d["truth"] is not None:
        truth = read_truth(d["truth"])
        summary["coeff_mse"] = coeff_mse(A_draws.mean(axis=0), coefficient_matrix(truth))
    write_json(out / "diagnostics.json", summary)
    write_json(out / "manifest.json", _manifest(cfg, "diagnose"))


def do_forecast(cfg: dict, out: Path, threads: int) -> None:
    from .diagnostics import write_csv
    from .forecast import ForecastConfig, expanding_window_run, read_scores, summarize
    f = cfg["forecast"]
    if f["data"] is None:
        raise ConfigError("forecast needs forecast.data")
    data = read_data_csv(f["data"])
    fc = ForecastConfig(horizons=tuple(f["horizons"]), window_start=f["window_start"], n_windows=f["n_windows"],
                        L=f["L"], models=tuple(f["models"]), P=cfg["P"], burn_in=f["burn_in"], draws=f["draws"],
                        seed=f["seed"], benchmark=f["benchmark"])
    path = expanding_window_run(fc, data, out)
    write_csv(summarize(read_scores(path), fc.benchmark), out / "summary.csv")
    write_json(out / "manifest.json", _manifest(cfg, "forecast"))


HANDLERS = {"simulate": do_simulate, "fit": do_fit, "postprocess": do_postprocess,
            "diagnose": do_diagnose, "forecast": do_forecast}


def run(mode: str, cfg: dict, out: str | Path, threads: int = 1) -> int:
    """Execute ``mode`` and return a process exit code."""
    out = Path(out)
    if mode == "forecast":
        # scores are appended in place so that interrupted runs can resume
        out.mkdir(parents=True, exist_ok=True)
        HANDLERS[mode](cfg, out, threads)
        return 0
    out.parent.mkdir(parents=True, exist_ok=True)
    stage = Path(tempfile.mkdtemp(prefix=f".{out.name}.", dir=out.parent))
    try:
        HANDLERS[mode](cfg, stage, threads)
        out.mkdir(exist_ok=True)
        for item in sorted(stage.iterdir()):
            target = out / item.name
            if target.is_dir():
                shutil.rmtree(target)
            elif target.exists():
                target.unlink()
            shutil.move(str(item), str(target))
    finally:
        shutil.rmtree(stage, ignore_errors=True)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tensorvar", description="Bayesian Tensor VAR toolkit")
    p.add_argument("mode", choices=MODES)
    p.add_argument("--config", help="YAML configuration file")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, help="override every seed in the config")
    p.add_argument("--threads", type=int, default=1, help="worker threads for independent datasets")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config, {"seed": args.seed})
        return run(args.mode, cfg, args.out, args.threads)
    except TensorVarError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except Exception as exc:  # noqa: BLE001 - report and map to the generic code
        log.exception("unexpected failure")
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
