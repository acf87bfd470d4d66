"""Grid sweeps over one election parameter, written as CSV plus a JSON sidecar."""

from __future__ import annotations

import csv
import io
import json
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .. import __version__
from ..analytics import SuccessEstimate, asymptotic_lower_bound, success_threshold_exact
from ..simulator import ElectionConfig, estimate_success, score_pmfs
from ..strategies import ABSTAIN, vote_probs
from .config import ExperimentSpec, Settings

COLUMNS = (
    "sweep_value", "m", "n", "k", "t", "rho", "p", "p_h", "p_m", "sigma",
    "strategy", "z", "value", "ci_low", "ci_high", "method", "wall_time_ms",
)


@dataclass(frozen=True)
class ResultRow:
    sweep_value: object
    m: int
    n: int
    k: int
    t: int
    rho: str
    p: float
    p_h: float
    p_m: float
    sigma: str
    strategy: str
    z: object
    value: float
    ci_low: float
    ci_high: float
    method: str
    wall_time_ms: float | None = None

    def cells(self) -> list:
        out = []
        for name in COLUMNS:
            v = getattr(self, name)
            out.append("" if v is None else _fmt(v))
        return out


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _sigma_text(sigma) -> str:
    if np.ndim(sigma) == 0:
        return repr(float(sigma))
    return ";".join(repr(float(s)) for s in sigma)


def make_row(sweep_value, s: Settings, est: SuccessEstimate, strategy_label: str | None = None,
             wall_ms: float | None = None) -> ResultRow:
    return ResultRow(
        sweep_value=sweep_value, m=s.m, n=s.n, k=s.k, t=s.t, rho=str(s.rho), p=s.p, p_h=s.p_h,
        p_m=s.p_m, sigma=_sigma_text(s.sigma), strategy=strategy_label or s.strategy.kind,
        z=s.strategy.z, value=est.value, ci_low=est.ci_low, ci_high=est.ci_high,
        method=est.method, wall_time_ms=wall_ms,
    )


def exact_success(cfg: ElectionConfig, conditional: bool = False) -> SuccessEstimate:
    """Closed-form success for a config of threshold (or abstaining) voters."""
    fh, fm = score_pmfs(cfg)
    return success_threshold_exact(cfg.m, cfg.k, cfg.tol, cfg.prior, fh, fm, conditional=conditional)


def delta_gap(cfg: ElectionConfig) -> float:
    """Smallest honest vote probability minus the largest malicious one."""
    hs, ms = [], []
    for q, strat in zip(cfg.params_per_voter, cfg.strategies):
        v = vote_probs(strat, q, cfg.m)
        hs.append(v.p_h_vote)
        ms.append(v.p_m_vote)
    if not hs:
        return 0.0
    return min(hs) - max(ms)


def bound_success(cfg: ElectionConfig) -> SuccessEstimate:
    d = delta_gap(cfg)
    value = asymptotic_lower_bound(cfg.m, cfg.n, min(d, 1.0)) if d > 0 else 0.0
    return SuccessEstimate.bound(value)


def evaluate(cfg: ElectionConfig, engine: str, trials: int, workers: int | None = None) -> SuccessEstimate:
    if engine == "exact":
        return exact_success(cfg)
    if engine == "bound":
        return bound_success(cfg)
    if engine == "mc":
        return estimate_success(cfg, trials, workers=workers)
    raise ValueError(f"unknown engine {engine!r}")


def run_experiment(spec: ExperimentSpec, workers: int | None = None, timing: bool = False) -> list:
    """One :class:`ResultRow` per grid value, in grid order.

    ``wall_time_ms`` is left empty unless ``timing`` is set, since timings
    would make otherwise identical runs produce different files.
    """
    if spec.engine == "exact" and spec.settings.strategy.kind not in ("threshold", ABSTAIN):
        raise ValueError("engine 'exact' requires a threshold strategy")
    rows = []
    for value in spec.grid:
        s = spec.point(value)
        start = time.perf_counter()
        est = evaluate(s.election(), spec.engine, spec.trials, workers)
        wall = round((time.perf_counter() - start) * 1000.0, 3) if timing else None
        rows.append(make_row(value, s, est, wall_ms=wall))
    return rows


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for r in rows:
        w.writerow(r.cells())
    return buf.getvalue()


def sidecar_path(csv_path) -> Path:
    p = Path(csv_path)
    return p.with_suffix(p.suffix + ".json")


def write_results(rows, path, metadata: dict) -> Path:
    """Write ``rows`` to ``path`` and ``metadata`` to ``<path>.json``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(rows_to_csv(rows))
    meta = {"package_version": __version__, "columns": list(COLUMNS), **metadata}
    sidecar_path(path).write_text(json.dumps(meta, indent=2, sort_keys=True, default=str) + "\n")
    return path


def spec_metadata(spec: ExperimentSpec) -> dict:
    s = spec.settings
    return {
        "settings": {
            "m": s.m, "n": s.n, "k": s.k, "t": s.t, "rho": str(s.rho), "p": s.p, "p_h": s.p_h,
            "p_m": s.p_m, "sigma": s.sigma, "strategy": {"kind": s.strategy.kind, "z": s.strategy.z},
            "seed": s.seed,
        },
        "sweep_axis": spec.axis,
        "grid": list(spec.grid),
        "engine": spec.engine,
        "trials": spec.trials if spec.engine == "mc" else None,
    }
