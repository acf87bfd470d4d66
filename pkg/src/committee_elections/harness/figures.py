"""Regenerate the data behind each published figure as CSV + JSON sidecar.

Parameters the figures leave unstated come from ``figure_defaults.json``;
its version string and the resolved parameters go into every sidecar.
"""

from __future__ import annotations

import copy
import json
import time
from fractions import Fraction
from importlib import resources

from ..analytics import (
    SuccessEstimate,
    ToleranceSpec,
    lottery_failure,
    min_committee_size,
)
from ..simulator import estimate_success
from ..strategies import Strategy
from .config import Settings, grid_values
from .experiments import bound_success, exact_success, make_row, write_results

FIGURE_IDS = (
    "threshold-few-voters",
    "threshold-100-voters",
    "convergence-n",
    "cardinal-k21",
    "committee-size",
    "informativeness",
    "prior-sweep",
    "single-voter-cardinal",
)


class UnknownFigureError(KeyError):
    def __init__(self, figure_id: str):
        super().__init__(f"unknown figure id {figure_id!r}; valid ids: {', '.join(FIGURE_IDS)}")
        self.figure_id = figure_id

    def __str__(self):
        return self.args[0]


def load_defaults() -> dict:
    text = resources.files(__package__).joinpath("figure_defaults.json").read_text()
    return json.loads(text)


def _grid(g, integer=False):
    return grid_values(g["from"], g["to"], g["step"], integer)


def _settings(d: dict, strategy: Strategy, **over) -> Settings:
    base = dict(
        m=d["m"], n=d.get("n", 0), k=d.get("k", 1), t=d["t"], rho=Fraction(d["rho"]), p=d.get("p", 0.5),
        p_h=d.get("p_h", 0.75), p_m=d["p_m"], sigma=d["sigma"], strategy=strategy, seed=d.get("seed", 0),
    )
    base.update(over)
    return Settings(**base)


class _Clock:
    def __init__(self, enabled: bool):
        self.enabled = enabled

    def run(self, fn):
        start = time.perf_counter()
        out = fn()
        ms = round((time.perf_counter() - start) * 1000.0, 3) if self.enabled else None
        return out, ms


def _threshold_sweep(d, clock, ns):
    rows = []
    for n in ns:
        for z in _grid(d["z"]):
            s = _settings(d, Strategy.threshold(z), n=n)
            est, ms = clock.run(lambda: exact_success(s.election()))
            rows.append(make_row(z, s, est, wall_ms=ms))
    return rows


def _fig_threshold_few(d, clock, workers):
    return _threshold_sweep(d, clock, d["n_values"])


def _fig_threshold_100(d, clock, workers):
    return _threshold_sweep(d, clock, [d["n"]])


def _fig_convergence(d, clock, workers):
    rows = []
    for n in _grid(d["n"], integer=True):
        s = _settings(d, Strategy.threshold(d["z"]), n=n)
        cfg = s.election()
        est, ms = clock.run(lambda: exact_success(cfg))
        rows.append(make_row(n, s, est, wall_ms=ms))
        est, ms = clock.run(lambda: bound_success(cfg))
        rows.append(make_row(n, s, est, wall_ms=ms))
    return rows


def _mc_rows(d, clock, workers, strategies):
    rows = []
    for sweep_value, strat in strategies:
        s = _settings(d, strat)
        est, ms = clock.run(lambda: estimate_success(s.election(), d["trials"], workers=workers))
        rows.append(make_row(sweep_value, s, est, wall_ms=ms))
    return rows


def _fig_cardinal_k21(d, clock, workers):
    return _mc_rows(d, clock, workers, [(z, Strategy.cardinal(z)) for z in d["z_values"]])


def _fig_single_voter(d, clock, workers):
    strategies = [(z, Strategy.threshold(z)) for z in _grid(d["threshold_z"])]
    strategies += [(z, Strategy.cardinal(z)) for z in _grid(d["cardinal_z"], integer=True)]
    return _mc_rows(d, clock, workers, strategies)


def _fig_committee_size(d, clock, workers):
    """One lottery row and one voting row per target failure; ``k`` holds the
    minimum committee size and ``value`` the failure probability at that size."""
    rows = []
    tol = ToleranceSpec(d["rho"])
    voting = _settings(d, Strategy.threshold(d["z"]), k=1)
    cfg = voting.election()
    for target in d["targets"]:
        k, ms = clock.run(lambda: min_committee_size(target, "lottery", (d["p"], tol)))
        fail = lottery_failure(k, d["p"], tol)
        s = _settings(d, Strategy.abstain(), n=0, k=k)
        rows.append(make_row(target, s, SuccessEstimate.exact(fail), strategy_label="lottery", wall_ms=ms))

        def voting_size():
            size = min_committee_size(target, "voting", cfg, trials=d["trials"], workers=workers)
            return size, estimate_success(cfg.with_k(size), d["trials"], workers=workers)

        (size, est), ms = clock.run(voting_size)
        failure = SuccessEstimate(1.0 - est.value, 1.0 - est.ci_high, 1.0 - est.ci_low, "mc")
        rows.append(make_row(target, _settings(d, voting.strategy, k=size), failure, wall_ms=ms))
    return rows


def _fig_informativeness(d, clock, workers):
    rows = []
    for gap in _grid(d["gap"]):
        s = _settings(d, Strategy.threshold(d["z"]), p_h=round(d["p_m"] + gap, 12))
        est, ms = clock.run(lambda: exact_success(s.election()))
        rows.append(make_row(gap, s, est, wall_ms=ms))
    return rows


def _fig_prior(d, clock, workers):
    rows = []
    for p in _grid(d["p"]):
        s = _settings(d, Strategy.threshold(d["z"]), p=p)
        est, ms = clock.run(lambda: exact_success(s.election()))
        rows.append(make_row(p, s, est, wall_ms=ms))
    return rows


_BUILDERS = {
    "threshold-few-voters": _fig_threshold_few,
    "threshold-100-voters": _fig_threshold_100,
    "convergence-n": _fig_convergence,
    "cardinal-k21": _fig_cardinal_k21,
    "committee-size": _fig_committee_size,
    "informativeness": _fig_informativeness,
    "prior-sweep": _fig_prior,
    "single-voter-cardinal": _fig_single_voter,
}


def figure_parameters(figure_id: str, trials: int | None = None, seed: int | None = None) -> dict:
    if figure_id not in _BUILDERS:
        raise UnknownFigureError(figure_id)
    params = copy.deepcopy(load_defaults()["figures"][figure_id])
    if trials is not None and "trials" in params:
        params["trials"] = trials
    if seed is not None and "seed" in params:
        params["seed"] = seed
    return params


def figure_rows(figure_id: str, trials=None, seed=None, workers=None, timing=False) -> list:
    params = figure_parameters(figure_id, trials, seed)
    return _BUILDERS[figure_id](params, _Clock(timing), workers)


def reproduce_figure(figure_id: str, out_path, trials=None, seed=None, workers=None, timing=False):
    """Write the figure's data to ``out_path`` (CSV) and ``out_path.json``."""
    params = figure_parameters(figure_id, trials, seed)
    rows = _BUILDERS[figure_id](params, _Clock(timing), workers)
    meta = {
        "figure_id": figure_id,
        "defaults_version": load_defaults()["version"],
        "parameters": params,
    }
    return write_results(rows, out_path, meta)
