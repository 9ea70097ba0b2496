"""Desk-scale comparison of a depth-2 oracle proxy against a depth-3 threshold rule."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass, fields
from typing import Optional

import numpy as np

from .bounds import estimation_error_bound
from .constructions import tent_interpolant
from .errors import DegeneracyError, InfeasibleError, TrainingError, UsageError
from .geometry import seed_sequence
from .learning import (RuleConfig, TrainConfig, labeled_sample, oracle_rule_proxy, rule_srm,
                       sweep_path, test_loss)

COLUMNS = ("d", "m", "depth", "width", "lambda", "theta", "alpha", "seed", "train_loss",
           "test_loss", "test_se", "cost", "tent_bound", "status")


@dataclass(frozen=True)
class ExperimentConfig:
    d_list: tuple = (2, 3, 4, 5)
    m_list: tuple = (50, 200, 800)
    seeds: int = 10
    eps: float = 0.05
    alpha: float = 2.0
    delta: float = 0.05
    width2: int = 48
    width3: int = 48
    lam_grid2: tuple = (1e-5, 1e-4, 1e-3, 1e-2, 1e-1)
    lam_bounds3: tuple = (1e-6, 1e-1)
    bisection_steps: int = 8
    iterations: int = 2000
    warm_iterations: int = 400
    lr: float = 1e-2
    restarts: int = 1
    n_test: int = 100_000
    root_seed: int = 0

    def __post_init__(self):
        for name in ("d_list", "m_list", "lam_grid2", "lam_bounds3"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        if min(self.d_list) < 2 or min(self.m_list) < 1 or self.seeds < 1:
            raise UsageError("need d >= 2, m >= 1 and at least one seed")
        if not 0 < self.delta < 1 or not self.eps > 0 or not self.alpha >= 1:
            raise UsageError("need eps > 0, 0 < delta < 1 and alpha >= 1")
        if len(self.lam_bounds3) != 2:
            raise UsageError("lam_bounds3 needs two values")

    @property
    def theta(self) -> float:
        return self.eps / 4

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(raw) - known)
        if unknown:
            raise UsageError(f"unknown experiment keys: {', '.join(unknown)}")
        return cls(**raw)

    def to_dict(self) -> dict:
        return {k: list(v) if isinstance(v, tuple) else v for k, v in asdict(self).items()}


def _row(d, m, depth, width, lam, theta, alpha, seed, train, test, se, cost, tent, status):
    return {"d": d, "m": m, "depth": depth, "width": width, "lambda": lam, "theta": theta,
            "alpha": alpha, "seed": seed, "train_loss": train, "test_loss": test, "test_se": se,
            "cost": cost, "tent_bound": tent, "status": status}


def run_cell(cfg: ExperimentConfig, d: int, m: int, rep: int) -> list:
    """Both rows (depth 2 then depth 3) for one seeded sample."""
    data_seed, test_seed, seed2, seed3 = seed_sequence([cfg.root_seed, d, m, rep]).spawn(4)
    S = labeled_sample(d, m, data_seed)
    T = labeled_sample(d, cfg.n_test, test_seed)
    try:
        tent = tent_interpolant(S)[1].cost_value
    except DegeneracyError:
        tent = math.inf
    base = TrainConfig(iterations=cfg.iterations, restarts=cfg.restarts, lr=cfg.lr)
    rows = []

    base2 = TrainConfig(**{**asdict(base), "seed": int(seed2.generate_state(1)[0])})
    sweep = sweep_path(S, 2, cfg.width2, cfg.lam_grid2, base2)
    if sweep.points:
        p = oracle_rule_proxy(sweep.frontier, T)
        status = "ok" if not sweep.failures else "partial"
        rows.append(_row(d, m, 2, cfg.width2, p.lam, "", "", rep, p.loss, p.test_loss, p.test_se,
                         p.cost, tent, status))
    else:
        rows.append(_row(d, m, 2, cfg.width2, "", "", "", rep, "", "", "", "", tent, "error"))

    base3 = TrainConfig(**{**asdict(base), "seed": int(seed3.generate_state(1)[0])})
    rule = RuleConfig(theta=cfg.theta, alpha=cfg.alpha, depth=3, width=cfg.width3)
    try:
        res = rule_srm(S, rule, cfg.lam_bounds3, base3, bisection_steps=cfg.bisection_steps,
                       warm_iterations=cfg.warm_iterations)
        tl, se = test_loss(res.net, T)
        rows.append(_row(d, m, 3, cfg.width3, res.lam, cfg.theta, cfg.alpha, rep, res.loss, tl, se,
                         res.cost, tent, "ok"))
    except InfeasibleError as exc:
        best = exc.best
        tl, se = test_loss(best.net, T)
        rows.append(_row(d, m, 3, cfg.width3, best.lam, cfg.theta, cfg.alpha, rep, best.loss, tl, se,
                         best.cost, tent, "infeasible"))
    except TrainingError:
        rows.append(_row(d, m, 3, cfg.width3, "", cfg.theta, cfg.alpha, rep, "", "", "", "", tent,
                         "error"))
    return rows


def run_separation_experiment(cfg: ExperimentConfig, progress=None) -> list:
    """All rows, ordered by (d, m, seed, depth)."""
    rows = []
    for d in cfg.d_list:
        for m in cfg.m_list:
            for rep in range(cfg.seeds):
                rows.extend(run_cell(cfg, d, m, rep))
                if progress is not None:
                    progress(d, m, rep)
    return rows


# ------------------------------------------------------------------ tables


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def rows_to_csv(rows, columns=COLUMNS) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r[c]) for c in columns])
    return buf.getvalue()


def _parse(v: str):
    if v == "":
        return ""
    for conv in (int, float):
        try:
            return conv(v)
        except ValueError:
            pass
    return v


def csv_to_rows(text: str) -> list:
    reader = csv.DictReader(io.StringIO(text))
    return [{k: _parse(v) for k, v in r.items()} for r in reader]


def _is_num(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)


def summarize(rows, delta: float = 0.05, cost_slack: float = 1.1, trend_min_d: int = 4,
              trend_fraction: float = 0.7) -> dict:
    """Aggregate checks over an experiment table.

    ``cost_vs_tent``: every depth-2 row has cost at most ``cost_slack`` times its tent
    certificate. ``trend``: over (d, m) cells with ``d >= trend_min_d``, the share where
    the seed-averaged depth-3 test loss is at most the depth-2 one. ``gap``: every
    depth-3 row with a model has ``|test - train|`` within the estimation bound at
    ``M = max(cost, 1)``.
    """
    d2 = [r for r in rows if r["depth"] == 2 and _is_num(r["cost"])]
    d3 = [r for r in rows if r["depth"] == 3 and _is_num(r["cost"])]
    cost_viol = [r for r in d2 if r["cost"] > cost_slack * r["tent_bound"]]

    cells = {}
    for r in rows:
        if _is_num(r["test_loss"]):
            cells.setdefault((r["d"], r["m"]), {}).setdefault(r["depth"], []).append(r["test_loss"])
    trend_cells = []
    for (d, m), by_depth in sorted(cells.items()):
        if d >= trend_min_d and 2 in by_depth and 3 in by_depth:
            l2 = float(np.mean(by_depth[2]))
            l3 = float(np.mean(by_depth[3]))
            trend_cells.append({"d": d, "m": m, "depth2_test": l2, "depth3_test": l3,
                                "depth3_wins": l3 <= l2})
    wins = sum(c["depth3_wins"] for c in trend_cells)
    share = wins / len(trend_cells) if trend_cells else float("nan")

    gap_viol = []
    for r in d3:
        bound = estimation_error_bound(max(r["cost"], 1.0), int(r["m"]), delta)
        if abs(r["test_loss"] - r["train_loss"]) > bound:
            gap_viol.append(r)
    return {
        "rows": len(rows),
        "depth2_rows": len(d2),
        "depth3_rows": len(d3),
        "status_counts": _count(r["status"] for r in rows),
        "cost_vs_tent_violations": len(cost_viol),
        "cost_vs_tent_ok": not cost_viol and bool(d2),
        "trend_cells": trend_cells,
        "trend_share": share,
        "trend_ok": bool(trend_cells) and share >= trend_fraction,
        "gap_violations": len(gap_viol),
        "gap_ok": not gap_viol and bool(d3),
    }


def _count(items) -> dict:
    out = {}
    for k in items:
        out[k] = out.get(k, 0) + 1
    return dict(sorted(out.items()))


def summary_text(summary: dict) -> str:
    lines = [
        f"rows: {summary['rows']} (depth 2: {summary['depth2_rows']}, depth 3: {summary['depth3_rows']})",
        f"status: " + ", ".join(f"{k}={v}" for k, v in summary["status_counts"].items()),
        f"depth-2 cost within slack of tent certificate: {summary['cost_vs_tent_ok']} "
        f"({summary['cost_vs_tent_violations']} violations)",
        f"depth-3 test loss <= depth-2 test loss: {summary['trend_share']:.3f} of cells "
        f"-> {summary['trend_ok']}",
    ]
    for c in summary["trend_cells"]:
        lines.append(f"  d={c['d']} m={c['m']}: depth2 {c['depth2_test']:.5f} "
                     f"depth3 {c['depth3_test']:.5f}")
    lines.append(f"train/test gap within estimation bound: {summary['gap_ok']} "
                 f"({summary['gap_violations']} violations)")
    return "\n".join(lines) + "\n"
