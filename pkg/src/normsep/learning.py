"""Weight-decay training, regularization paths, and threshold-based learning rules."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from . import kernels
from .errors import InfeasibleError, TrainingError, UsageError
from .geometry import SphereDataset, seed_sequence
from .net import (CostCertificate, ReluNet, _unpack_data, cost, empirical_loss,
                  flat_objective_grad, from_vector, to_vector)

log = logging.getLogger(__name__)

ADAM_BETAS = (0.9, 0.999)
ADAM_EPS = 1e-8


@dataclass(frozen=True)
class TrainConfig:
    depth: int = 2
    width: int = 32
    lam: float = 0.0
    lr: float = 1e-2
    lr_min: float = 0.0
    iterations: int = 2000
    batch_size: Optional[int] = None
    restarts: int = 5
    seed: int = 0
    init_scale: float = 1.0
    log_every: int = 50

    def __post_init__(self):
        if self.depth not in (2, 3):
            raise UsageError("depth must be 2 or 3")
        if self.width < 1 or self.iterations < 1 or self.restarts < 1 or self.log_every < 1:
            raise UsageError("width, iterations, restarts and log_every must be positive")
        if not self.lam >= 0:
            raise UsageError("lambda must be nonnegative")
        if not self.lr > 0 or not 0 <= self.lr_min <= self.lr:
            raise UsageError("need 0 <= lr_min <= lr and lr > 0")
        if self.batch_size is not None and self.batch_size < 1:
            raise UsageError("batch_size must be positive")

    def dims(self, input_dim: int) -> tuple:
        return (input_dim,) + (self.width,) * (self.depth - 1)


@dataclass(frozen=True)
class TrainResult:
    net: ReluNet
    lam: float
    objective: float
    loss: float
    cost: float
    checkpoints: tuple
    restart_objectives: tuple


def init_params(dims, rng, scale=1.0) -> np.ndarray:
    """Uniform on ``+-scale/sqrt(fan_in)`` for every weight and bias of a layer."""
    parts = []
    fans = list(zip(dims[:-1], dims[1:])) + [(dims[-1], 1)]
    for fan_in, fan_out in fans:
        bound = scale / math.sqrt(fan_in)
        parts.append(rng.uniform(-bound, bound, size=fan_out * fan_in + fan_out))
    return np.concatenate(parts)


def _adam_run(theta, dims, X, y, cfg, rng):
    """One Adam trajectory with cosine step decay; returns the best iterate seen."""
    n = theta.size
    grad = np.empty(n)
    m1 = np.zeros(n)
    m2 = np.zeros(n)
    b1, b2 = ADAM_BETAS
    m = X.shape[0]
    full = cfg.batch_size is None or cfg.batch_size >= m
    best_obj = math.inf
    best = theta.copy()
    checkpoints = []
    order = None
    pos = m
    T = cfg.iterations
    for it in range(T + 1):
        if full or it % cfg.log_every == 0 or it == T:
            obj, _ = flat_objective_grad(theta, dims, X, y, cfg.lam, grad)
            if not math.isfinite(obj):
                raise TrainingError("objective is not finite", it)
            if obj < best_obj:
                best_obj = obj
                best[:] = theta
        if it % cfg.log_every == 0 or it == T:
            checkpoints.append((it, best_obj))
        if it == T:
            break
        if not full:
            if pos + cfg.batch_size > m:
                order = rng.permutation(m)
                pos = 0
            idx = order[pos:pos + cfg.batch_size]
            pos += cfg.batch_size
            obj, _ = flat_objective_grad(theta, dims, np.ascontiguousarray(X[idx]), y[idx],
                                         cfg.lam, grad)
            if not math.isfinite(obj):
                raise TrainingError("minibatch objective is not finite", it)
        lr = cfg.lr_min + 0.5 * (cfg.lr - cfg.lr_min) * (1 + math.cos(math.pi * it / T))
        m1 *= b1
        m1 += (1 - b1) * grad
        m2 *= b2
        m2 += (1 - b2) * grad * grad
        step = lr * math.sqrt(1 - b2 ** (it + 1)) / (1 - b1 ** (it + 1))
        theta -= step * m1 / (np.sqrt(m2) + ADAM_EPS)
    return best, best_obj, tuple(checkpoints)


def train_weight_decay(data, cfg: TrainConfig, init_net: Optional[ReluNet] = None,
                       y=None) -> TrainResult:
    """Minimize ``L_S + (lam/L)||phi||^2`` with Adam; best of ``cfg.restarts`` runs.

    Each run keeps the best iterate it visits, so the logged objective at successive
    checkpoints never increases. With ``init_net`` the first run starts from it.
    """
    X, y = _unpack_data(data, y)
    dims = cfg.dims(X.shape[1])
    if init_net is not None and init_net.dims != dims:
        raise UsageError(f"initial net has dims {init_net.dims}, expected {dims}")
    best = None
    objectives = []
    for r, child in enumerate(seed_sequence(cfg.seed).spawn(cfg.restarts)):
        rng = np.random.default_rng(child)
        if r == 0 and init_net is not None:
            theta = to_vector(init_net).copy()
        else:
            theta = init_params(dims, rng, cfg.init_scale)
        theta, obj, checkpoints = _adam_run(theta, dims, X, y, cfg, rng)
        objectives.append(obj)
        if best is None or obj < best[1]:
            best = (theta, obj, checkpoints)
    theta, obj, checkpoints = best
    net = from_vector(theta, dims)
    loss = empirical_loss(net, X, y)
    return TrainResult(net, cfg.lam, obj, loss, cost(net), checkpoints, tuple(objectives))


# ------------------------------------------------------------------ Pareto paths


@dataclass(frozen=True)
class ParetoPoint:
    loss: float
    cost: float
    net: ReluNet = field(repr=False)
    lam: float
    test_loss: Optional[float] = None
    test_se: Optional[float] = None

    def dominates(self, other: "ParetoPoint") -> bool:
        return (self.loss <= other.loss and self.cost <= other.cost
                and (self.loss < other.loss or self.cost < other.cost))


def point_from_result(res: TrainResult) -> ParetoPoint:
    return ParetoPoint(res.loss, res.cost, res.net, res.lam)


def pareto_filter(points: Sequence[ParetoPoint]) -> list:
    """Non-dominated points sorted by loss; exact duplicates keep their first copy."""
    ordered = sorted(points, key=lambda p: (p.loss, p.cost))
    kept = []
    best_cost = math.inf
    for p in ordered:
        if p.cost < best_cost:
            kept.append(p)
            best_cost = p.cost
    return kept


@dataclass(frozen=True)
class SweepResult:
    points: tuple
    failures: tuple

    @property
    def frontier(self) -> list:
        return pareto_filter(self.points)


def sweep_path(data, depth: int, width: int, lam_grid: Sequence[float],
               base_cfg: TrainConfig = TrainConfig(), warm_start: bool = False, y=None) -> SweepResult:
    """Train one model per lambda; failures are recorded and the sweep continues."""
    lams = [float(v) for v in lam_grid]
    if not lams or any(not v > 0 for v in lams) or lams != sorted(lams):
        raise UsageError("lambda grid must be nonempty, positive and sorted")
    points, failures = [], []
    prev = None
    for i, lam in enumerate(lams):
        cfg = replace(base_cfg, depth=depth, width=width, lam=lam, seed=_child_seed(base_cfg.seed, i))
        try:
            res = train_weight_decay(data, cfg, init_net=prev if warm_start else None, y=y)
        except TrainingError as exc:
            log.warning("lambda %g failed: %s", lam, exc)
            failures.append((lam, str(exc)))
            continue
        prev = res.net
        points.append(point_from_result(res))
    return SweepResult(tuple(points), tuple(failures))


def pareto_sweep(data, depth: int, width: int, lam_grid: Sequence[float],
                 base_cfg: TrainConfig = TrainConfig(), warm_start: bool = False) -> list:
    return sweep_path(data, depth, width, lam_grid, base_cfg, warm_start).frontier


def _child_seed(seed, i) -> int:
    return int(seed_sequence([int(seed), int(i)]).generate_state(1)[0])


def test_loss(net: ReluNet, test_data) -> tuple:
    """Mean squared error on held-out data with its standard error."""
    X, y = _unpack_data(test_data)
    r = net(X) - y
    sq = r * r
    n = len(sq)
    se = float(sq.std(ddof=1)) / math.sqrt(n) if n > 1 else 0.0
    return float(sq.mean()), se


def oracle_rule_proxy(points: Sequence[ParetoPoint], test_data) -> ParetoPoint:
    """Point of least held-out loss; ties go to the least cost, then the earlier point."""
    if not points:
        raise UsageError("need at least one candidate")
    best = None
    for p in points:
        tl, se = test_loss(p.net, test_data)
        cand = replace(p, test_loss=tl, test_se=se)
        if best is None or (tl, p.cost) < (best.test_loss, best.cost):
            best = cand
    return best


# ------------------------------------------------------------------ threshold rules


@dataclass(frozen=True)
class RuleConfig:
    theta: float
    alpha: float = 1.0
    depth: int = 3
    width: int = 32

    def __post_init__(self):
        if not self.theta >= 0:
            raise UsageError("theta must be nonnegative")
        if not self.alpha >= 1:
            raise UsageError("alpha must be at least 1")
        if self.depth not in (2, 3) or self.width < 1:
            raise UsageError("depth must be 2 or 3 and width positive")


@dataclass(frozen=True)
class SrmResult:
    net: ReluNet
    certificate: CostCertificate
    loss: float
    cost: float
    lam: float
    evaluated: tuple
    used_grid: bool

    def satisfies(self, rule: RuleConfig) -> bool:
        """Loss within ``alpha theta`` and cost within ``alpha`` of the cheapest evaluated model
        reaching ``theta``."""
        feasible = [p.cost for p in self.evaluated if p.loss <= rule.theta]
        if not feasible:
            return False
        return self.loss <= rule.alpha * rule.theta and self.cost <= rule.alpha * min(feasible)


def acceptance_set(points: Sequence[ParetoPoint], theta: float, alpha: float) -> list:
    """Models an ``alpha``-relaxed threshold rule may return from ``points``."""
    feasible = [p.cost for p in points if p.loss <= theta]
    if not feasible:
        return []
    cap = alpha * min(feasible)
    return [p for p in points if p.loss <= alpha * theta and p.cost <= cap]


def _monotone(points, theta):
    seen_infeasible = False
    for p in sorted(points, key=lambda p: p.lam):
        if p.loss > theta:
            seen_infeasible = True
        elif seen_infeasible:
            return False
    return True


def rule_srm(data, rule: RuleConfig, lam_bounds=(1e-6, 1.0), base_cfg: TrainConfig = TrainConfig(),
             bisection_steps: int = 20, grid_size: int = 12, warm_iterations: Optional[int] = None,
             y=None) -> SrmResult:
    """Largest weight decay (log-scale bisection) whose trained model has loss at most ``theta``.

    Each bisection step warm-starts from the current feasible model. If the evaluated
    models are not monotone in lambda, a geometric grid over the bracket is added.
    Among all evaluated models with loss at most ``theta`` the cheapest is returned.
    Warm-started fits run ``warm_iterations`` steps (default: the full budget).
    """
    lo, hi = (float(v) for v in lam_bounds)
    if not 0 < lo < hi:
        raise UsageError("lambda bounds must satisfy 0 < low < high")
    if not rule.theta > 0:
        raise UsageError("theta must be positive")
    X, y = _unpack_data(data, y)
    evaluated = []

    def fit(lam, start, k):
        cfg = replace(base_cfg, depth=rule.depth, width=rule.width, lam=lam,
                      seed=_child_seed(base_cfg.seed, k))
        if start is not None and warm_iterations:
            cfg = replace(cfg, iterations=warm_iterations)
        res = train_weight_decay(X, cfg, init_net=start, y=y)
        p = point_from_result(res)
        evaluated.append(p)
        return p

    p_lo = fit(lo, None, 0)
    if p_lo.loss > rule.theta:
        raise InfeasibleError(f"no model with loss <= {rule.theta:g} at lambda {lo:g}", p_lo.loss, p_lo)
    p_hi = fit(hi, p_lo.net, 1)
    if p_hi.loss > rule.theta:
        good = p_lo
        for k in range(bisection_steps):
            mid = math.sqrt(lo * hi)
            p = fit(mid, good.net, 2 + k)
            if p.loss <= rule.theta:
                lo, good = mid, p
            else:
                hi = mid
    used_grid = not _monotone(evaluated, rule.theta)
    if used_grid:
        a, b = (float(v) for v in lam_bounds)
        for k, lam in enumerate(np.geomspace(a, b, grid_size)):
            fit(float(lam), None, 1000 + k)
    feasible = [p for p in evaluated if p.loss <= rule.theta]
    chosen = min(feasible, key=lambda p: (p.cost, -p.lam))
    cert = CostCertificate.of(chosen.net, width=rule.width, note="threshold rule")
    return SrmResult(chosen.net, cert, chosen.loss, chosen.cost, chosen.lam, tuple(evaluated), used_grid)


def labeled_sample(d: int, m: int, seed, target=None) -> SphereDataset:
    """Uniform sample on X_d labeled by ``target`` (default: the sawtooth target)."""
    from .constructions import target_f
    from .geometry import sample_points

    X = sample_points(d, m, seed)
    f = target or (lambda Z: target_f(d, Z))
    return SphereDataset(d, X, f(X), seed if isinstance(seed, int) else None)
