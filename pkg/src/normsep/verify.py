"""Verification suites: each returns a table of named checks with measured value and limit.

The same suites back the ``verify`` subcommand and the acceptance tests. Results
carry no timing information, so their CSV rendering depends only on the inputs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import constructions as C
from .bounds import SAWTOOTH_POLY_FLOOR, interpolant_cost_bound
from .compression import UNIT_BOUND, maurey_compress
from .errors import UsageError
from .experiment import rows_to_csv
from .geometry import (MuDensity, harmonic_dim, harmonic_threshold, poly_distance_A,
                       sample_points, sample_product_sphere, seed_sequence,
                       separation_tail_bound, separation_tail_frequency)
from .net import (ReluNet, analytic_gradient, balance_depth2, evaluate, evaluate_extended,
                  from_vector, lift_to_depth3, objective, to_vector)

CHECK_COLUMNS = ("suite", "check", "params", "value", "limit", "passed")


@dataclass(frozen=True)
class Check:
    suite: str
    check: str
    params: str
    value: float
    limit: float
    passed: bool

    def as_row(self) -> dict:
        return {"suite": self.suite, "check": self.check, "params": self.params,
                "value": float(self.value), "limit": float(self.limit), "passed": int(self.passed)}


def _le(suite, check, params, value, limit):
    return Check(suite, check, params, float(value), float(limit), bool(value <= limit))


def _ge(suite, check, params, value, limit):
    return Check(suite, check, params, float(value), float(limit), bool(value >= limit))


def _eq(suite, check, params, value, expected):
    return Check(suite, check, params, float(value), float(expected), bool(value == expected))


def all_passed(checks) -> bool:
    return all(c.passed for c in checks)


def checks_to_csv(checks) -> str:
    return rows_to_csv([c.as_row() for c in checks], CHECK_COLUMNS)


def checks_table(checks) -> str:
    lines = [f"{'suite':<11} {'check':<28} {'params':<24} {'value':>13} {'limit':>13}  result"]
    for c in checks:
        lines.append(f"{c.suite:<11} {c.check:<28} {c.params:<24} {c.value:>13.6g} {c.limit:>13.6g}  "
                     f"{'pass' if c.passed else 'FAIL'}")
    return "\n".join(lines) + "\n"


# ------------------------------------------------------------------ suites


def _piecewise_oracle(n, t):
    # linear interpolation through the knot values, zero outside [-1, 1]
    knots = np.concatenate([[-1.0], C.sawtooth_knots(n), [1.0]])
    vals = np.concatenate([[0.0], (-1.0) ** np.arange(1, 2 * n + 1), [0.0]])
    return np.where(np.abs(t) <= 1, np.interp(t, knots, vals), 0.0)


def suite_sawtooth(n_list=(1, 2, 4, 8, 16, 64), grid=10_000, tol=1e-12):
    out = []
    for n in n_list:
        net = C.sawtooth_net(n)
        t = np.concatenate([np.linspace(-1.5, 1.5, grid), C.sawtooth_knots(n), [-1.0, 1.0]])
        err = np.abs(evaluate_extended(net, t[:, None]) - _piecewise_oracle(n, t)).max()
        p = f"n={n}"
        out.append(_le("sawtooth", "max_abs_error", p, err, tol))
        out.append(_eq("sawtooth", "width", p, net.widths[0], 2 * n + 2))
        out.append(_le("sawtooth", "closed_form_error", p,
                       np.abs(C.sawtooth(n, t) - _piecewise_oracle(n, t)).max(), tol))
    return out


def suite_square(s=math.sqrt(2), K_list=(5, 20, 100), grid=10_000):
    out = []
    for K in K_list:
        net = C.square_net(s, K)
        t = np.concatenate([np.linspace(-s, s, grid), s * np.arange(-K, K + 1) / K])
        err = np.abs(evaluate(net, t[:, None]) - t * t).max()
        out.append(_le("square", "sup_error", f"s={s:.6g},K={K}", err, C.square_error_bound(s, K)))
    return out


def suite_inner(d_list=(2, 3, 4), K_list=(20, 100), samples=100_000, seed=0):
    out = []
    for d in d_list:
        X = sample_points(d, samples, [seed, d])
        ip = np.einsum("ij,ij->i", X[:, :d], X[:, d:])
        for K in K_list:
            net, cert = C.inner_net(d, K)
            p = f"d={d},K={K}"
            out.append(_le("inner", "mc_sup_error", p, np.abs(net(X) - ip).max(),
                           C.inner_error_bound(d, K)))
            out.append(_le("inner", "cost", p, cert.cost_value, C.inner_cost_bound(d, 1.0)))
    return out


def suite_deep(d_list=(2, 3, 4), K_list=(50, 200), samples=100_000, ratio_d=range(2, 9),
               ratio_K=200, seed=0):
    out = []
    for d in d_list:
        X = sample_points(d, samples, [seed, d])
        fx = C.target_f(d, X)
        for K in K_list:
            net, cert = C.deep_approximant(d, K)
            p = f"d={d},K={K}"
            out.append(_le("deep", "mc_sup_error", p, np.abs(net(X) - fx).max(),
                           C.deep_error_bound(d, K)))
            out.append(_eq("deep", "width1", p, net.widths[0], 2 * K * d))
            out.append(_eq("deep", "width2", p, net.widths[1], 6 * d + 2))
            out.append(_le("deep", "certificate_recompute", p,
                           abs(cert.recompute() - cert.cost_value), 0.0))
    if ratio_d:
        ratios = [C.deep_approximant(d, ratio_K)[1].cost_value / d ** 2.5 for d in ratio_d]
        p = f"K={ratio_K},d={min(ratio_d)}..{max(ratio_d)}"
        out.append(_le("deep", "cost_ratio_spread", p, max(ratios) / min(ratios), 3.0))
    return out


def suite_tent(d=4, m=20, trials=1000, delta=0.1, frac=0.9, tol=1e-9, seed=0):
    prob = interpolant_cost_bound(m, d, delta)
    resid = 0.0
    worst = -math.inf
    within = 0
    support = math.inf
    for child in seed_sequence([seed, d, m]).spawn(trials):
        rng = np.random.default_rng(child)
        data = sample_product_sphere(d, m, child).with_labels(rng.uniform(-1, 1, m))
        net, cert = C.tent_interpolant(data)
        eta0 = C.tent_eta0(data)
        eta = math.sqrt(2 * math.sqrt(2) * eta0)
        resid = max(resid, np.abs(net(data.points) - data.labels).max())
        worst = max(worst, cert.cost_value / (16 * math.sqrt(2) * m / eta ** 2))
        within += cert.cost_value <= prob
        G = data.points @ data.points.T / math.sqrt(2) - math.sqrt(2)
        np.fill_diagonal(G, -math.inf)
        # the closest pair meets the margin with equality
        support = min(support, (np.abs(G) / eta0).min())
    p = f"d={d},m={m},trials={trials}"
    return [
        _le("tent", "max_residual", p, resid, tol),
        _le("tent", "cost_over_16sqrt2m/eta^2", p, worst, 1.0),
        _ge("tent", "support_margin_ratio", p, support, 1 - 1e-9),
        _ge("tent", "frac_within_prob_bound", p + f",delta={delta}", within / trials, frac),
    ]


def random_depth2(n_in, width, rng, scale=1.0) -> ReluNet:
    W = rng.standard_normal((width, n_in)) * scale
    b = rng.standard_normal(width) * scale
    a = rng.standard_normal(width) / math.sqrt(width)
    return ReluNet([(W, b)], a, float(rng.standard_normal()))


def suite_maurey(d=3, width=512, omegas=(16, 64, 256), seeds=50, corpus=4, n_eval=20_000,
                 slack=1.2, seed=0):
    out = []
    for k, child in enumerate(seed_sequence([seed, d, width]).spawn(corpus)):
        form, _ = balance_depth2(random_depth2(2 * d, width, np.random.default_rng(child)))
        src = form.to_net()
        A = form.total_mass
        for omega in omegas:
            errs = []
            norm_excess = -math.inf
            for s in range(seeds):
                rep = maurey_compress(src, omega, seed=[seed, k, omega, s], n_eval=n_eval)
                errs.append(rep.l2_error)
                norm_excess = max(norm_excess, rep.sq_norm - (4 * A + src.output_bias ** 2))
            p = f"net={k},omega={omega}"
            out.append(_le("maurey", "mean_l2_error", p, float(np.mean(errs)),
                           slack * UNIT_BOUND * A / math.sqrt(omega)))
            out.append(_le("maurey", "sq_norm_excess", p, norm_excess, 1e-9))
    return out


def suite_lift(nets=100, probes=1000, tol=1e-9, seed=0):
    agree = 0.0
    excess = -math.inf
    for child in seed_sequence([seed, 6]).spawn(nets):
        rng = np.random.default_rng(child)
        d = int(rng.integers(2, 6))
        net = random_depth2(2 * d, int(rng.integers(1, 40)), rng)
        lifted, cert = lift_to_depth3(net)
        _, bal = balance_depth2(net)
        X = sample_points(d, probes, child)
        agree = max(agree, np.abs(lifted(X) - net(X)).max())
        excess = max(excess, cert.cost_value - (4 * d / 3 + 4 / 3 * bal.cost_value))
    p = f"nets={nets}"
    return [_le("lift", "max_disagreement", p, agree, tol),
            _le("lift", "cost_excess", p, excess, 0.0)]


def suite_separation(d=4, m=20, etas=(0.05, 0.1, 0.2), trials=10_000, sigmas=3.0, seed=0):
    freq = separation_tail_frequency(d, m, etas, trials, [seed, d, m])
    out = []
    for eta, f in zip(etas, freq):
        bound = separation_tail_bound(m, eta, d)
        p = min(bound, 1.0)
        noise = sigmas * math.sqrt(p * (1 - p) / trials)
        out.append(_le("separation", "tail_frequency", f"d={d},m={m},eta={eta}", f, bound + noise))
    return out


def suite_spectral(n_max=10, d_max=12):
    out = [_eq("spectral", "N_3n", f"n={n}", harmonic_dim(3, n), 2 * n + 1) for n in range(n_max + 1)]
    out.append(Check("spectral", "harmonic_threshold", "N_{d,2d}>2^d", harmonic_threshold(), math.nan,
                     True))
    onset = None
    for d in range(3, d_max + 1):
        r = _sawtooth_poly_distance(d)
        ok = r.distance >= SAWTOOTH_POLY_FLOOR
        if onset is None and ok:
            onset = d
        if onset is not None:
            out.append(_ge("spectral", "A_d2d", f"d={d}", r.distance, SAWTOOTH_POLY_FLOOR))
        out.append(_le("spectral", "pythagoras_gap", f"d={d}", r.pythagoras_gap, 1e-8))
    out.append(Check("spectral", "A_d2d_onset", "", onset if onset else math.nan, 3, onset is not None))
    out.append(_le("spectral", "mu_mass_error", "d=5", abs(MuDensity(5).total_mass() - 1), 1e-10))
    return out


def _sawtooth_poly_distance(d):
    n = 3 * d
    r = math.sqrt(d)
    bp = np.concatenate([C.sawtooth_knots(n), [-1.0, 1.0]]) / r
    return poly_distance_A(d, 2 * d, lambda t: C.sawtooth(n, r * t), breakpoints=bp)


def suite_gradient(triples=200, tol=1e-5, h=1e-6, kink_margin=1e-3, seed=0):
    """Central differences over every parameter, for nets whose preactivations stay clear of 0."""
    worst = 0.0
    used = 0
    rng = np.random.default_rng(seed_sequence([seed, 9]))
    while used < triples:
        depth = int(rng.integers(2, 4))
        n_in = int(rng.integers(1, 6))
        dims = (n_in,) + tuple(int(w) for w in rng.integers(1, 9, depth - 1))
        batch = int(rng.integers(1, 9))
        lam = float(rng.choice([0.0, rng.uniform(0, 1)]))
        X = rng.standard_normal((batch, n_in))
        y = rng.uniform(-1, 1, batch)
        theta = rng.standard_normal(sum(o * i + o for i, o in zip(dims, dims[1:] + (1,))))
        net = from_vector(theta, dims)
        if _min_preactivation(net, X) < kink_margin:
            continue
        g = to_vector(analytic_gradient(net, X, lam, y))
        fd = np.empty_like(theta)
        for k in range(theta.size):
            e = np.zeros_like(theta)
            e[k] = h
            fd[k] = (objective(from_vector(theta + e, dims), X, lam, y)
                     - objective(from_vector(theta - e, dims), X, lam, y)) / (2 * h)
        worst = max(worst, np.linalg.norm(g - fd) / max(np.linalg.norm(fd), 1e-8))
        used += 1
    return [_le("gradient", "max_rel_error", f"triples={triples}", worst, tol)]


def _min_preactivation(net, X):
    h = X
    low = math.inf
    for W, b in net.layers:
        z = h @ W.T + b
        low = min(low, float(np.abs(z).min()))
        h = np.maximum(z, 0)
    return low


SUITES = {
    "sawtooth": suite_sawtooth,
    "square": suite_square,
    "inner": suite_inner,
    "deep": suite_deep,
    "tent": suite_tent,
    "maurey": suite_maurey,
    "lift": suite_lift,
    "separation": suite_separation,
    "spectral": suite_spectral,
    "gradient": suite_gradient,
}


def run_suite(name: str, **params) -> list:
    try:
        fn = SUITES[name]
    except KeyError:
        raise UsageError(f"unknown suite {name!r}; choose from {', '.join(SUITES)}") from None
    return fn(**params)
