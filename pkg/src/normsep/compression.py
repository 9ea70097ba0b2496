"""Compress a depth-2 network to a prescribed width by i.i.d. unit sampling."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import UsageError
from .geometry import mc_l2_distance, seed_sequence
from .net import ReluNet, normalize_depth2, weight_sq_norm

UNIT_BOUND = math.sqrt(3.0)  # sup of a normalized unit on X_d, since |(x, 1)| = sqrt3


@dataclass(frozen=True)
class CompressionReport:
    source_mass: float
    width: int
    net: ReluNet
    error_bound: float
    l2_error: float
    l2_se: float
    seed: int
    restart_errors: tuple = ()

    @property
    def sq_norm(self) -> float:
        return weight_sq_norm(self.net)


def sample_units(form, width: int, rng) -> ReluNet:
    """One Maurey draw of ``width`` units with probability proportional to ``|a_k|``."""
    A = form.total_mass
    p = np.abs(form.coeffs) / A
    idx = rng.choice(len(p), size=width, replace=True, p=p)
    scale = math.sqrt(A / width)
    W = form.directions[idx] * scale
    b = form.offsets[idx] * scale
    a = np.sign(form.coeffs[idx]) * scale
    return ReluNet([(W, b)], a, form.c)


def maurey_compress(net: ReluNet, width: int, seed: int = 0, restarts: int = 1,
                    n_eval: int = 20_000) -> CompressionReport:
    """Replace ``net`` by an average of ``width`` sampled normalized units.

    The draw keeps ``||phi||^2 = 2A + c^2`` where ``A`` is the total outer mass of the
    balanced source. With ``restarts > 1`` the draw with the least Monte Carlo L^2
    error is kept. Errors are measured on ``n_eval`` uniform points of ``X_d``.
    """
    if width < 1:
        raise UsageError("target width must be at least 1")
    if restarts < 1:
        raise UsageError("restarts must be at least 1")
    if net.input_dim % 2:
        raise UsageError("errors are measured on X_d, so the input dimension must be even")
    form = normalize_depth2(net)
    A = form.total_mass
    d = net.input_dim // 2
    if A == 0:
        return CompressionReport(0.0, width, net, 0.0, 0.0, 0.0, seed, (0.0,))
    ss = seed_sequence(seed)
    eval_seed, *draw_seeds = ss.spawn(restarts + 1)
    best = None
    errors = []
    for child in draw_seeds:
        cand = sample_units(form, width, np.random.default_rng(child))
        err_sq, se = mc_l2_distance(net, cand, d, n_eval, eval_seed)
        err = math.sqrt(err_sq)
        errors.append(err)
        if best is None or err < best[1]:
            # standard error of the root by the delta method
            best = (cand, err, se / (2 * err) if err > 0 else 0.0)
    return CompressionReport(A, width, best[0], UNIT_BOUND * A / math.sqrt(width),
                             best[1], best[2], seed, tuple(errors))
