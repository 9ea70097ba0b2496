"""Explicit ReLU networks with certified weight-norm costs.

Every constructor returns the network together with a :class:`CostCertificate`
whose witness realizes the same function.
"""
from __future__ import annotations

import math

import numpy as np

from .errors import DegeneracyError, UsageError
from .geometry import SphereDataset, check_on_product_sphere, closest_pair
from .net import CostCertificate, ReluNet, balance_depth2

SQRT2 = math.sqrt(2.0)


def _require_positive_int(name, value):
    if int(value) != value or value < 1:
        raise UsageError(f"{name} must be a positive integer, got {value!r}")
    return int(value)


# ------------------------------------------------------------------ sawtooth


def sawtooth(n: int, t):
    """Closed form of the n-cycle sawtooth: zero outside [-1, 1], amplitude 1, odd."""
    n = _require_positive_int("n", n)
    t = np.asarray(t, dtype=np.float64)
    s = np.mod((t + 1) * n / 2, 1.0)
    tri = np.where(s < 0.25, -4 * s, np.where(s < 0.75, 4 * s - 2, 4 - 4 * s))
    return np.where(np.abs(t) <= 1, tri, 0.0)


def sawtooth_knots(n: int) -> np.ndarray:
    """Interior breakpoints ``+-(2j-1)/(2n)`` in increasing order."""
    return (np.arange(1, 2 * n + 1) * 2 - 1) / (2 * n) - 1


def _sawtooth_raw(n):
    # hinge offsets q0 and coefficients a0 so that psi_n(t) = a0 . [t + q0]_+
    q0 = [1.0, -1.0]
    a0 = [-2.0 * n, 2.0 * n]
    for j in range(1, n + 1):
        h = (2 * j - 1) / (2 * n)
        sign = -1.0 if (j + n) % 2 == 0 else 1.0  # (-1)^(j+n+1)
        q0 += [-h, h]
        a0 += [4 * n * sign, -4 * n * sign]
    return np.array(a0), np.array(q0)


def sawtooth_net(n: int) -> ReluNet:
    """Depth-2 net of width ``2n + 2`` on a scalar input realizing the sawtooth exactly."""
    n = _require_positive_int("n", n)
    a0, q0 = _sawtooth_raw(n)
    return ReluNet([(np.ones((2 * n + 2, 1)), q0)], a0, 0.0)


def normalized_sawtooth_params(n: int, beta: float = 1.0):
    """``(a, u, q)`` with ``psi_n(beta t) = a . [u t + q]_+``, ``|u| = 1`` and ``u . q = 0``."""
    n = _require_positive_int("n", n)
    if not beta > 0:
        raise UsageError("beta must be positive")
    a0, q0 = _sawtooth_raw(n)
    norm_u0 = beta * math.sqrt(2 * n + 2)
    u = np.full(2 * n + 2, 1.0 / math.sqrt(2 * n + 2))
    return norm_u0 * a0, u, q0 / norm_u0


# ------------------------------------------------------------------ square and inner product


def square_net(s: float, K: int) -> ReluNet:
    """``(2s/K) sum_k [t - sk/K]_+ + [-t - sk/K]_+`` with 2K units on a scalar input."""
    K = _require_positive_int("K", K)
    if not s > 0:
        raise UsageError("s must be positive")
    k = np.repeat(np.arange(1, K + 1), 2)
    w = np.tile([1.0, -1.0], K)[:, None]
    return ReluNet([(w, -s * k / K)], np.full(2 * K, 2 * s / K), 0.0)


def square_error_bound(s: float, K: int) -> float:
    return s * s * (1 / K + 1 / K ** 2)


def _inner_units(d, K):
    # rows +-(e_i; e_i)/sqrt2 with offsets -sqrt2 k/K, ordered by (i, k, sign)
    W = np.zeros((2 * K * d, 2 * d))
    b = np.empty(2 * K * d)
    row = 0
    for i in range(d):
        for k in range(1, K + 1):
            for sign in (1.0, -1.0):
                W[row, i] = W[row, d + i] = sign / SQRT2
                b[row] = -SQRT2 * k / K
                row += 1
    return W, b


def inner_net(d: int, K: int, beta: float = 1.0):
    """Depth-2 net of width ``2Kd`` approximating ``<x1, x2> / beta`` on ``X_d``.

    Returns the raw network and the certificate of its balanced form.
    """
    d = _require_positive_int("d", d)
    K = _require_positive_int("K", K)
    if not beta > 0:
        raise UsageError("beta must be positive")
    W, b = _inner_units(d, K)
    net = ReluNet([(W, b)], np.full(2 * K * d, 2 * SQRT2 / (beta * K)), -1.0 / beta)
    _, cert = balance_depth2(net)
    return net, cert


def inner_error_bound(d: int, K: int) -> float:
    return 2 * d * (1 / K + 1 / K ** 2)


def inner_cost_bound(d: int, beta: float) -> float:
    """Upper bound ``4 sqrt6 d/beta + 1/(2 beta^2)`` on the balanced cost of :func:`inner_net`.

    Each of the ``2Kd`` units contributes ``(2 sqrt2/(beta K)) sqrt(1 + 2k^2/K^2)``,
    which is at most ``2 sqrt6/(beta K)``.
    """
    return 4 * math.sqrt(6) * d / beta + 1 / (2 * beta ** 2)


def inner_cost_bound_stated(d: int, beta: float) -> float:
    """The smaller constant ``4 sqrt3`` sometimes quoted for the same quantity; not a valid bound."""
    return 4 * math.sqrt(3) * d / beta + 1 / (2 * beta ** 2)


# ------------------------------------------------------------------ target and deep approximant


def target_f(d: int, x):
    """``psi_{3d}(sqrt(d) <x1, x2>)`` for one point or a batch on ``X_d``."""
    X = np.asarray(x, dtype=np.float64)
    single = X.ndim == 1
    X = check_on_product_sphere(X[None, :] if single else X, d)
    out = sawtooth(3 * d, math.sqrt(d) * np.einsum("ij,ij->i", X[:, :d], X[:, d:]))
    return float(out[0]) if single else out


def target_breakpoints(d: int) -> np.ndarray:
    """Kinks of ``t -> psi_{3d}(sqrt(d) t)`` inside [-1, 1]."""
    pts = np.concatenate([[-1.0], sawtooth_knots(3 * d), [1.0]]) / math.sqrt(d)
    return pts


def default_beta(d: int) -> float:
    return d ** -1.25


def deep_approximant(d: int, K: int, beta: float | None = None):
    """Depth-3 net ``psi_{3d}(sqrt(d) f_inner(x))`` with hidden widths ``(2Kd, 6d + 2)``.

    The inner product part is the balanced form of ``inner_net(d, K, beta)``; the
    sawtooth is attached through its normalized parameters at scale ``sqrt(d) beta``.
    """
    d = _require_positive_int("d", d)
    K = _require_positive_int("K", K)
    beta = default_beta(d) if beta is None else float(beta)
    if not beta > 0:
        raise UsageError("beta must be positive")
    inner, _ = inner_net(d, K, beta)
    # balance without dropping units so the first width stays 2Kd
    W, b = inner.layers[0]
    r = np.sqrt(np.einsum("ij,ij->i", W, W) + b * b)
    mass = inner.output_weights * r
    scale = np.sqrt(np.abs(mass)) / r
    W1, b1 = W * scale[:, None], b * scale
    v = np.sign(mass) * np.sqrt(np.abs(mass))
    c = inner.output_bias
    a, u, q = normalized_sawtooth_params(3 * d, math.sqrt(d) * beta)
    net = ReluNet([(W1, b1), (np.outer(u, v), c * u + q)], a, 0.0)
    return net, CostCertificate.of(net, width=max(6 * d + 2, 2 * K * d), note="deep approximant")


def deep_error_bound(d: int, K: int) -> float:
    return 12 * d ** 2.5 * (1 / K + 1 / K ** 2)


# ------------------------------------------------------------------ tent interpolant


def tent_interpolant(data: SphereDataset):
    """Depth-2 interpolant of width ``3m`` built from one tent ridge per sample.

    With ``eta`` the minimum pairwise distance and ``eta0 = eta^2/(2 sqrt2)``, sample
    ``j`` gets ``r_j(x) = z(v_j . x - sqrt2)`` where ``v_j = x_j/sqrt2`` and
    ``z(t) = ([t - eta0]_+ - 2[t]_+ + [t + eta0]_+)/eta0``. Each ``r_j`` is 1 at ``x_j``
    and vanishes at every other sample.
    """
    if data.labels is None:
        raise UsageError("tent interpolant needs labels")
    y = data.labels
    if np.any(np.abs(y) > 1):
        raise UsageError("labels must lie in [-1, 1]")
    eta0 = tent_eta0(data)
    V = data.points / SQRT2
    W = np.repeat(V, 3, axis=0)
    b = np.tile([-SQRT2 - eta0, -SQRT2, -SQRT2 + eta0], data.m)
    a = np.repeat(y, 3) * np.tile([1.0, -2.0, 1.0], data.m) / eta0
    net = ReluNet([(W, b)], a, 0.0)
    _, cert = balance_depth2(net)
    return net, cert


def tent_eta0(data: SphereDataset) -> float:
    if data.m < 2:
        # a single sample is isolated at the largest possible distance 2
        return 4 / (2 * SQRT2)
    eta, i, j = closest_pair(data)
    if eta == 0:
        raise DegeneracyError("duplicate sample points", (i, j))
    return eta * eta / (2 * SQRT2)


def tent_cost_formula(labels, eta0: float) -> float:
    """Balanced cost of the tent interpolant summed unit by unit."""
    per = math.sqrt(1 + (SQRT2 + eta0) ** 2) + 2 * math.sqrt(3) + math.sqrt(1 + (eta0 - SQRT2) ** 2)
    return float(np.abs(labels).sum()) * per / eta0


def tent_cost_bound(m: int, eta0: float) -> float:
    """``8 m / eta0``."""
    return 8 * m / eta0
