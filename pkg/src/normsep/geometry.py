"""Sampling and integration on the product of two unit spheres, plus 1-D spectral tools.

Points of ``X_d = S^{d-1} x S^{d-1}`` are stored as rows of length ``2d``: the first
half is ``x1`` and the second half ``x2``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate, special

from . import kernels
from .errors import DomainError, NetFormatError, UsageError

UNIT_TOL = 1e-9
CHUNK = 65536


class AccuracyWarning(UserWarning):
    """Quadrature order is too low for the requested projection."""


def check_on_product_sphere(X, d: int, tol: float = UNIT_TOL) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != 2 * d:
        raise DomainError(f"points of shape {X.shape} do not live in R^{2 * d}")
    n1 = np.linalg.norm(X[:, :d], axis=1)
    n2 = np.linalg.norm(X[:, d:], axis=1)
    bad = np.flatnonzero((np.abs(n1 - 1) > tol) | (np.abs(n2 - 1) > tol))
    if bad.size:
        raise DomainError(f"{bad.size} point(s) off the product of unit spheres, first at row {bad[0]}")
    return X


@dataclass(frozen=True)
class SphereDataset:
    """Sample on ``X_d`` with optional labels in [-1, 1]."""

    d: int
    points: np.ndarray
    labels: Optional[np.ndarray] = None
    seed: Optional[int] = None

    def __post_init__(self):
        pts = np.ascontiguousarray(self.points, dtype=np.float64)
        check_on_product_sphere(pts, self.d)
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        if self.labels is not None:
            y = np.ascontiguousarray(self.labels, dtype=np.float64)
            if y.shape != (pts.shape[0],):
                raise UsageError(f"{y.size} labels for {pts.shape[0]} points")
            if not np.all(np.isfinite(y)):
                raise UsageError("labels must be finite")
            y.setflags(write=False)
            object.__setattr__(self, "labels", y)

    @property
    def m(self) -> int:
        return self.points.shape[0]

    def __len__(self):
        return self.m

    @property
    def first(self) -> np.ndarray:
        return self.points[:, :self.d]

    @property
    def second(self) -> np.ndarray:
        return self.points[:, self.d:]

    def inner(self) -> np.ndarray:
        return np.einsum("ij,ij->i", self.first, self.second)

    def with_labels(self, labels) -> "SphereDataset":
        return SphereDataset(self.d, self.points, labels, self.seed)

    def subset(self, idx) -> "SphereDataset":
        y = None if self.labels is None else self.labels[idx]
        return SphereDataset(self.d, self.points[idx], y, self.seed)


DATASET_MAGIC = "normsep-dataset"


def dataset_to_text(data: SphereDataset) -> str:
    """Header ``normsep-dataset d=.. m=.. seed=.. labels=0|1`` then one row per point.

    Coordinates (and the label, last) are written with ``repr`` so they round-trip exactly.
    """
    has_y = data.labels is not None
    seed = "none" if data.seed is None else str(int(data.seed))
    lines = [f"{DATASET_MAGIC} d={data.d} m={data.m} seed={seed} labels={int(has_y)}"]
    for i in range(data.m):
        vals = list(data.points[i]) + ([data.labels[i]] if has_y else [])
        lines.append(" ".join(repr(float(v)) for v in vals))
    return "\n".join(lines) + "\n"


def dataset_from_text(text: str) -> SphereDataset:
    raw = text.encode("utf-8")
    offset = 0
    lines = raw.split(b"\n")
    try:
        head = lines[0].decode().split()
        if not head or head[0] != DATASET_MAGIC:
            raise ValueError("missing dataset header")
        fields_ = dict(tok.split("=", 1) for tok in head[1:])
        d, m = int(fields_["d"]), int(fields_["m"])
        seed = None if fields_["seed"] == "none" else int(fields_["seed"])
        has_y = fields_["labels"] == "1"
    except (ValueError, KeyError, UnicodeDecodeError) as exc:
        raise NetFormatError(f"bad dataset header: {exc}", 0) from None
    width = 2 * d + has_y
    rows = []
    offset = len(lines[0]) + 1
    for line in lines[1:]:
        if line.strip():
            try:
                vals = [float(v) for v in line.split()]
                if len(vals) != width:
                    raise ValueError(f"expected {width} numbers, found {len(vals)}")
            except ValueError as exc:
                raise NetFormatError(f"bad dataset row: {exc}", offset) from None
            rows.append(vals)
        offset += len(line) + 1
    if len(rows) != m:
        raise NetFormatError(f"header announces {m} rows, found {len(rows)}", len(raw))
    arr = np.array(rows, dtype=np.float64).reshape(m, width)
    return SphereDataset(d, arr[:, :2 * d], arr[:, 2 * d] if has_y else None, seed)


def save_dataset(data: SphereDataset, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dataset_to_text(data))


def load_dataset(path) -> SphereDataset:
    with open(path, encoding="utf-8") as fh:
        return dataset_from_text(fh.read())


def seed_sequence(seed) -> np.random.SeedSequence:
    """Accept an int, a sequence of ints or an existing SeedSequence."""
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(seed)


def _normalize_halves(G, d):
    G[:, :d] /= np.linalg.norm(G[:, :d], axis=1, keepdims=True)
    G[:, d:] /= np.linalg.norm(G[:, d:], axis=1, keepdims=True)
    return G


def sample_points(d: int, m: int, seed) -> np.ndarray:
    """``m`` uniform points on ``X_d`` as an array; chunked streams make prefixes stable in ``m``."""
    if d < 1 or m < 0:
        raise UsageError("need d >= 1 and m >= 0")
    out = np.empty((m, 2 * d))
    n_chunks = -(-m // CHUNK)
    for k, child in enumerate(seed_sequence(seed).spawn(n_chunks)):
        lo, hi = k * CHUNK, min(m, (k + 1) * CHUNK)
        rng = np.random.default_rng(child)
        out[lo:hi] = _normalize_halves(rng.standard_normal((hi - lo, 2 * d)), d)
    return out


def sample_product_sphere(d: int, m: int, seed=0) -> SphereDataset:
    """Unlabeled uniform sample: each half is a normalized isotropic Gaussian vector."""
    if d < 2 or m < 1:
        raise UsageError("need d >= 2 and m >= 1")
    return SphereDataset(d, sample_points(d, m, seed), None, seed if isinstance(seed, int) else None)


def closest_pair(data) -> tuple:
    """``(distance, i, j)`` for the closest pair of rows; ties keep the first pair found."""
    X = data.points if isinstance(data, SphereDataset) else np.asarray(data, dtype=np.float64)
    if X.shape[0] < 2:
        raise UsageError("need at least two points")
    sq, i, j = kernels.min_pairwise_sqdist(np.ascontiguousarray(X))
    return math.sqrt(sq), int(i), int(j)


def min_pairwise_distance(data) -> float:
    return closest_pair(data)[0]


def separation_tail_bound(m: int, eta: float, d: int) -> float:
    """Upper bound ``m^2 eta^(d-1)`` on P(min pairwise distance <= eta)."""
    return m * m * eta ** (d - 1)


def separation_tail_frequency(d: int, m: int, etas: Sequence[float], trials: int, seed=0):
    """Fraction of ``trials`` independent samples whose minimum distance is <= each eta."""
    etas = np.asarray(etas, dtype=np.float64)
    hits = np.zeros(etas.shape, dtype=np.int64)
    for child in seed_sequence(seed).spawn(trials):
        X = sample_points(d, m, child)
        sq, _, _ = kernels.min_pairwise_sqdist(X)
        hits += math.sqrt(sq) <= etas
    return hits / trials


def mc_l2_distance(f: Callable, g: Callable, d: int, n_samples: int = 100_000, seed=0,
                   chunk: int = CHUNK):
    """Monte Carlo estimate of ``E (f - g)^2`` under Unif(X_d), with its standard error.

    ``f`` and ``g`` map an ``(n, 2d)`` array to ``n`` values. Chunk sums are combined
    in a fixed order, so results depend only on the arguments.
    """
    if n_samples < 2:
        raise UsageError("need at least two samples")
    X = sample_points(d, n_samples, seed)
    s1 = 0.0
    s2 = 0.0
    for lo in range(0, n_samples, chunk):
        xs = X[lo:lo + chunk]
        diff = np.asarray(f(xs), dtype=np.float64) - np.asarray(g(xs), dtype=np.float64)
        sq = diff * diff
        s1 += float(sq.sum())
        s2 += float((sq * sq).sum())
    mean = s1 / n_samples
    var = max(s2 / n_samples - mean * mean, 0.0) * n_samples / (n_samples - 1)
    return mean, math.sqrt(var / n_samples)


# ------------------------------------------------------------ the pushforward measure


class MuDensity:
    """Law of one coordinate of a uniform point on ``S^{d-1}``, density on [-1, 1]."""

    def __init__(self, d: int):
        if d < 2:
            raise UsageError("need d >= 2")
        self.d = d
        self.alpha = (d - 3) / 2
        self.normalizer = math.exp(special.gammaln(d / 2) - special.gammaln((d - 1) / 2)) / math.sqrt(math.pi)

    def pdf(self, t):
        t = np.asarray(t, dtype=np.float64)
        inside = np.abs(t) < 1
        with np.errstate(divide="ignore", invalid="ignore"):
            val = self.normalizer * np.power(np.where(inside, 1 - t * t, 1.0), self.alpha)
        return np.where(inside, val, 0.0)

    def cdf(self, t):
        a = (self.d - 1) / 2
        x = (np.clip(np.asarray(t, dtype=np.float64), -1, 1) + 1) / 2
        return special.betainc(a, a, x)

    def sample(self, n: int, seed=0):
        a = (self.d - 1) / 2
        return 2 * np.random.default_rng(seed).beta(a, a, size=n) - 1

    def total_mass(self) -> float:
        # the weight (1 - t^2)^alpha is handled analytically by QUADPACK's algebraic mode
        val, _ = integrate.quad(lambda t: 1.0, -1, 1, weight="alg",
                                wvar=(self.alpha, self.alpha), epsabs=1e-13, epsrel=1e-13)
        return self.normalizer * val


def beta_term(d: int) -> tuple:
    """``(B((d-1)/2, 1/2), 2 sqrt(pi)/(d-1))``; the first is never below the second for d >= 3."""
    return float(special.beta((d - 1) / 2, 0.5)), 2 * math.sqrt(math.pi) / (d - 1)


def harmonic_dim(d: int, n: int) -> int:
    """Exact dimension of degree-``n`` spherical harmonics on ``S^{d-1}``."""
    if d < 2 or n < 0:
        raise UsageError("need d >= 2 and n >= 0")
    if n == 0:
        return 1
    if d == 2:
        return 2
    return (2 * n + d - 2) * math.factorial(n + d - 3) // (math.factorial(n) * math.factorial(d - 2))


def harmonic_threshold(d_max: int = 1000) -> int:
    """Smallest ``d >= 2`` with ``N_{d,2d} > 2^d``."""
    for d in range(2, d_max + 1):
        if harmonic_dim(d, 2 * d) > 2 ** d:
            return d
    raise UsageError(f"no threshold found up to d = {d_max}")


# ------------------------------------------------------------ polynomial distance


@dataclass(frozen=True)
class ProjectionResult:
    distance: float
    norm_sq: float
    coeffs: np.ndarray
    residual_sq: float
    quad_order: int

    @property
    def proj_sq(self) -> float:
        return float(self.coeffs @ self.coeffs)

    @property
    def pythagoras_gap(self) -> float:
        return abs(self.residual_sq + self.proj_sq - self.norm_sq)


def _orthonormal_basis(d: int, n: int, t):
    """Values of the first ``n`` polynomials orthonormal in L^2(mu_d), shape (n, len(t))."""
    a = (d - 3) / 2
    mu = MuDensity(d)
    k = np.arange(n)
    # squared norm of the Jacobi polynomial P_k^(a,a) under (1 - t^2)^a
    log_h = ((2 * a + 1) * math.log(2) + 2 * special.gammaln(k + a + 1)
             - np.log(2 * k + 2 * a + 1) - special.gammaln(k + 2 * a + 1) - special.gammaln(k + 1))
    if d == 3:
        log_h = np.log(2.0 / (2 * k + 1))
    scale = np.exp(-0.5 * (log_h + math.log(mu.normalizer)))
    P = np.stack([special.eval_jacobi(int(j), a, a, t) for j in k]) if n else np.empty((0, len(t)))
    return P * scale[:, None]


def _piece_rule(lo, hi, a, q):
    """Nodes and weights on [lo, hi] for the integral against (1 - t^2)^a dt."""
    at_left, at_right = lo <= -1.0, hi >= 1.0
    if a == 0 or not (at_left or at_right):
        s, w = special.roots_legendre(q)
        t = lo + (hi - lo) * (s + 1) / 2
        return t, w * (hi - lo) / 2 * np.power(1 - t * t, a)
    if at_left and at_right:
        return special.roots_jacobi(q, a, a)
    half = (hi - lo) / 2
    if at_left:
        # (1 + t)^a becomes half^a (1 + s)^a; the smooth (1 - t)^a stays in the weights
        s, w = special.roots_jacobi(q, 0.0, a)
        t = lo + half * (s + 1)
        return t, w * half ** (a + 1) * np.power(1 - t, a)
    s, w = special.roots_jacobi(q, a, 0.0)
    t = lo + half * (s + 1)
    return t, w * half ** (a + 1) * np.power(1 + t, a)


def poly_distance_A(d: int, n: int, g: Callable, quad_order: Optional[int] = None,
                    breakpoints: Sequence[float] = ()) -> ProjectionResult:
    """L^2(mu_d) distance from ``g`` to polynomials of degree below ``n``.

    ``g`` is projected onto an orthonormal Jacobi basis. Integrals are split at
    ``breakpoints`` (kinks of ``g``) and each piece gets its own Gauss rule of
    ``quad_order`` nodes. The residual is integrated directly, so the Pythagoras gap
    of the result measures quadrature error rather than holding by construction.
    """
    if d < 3 or n < 1:
        raise UsageError("need d >= 3 and n >= 1")
    q = 4 * n if quad_order is None else int(quad_order)
    if q < 1:
        raise UsageError("quad_order must be positive")
    edges = np.unique(np.concatenate([[-1.0, 1.0], np.clip(np.asarray(breakpoints, float), -1, 1)]))
    a = (d - 3) / 2
    mu_norm = MuDensity(d).normalizer
    nodes, weights = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        t, w = _piece_rule(float(lo), float(hi), a, q)
        nodes.append(t)
        weights.append(w * mu_norm)
    t = np.concatenate(nodes)
    w = np.concatenate(weights)
    gv = np.asarray(g(t), dtype=np.float64)
    P = _orthonormal_basis(d, n, t)
    coeffs = P @ (w * gv)
    resid = gv - coeffs @ P
    norm_sq = float(w @ (gv * gv))
    residual_sq = float(w @ (resid * resid))
    result = ProjectionResult(math.sqrt(max(residual_sq, 0.0)), norm_sq, coeffs, residual_sq, q)
    if 2 * q - 1 < 2 * n:
        warnings.warn(f"quad_order {q} cannot integrate degree {2 * n - 2} products exactly; "
                      f"Pythagoras gap {result.pythagoras_gap:.3e}", AccuracyWarning, stacklevel=2)
    return result
