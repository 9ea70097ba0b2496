"""Depth-2/3 ReLU networks: evaluation, gradients, norm accounting, balancing, lifting, I/O."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import kernels
from .errors import NetFormatError, ShapeError, UsageError

FORMAT_VERSION = 1


def _frozen(a, ndim):
    arr = np.array(a, dtype=np.float64, copy=True, ndmin=ndim)
    if arr.ndim != ndim:
        raise ShapeError(f"expected a {ndim}-d array, got shape {arr.shape}")
    arr = np.ascontiguousarray(arr)
    arr.setflags(write=False)
    return arr


class ReluNet:
    """Immutable ReLU network ``x -> w_L^T [... [W_1 x + b_1]_+ ...]_+ + b_L``.

    ``layers`` holds one ``(W, b)`` pair per hidden layer; one pair gives depth 2
    and two pairs give depth 3.
    """

    __slots__ = ("layers", "output_weights", "output_bias")

    def __init__(self, layers: Sequence, output_weights, output_bias: float):
        if len(layers) not in (1, 2):
            raise ShapeError("only depth 2 and depth 3 networks are supported")
        frozen = []
        fan_in = None
        for W, b in layers:
            W = _frozen(W, 2)
            b = _frozen(b, 1)
            if W.shape[0] < 1 or W.shape[1] < 1:
                raise ShapeError(f"empty weight matrix of shape {W.shape}")
            if b.shape[0] != W.shape[0]:
                raise ShapeError(f"bias length {b.shape[0]} does not match {W.shape[0]} units")
            if fan_in is not None and W.shape[1] != fan_in:
                raise ShapeError(f"layer expects {W.shape[1]} inputs but receives {fan_in}")
            fan_in = W.shape[0]
            frozen.append((W, b))
        w = _frozen(output_weights, 1)
        if w.shape[0] != fan_in:
            raise ShapeError(f"output weights have length {w.shape[0]}, expected {fan_in}")
        c = float(output_bias)
        finite = all(np.isfinite(W).all() and np.isfinite(b).all() for W, b in frozen)
        if not (finite and np.isfinite(w).all() and math.isfinite(c)):
            raise ValueError("network parameters must be finite")
        object.__setattr__(self, "layers", tuple(frozen))
        object.__setattr__(self, "output_weights", w)
        object.__setattr__(self, "output_bias", c)

    def __setattr__(self, name, value):
        raise AttributeError("ReluNet is immutable")

    @property
    def depth(self) -> int:
        return len(self.layers) + 1

    @property
    def input_dim(self) -> int:
        return self.layers[0][0].shape[1]

    @property
    def widths(self) -> tuple:
        return tuple(W.shape[0] for W, _ in self.layers)

    @property
    def dims(self) -> tuple:
        return (self.input_dim,) + self.widths

    def __call__(self, X):
        return evaluate(self, X)

    def __repr__(self):
        return f"ReluNet(depth={self.depth}, input_dim={self.input_dim}, widths={self.widths})"

    def __eq__(self, other):
        if not isinstance(other, ReluNet) or self.dims != other.dims:
            return NotImplemented if not isinstance(other, ReluNet) else False
        return bool(np.array_equal(to_vector(self), to_vector(other)))

    __hash__ = None


def zero_net(input_dim: int, widths: Sequence[int] = (1,), output_bias: float = 0.0) -> ReluNet:
    dims = (input_dim,) + tuple(widths)
    layers = [(np.zeros((o, i)), np.zeros(o)) for i, o in zip(dims[:-1], dims[1:])]
    return ReluNet(layers, np.zeros(dims[-1]), output_bias)


def to_vector(net: ReluNet) -> np.ndarray:
    """Flat parameter vector in kernel layout: W1, b1, [W2, b2,] w_out, b_out."""
    parts = []
    for W, b in net.layers:
        parts.append(W.ravel())
        parts.append(b)
    parts.append(net.output_weights)
    parts.append([net.output_bias])
    return np.concatenate(parts)


def from_vector(theta, dims: Sequence[int]) -> ReluNet:
    theta = np.asarray(theta, dtype=np.float64)
    dims = tuple(int(k) for k in dims)
    if theta.shape != (kernels.n_params(dims),):
        raise ShapeError(f"vector of length {theta.size} does not fit dims {dims}")
    layers = []
    pos = 0
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        W = theta[pos:pos + fan_in * fan_out].reshape(fan_out, fan_in)
        pos += fan_in * fan_out
        layers.append((W, theta[pos:pos + fan_out]))
        pos += fan_out
    return ReluNet(layers, theta[pos:pos + dims[-1]], theta[-1])


def _as_batch(net: ReluNet, x):
    X = np.asarray(x, dtype=np.float64)
    single = X.ndim == 1
    if single:
        X = X[None, :]
    if X.ndim != 2 or X.shape[1] != net.input_dim:
        raise ShapeError(f"input of shape {np.shape(x)} does not match input_dim {net.input_dim}")
    return np.ascontiguousarray(X), single


def evaluate(net: ReluNet, x):
    """Forward pass at one point (returns a float) or a batch of rows (returns an array)."""
    X, single = _as_batch(net, x)
    out = kernels.forward(to_vector(net), net.dims, X)
    return float(out[0]) if single else out


def weight_sq_norm(net: ReluNet) -> float:
    theta = to_vector(net)
    return float(theta @ theta)


def cost(net: ReluNet) -> float:
    """``||phi||^2 / L``, the weight-decay cost of this parameterization."""
    return weight_sq_norm(net) / net.depth


def _unpack_data(data, y=None):
    if y is None:
        X, y = data.points, data.labels
        if y is None:
            raise UsageError("dataset has no labels")
    else:
        X = data
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise UsageError("batch must be a nonempty 2-d array of points")
    if y.shape != (X.shape[0],):
        raise ShapeError(f"{y.shape[0] if y.ndim else 0} labels for {X.shape[0]} points")
    return X, y


def empirical_loss(net: ReluNet, data, y=None) -> float:
    """Mean squared error of ``net`` on a labeled dataset or on ``(X, y)``."""
    X, y = _unpack_data(data, y)
    X, _ = _as_batch(net, X)
    r = kernels.forward(to_vector(net), net.dims, X) - y
    return float(r @ r) / len(y)


def objective(net: ReluNet, data, lam: float, y=None) -> float:
    return empirical_loss(net, data, y) + lam * cost(net)


def flat_objective_grad(theta, dims, X, y, lam, grad):
    """Regularized objective at flat ``theta``; gradient written into ``grad``."""
    depth = len(dims)
    loss = kernels.loss_grad(theta, dims, X, y, grad)
    if lam:
        grad += (2.0 * lam / depth) * theta
    return loss + lam * float(theta @ theta) / depth, loss


def analytic_gradient(net: ReluNet, data, lam: float = 0.0, y=None) -> ReluNet:
    """Gradient of ``L_S + (lam/L)||phi||^2``, returned in the shape of ``net``.

    The ReLU derivative at a zero pre-activation is taken as 0.
    """
    if lam < 0:
        raise UsageError("lambda must be nonnegative")
    X, y = _unpack_data(data, y)
    X, _ = _as_batch(net, X)
    grad = np.zeros(kernels.n_params(net.dims))
    flat_objective_grad(to_vector(net), net.dims, X, y, lam, grad)
    return from_vector(grad, net.dims)


# ---------------------------------------------------------------- certificates


@dataclass(frozen=True)
class CostCertificate:
    """A cost value together with the network that witnesses it."""

    cost_value: float
    depth: int
    width: object  # int bound or "unbounded"
    witness: ReluNet
    dropped: tuple = ()
    note: str = ""

    @classmethod
    def of(cls, witness: ReluNet, width="unbounded", dropped=(), note=""):
        return cls(cost(witness), witness.depth, width, witness, tuple(dropped), note)

    def recompute(self) -> float:
        return cost(self.witness)

    def is_consistent(self, rtol=0.0) -> bool:
        return abs(self.recompute() - self.cost_value) <= rtol * max(1.0, abs(self.cost_value))


@dataclass(frozen=True)
class NormalizedDepth2Form:
    """Depth-2 function ``sum_k a_k [w_k^T x + b_k]_+ + c`` with unit-norm ``(w_k, b_k)``."""

    directions: np.ndarray
    offsets: np.ndarray
    coeffs: np.ndarray
    c: float
    dropped: tuple = field(default=())

    @property
    def reduced_cost(self) -> float:
        return float(np.abs(self.coeffs).sum()) + self.c ** 2 / 2

    @property
    def total_mass(self) -> float:
        return float(np.abs(self.coeffs).sum())

    def to_net(self) -> ReluNet:
        """Balanced parameterization: each unit carries ``sqrt|a_k|`` on both sides."""
        if len(self.coeffs) == 0:
            return zero_net(self.directions.shape[1], (1,), self.c)
        s = np.sqrt(np.abs(self.coeffs))
        W = self.directions * s[:, None]
        b = self.offsets * s
        return ReluNet([(W, b)], np.sign(self.coeffs) * s, self.c)


def _require_depth(net, depth):
    if net.depth != depth:
        raise UsageError(f"expected a depth-{depth} network, got depth {net.depth}")


def normalize_depth2(net: ReluNet) -> NormalizedDepth2Form:
    _require_depth(net, 2)
    W, b = net.layers[0]
    a = net.output_weights
    r = np.sqrt(np.einsum("ij,ij->i", W, W) + b * b)
    keep = (r > 0) & (a != 0)
    dropped = tuple(int(k) for k in np.flatnonzero(~keep))
    r_k = r[keep]
    return NormalizedDepth2Form(W[keep] / r_k[:, None], b[keep] / r_k, a[keep] * r_k,
                                net.output_bias, dropped)


def balance_depth2(net: ReluNet):
    """Rescale every unit so ``||(w_k, b_k)|| = 1``; returns the form and its certificate.

    Units with zero input weights or zero output weight contribute nothing and are
    dropped; their indices are listed in the certificate.
    """
    form = normalize_depth2(net)
    return form, CostCertificate.of(form.to_net(), dropped=form.dropped, note="balanced")


def lift_to_depth3(net: ReluNet):
    """Equivalent depth-3 net obtained by prepending the identity layer ``[I; -I]``."""
    _require_depth(net, 2)
    form, _ = balance_depth2(net)
    bal = form.to_net()
    W, b = bal.layers[0]
    n = net.input_dim
    eye = np.eye(n)
    first = (np.vstack([eye, -eye]), np.zeros(2 * n))
    second = (np.hstack([W, -W]), b)
    lifted = ReluNet([first, second], bal.output_weights, bal.output_bias)
    return lifted, CostCertificate.of(lifted, dropped=form.dropped, note="identity lift")


# ---------------------------------------------------------------- file format


def serialize(net: ReluNet) -> bytes:
    doc = {
        "version": FORMAT_VERSION,
        "depth": net.depth,
        "input_dim": net.input_dim,
        "layers": [{"weights": W.tolist(), "bias": b.tolist()} for W, b in net.layers],
        "output_weights": net.output_weights.tolist(),
        "output_bias": net.output_bias,
    }
    # json writes floats with repr, the shortest string that round-trips exactly
    return (json.dumps(doc, allow_nan=False) + "\n").encode("utf-8")


def _reject_constant(name):
    raise ValueError(f"non-finite number {name}")


def deserialize(data: bytes) -> ReluNet:
    """Parse a network document; any defect raises NetFormatError with a byte offset."""
    if isinstance(data, str):
        data = data.encode("utf-8")
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise NetFormatError(f"not valid UTF-8: {exc.reason}", exc.start) from None
    try:
        doc = json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise NetFormatError(exc.msg, len(text[:exc.pos].encode("utf-8"))) from None
    except ValueError as exc:
        raise NetFormatError(str(exc), 0) from None
    try:
        if not isinstance(doc, dict):
            raise ValueError("top level must be an object")
        if doc.get("version") != FORMAT_VERSION:
            raise ValueError(f"unsupported version {doc.get('version')!r}")
        layers = [(np.array(layer["weights"], dtype=np.float64),
                   np.array(layer["bias"], dtype=np.float64)) for layer in doc["layers"]]
        net = ReluNet(layers, doc["output_weights"], doc["output_bias"])
        if net.depth != doc["depth"] or net.input_dim != doc["input_dim"]:
            raise ValueError("depth or input_dim disagrees with the layer shapes")
    except (KeyError, TypeError, ValueError) as exc:
        raise NetFormatError(f"invalid network document: {exc}", 0) from None
    return net


def save(net: ReluNet, path) -> None:
    with open(path, "wb") as fh:
        fh.write(serialize(net))


def load(path) -> ReluNet:
    with open(path, "rb") as fh:
        return deserialize(fh.read())


def evaluate_extended(net: ReluNet, x):
    """Forward pass carried out in extended precision (``np.longdouble``), rounded at the end.

    Useful when a network's hinge sums cancel heavily, as in many-cycle sawtooth
    nets, and float64 rounding would mask exactness checks. On platforms where
    ``longdouble`` is plain double this matches :func:`evaluate` up to summation order.
    """
    X, single = _as_batch(net, x)
    h = X.astype(np.longdouble)
    for W, b in net.layers:
        h = np.maximum(h @ W.T.astype(np.longdouble) + b.astype(np.longdouble), 0)
    out = (h @ net.output_weights.astype(np.longdouble) + np.longdouble(net.output_bias)).astype(np.float64)
    return float(out[0]) if single else out
