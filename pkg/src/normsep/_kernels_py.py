"""Pure-numpy kernels; reference semantics for the compiled ``_kernels`` module.

Parameters travel as one flat float64 vector laid out as
``W1 (row-major), b1, [W2, b2,] w_out, b_out`` with layer sizes given by
``dims = (input_dim, width_1[, width_2])``.
"""
import numpy as np


def n_params(dims):
    total = 0
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        total += fan_out * fan_in + fan_out
    return total + dims[-1] + 1


def _unpack(theta, dims):
    layers = []
    pos = 0
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        W = theta[pos:pos + fan_out * fan_in].reshape(fan_out, fan_in)
        pos += fan_out * fan_in
        b = theta[pos:pos + fan_out]
        pos += fan_out
        layers.append((W, b))
    w_out = theta[pos:pos + dims[-1]]
    b_out = theta[pos + dims[-1]]
    return layers, w_out, b_out


def forward(theta, dims, X):
    layers, w_out, b_out = _unpack(theta, dims)
    h = X
    for W, b in layers:
        h = np.maximum(h @ W.T + b, 0.0)
    return h @ w_out + b_out


def loss_grad(theta, dims, X, y, grad):
    """Mean squared error of the network on (X, y); writes its gradient into ``grad``.

    The ReLU subgradient at exactly zero pre-activation is taken as 0.
    """
    layers, w_out, b_out = _unpack(theta, dims)
    m = X.shape[0]
    acts = [X]
    masks = []
    h = X
    for W, b in layers:
        z = h @ W.T + b
        mask = z > 0.0
        h = np.where(mask, z, 0.0)
        acts.append(h)
        masks.append(mask)
    resid = h @ w_out + b_out - y
    loss = float(resid @ resid) / m

    g_layers, g_out, _ = _unpack(grad, dims)
    r = (2.0 / m) * resid
    g_out[:] = h.T @ r
    grad[-1] = r.sum()
    delta = np.outer(r, w_out)
    for ell in range(len(layers) - 1, -1, -1):
        delta = np.where(masks[ell], delta, 0.0)
        gW, gb = g_layers[ell]
        gW[:] = delta.T @ acts[ell]
        gb[:] = delta.sum(axis=0)
        if ell > 0:
            delta = delta @ layers[ell][0]
    return loss


def min_pairwise_sqdist(X):
    """Smallest squared Euclidean distance over pairs of rows, with the pair indices."""
    m = X.shape[0]
    best, bi, bj = np.inf, -1, -1
    for i in range(m - 1):
        diff = X[i + 1:] - X[i]
        dist = np.einsum("ij,ij->i", diff, diff)
        k = int(np.argmin(dist))
        if dist[k] < best:
            best, bi, bj = float(dist[k]), i, i + 1 + k
    return best, bi, bj
