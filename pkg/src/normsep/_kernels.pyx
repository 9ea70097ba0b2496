# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels for forward passes, squared-loss gradients and pairwise distances.

Same flat-parameter contract as ``_kernels_py``; BLAS comes from scipy so no
extra link step is needed.
"""
import numpy as np

from scipy.linalg.cython_blas cimport dgemm, dgemv


cdef inline void _affine_relu(double* H, int m, int fan_in, double* W, double* b,
                              int fan_out, double* Z) noexcept nogil:
    # Z = relu(H @ W.T + b), all row-major
    cdef int i, j
    cdef double one = 1.0
    cdef double v
    cdef char tr = b'T'
    cdef char nt = b'N'
    for i in range(m):
        for j in range(fan_out):
            Z[i * fan_out + j] = b[j]
    dgemm(&tr, &nt, &fan_out, &m, &fan_in, &one, W, &fan_in, H, &fan_in, &one, Z, &fan_out)
    for i in range(m * fan_out):
        v = Z[i]
        Z[i] = v if v > 0.0 else 0.0


cdef void _layer_offsets(tuple dims, Py_ssize_t* offs):
    # offs[2*l] -> W_l, offs[2*l+1] -> b_l, then w_out, b_out
    cdef Py_ssize_t pos = 0
    cdef int l
    cdef int n_layers = len(dims) - 1
    for l in range(n_layers):
        offs[2 * l] = pos
        pos += <Py_ssize_t>dims[l + 1] * <Py_ssize_t>dims[l]
        offs[2 * l + 1] = pos
        pos += dims[l + 1]
    offs[2 * n_layers] = pos
    offs[2 * n_layers + 1] = pos + dims[n_layers]


def forward(const double[::1] theta, tuple dims, const double[:, ::1] X):
    cdef int m = X.shape[0]
    cdef int n_layers = len(dims) - 1
    cdef Py_ssize_t offs[8]
    cdef int l, i
    cdef int fan_in, fan_out
    cdef double one = 1.0
    cdef double b_out
    cdef char tr = b'T'
    cdef int inc = 1
    if n_layers < 1 or n_layers > 3:
        raise ValueError("kernels support 1 to 3 hidden layers")
    if X.shape[1] != dims[0] or theta.shape[0] < 1:
        raise ValueError("input width does not match dims")
    _layer_offsets(dims, offs)
    if theta.shape[0] != offs[2 * n_layers + 1] + 1:
        raise ValueError("parameter vector does not match dims")
    out = np.empty(m)
    if m == 0:
        return out
    cdef double* th = <double*>&theta[0]
    acts = [np.empty((m, dims[l + 1])) for l in range(n_layers)]
    cdef double* prev = <double*>&X[0, 0]
    cdef double[:, ::1] cur
    for l in range(n_layers):
        cur = acts[l]
        fan_in = dims[l]
        fan_out = dims[l + 1]
        _affine_relu(prev, m, fan_in, th + offs[2 * l], th + offs[2 * l + 1], fan_out, &cur[0, 0])
        prev = &cur[0, 0]
    cdef double[::1] o = out
    b_out = th[offs[2 * n_layers + 1]]
    for i in range(m):
        o[i] = b_out
    fan_in = dims[n_layers]
    dgemv(&tr, &fan_in, &m, &one, prev, &fan_in, th + offs[2 * n_layers], &inc, &one, &o[0], &inc)
    return out


def loss_grad(const double[::1] theta, tuple dims, const double[:, ::1] X, const double[::1] y,
              double[::1] grad):
    """Mean squared error on (X, y); its gradient is written into ``grad``.

    ReLU subgradient at zero pre-activation is 0.
    """
    cdef int m = X.shape[0]
    cdef int n_layers = len(dims) - 1
    cdef Py_ssize_t offs[8]
    cdef int l, i, j, last
    cdef int fan_in, fan_out
    cdef double one = 1.0
    cdef double zero = 0.0
    cdef double loss = 0.0
    cdef double r, s
    cdef char tr = b'T'
    cdef char nt = b'N'
    cdef int inc = 1
    if n_layers < 1 or n_layers > 3:
        raise ValueError("kernels support 1 to 3 hidden layers")
    if X.shape[1] != dims[0] or y.shape[0] != m or m == 0:
        raise ValueError("data shape does not match dims")
    _layer_offsets(dims, offs)
    if theta.shape[0] != offs[2 * n_layers + 1] + 1 or grad.shape[0] != theta.shape[0]:
        raise ValueError("parameter vector does not match dims")
    cdef double* th = <double*>&theta[0]
    cdef double* g = &grad[0]
    cdef double* xp = <double*>&X[0, 0]

    acts = [np.empty((m, dims[l + 1])) for l in range(n_layers)]
    cdef double* ptrs[4]
    cdef double[:, ::1] cur
    ptrs[0] = xp
    for l in range(n_layers):
        cur = acts[l]
        _affine_relu(ptrs[l], m, dims[l], th + offs[2 * l], th + offs[2 * l + 1],
                     dims[l + 1], &cur[0, 0])
        ptrs[l + 1] = &cur[0, 0]

    last = dims[n_layers]
    cdef double* top = ptrs[n_layers]
    resid_arr = np.empty(m)
    cdef double[::1] resid = resid_arr
    cdef double b_out = th[offs[2 * n_layers + 1]]
    for i in range(m):
        resid[i] = b_out
    dgemv(&tr, &last, &m, &one, top, &last, th + offs[2 * n_layers], &inc, &one, &resid[0], &inc)
    s = 0.0
    for i in range(m):
        r = resid[i] - y[i]
        loss += r * r
        resid[i] = 2.0 * r / m
        s += resid[i]
    loss /= m

    # output layer
    dgemv(&nt, &last, &m, &one, top, &last, &resid[0], &inc, &zero, g + offs[2 * n_layers], &inc)
    g[offs[2 * n_layers + 1]] = s

    delta_arr = np.empty((m, last))
    cdef double[:, ::1] delta = delta_arr
    cdef double* w_out = th + offs[2 * n_layers]
    for i in range(m):
        for j in range(last):
            delta[i, j] = resid[i] * w_out[j] if top[i * last + j] > 0.0 else 0.0

    cdef double* below
    cdef double* gb
    cdef double* dp
    cdef double[:, ::1] nxt
    for l in range(n_layers - 1, -1, -1):
        fan_in = dims[l]
        fan_out = dims[l + 1]
        below = ptrs[l]
        dp = &delta[0, 0]
        dgemm(&nt, &tr, &fan_in, &fan_out, &m, &one, below, &fan_in,
              dp, &fan_out, &zero, g + offs[2 * l], &fan_in)
        gb = g + offs[2 * l + 1]
        for j in range(fan_out):
            gb[j] = 0.0
        for i in range(m):
            for j in range(fan_out):
                gb[j] += dp[i * fan_out + j]
        if l > 0:
            nxt = np.empty((m, fan_in))
            dgemm(&nt, &nt, &fan_in, &m, &fan_out, &one, th + offs[2 * l], &fan_in,
                  dp, &fan_out, &zero, &nxt[0, 0], &fan_in)
            for i in range(m):
                for j in range(fan_in):
                    nxt[i, j] = nxt[i, j] if below[i * fan_in + j] > 0.0 else 0.0
            delta = nxt
    return loss


def min_pairwise_sqdist(const double[:, ::1] X):
    """Smallest squared Euclidean distance over row pairs, with the (first) attaining pair."""
    cdef Py_ssize_t m = X.shape[0]
    cdef Py_ssize_t n = X.shape[1]
    cdef Py_ssize_t i, j, k
    cdef double best = np.inf
    cdef double dist, diff
    cdef Py_ssize_t bi = -1, bj = -1
    with nogil:
        for i in range(m - 1):
            for j in range(i + 1, m):
                dist = 0.0
                for k in range(n):
                    diff = X[j, k] - X[i, k]
                    dist += diff * diff
                if dist < best:
                    best = dist
                    bi = i
                    bj = j
    return best, bi, bj
