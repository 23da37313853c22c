"""Hot numeric kernels for the dense networks, in numba and pure-numpy flavours.

Set ``MECSFC_DISABLE_NUMBA=1`` to force the numpy path. Both flavours share
one memory layout:

* ``params``: flat float64. Layer ``l`` stores ``W_l`` (``sizes[l] x sizes[l+1]``,
  row-major) followed by ``b_l``.
* ``acts``: flat float64 of length ``B * sum(sizes)``. Block ``l`` is the
  ``(B, sizes[l])`` post-activation of layer ``l`` (block 0 is the input,
  the last block is the raw linear output).

Hidden layers use ReLU; the last layer is linear.
"""
from __future__ import annotations

import os

import numpy as np

_DISABLED = os.environ.get("MECSFC_DISABLE_NUMBA", "").strip().lower() in ("1", "true", "yes")

try:
    if _DISABLED:
        raise ImportError
    import numba
    NUMBA_AVAILABLE = True
except ImportError:
    numba = None
    NUMBA_AVAILABLE = False


# --------------------------------------------------------------------------
# pure numpy
# --------------------------------------------------------------------------

def forward_np(params, sizes, x, acts):
    B = x.shape[0]
    L = len(sizes) - 1
    off = 0
    a = acts[: B * sizes[0]].reshape(B, sizes[0])
    a[...] = x
    p = 0
    for l in range(L):
        nin, nout = sizes[l], sizes[l + 1]
        W = params[p:p + nin * nout].reshape(nin, nout)
        p += nin * nout
        b = params[p:p + nout]
        p += nout
        off += B * nin
        z = acts[off:off + B * nout].reshape(B, nout)
        np.dot(a, W, out=z)
        z += b
        if l < L - 1:
            np.maximum(z, 0.0, out=z)
        a = z
    return a


def backward_np(params, sizes, acts, grad_out, grads, grad_in):
    B = grad_out.shape[0]
    L = len(sizes) - 1
    offsets = np.concatenate(([0], np.cumsum(sizes[:-1]))) * B
    pofs = [0]
    for l in range(L):
        pofs.append(pofs[-1] + sizes[l] * sizes[l + 1] + sizes[l + 1])
    delta = grad_out
    for l in range(L - 1, -1, -1):
        nin, nout = sizes[l], sizes[l + 1]
        p = pofs[l]
        W = params[p:p + nin * nout].reshape(nin, nout)
        a_prev = acts[offsets[l]:offsets[l] + B * nin].reshape(B, nin)
        np.dot(a_prev.T, delta, out=grads[p:p + nin * nout].reshape(nin, nout))
        grads[p + nin * nout:p + nin * nout + nout] = delta.sum(axis=0)
        prev = delta @ W.T
        if l > 0:
            prev *= a_prev > 0.0
        delta = prev
    grad_in[...] = delta


def adam_np(params, grads, m, v, step, lr, beta1, beta2, eps):
    m *= beta1
    m += (1.0 - beta1) * grads
    v *= beta2
    v += (1.0 - beta2) * grads * grads
    c1 = 1.0 - beta1 ** step
    c2 = 1.0 - beta2 ** step
    params -= lr * (m / c1) / (np.sqrt(v / c2) + eps)


def soft_update_np(target, source, tau):
    target *= 1.0 - tau
    target += tau * source


# --------------------------------------------------------------------------
# numba
# --------------------------------------------------------------------------

if NUMBA_AVAILABLE:

    @numba.njit(cache=True)
    def forward_nb(params, sizes, x, acts):
        B = x.shape[0]
        L = sizes.shape[0] - 1
        n0 = sizes[0]
        a = acts[0:B * n0].reshape((B, n0))
        for i in range(B):
            for j in range(n0):
                a[i, j] = x[i, j]
        off = 0
        p = 0
        for l in range(L):
            nin = sizes[l]
            nout = sizes[l + 1]
            W = params[p:p + nin * nout].reshape((nin, nout))
            p += nin * nout
            b = params[p:p + nout]
            p += nout
            off += B * nin
            z = acts[off:off + B * nout].reshape((B, nout))
            z[:, :] = np.dot(a, W)
            relu = l < L - 1
            for i in range(B):
                for j in range(nout):
                    v = z[i, j] + b[j]
                    if relu and v < 0.0:
                        v = 0.0
                    z[i, j] = v
            a = z
        return a

    @numba.njit(cache=True)
    def backward_nb(params, sizes, acts, grad_out, grads, grad_in):
        B = grad_out.shape[0]
        L = sizes.shape[0] - 1
        offsets = np.zeros(L + 1, dtype=np.int64)
        pofs = np.zeros(L + 1, dtype=np.int64)
        for l in range(L):
            offsets[l + 1] = offsets[l] + B * sizes[l]
            pofs[l + 1] = pofs[l] + sizes[l] * sizes[l + 1] + sizes[l + 1]
        delta = grad_out.copy()
        for l in range(L - 1, -1, -1):
            nin = sizes[l]
            nout = sizes[l + 1]
            p = pofs[l]
            W = params[p:p + nin * nout].reshape((nin, nout))
            a_prev = acts[offsets[l]:offsets[l] + B * nin].reshape((B, nin))
            gW = grads[p:p + nin * nout].reshape((nin, nout))
            gW[:, :] = np.dot(a_prev.T, delta)
            gb = grads[p + nin * nout:p + nin * nout + nout]
            for j in range(nout):
                s = 0.0
                for i in range(B):
                    s += delta[i, j]
                gb[j] = s
            prev = np.dot(delta, W.T)
            if l > 0:
                for i in range(B):
                    for j in range(nin):
                        if a_prev[i, j] <= 0.0:
                            prev[i, j] = 0.0
            delta = prev
        grad_in[:, :] = delta

    @numba.njit(cache=True)
    def adam_nb(params, grads, m, v, step, lr, beta1, beta2, eps):
        c1 = 1.0 - beta1 ** step
        c2 = 1.0 - beta2 ** step
        for k in range(params.shape[0]):
            g = grads[k]
            m[k] = beta1 * m[k] + (1.0 - beta1) * g
            v[k] = beta2 * v[k] + (1.0 - beta2) * g * g
            params[k] -= lr * (m[k] / c1) / (np.sqrt(v[k] / c2) + eps)

    @numba.njit(cache=True)
    def soft_update_nb(target, source, tau):
        for k in range(target.shape[0]):
            target[k] = (1.0 - tau) * target[k] + tau * source[k]

    forward, backward, adam, soft_update = forward_nb, backward_nb, adam_nb, soft_update_nb
    BACKEND = "numba"
else:
    forward, backward, adam, soft_update = forward_np, backward_np, adam_np, soft_update_np
    BACKEND = "numpy"


NUMPY_KERNELS = {"forward": forward_np, "backward": backward_np, "adam": adam_np, "soft_update": soft_update_np}
NUMBA_KERNELS = ({"forward": forward_nb, "backward": backward_nb, "adam": adam_nb, "soft_update": soft_update_nb}
                 if NUMBA_AVAILABLE else None)
