"""Dense MLPs with hand-written backprop, Adam, target updates and checkpoints."""
from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import _kernels
from .errors import UsageError

HEADS = ("linear", "sigmoid", "dueling")


def dueling_combine(value, advantages):
    """Q = V + (A - mean(A)). Works on a scalar/vector or on a batch."""
    advantages = np.asarray(advantages, dtype=float)
    value = np.asarray(value, dtype=float)
    if advantages.ndim == 1:
        return value + (advantages - advantages.mean())
    return value.reshape(-1, 1) + (advantages - advantages.mean(axis=1, keepdims=True))


def _sigmoid(z):
    # split by sign so large |z| never overflows exp
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


class DenseNet:
    """``depth`` hidden ReLU layers of ``hidden`` units, then a head.

    ``head='dueling'`` ends in ``1 + out_dim`` linear units (state value and
    one advantage per action) combined into ``out_dim`` Q-values.
    """

    def __init__(self, in_dim, out_dim, head="linear", hidden=64, depth=4, rng=None, kernels=None):
        if head not in HEADS:
            raise ValueError(f"unknown head {head!r}")
        self.in_dim = int(in_dim)
        self.out_dim = int(out_dim)
        self.head = head
        raw_out = out_dim + 1 if head == "dueling" else out_dim
        self.sizes = np.array([in_dim] + [hidden] * depth + [raw_out], dtype=np.int64)
        self.kernels = kernels
        self.params = np.zeros(self.n_params)
        self._acts = {}
        self._cache = None
        if rng is not None:
            self.init_params(rng)

    @property
    def n_params(self):
        s = self.sizes
        return int(sum(s[l] * s[l + 1] + s[l + 1] for l in range(len(s) - 1)))

    def init_params(self, rng):
        p = 0
        s = self.sizes
        for l in range(len(s) - 1):
            nin, nout = int(s[l]), int(s[l + 1])
            bound = 1.0 / np.sqrt(nin)
            k = nin * nout + nout
            self.params[p:p + k] = rng.uniform(-bound, bound, k)
            p += k

    def layer(self, l):
        """(W, b) views of layer ``l``."""
        s = self.sizes
        p = int(sum(s[i] * s[i + 1] + s[i + 1] for i in range(l)))
        nin, nout = int(s[l]), int(s[l + 1])
        W = self.params[p:p + nin * nout].reshape(nin, nout)
        return W, self.params[p + nin * nout:p + nin * nout + nout]

    def _k(self, name):
        if self.kernels is not None:
            return self.kernels[name]
        return getattr(_kernels, name)

    def same_architecture(self, other):
        return self.head == other.head and np.array_equal(self.sizes, other.sizes)

    def clone(self):
        twin = DenseNet.__new__(DenseNet)
        twin.__dict__.update(self.__dict__)
        twin.params = self.params.copy()
        twin._acts = {}
        twin._cache = None
        return twin

    def digest(self):
        return hashlib.sha256(self.params.tobytes()).hexdigest()

    # ------------------------------------------------------------------
    def forward(self, x, cache=True):
        x = np.asarray(x, dtype=np.float64)
        single = x.ndim == 1
        if single:
            x = x[None, :]
        if x.ndim != 2 or x.shape[1] != self.in_dim:
            raise UsageError(f"input dim {x.shape[-1]} != network input {self.in_dim}")
        x = np.ascontiguousarray(x)
        B = x.shape[0]
        acts = self._acts.get(B)
        if acts is None:
            acts = self._acts[B] = np.empty(B * int(self.sizes.sum()))
        raw = self._k("forward")(self.params, self.sizes, x, acts)
        if self.head == "sigmoid":
            out = _sigmoid(raw)
        elif self.head == "dueling":
            out = dueling_combine(raw[:, 0], raw[:, 1:])
        else:
            out = raw.copy()
        self._cache = (B, out) if cache else None
        return out[0] if single else out

    def backward(self, grad_out):
        """Parameter gradient and input gradient for the cached forward batch."""
        if self._cache is None:
            raise UsageError("backward called without a cached forward pass")
        B, out = self._cache
        g = np.asarray(grad_out, dtype=np.float64).reshape(B, self.out_dim)
        if self.head == "sigmoid":
            g_raw = g * out * (1.0 - out)
        elif self.head == "dueling":
            g_raw = np.empty((B, self.out_dim + 1))
            g_raw[:, 0] = g.sum(axis=1)
            g_raw[:, 1:] = g - g.mean(axis=1, keepdims=True)
        else:
            g_raw = g
        g_raw = np.ascontiguousarray(g_raw)
        grads = np.zeros_like(self.params)
        grad_in = np.empty((B, self.in_dim))
        self._k("backward")(self.params, self.sizes, self._acts[B], g_raw, grads, grad_in)
        return grads, grad_in


@dataclass
class OptimizerState:
    m: np.ndarray
    v: np.ndarray
    step: int = 0
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_net(cls, net: DenseNet, lr=1e-3, **kw):
        return cls(np.zeros_like(net.params), np.zeros_like(net.params), lr=lr, **kw)


def forward(net: DenseNet, x):
    return net.forward(x)


def adam_step(net: DenseNet, opt: OptimizerState, grads):
    opt.step += 1
    net._k("adam")(net.params, grads, opt.m, opt.v, float(opt.step), opt.lr, opt.beta1, opt.beta2, opt.eps)


def backward_and_step(net: DenseNet, opt: OptimizerState, grad_out):
    """Backprop ``dLoss/dOutput`` through the cached batch and take one Adam step.

    Returns the gradient with respect to the network input.
    """
    grads, grad_in = net.backward(grad_out)
    if not np.any(grads):
        # zero loss gradient leaves parameters (and moments) untouched
        return grad_in
    adam_step(net, opt, grads)
    return grad_in


def soft_update(target: DenseNet, source: DenseNet, tau: float):
    if not target.same_architecture(source):
        raise UsageError("soft_update between different architectures")
    target._k("soft_update")(target.params, source.params, float(tau))
    return target


def hard_update(target: DenseNet, source: DenseNet):
    if not target.same_architecture(source):
        raise UsageError("hard_update between different architectures")
    target.params[:] = source.params
    return target


# ----------------------------------------------------------------------
# checkpoints
#
# <stem>.bin      : b"MECSFCCK" | uint32 version | uint32 n_arrays |
#                   concatenated little-endian float64 data in manifest order
# <stem>.manifest : "mecsfc-checkpoint <version>" then one line per array:
#                   "<name> <offset-in-reals> <dim0>x<dim1>..."
# ----------------------------------------------------------------------
CHECKPOINT_MAGIC = b"MECSFCCK"
CHECKPOINT_VERSION = 1


def save_checkpoint(stem, arrays: dict[str, np.ndarray]):
    stem = Path(stem)
    stem.parent.mkdir(parents=True, exist_ok=True)
    lines = [f"mecsfc-checkpoint {CHECKPOINT_VERSION}"]
    offset = 0
    with open(stem.with_suffix(".bin"), "wb") as fh:
        fh.write(CHECKPOINT_MAGIC + struct.pack("<II", CHECKPOINT_VERSION, len(arrays)))
        for name, arr in arrays.items():
            if any(c.isspace() for c in name):
                raise ValueError(f"array name {name!r} contains whitespace")
            arr = np.asarray(arr, dtype="<f8")
            shape = "x".join(str(d) for d in arr.shape) or "scalar"
            lines.append(f"{name} {offset} {shape}")
            fh.write(np.ascontiguousarray(arr).tobytes())
            offset += arr.size
    stem.with_suffix(".manifest").write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_checkpoint(stem) -> dict[str, np.ndarray]:
    stem = Path(stem)
    lines = stem.with_suffix(".manifest").read_text(encoding="utf-8").split("\n")
    tag, version = lines[0].split()
    if tag != "mecsfc-checkpoint" or int(version) != CHECKPOINT_VERSION:
        raise UsageError(f"unsupported checkpoint manifest header {lines[0]!r}")
    raw = stem.with_suffix(".bin").read_bytes()
    header = len(CHECKPOINT_MAGIC) + 8
    if raw[:len(CHECKPOINT_MAGIC)] != CHECKPOINT_MAGIC:
        raise UsageError("bad checkpoint magic")
    _, count = struct.unpack("<II", raw[len(CHECKPOINT_MAGIC):header])
    data = np.frombuffer(raw[header:], dtype="<f8")
    out = {}
    for line in lines[1:]:
        if not line.strip():
            continue
        name, offset, shape = line.split()
        dims = () if shape == "scalar" else tuple(int(d) for d in shape.split("x"))
        size = int(np.prod(dims)) if dims else 1
        start = int(offset)
        out[name] = data[start:start + size].reshape(dims).astype(np.float64)
    if len(out) != count:
        raise UsageError("checkpoint manifest and binary disagree on array count")
    return out
