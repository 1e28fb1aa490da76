"""Dense feed-forward networks with hand-written backprop, Adam, and a binary checkpoint format.

Checkpoint layout (little-endian)::

    magic   4 bytes  b"DNET"
    version u32      currently 1
    kind    u32      0 = network parameters, 1 = Adam state
    n       u32      number of entries in layer_sizes
    sizes   i64[n]
    acts    u8[n-1]  0 = linear, 1 = relu, 2 = sigmoid
    (kind 1 only) step i64, lr f64, beta1 f64, beta2 f64, eps f64
    payload f64      per layer: W (out x in, row-major) then b;
                     Adam stores every first moment, then every second moment
"""
from __future__ import annotations

import struct
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DivergenceError, LifecycleError, ShapeError

ACTIVATIONS = ("linear", "relu", "sigmoid")
MAGIC = b"DNET"
FORMAT_VERSION = 1


def sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


class DenseNet:
    """Stack of affine layers, each followed by an activation.

    Inputs are row vectors: a single sample of shape ``(in,)`` or a batch ``(N, in)``.
    """

    def __init__(self, weights: Sequence[np.ndarray], biases: Sequence[np.ndarray], activations: Sequence[str]):
        if not (len(weights) == len(biases) == len(activations)):
            raise ShapeError("weights, biases and activations must have equal length")
        for i, (W, b, a) in enumerate(zip(weights, biases, activations)):
            if a not in ACTIVATIONS:
                raise ValueError(f"unknown activation {a!r}")
            if W.ndim != 2 or b.shape != (W.shape[0],):
                raise ShapeError(f"layer {i}: W {W.shape} / b {b.shape} mismatch")
            if i and W.shape[1] != weights[i - 1].shape[0]:
                raise ShapeError(f"layer {i} expects {W.shape[1]} inputs, previous layer emits {weights[i - 1].shape[0]}")
        # all parameters live in one flat buffer (W0, b0, W1, b1, ... row-major); layers are views
        total = sum(W.size + b.size for W, b in zip(weights, biases))
        self.flat = np.empty(total, dtype=np.float64)
        self.weights, self.biases = [], []
        off = 0
        for W, b in zip(weights, biases):
            Wv = self.flat[off : off + W.size].reshape(W.shape)
            Wv[...] = W
            off += W.size
            bv = self.flat[off : off + b.size]
            bv[...] = b
            off += b.size
            self.weights.append(Wv)
            self.biases.append(bv)
        self.activations = list(activations)
        self.version = 0

    @property
    def layer_sizes(self) -> list[int]:
        return [self.weights[0].shape[1]] + [W.shape[0] for W in self.weights]

    @property
    def params(self) -> list[np.ndarray]:
        out = []
        for W, b in zip(self.weights, self.biases):
            out += [W, b]
        return out

    def n_params(self) -> int:
        return sum(p.size for p in self.params)

    def copy(self) -> "DenseNet":
        return DenseNet(self.weights, self.biases, self.activations)

    def load_params_from(self, other: "DenseNet") -> None:
        if other.flat.shape != self.flat.shape:
            raise ShapeError("networks differ in shape")
        self.flat[...] = other.flat
        self.version += 1

    def forward(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1] != self.weights[0].shape[1]:
            raise ShapeError(f"input has {x.shape[-1]} features, network expects {self.weights[0].shape[1]}")
        inputs, outs = [], []
        h = x
        for W, b, act in zip(self.weights, self.biases, self.activations):
            inputs.append(h)
            z = h @ W.T + b
            if act == "relu":
                h = np.maximum(z, 0.0)
            elif act == "sigmoid":
                h = sigmoid(z)
            else:
                h = z
            outs.append(h)
        return h, _Cache(inputs, outs, self.version, id(self))

    __call__ = forward

    def backward(self, cache: "_Cache", output_grad, need_param_grads: bool = True):
        """Reverse pass for ``sum(output * output_grad)``.

        Returns ``(param_grads, input_grad)`` where ``param_grads`` is laid out like
        :attr:`params` (``None`` when ``need_param_grads`` is false).
        """
        if cache.net_id != id(self) or cache.version != self.version:
            raise LifecycleError("cache was produced by a different network or before a parameter update")
        g = np.asarray(output_grad, dtype=np.float64)
        grads = self._grad_views(np.empty_like(self.flat)) if need_param_grads else None
        for i in range(len(self.weights) - 1, -1, -1):
            act = self.activations[i]
            out = cache.outputs[i]
            if act == "relu":
                g = g * (out > 0.0)
            elif act == "sigmoid":
                g = g * out * (1.0 - out)
            h = cache.inputs[i]
            if need_param_grads:
                if g.ndim == 1:
                    np.outer(g, h, out=grads[2 * i])
                    grads[2 * i + 1][...] = g
                else:
                    np.matmul(g.T, h, out=grads[2 * i])
                    np.sum(g, axis=0, out=grads[2 * i + 1])
            g = g @ self.weights[i]
        return grads, g

    def _grad_views(self, buf: np.ndarray) -> list:
        views, off = [], 0
        for W, b in zip(self.weights, self.biases):
            views.append(buf[off : off + W.size].reshape(W.shape))
            off += W.size
            views.append(buf[off : off + b.size])
            off += b.size
        return GradList(views, buf)


class GradList(list):
    """Per-layer gradient views that also expose the shared flat buffer."""

    def __init__(self, views, flat):
        super().__init__(views)
        self.flat = flat


@dataclass
class _Cache:
    inputs: list
    outputs: list
    version: int
    net_id: int


def init_xavier(layer_sizes: Sequence[int], seed=0, hidden_activation: str = "relu", output_activation: str = "linear") -> DenseNet:
    """Glorot-uniform weights, zero biases. ``seed`` may be an int or a Generator."""
    if len(layer_sizes) < 2:
        raise ShapeError("need at least an input and an output size")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    weights, biases, acts = [], [], []
    n = len(layer_sizes) - 1
    for i, (fan_in, fan_out) in enumerate(zip(layer_sizes[:-1], layer_sizes[1:])):
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-bound, bound, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
        acts.append(output_activation if i == n - 1 else hidden_activation)
    return DenseNet(weights, biases, acts)


@dataclass
class AdamState:
    first_moment: list
    second_moment: list
    step_count: int = 0
    lr: float = 5e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_net(cls, net: DenseNet, lr: float = 5e-4, **kw) -> "AdamState":
        return cls([np.zeros_like(p) for p in net.params], [np.zeros_like(p) for p in net.params], lr=lr, **kw)


def adam_step(params: Sequence[np.ndarray], grads: Sequence[np.ndarray], state: AdamState) -> Sequence[np.ndarray]:
    """In-place bias-corrected Adam descent step on ``params``."""
    for g in grads:
        if not np.isfinite(np.sum(g)):
            if not np.all(np.isfinite(g)):
                raise DivergenceError("non-finite gradient")
    state.step_count += 1
    t = state.step_count
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1**t
    c2 = 1.0 - b2**t
    step_size = state.lr / c1
    for p, g, m, v in zip(params, grads, state.first_moment, state.second_moment):
        if p.shape != g.shape:
            raise ShapeError(f"gradient shape {g.shape} does not match parameter {p.shape}")
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        tmp = g * g
        tmp *= 1.0 - b2
        v += tmp
        # tmp <- sqrt(v / c2) + eps
        np.divide(v, c2, out=tmp)
        np.sqrt(tmp, out=tmp)
        tmp += state.eps
        np.divide(m, tmp, out=tmp)
        tmp *= step_size
        p -= tmp
    return params


class Adam:
    """Adam bound to one network; works on the flat parameter buffer and bumps the network version."""

    def __init__(self, net: DenseNet, lr: float = 5e-4, **kw):
        self.net = net
        self.state = AdamState([np.zeros_like(net.flat)], [np.zeros_like(net.flat)], lr=lr, **kw)

    def step(self, grads) -> None:
        flat = grads.flat if isinstance(grads, GradList) else np.concatenate([np.ravel(g) for g in grads])
        adam_step([self.net.flat], [flat], self.state)
        self.net.version += 1


def soft_update(target: DenseNet, local: DenseNet, tau: float) -> None:
    """``target <- tau * local + (1 - tau) * target``, elementwise and in place."""
    if not 0.0 < tau <= 1.0:
        raise ValueError(f"tau must lie in (0, 1], got {tau}")
    t, l = target.flat, local.flat
    if t.shape != l.shape:
        raise ShapeError("target and local networks differ in shape")
    if tau == 1.0:
        t[...] = l
    else:
        t *= 1.0 - tau
        t += tau * l
    target.version += 1


def numerical_gradients(net: DenseNet, x, output_grad, h: float = 1e-5):
    """Central finite differences of ``sum(forward(x) * output_grad)``."""
    output_grad = np.asarray(output_grad, dtype=np.float64)

    def f():
        return float(np.sum(net.forward(x)[0] * output_grad))

    grads = []
    for p in net.params:
        g = np.zeros_like(p)
        it = np.nditer(p, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            old = p[idx]
            p[idx] = old + h
            fp = f()
            p[idx] = old - h
            fm = f()
            p[idx] = old
            g[idx] = (fp - fm) / (2 * h)
        grads.append(g)
    x = np.array(x, dtype=np.float64)
    gx = np.zeros_like(x)
    it = np.nditer(x, flags=["multi_index"])
    for _ in it:
        idx = it.multi_index
        old = x[idx]
        x[idx] = old + h
        fp = float(np.sum(net.forward(x)[0] * output_grad))
        x[idx] = old - h
        fm = float(np.sum(net.forward(x)[0] * output_grad))
        x[idx] = old
        gx[idx] = (fp - fm) / (2 * h)
    return grads, gx


def max_relative_error(a, b, floor: float = 1e-7) -> float:
    a, b = np.asarray(a), np.asarray(b)
    return float(np.max(np.abs(a - b) / np.maximum(np.maximum(np.abs(a), np.abs(b)), floor))) if a.size else 0.0


# -- checkpoint format -----------------------------------------------------


def _header(kind: int, sizes, acts) -> bytes:
    out = MAGIC + struct.pack("<III", FORMAT_VERSION, kind, len(sizes))
    out += np.asarray(sizes, dtype="<i8").tobytes()
    out += bytes(ACTIVATIONS.index(a) for a in acts)
    return out


def _payload(arrays) -> bytes:
    return b"".join(np.ascontiguousarray(a, dtype="<f8").tobytes() for a in arrays)


def save_net(net: DenseNet, path) -> None:
    with open(path, "wb") as fh:
        fh.write(_header(0, net.layer_sizes, net.activations) + _payload(net.params))


def save_adam(state: AdamState, net: DenseNet, path) -> None:
    extra = struct.pack("<qdddd", state.step_count, state.lr, state.beta1, state.beta2, state.eps)
    m = [np.ravel(a) for a in state.first_moment]
    v = [np.ravel(a) for a in state.second_moment]
    if sum(a.size for a in m) != net.flat.size:
        raise ShapeError("Adam state does not match the network")
    with open(path, "wb") as fh:
        fh.write(_header(1, net.layer_sizes, net.activations) + extra + _payload(m + v))


def _read(path):
    buf = open(path, "rb").read()
    if buf[:4] != MAGIC:
        raise ValueError(f"{path}: not a DNET checkpoint")
    version, kind, n = struct.unpack_from("<III", buf, 4)
    if version != FORMAT_VERSION:
        raise ValueError(f"{path}: unsupported checkpoint version {version}")
    off = 16
    sizes = np.frombuffer(buf, dtype="<i8", count=n, offset=off).tolist()
    off += 8 * n
    acts = [ACTIVATIONS[c] for c in buf[off : off + n - 1]]
    off += n - 1
    return buf, kind, sizes, acts, off


def _arrays(buf, off, sizes, copies=1):
    shapes = []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        shapes += [(fan_out, fan_in), (fan_out,)]
    out = []
    for _ in range(copies):
        for shp in shapes:
            cnt = int(np.prod(shp))
            out.append(np.frombuffer(buf, dtype="<f8", count=cnt, offset=off).reshape(shp).astype(np.float64))
            off += 8 * cnt
    if off != len(buf):
        raise ValueError("checkpoint payload length mismatch")
    return out


def load_net(path) -> DenseNet:
    buf, kind, sizes, acts, off = _read(path)
    if kind != 0:
        raise ValueError(f"{path}: not a network checkpoint")
    arr = _arrays(buf, off, sizes)
    return DenseNet(arr[0::2], arr[1::2], acts)


def load_adam(path) -> AdamState:
    buf, kind, sizes, acts, off = _read(path)
    if kind != 1:
        raise ValueError(f"{path}: not an Adam checkpoint")
    step, lr, b1, b2, eps = struct.unpack_from("<qdddd", buf, off)
    arr = _arrays(buf, off + 40, sizes, copies=2)
    half = len(arr) // 2
    m = np.concatenate([a.ravel() for a in arr[:half]])
    v = np.concatenate([a.ravel() for a in arr[half:]])
    return AdamState([m], [v], step, lr, b1, b2, eps)
