"""Dense multi-layer perceptron with manual forward/backward passes.

Layer order is: linear -> (batch norm) -> activation -> (dropout).
Parameters live in float64. Softmax is only valid on the final layer and
its gradient is normally supplied fused with the cross-entropy loss.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass

import numpy as np

ACTIVATIONS = ("linear", "relu", "lrelu", "elu", "softmax")

ELU_ALPHA = 1.0
LRELU_SLOPE = 0.01
BN_MOMENTUM = 0.9
BN_EPS = 1e-5


class NnError(ValueError):
    pass


@dataclass(frozen=True)
class LayerSpec:
    """One dense layer: output width, nonlinearity, dropout rate on the
    layer output, and whether batch norm sits between the linear map and
    the activation."""

    units: int
    activation: str = "linear"
    dropout: float = 0.0
    batch_norm: bool = False

    def __post_init__(self):
        if self.units < 1:
            raise NnError(f"layer units must be positive, got {self.units}")
        if self.activation not in ACTIVATIONS:
            raise NnError(f"unknown activation {self.activation!r}")
        if not 0.0 <= self.dropout < 1.0:
            raise NnError(f"dropout must be in [0, 1), got {self.dropout}")


def _init_weight(fan_in: int, fan_out: int, activation: str, rng) -> np.ndarray:
    # Kaiming uniform for rectifiers, Xavier uniform otherwise.
    if activation in ("relu", "lrelu"):
        bound = np.sqrt(6.0 / fan_in)
    else:
        bound = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=(fan_in, fan_out))


def _activate(z: np.ndarray, kind: str) -> np.ndarray:
    if kind == "linear":
        return z
    if kind == "relu":
        return np.maximum(z, 0.0)
    if kind == "lrelu":
        return np.where(z > 0.0, z, LRELU_SLOPE * z)
    if kind == "elu":
        return np.where(z > 0.0, z, ELU_ALPHA * np.expm1(z))
    if kind == "softmax":
        shifted = z - z.max(axis=1, keepdims=True)
        e = np.exp(shifted)
        return e / e.sum(axis=1, keepdims=True)
    raise NnError(f"unknown activation {kind!r}")


def _activation_grad(z: np.ndarray, kind: str) -> np.ndarray:
    """Elementwise derivative at pre-activation z. Not defined for softmax,
    which is handled either fused with the loss or via its full Jacobian."""
    if kind == "linear":
        return np.ones_like(z)
    if kind == "relu":
        return (z > 0.0).astype(z.dtype)
    if kind == "lrelu":
        return np.where(z > 0.0, 1.0, LRELU_SLOPE)
    if kind == "elu":
        return np.where(z > 0.0, 1.0, ELU_ALPHA * np.exp(z))
    raise NnError(f"no elementwise gradient for activation {kind!r}")


class Mlp:
    """Stack of LayerSpec layers over a fixed input width.

    Trainable parameters per layer: W (in, out), b (out,), and gamma/beta
    when batch norm is enabled. Batch norm also keeps running mean/var
    buffers updated with momentum 0.9 during training-mode passes; those
    buffers are state, not parameters, and are not touched by optimizers.
    """

    def __init__(self, input_dim: int, specs, seed: int = 0):
        specs = tuple(specs)
        if input_dim < 1:
            raise NnError(f"input_dim must be positive, got {input_dim}")
        if not specs:
            raise NnError("network needs at least one layer")
        for i, spec in enumerate(specs):
            if spec.activation == "softmax" and i != len(specs) - 1:
                raise NnError("softmax is only allowed on the final layer")
        self.input_dim = int(input_dim)
        self.specs = specs
        self.params: list[dict[str, np.ndarray]] = []
        self.buffers: list[dict[str, np.ndarray]] = []
        rng = np.random.default_rng(seed)
        fan_in = self.input_dim
        for spec in specs:
            layer = {
                "W": _init_weight(fan_in, spec.units, spec.activation, rng),
                "b": np.zeros(spec.units),
            }
            buf: dict[str, np.ndarray] = {}
            if spec.batch_norm:
                layer["gamma"] = np.ones(spec.units)
                layer["beta"] = np.zeros(spec.units)
                buf["run_mean"] = np.zeros(spec.units)
                buf["run_var"] = np.ones(spec.units)
            self.params.append(layer)
            self.buffers.append(buf)
            fan_in = spec.units

    @property
    def output_dim(self) -> int:
        return self.specs[-1].units

    def param_items(self):
        """Deterministic (layer_index, name, array) walk over trainable
        parameters. Optimizers rely on this ordering."""
        for i, layer in enumerate(self.params):
            for name in ("W", "b", "gamma", "beta"):
                if name in layer:
                    yield i, name, layer[name]

    def param_arrays(self) -> list[np.ndarray]:
        return [arr for _, _, arr in self.param_items()]

    def snapshot(self) -> list[dict[str, np.ndarray]]:
        """Deep copy of parameters and buffers for later restore."""
        return copy.deepcopy([self.params, self.buffers])

    def restore(self, snap) -> None:
        params, buffers = copy.deepcopy(snap)
        self.params = params
        self.buffers = buffers

    def param_bytes(self) -> bytes:
        chunks = []
        for _, _, arr in self.param_items():
            chunks.append(np.ascontiguousarray(arr).tobytes())
        return b"".join(chunks)

    def _check_input(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self.input_dim:
            raise NnError(
                f"expected input of shape (n, {self.input_dim}), got {x.shape}"
            )
        return x

    def forward(self, x, train: bool = False, rng=None, update_running: bool = True):
        """Run the network. In train mode batch statistics drive batch norm
        and dropout masks are sampled from rng (required if any layer drops).
        Returns (output, cache); cache feeds backward() and is None-free
        only for train-mode passes."""
        x = self._check_input(x)
        cache = []
        out = x
        for spec, layer, buf in zip(self.specs, self.params, self.buffers):
            entry: dict[str, np.ndarray] = {"x": out}
            z = out @ layer["W"] + layer["b"]
            if spec.batch_norm:
                if train:
                    mean = z.mean(axis=0)
                    var = z.var(axis=0)
                    if update_running:
                        buf["run_mean"] *= BN_MOMENTUM
                        buf["run_mean"] += (1.0 - BN_MOMENTUM) * mean
                        buf["run_var"] *= BN_MOMENTUM
                        buf["run_var"] += (1.0 - BN_MOMENTUM) * var
                else:
                    mean = buf["run_mean"]
                    var = buf["run_var"]
                inv_std = 1.0 / np.sqrt(var + BN_EPS)
                x_hat = (z - mean) * inv_std
                z = layer["gamma"] * x_hat + layer["beta"]
                entry["x_hat"] = x_hat
                entry["inv_std"] = inv_std
            entry["z"] = z
            out = _activate(z, spec.activation)
            if spec.dropout > 0.0 and train:
                if rng is None:
                    raise NnError("train-mode forward with dropout needs an rng")
                mask = (rng.random(out.shape) >= spec.dropout) / (1.0 - spec.dropout)
                out = out * mask
                entry["mask"] = mask
            entry["a"] = out
            cache.append(entry)
        return out, cache

    def predict(self, x) -> np.ndarray:
        out, _ = self.forward(x, train=False)
        return out

    def backward(self, cache, dout, fused_softmax: bool = False):
        """Backpropagate dout (gradient of the loss w.r.t. the network
        output, or w.r.t. the final pre-activation when fused_softmax is
        set) through a forward cache. Returns (per-layer gradient dicts
        mirroring params, gradient w.r.t. the network input); the input
        gradient lets networks chain into each other."""
        grads: list[dict[str, np.ndarray]] = [dict() for _ in self.params]
        d = np.asarray(dout, dtype=np.float64)
        for i in range(len(self.specs) - 1, -1, -1):
            spec = self.specs[i]
            layer = self.params[i]
            entry = cache[i]
            if "mask" in entry:
                d = d * entry["mask"]
            last = i == len(self.specs) - 1
            if spec.activation == "softmax":
                if last and fused_softmax:
                    dz = d
                else:
                    p = entry["a"] if "mask" not in entry else _activate(entry["z"], "softmax")
                    dz = p * (d - (d * p).sum(axis=1, keepdims=True))
            else:
                dz = d * _activation_grad(entry["z"], spec.activation)
            if spec.batch_norm:
                x_hat = entry["x_hat"]
                inv_std = entry["inv_std"]
                m = dz.shape[0]
                grads[i]["gamma"] = (dz * x_hat).sum(axis=0)
                grads[i]["beta"] = dz.sum(axis=0)
                coeff = layer["gamma"] * inv_std / m
                dz = coeff * (
                    m * dz
                    - dz.sum(axis=0)
                    - x_hat * (dz * x_hat).sum(axis=0)
                )
            x_in = entry["x"]
            grads[i]["W"] = x_in.T @ dz
            grads[i]["b"] = dz.sum(axis=0)
            d = dz @ layer["W"].T
        return grads, d

    def grad_arrays(self, grads) -> list[np.ndarray]:
        """Flatten a backward() result to match param_arrays() ordering."""
        out = []
        for i, name, _ in self.param_items():
            out.append(grads[i][name])
        return out

    def slice(self, start: int, stop: int) -> "Mlp":
        """New network made from layers [start:stop) with copied weights.
        Used to split a trained autoencoder into its encoder half."""
        if not 0 <= start < stop <= len(self.specs):
            raise NnError(f"bad slice [{start}:{stop}) of {len(self.specs)} layers")
        dim = self.input_dim if start == 0 else self.specs[start - 1].units
        sub = Mlp.__new__(Mlp)
        sub.input_dim = dim
        sub.specs = self.specs[start:stop]
        sub.params = copy.deepcopy(self.params[start:stop])
        sub.buffers = copy.deepcopy(self.buffers[start:stop])
        return sub
