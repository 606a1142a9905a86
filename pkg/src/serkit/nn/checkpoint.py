"""Binary model checkpoints.

Layout (little-endian throughout):

    magic    4s   b"SERM"
    version  u16  currently 1
    input_dim u32
    n_layers  u32
    per layer: units u32, activation u8, dropout f32, batch_norm u8
    opt_kind  u8   0 none, 1 adam, 2 rmsprop
    per layer payload, float32 row-major:
        W (in*out), b (out)
        if batch_norm: gamma, beta, run_mean, run_var (out each)
    if opt_kind != 0:
        lr f64, hyper1 f64, hyper2 f64, eps f64, step u64
        slot arrays float32 in param_items order:
            adam: m then v per parameter array
            rmsprop: v per parameter array

Parameters are stored in float32; loading widens back to float64, so a
save/load/save cycle is byte-identical.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .network import ACTIVATIONS, LayerSpec, Mlp, NnError
from .optim import Adam, RmsProp

MAGIC = b"SERM"
VERSION = 1

_HEADER = struct.Struct("<4sHII")
_LAYER = struct.Struct("<IBfB")
_OPT = struct.Struct("<ddddQ")

_OPT_KINDS = {None: 0, "adam": 1, "rmsprop": 2}


def _f32_bytes(arr: np.ndarray) -> bytes:
    return np.ascontiguousarray(arr, dtype="<f4").tobytes()


class CheckpointError(ValueError):
    pass


def save_model(model: Mlp, path, optimizer=None) -> None:
    chunks = [_HEADER.pack(MAGIC, VERSION, model.input_dim, len(model.specs))]
    for spec in model.specs:
        chunks.append(_LAYER.pack(
            spec.units,
            ACTIVATIONS.index(spec.activation),
            spec.dropout,
            1 if spec.batch_norm else 0,
        ))
    kind = None if optimizer is None else optimizer.kind
    if kind not in _OPT_KINDS:
        raise CheckpointError(f"cannot checkpoint optimizer kind {kind!r}")
    chunks.append(struct.pack("<B", _OPT_KINDS[kind]))
    for spec, layer, buf in zip(model.specs, model.params, model.buffers):
        chunks.append(_f32_bytes(layer["W"]))
        chunks.append(_f32_bytes(layer["b"]))
        if spec.batch_norm:
            chunks.append(_f32_bytes(layer["gamma"]))
            chunks.append(_f32_bytes(layer["beta"]))
            chunks.append(_f32_bytes(buf["run_mean"]))
            chunks.append(_f32_bytes(buf["run_var"]))
    if kind == "adam":
        slots = optimizer.m if optimizer.m is not None else []
        vslots = optimizer.v if optimizer.v is not None else []
        if len(slots) != len(list(model.param_items())):
            raise CheckpointError("optimizer state does not match the model")
        chunks.append(_OPT.pack(optimizer.lr, optimizer.beta1, optimizer.beta2,
                                optimizer.eps, optimizer.step_count))
        for m, v in zip(slots, vslots):
            chunks.append(_f32_bytes(m))
            chunks.append(_f32_bytes(v))
    elif kind == "rmsprop":
        slots = optimizer.v if optimizer.v is not None else []
        if len(slots) != len(list(model.param_items())):
            raise CheckpointError("optimizer state does not match the model")
        chunks.append(_OPT.pack(optimizer.lr, optimizer.decay, 0.0,
                                optimizer.eps, optimizer.step_count))
        for v in slots:
            chunks.append(_f32_bytes(v))
    Path(path).write_bytes(b"".join(chunks))


class _Reader:
    def __init__(self, blob: bytes):
        self.blob = blob
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.blob):
            raise CheckpointError("truncated checkpoint")
        out = self.blob[self.pos:self.pos + n]
        self.pos += n
        return out

    def array(self, count: int) -> np.ndarray:
        raw = self.take(4 * count)
        return np.frombuffer(raw, dtype="<f4").astype(np.float64)


def load_model(path):
    """Read a checkpoint; returns (model, optimizer) where optimizer is
    None when none was saved."""
    blob = Path(path).read_bytes()
    r = _Reader(blob)
    magic, version, input_dim, n_layers = _HEADER.unpack(r.take(_HEADER.size))
    if magic != MAGIC:
        raise CheckpointError(f"bad magic {magic!r}")
    if version != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    specs = []
    for _ in range(n_layers):
        units, act_idx, dropout, bn = _LAYER.unpack(r.take(_LAYER.size))
        if act_idx >= len(ACTIVATIONS):
            raise CheckpointError(f"bad activation index {act_idx}")
        specs.append(LayerSpec(units, ACTIVATIONS[act_idx], float(dropout), bool(bn)))
    (opt_kind,) = struct.unpack("<B", r.take(1))
    if opt_kind not in (0, 1, 2):
        raise CheckpointError(f"bad optimizer kind {opt_kind}")
    try:
        model = Mlp(input_dim, specs, seed=0)
    except NnError as exc:
        raise CheckpointError(f"invalid topology in checkpoint: {exc}") from exc
    fan_in = input_dim
    for spec, layer, buf in zip(specs, model.params, model.buffers):
        layer["W"] = r.array(fan_in * spec.units).reshape(fan_in, spec.units)
        layer["b"] = r.array(spec.units)
        if spec.batch_norm:
            layer["gamma"] = r.array(spec.units)
            layer["beta"] = r.array(spec.units)
            buf["run_mean"] = r.array(spec.units)
            buf["run_var"] = r.array(spec.units)
        fan_in = spec.units
    optimizer = None
    if opt_kind != 0:
        lr, h1, h2, eps, steps = _OPT.unpack(r.take(_OPT.size))
        shapes = [arr.shape for arr in model.param_arrays()]
        if opt_kind == 1:
            optimizer = Adam(lr, beta1=h1, beta2=h2, eps=eps)
            # slots are interleaved m, v per parameter, matching save_model
            optimizer.m, optimizer.v = [], []
            for s in shapes:
                optimizer.m.append(r.array(int(np.prod(s))).reshape(s))
                optimizer.v.append(r.array(int(np.prod(s))).reshape(s))
        else:
            optimizer = RmsProp(lr, decay=h1, eps=eps)
            optimizer.v = [r.array(int(np.prod(s))).reshape(s) for s in shapes]
        optimizer.step_count = int(steps)
    if r.pos != len(blob):
        raise CheckpointError(f"{len(blob) - r.pos} trailing bytes in checkpoint")
    return model, optimizer
