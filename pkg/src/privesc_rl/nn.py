"""Minimal dense-network substrate with hand-written gradients.

Everything is float64 and built on plain numpy arrays: a named parameter
store, dense layers with relu/tanh/identity activations, a numerically safe
softmax, the Huber value loss, Adam, and a self-describing binary checkpoint
format.  Backward passes are exact analytic gradients; a central
finite-difference checker is included so tests can verify every wired graph.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional

import numpy as np

CHECKPOINT_FORMAT = "privesc-rl-checkpoint"
CHECKPOINT_VERSION = 1

ACTIVATIONS = ("relu", "tanh", "identity")


class ParamStore:
    """Ordered mapping of parameter name -> float64 array."""

    def __init__(self):
        self._arrays: dict[str, np.ndarray] = {}

    def add(self, name: str, array: np.ndarray) -> np.ndarray:
        if name in self._arrays:
            raise ValueError(f"duplicate parameter name: {name}")
        arr = np.asarray(array, dtype=np.float64)
        self._arrays[name] = arr
        return arr

    def __getitem__(self, name: str) -> np.ndarray:
        return self._arrays[name]

    def __setitem__(self, name: str, value: np.ndarray) -> None:
        if name not in self._arrays:
            raise KeyError(name)
        value = np.asarray(value, dtype=np.float64)
        if value.shape != self._arrays[name].shape:
            raise ValueError(
                f"shape mismatch for {name}: {value.shape} != {self._arrays[name].shape}"
            )
        self._arrays[name] = value

    def __contains__(self, name: str) -> bool:
        return name in self._arrays

    def names(self) -> list[str]:
        return list(self._arrays)

    def items(self):
        return self._arrays.items()

    def param_count(self) -> int:
        return sum(a.size for a in self._arrays.values())

    def zero_grads(self) -> dict[str, np.ndarray]:
        return {k: np.zeros_like(v) for k, v in self._arrays.items()}

    def copy(self) -> "ParamStore":
        out = ParamStore()
        for k, v in self._arrays.items():
            out.add(k, v.copy())
        return out

    # flat views, used by the finite-difference checker
    def to_flat(self) -> np.ndarray:
        if not self._arrays:
            return np.zeros(0)
        return np.concatenate([a.ravel() for a in self._arrays.values()])

    def from_flat(self, flat: np.ndarray) -> None:
        i = 0
        for k, a in self._arrays.items():
            n = a.size
            self._arrays[k] = np.asarray(flat[i:i + n], dtype=np.float64).reshape(a.shape)
            i += n
        if i != flat.size:
            raise ValueError(f"flat vector has {flat.size} entries, expected {i}")


def glorot_uniform(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    """Weight init: uniform(-a, a) with a = sqrt(6 / (fan_in + fan_out))."""
    a = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-a, a, size=(fan_out, fan_in)).astype(np.float64)


def add_dense(params: ParamStore, rng: np.random.Generator,
              name: str, fan_in: int, fan_out: int) -> None:
    params.add(f"{name}.W", glorot_uniform(rng, fan_in, fan_out))
    params.add(f"{name}.b", np.zeros(fan_out, dtype=np.float64))


def _act(z: np.ndarray, kind: str) -> np.ndarray:
    if kind == "relu":
        return np.maximum(z, 0.0)
    if kind == "tanh":
        return np.tanh(z)
    if kind == "identity":
        return z
    raise ValueError(f"unknown activation: {kind}")


def _act_grad(z: np.ndarray, y: np.ndarray, kind: str) -> np.ndarray:
    if kind == "relu":
        return (z > 0.0).astype(np.float64)
    if kind == "tanh":
        return 1.0 - y * y
    if kind == "identity":
        return np.ones_like(z)
    raise ValueError(f"unknown activation: {kind}")


@dataclass
class DenseCache:
    name: str
    x: np.ndarray
    z: np.ndarray
    y: np.ndarray
    activation: str


def dense_forward(params: ParamStore, name: str, x: np.ndarray,
                  activation: str = "identity") -> tuple[np.ndarray, DenseCache]:
    """Apply y = act(x @ W.T + b).  ``x`` may be a vector or a row matrix."""
    W, b = params[f"{name}.W"], params[f"{name}.b"]
    z = x @ W.T + b
    y = _act(z, activation)
    return y, DenseCache(name, x, z, y, activation)


def dense_backward(params: ParamStore, cache: DenseCache, dy: np.ndarray,
                   grads: dict[str, np.ndarray]) -> np.ndarray:
    """Accumulate parameter gradients for one dense layer, return dx."""
    W = params[f"{cache.name}.W"]
    dz = dy * _act_grad(cache.z, cache.y, cache.activation)
    if dz.ndim == 1:
        grads[f"{cache.name}.W"] += np.outer(dz, cache.x)
        grads[f"{cache.name}.b"] += dz
    else:
        grads[f"{cache.name}.W"] += dz.T @ cache.x
        grads[f"{cache.name}.b"] += dz.sum(axis=0)
    return dz @ W


def softmax(z: np.ndarray) -> np.ndarray:
    """Numerically safe softmax over the last axis."""
    shifted = z - np.max(z, axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def huber(pred: float, target: float, delta: float = 1.0) -> tuple[float, float]:
    """Huber loss and its derivative in ``pred``."""
    err = pred - target
    if abs(err) <= delta:
        return 0.5 * err * err, err
    return delta * (abs(err) - 0.5 * delta), delta * np.sign(err)


def max_rows_forward(rows: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Column-wise max over a (n, d) matrix.  Returns the pooled (d,) vector
    and the winning row index per column (lowest index on ties).  An empty
    input pools to zeros with no winners."""
    if rows.shape[0] == 0:
        return np.zeros(rows.shape[1], dtype=np.float64), np.full(rows.shape[1], -1)
    winners = np.argmax(rows, axis=0)
    return rows[winners, np.arange(rows.shape[1])], winners


def max_rows_backward(winners: np.ndarray, n_rows: int, dpooled: np.ndarray) -> np.ndarray:
    """Route the pooled gradient back to each column's winning row."""
    out = np.zeros((n_rows, dpooled.shape[0]), dtype=np.float64)
    if n_rows == 0:
        return out
    cols = np.arange(dpooled.shape[0])
    np.add.at(out, (winners, cols), dpooled)
    return out


@dataclass
class AdamState:
    """First/second moment accumulators, one step counter for the whole net."""

    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)
    t: int = 0

    @classmethod
    def for_params(cls, params: ParamStore) -> "AdamState":
        return cls(
            m={k: np.zeros_like(a) for k, a in params.items()},
            v={k: np.zeros_like(a) for k, a in params.items()},
            t=0,
        )


def adam_step(params: ParamStore, grads: dict[str, np.ndarray], adam: AdamState,
              lr: float = 0.001, beta1: float = 0.9, beta2: float = 0.999,
              eps: float = 1e-8) -> None:
    """One Adam update over every parameter, in place."""
    adam.t += 1
    t = adam.t
    for name, g in grads.items():
        m = adam.m[name] = beta1 * adam.m[name] + (1.0 - beta1) * g
        v = adam.v[name] = beta2 * adam.v[name] + (1.0 - beta2) * (g * g)
        m_hat = m / (1.0 - beta1 ** t)
        v_hat = v / (1.0 - beta2 ** t)
        params[name] = params[name] - lr * m_hat / (np.sqrt(v_hat) + eps)


# ---------------------------------------------------------------------------
# Checkpoint io


def save_params(path: str, params: ParamStore, config: Optional[dict] = None) -> None:
    """Self-describing binary checkpoint: one JSON header line (format tag,
    shape table, embedded config) followed by the raw little-endian float64
    parameter data in declaration order."""
    header = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "dtype": "<f8",
        "params": [[name, list(arr.shape)] for name, arr in params.items()],
        "config": config if config is not None else {},
    }
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode() + b"\n")
        for _name, arr in params.items():
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def load_params(path: str) -> tuple[ParamStore, dict]:
    with open(path, "rb") as fh:
        header_line = fh.readline()
        header = json.loads(header_line.decode())
        if header.get("format") != CHECKPOINT_FORMAT:
            raise ValueError(f"not a checkpoint file: {path}")
        if header.get("version") != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version: {header.get('version')}")
        params = ParamStore()
        for name, shape in header["params"]:
            n = int(np.prod(shape)) if shape else 1
            raw = fh.read(n * 8)
            if len(raw) != n * 8:
                raise ValueError(f"truncated checkpoint while reading {name}")
            arr = np.frombuffer(raw, dtype="<f8").reshape(shape).copy()
            params.add(name, arr)
    return params, header.get("config", {})


# ---------------------------------------------------------------------------
# Finite differences


def numeric_grad(loss_fn: Callable[[], float], params: ParamStore,
                 names: Optional[Iterable[str]] = None, h: float = 1e-5,
                 max_entries_per_param: Optional[int] = None,
                 rng: Optional[np.random.Generator] = None) -> dict[str, np.ndarray]:
    """Central-difference gradient of ``loss_fn`` (which reads ``params``).

    When ``max_entries_per_param`` is given, only a sample of coordinates per
    parameter is probed (the rest are returned as nan) to keep large checks
    affordable.
    """
    out: dict[str, np.ndarray] = {}
    for name in (names if names is not None else params.names()):
        arr = params[name]
        g = np.full(arr.size, np.nan)
        idx = np.arange(arr.size)
        if max_entries_per_param is not None and arr.size > max_entries_per_param:
            gen = rng if rng is not None else np.random.default_rng(0)
            idx = gen.choice(arr.size, size=max_entries_per_param, replace=False)
        flat = arr.ravel()
        for i in idx:
            orig = flat[i]
            flat[i] = orig + h
            up = loss_fn()
            flat[i] = orig - h
            down = loss_fn()
            flat[i] = orig
            g[i] = (up - down) / (2.0 * h)
        out[name] = g.reshape(arr.shape)
    return out


def max_rel_error(analytic: dict[str, np.ndarray],
                  numeric: dict[str, np.ndarray]) -> float:
    """Worst relative difference |a - n| / max(eps, |a| + |n|) over all probed
    coordinates."""
    worst = 0.0
    for name, num in numeric.items():
        a = analytic[name].ravel()
        n = num.ravel()
        mask = ~np.isnan(n)
        if not mask.any():
            continue
        diff = np.abs(a[mask] - n[mask])
        scale = np.maximum(1e-12, np.abs(a[mask]) + np.abs(n[mask]))
        rel = diff / scale
        # treat tiny absolute agreement as exact to avoid 0-vs-1e-17 noise
        rel[diff < 1e-10] = 0.0
        worst = max(worst, float(rel.max()))
    return worst
