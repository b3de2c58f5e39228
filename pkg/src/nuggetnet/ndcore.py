"""Minimal dense numeric core.

Everything is 64-bit floats: the models are small, and determinism plus
finite-difference fidelity matter more than speed.  There is no autodiff
graph; each layer has an explicit forward here and hand-derived backward
passes in the modules that compose them.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np

from .errors import CheckpointError, NumericError, ShapeError


class Param:
    """One named tensor with its gradient accumulator and Adadelta state."""

    __slots__ = ("value", "grad", "eg2", "edx2")

    def __init__(self, value: np.ndarray):
        self.value = value
        self.grad = np.zeros_like(value)
        self.eg2 = np.zeros_like(value)  # running E[g^2]
        self.edx2 = np.zeros_like(value)  # running E[dx^2]


class ParamStore:
    """Named dense parameters with deterministic registration order.

    All randomness (initialization) flows from the store seed; registering
    the same tensors in the same order therefore reproduces values bit for
    bit.  A store has one logical writer during training; forward-only reads
    of a frozen store are freely shareable.
    """

    def __init__(self, rng_seed: int = 0):
        self.rng_seed = rng_seed
        self._rng = np.random.default_rng([rng_seed, 0x70])
        self._params: dict[str, Param] = {}

    def add(self, name: str, shape: tuple[int, ...], init: str = "zeros") -> Param:
        if name in self._params:
            raise ValueError(f"parameter {name!r} already registered")
        if init == "zeros":
            value = np.zeros(shape, dtype=np.float64)
        elif init == "glorot":
            # shape convention (fan_out, fan_in) for matrices
            fan_out, fan_in = (shape[0], int(np.prod(shape[1:]))) if len(shape) > 1 else (1, shape[0])
            limit = np.sqrt(6.0 / (fan_in + fan_out))
            value = self._rng.uniform(-limit, limit, size=shape)
        elif init == "embedding":
            value = self._rng.uniform(-0.01, 0.01, size=shape)
        else:
            raise ValueError(f"unknown init scheme {init!r}")
        param = Param(np.ascontiguousarray(value, dtype=np.float64))
        self._params[name] = param
        return param

    def __getitem__(self, name: str) -> Param:
        try:
            return self._params[name]
        except KeyError:
            raise KeyError(f"no parameter named {name!r}") from None

    def __contains__(self, name: str) -> bool:
        return name in self._params

    def names(self) -> list[str]:
        return list(self._params)

    def items(self) -> Iterable[tuple[str, Param]]:
        return self._params.items()

    def zero_grads(self) -> None:
        for p in self._params.values():
            p.grad[...] = 0.0

    def n_parameters(self) -> int:
        return sum(p.value.size for p in self._params.values())


# ---------------------------------------------------------------------------
# Layer primitives
# ---------------------------------------------------------------------------


def conv1d_tanh(inputs: np.ndarray, weights: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """1-d convolution with tanh nonlinearity.

    inputs:  (n, d) sequence of n input vectors
    weights: (m, h*d) flat filters, one row per filter, window h
    bias:    (m,)
    returns: (m, n-h+1) activation map where
             map[i, j] = tanh(w_i . concat(x_j .. x_{j+h-1}) + b_i)
    """
    x = np.asarray(inputs, dtype=np.float64)
    w = np.asarray(weights, dtype=np.float64)
    b = np.asarray(bias, dtype=np.float64)
    if x.ndim != 2 or w.ndim != 2 or b.ndim != 1:
        raise ShapeError(
            f"conv1d_tanh expects inputs (n,d), weights (m,h*d), bias (m,); "
            f"got {x.shape}, {w.shape}, {b.shape}"
        )
    n, d = x.shape
    m, hd = w.shape
    if b.shape[0] != m:
        raise ShapeError(f"bias dimension {b.shape[0]} does not match {m} filters")
    if d == 0 or hd % d != 0:
        raise ShapeError(f"filter width {hd} is not a multiple of input dimension {d}")
    h = hd // d
    if n < h:
        raise ShapeError(f"sequence length {n} shorter than window {h}")
    windows = conv_windows(x, h)
    return np.tanh(windows @ w.T + b).T


def conv_windows(x: np.ndarray, h: int) -> np.ndarray:
    """(n-h+1, h*d) matrix of flattened length-h windows of x."""
    n, d = x.shape
    view = np.lib.stride_tricks.sliding_window_view(x, (h, d))
    return view.reshape(n - h + 1, h * d)


def dynamic_multi_pool(activation_map: np.ndarray, c: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-filter max over columns left of c and from c onward.

    The empty left segment at c == 0 pools to 0: tanh activations are
    symmetric about 0, so 0 is the neutral value.
    """
    amap = np.asarray(activation_map, dtype=np.float64)
    if amap.ndim != 2 or amap.shape[1] < 1:
        raise ShapeError(f"activation map must be 2-d with >= 1 column, got shape {amap.shape}")
    cols = amap.shape[1]
    if not 0 <= c < cols:
        raise ShapeError(f"concerning index {c} out of range [0, {cols})")
    left = amap[:, :c].max(axis=1) if c > 0 else np.zeros(amap.shape[0])
    right = amap[:, c:].max(axis=1)
    return left, right


def dense(x: np.ndarray, weights: np.ndarray, bias: np.ndarray, activation: str | None = None) -> np.ndarray:
    """activation(W @ x + b) with activation in {None, "tanh", "sigmoid"}."""
    x = np.asarray(x, dtype=np.float64)
    w = np.asarray(weights, dtype=np.float64)
    b = np.asarray(bias, dtype=np.float64)
    if w.ndim != 2 or x.ndim != 1 or w.shape[1] != x.shape[0]:
        raise ShapeError(
            f"dense expects weights (out,in) with in == len(x); got {w.shape} and {x.shape}"
        )
    if b.shape != (w.shape[0],):
        raise ShapeError(f"bias shape {b.shape} does not match output dimension {w.shape[0]}")
    z = w @ x + b
    if activation is None or activation == "none":
        return z
    if activation == "tanh":
        return np.tanh(z)
    if activation == "sigmoid":
        return sigmoid(z)
    raise ValueError(f"unknown activation {activation!r}")


def sigmoid(x: np.ndarray) -> np.ndarray:
    """Numerically stable logistic function."""
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def softmax(scores: np.ndarray) -> np.ndarray:
    """Max-shifted softmax over a 1-d score vector."""
    s = np.asarray(scores, dtype=np.float64)
    if not np.all(np.isfinite(s)):
        raise NumericError("softmax received non-finite scores")
    shifted = s - s.max()
    e = np.exp(shifted)
    return e / e.sum()


def softmax_xent(scores: np.ndarray, gold: int) -> tuple[np.ndarray, float, np.ndarray]:
    """Softmax probabilities, cross-entropy loss -log P[gold], and dL/dscores.

    The loss is computed in log-sum-exp form so it stays exact when the gold
    probability underflows; the gradient is P - onehot(gold).
    """
    s = np.asarray(scores, dtype=np.float64)
    if s.ndim != 1:
        raise ShapeError(f"scores must be 1-d, got shape {s.shape}")
    if not 0 <= gold < s.shape[0]:
        raise ShapeError(f"gold index {gold} out of range [0, {s.shape[0]})")
    if not np.all(np.isfinite(s)):
        raise NumericError("softmax_xent received non-finite scores")
    m = s.max()
    e = np.exp(s - m)
    z = e.sum()
    probs = e / z
    loss = float(np.log(z) + m - s[gold])
    grad = probs.copy()
    grad[gold] -= 1.0
    return probs, loss, grad


# ---------------------------------------------------------------------------
# Adadelta
# ---------------------------------------------------------------------------

ADADELTA_RHO = 0.95
ADADELTA_EPS = 1e-6


def adadelta_step(store: ParamStore, rho: float = ADADELTA_RHO, eps: float = ADADELTA_EPS) -> None:
    """One Adadelta update over all parameters, consuming accumulated gradients.

    Per element:  E[g^2] <- rho E[g^2] + (1-rho) g^2
                  dx     <- -sqrt(E[dx^2]+eps) / sqrt(E[g^2]+eps) * g
                  E[dx^2]<- rho E[dx^2] + (1-rho) dx^2
                  x      <- x + dx
    Gradients are zeroed afterwards.
    """
    for _, p in store.items():
        g = p.grad
        p.eg2 *= rho
        p.eg2 += (1.0 - rho) * g * g
        dx = -np.sqrt(p.edx2 + eps) / np.sqrt(p.eg2 + eps) * g
        p.edx2 *= rho
        p.edx2 += (1.0 - rho) * dx * dx
        p.value += dx
        p.grad[...] = 0.0


# ---------------------------------------------------------------------------
# Gradient checking
# ---------------------------------------------------------------------------


@dataclass
class GradCheckEntry:
    name: str
    n_checked: int
    max_rel_err: float
    worst_coord: int
    passed: bool


@dataclass
class GradCheckReport:
    entries: list[GradCheckEntry]
    tolerance: float

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.entries)

    def summary(self) -> str:
        lines = []
        for e in self.entries:
            status = "PASS" if e.passed else "FAIL"
            lines.append(
                f"{status} {e.name}: max rel err {e.max_rel_err:.3e} "
                f"over {e.n_checked} coords (worst flat index {e.worst_coord})"
            )
        return "\n".join(lines)


def grad_check(
    closure: Callable[[], float],
    store: ParamStore,
    step: float = 1e-4,
    tolerance: float = 1e-4,
    coords_per_param: int = 4,
    rng_seed: int = 0,
) -> GradCheckReport:
    """Compare accumulated analytic gradients against central finite differences.

    `closure` must deterministically recompute the loss from the current
    store values and accumulate gradients into it.  For each parameter a
    random subset of coordinates is perturbed by +-step and the relative
    error |g_analytic - g_fd| / max(|g_a|, |g_fd|, 1e-8) reported.
    """
    rng = np.random.default_rng(rng_seed)
    store.zero_grads()
    closure()
    analytic = {name: p.grad.copy() for name, p in store.items()}
    store.zero_grads()

    entries = []
    for name, p in store.items():
        size = p.value.size
        k = min(coords_per_param, size)
        coords = rng.choice(size, size=k, replace=False) if size > k else np.arange(size)
        worst = 0.0
        worst_coord = -1
        flat = p.value.reshape(-1)
        for idx in coords:
            idx = int(idx)
            orig = flat[idx]
            flat[idx] = orig + step
            loss_plus = closure()
            flat[idx] = orig - step
            loss_minus = closure()
            flat[idx] = orig
            g_fd = (loss_plus - loss_minus) / (2.0 * step)
            g_an = analytic[name].reshape(-1)[idx]
            rel = abs(g_an - g_fd) / max(abs(g_an), abs(g_fd), 1e-8)
            if rel > worst:
                worst = rel
                worst_coord = idx
        entries.append(GradCheckEntry(name, len(coords), worst, worst_coord, worst <= tolerance))
    store.zero_grads()
    return GradCheckReport(entries, tolerance)


# ---------------------------------------------------------------------------
# Checkpoint format
# ---------------------------------------------------------------------------
#
# Layout (all integers little-endian):
#   magic "NGCKPT01" | u32 version | u32 meta_len | meta JSON (utf-8)
#   u32 n_records | records
# Record:
#   u16 name_len | name utf-8 | u8 kind (0 value, 1 E[g^2], 2 E[dx^2])
#   | u8 ndim | u32 dims... | float64 LE payload
# Round-trips are bit-exact.

CHECKPOINT_MAGIC = b"NGCKPT01"
CHECKPOINT_VERSION = 1
_KINDS = ("value", "eg2", "edx2")


def save_checkpoint(path, store: ParamStore, meta: dict | None = None, include_optimizer: bool = True) -> None:
    meta_bytes = json.dumps(meta or {}, sort_keys=True, separators=(",", ":")).encode("utf-8")
    records = []
    for name, p in store.items():
        tensors = [("value", p.value)]
        if include_optimizer:
            tensors += [("eg2", p.eg2), ("edx2", p.edx2)]
        for kind, arr in tensors:
            records.append((name, kind, arr))
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<II", CHECKPOINT_VERSION, len(meta_bytes)))
        fh.write(meta_bytes)
        fh.write(struct.pack("<I", len(records)))
        for name, kind, arr in records:
            name_b = name.encode("utf-8")
            fh.write(struct.pack("<H", len(name_b)))
            fh.write(name_b)
            fh.write(struct.pack("<BB", _KINDS.index(kind), arr.ndim))
            fh.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def load_checkpoint(path) -> tuple[dict, dict[str, dict[str, np.ndarray]]]:
    """Returns (meta, {param_name: {kind: array}})."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[: len(CHECKPOINT_MAGIC)] != CHECKPOINT_MAGIC:
        raise CheckpointError(f"{path}: not a checkpoint file (bad magic)")
    off = len(CHECKPOINT_MAGIC)

    def take(fmt):
        nonlocal off
        size = struct.calcsize(fmt)
        if off + size > len(blob):
            raise CheckpointError(f"{path}: truncated checkpoint")
        vals = struct.unpack_from(fmt, blob, off)
        off += size
        return vals

    version, meta_len = take("<II")
    if version != CHECKPOINT_VERSION:
        raise CheckpointError(f"{path}: unsupported checkpoint version {version}")
    meta = json.loads(blob[off : off + meta_len].decode("utf-8"))
    off += meta_len
    (n_records,) = take("<I")
    tensors: dict[str, dict[str, np.ndarray]] = {}
    for _ in range(n_records):
        (name_len,) = take("<H")
        name = blob[off : off + name_len].decode("utf-8")
        off += name_len
        kind_idx, ndim = take("<BB")
        shape = take(f"<{ndim}I") if ndim else ()
        count = int(np.prod(shape)) if shape else 1
        if off + count * 8 > len(blob):
            raise CheckpointError(f"{path}: truncated checkpoint")
        arr = np.frombuffer(blob, dtype="<f8", count=count, offset=off).reshape(shape)
        off += count * 8
        tensors.setdefault(name, {})[_KINDS[kind_idx]] = arr.astype(np.float64)
    return meta, tensors


def restore_store(store: ParamStore, tensors: dict[str, dict[str, np.ndarray]]) -> None:
    """Copy checkpoint tensors into an already-registered store, checking shapes."""
    for name, p in store.items():
        if name not in tensors:
            raise CheckpointError(f"checkpoint is missing parameter {name!r}")
        rec = tensors[name]
        if rec["value"].shape != p.value.shape:
            raise CheckpointError(
                f"parameter {name!r}: checkpoint shape {rec['value'].shape} "
                f"!= model shape {p.value.shape}"
            )
        p.value[...] = rec["value"]
        if "eg2" in rec:
            p.eg2[...] = rec["eg2"]
        if "edx2" in rec:
            p.edx2[...] = rec["edx2"]
    extra = set(tensors) - set(store.names())
    if extra:
        raise CheckpointError(f"checkpoint contains unknown parameters: {sorted(extra)}")
