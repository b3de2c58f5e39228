"""Character-centered feature extraction and char/word fusion.

Each character under consideration gets one feature vector per enabled
branch (characters, words), built from embeddings, a 1-d convolution with
tanh, and max pooling split at the character's own token.  The two branch
features are projected to a common width and fused either by concatenation
or by learned sigmoid gates.  Backward passes are written out by hand; the
gradient checker in ndcore is the authority on their correctness.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .corpus import PAD_ID, Vocabulary, relative_position_index
from .errors import ConfigError, ShapeError
from .ndcore import ParamStore, conv_windows, sigmoid


class HybridMode(str, Enum):
    CONCAT = "concat"
    GENERAL = "general"
    TASK_SPECIFIC = "task_specific"


@dataclass(frozen=True)
class ExtractorConfig:
    token_emb_dim: int = 100
    pos_emb_dim: int = 5
    n_filters: int = 200
    window: int = 3
    lex_window: int = 1
    proj_dim: int = 200
    max_rel_dist: int = 40
    use_chars: bool = True
    use_words: bool = True
    hybrid_mode: HybridMode = HybridMode.GENERAL
    dropout: float = 0.0

    def __post_init__(self):
        for name in ("token_emb_dim", "pos_emb_dim", "n_filters", "window", "proj_dim", "max_rel_dist"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.lex_window < 0:
            raise ConfigError(f"lex_window must be >= 0, got {self.lex_window}")
        if not (self.use_chars or self.use_words):
            raise ConfigError("at least one of use_chars/use_words must be enabled")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError(f"dropout must be in [0, 1), got {self.dropout}")
        # tolerate the plain string form from config files
        object.__setattr__(self, "hybrid_mode", HybridMode(self.hybrid_mode))

    @property
    def input_dim(self) -> int:
        return self.token_emb_dim + self.pos_emb_dim

    @property
    def feature_dim(self) -> int:
        return 2 * self.n_filters + (2 * self.lex_window + 1) * self.token_emb_dim

    @property
    def n_positions(self) -> int:
        return 2 * self.max_rel_dist + 1

    @property
    def both_branches(self) -> bool:
        return self.use_chars and self.use_words

    @property
    def fused_dim(self) -> int:
        """Width of the vectors handed to the classifier heads."""
        if not self.both_branches:
            return self.proj_dim
        if self.hybrid_mode is HybridMode.CONCAT:
            return 2 * self.proj_dim
        return self.proj_dim

    def to_json(self) -> dict:
        return {
            "token_emb_dim": self.token_emb_dim,
            "pos_emb_dim": self.pos_emb_dim,
            "n_filters": self.n_filters,
            "window": self.window,
            "lex_window": self.lex_window,
            "proj_dim": self.proj_dim,
            "max_rel_dist": self.max_rel_dist,
            "use_chars": self.use_chars,
            "use_words": self.use_words,
            "hybrid_mode": self.hybrid_mode.value,
            "dropout": self.dropout,
        }

    @classmethod
    def from_json(cls, data: dict) -> "ExtractorConfig":
        return cls(**data)


BRANCH_PREFIXES = ("char", "word")


def register_encoder_params(store: ParamStore, config: ExtractorConfig, vocab: Vocabulary) -> None:
    """Register all extractor and fusion parameters in a fixed order."""
    if vocab.max_rel_dist != config.max_rel_dist:
        raise ConfigError(
            f"vocabulary max_rel_dist {vocab.max_rel_dist} != extractor max_rel_dist {config.max_rel_dist}"
        )
    sizes = {"char": vocab.n_chars, "word": vocab.n_words}
    enabled = {"char": config.use_chars, "word": config.use_words}
    for prefix in BRANCH_PREFIXES:
        if not enabled[prefix]:
            continue
        store.add(f"{prefix}.tok_emb", (sizes[prefix], config.token_emb_dim), init="embedding")
        store.add(f"{prefix}.pos_emb", (config.n_positions, config.pos_emb_dim), init="embedding")
        store.add(f"{prefix}.conv_w", (config.n_filters, config.window * config.input_dim), init="glorot")
        store.add(f"{prefix}.conv_b", (config.n_filters,), init="zeros")
        store.add(f"{prefix}.proj_w", (config.proj_dim, config.feature_dim), init="glorot")
        store.add(f"{prefix}.proj_b", (config.proj_dim,), init="zeros")
    if config.both_branches:
        d = config.proj_dim
        if config.hybrid_mode is HybridMode.GENERAL:
            store.add("fuse.gate_w_char", (d, d), init="glorot")
            store.add("fuse.gate_w_word", (d, d), init="glorot")
            store.add("fuse.gate_b", (d,), init="zeros")
        elif config.hybrid_mode is HybridMode.TASK_SPECIFIC:
            for task in ("nugget", "type"):
                store.add(f"fuse.{task}.gate_w_char", (d, d), init="glorot")
                store.add(f"fuse.{task}.gate_w_word", (d, d), init="glorot")
                store.add(f"fuse.{task}.gate_b", (d,), init="zeros")


# ---------------------------------------------------------------------------
# Branch: embed -> conv -> split pooling -> lexical concat -> projection
# ---------------------------------------------------------------------------


@dataclass
class BranchCache:
    """Everything the branch backward pass needs."""

    padded_ids: np.ndarray  # (n_pad,) token ids including virtual pads
    padded_pos: np.ndarray  # (n_pad,) position-embedding row per padded slot
    windows: np.ndarray  # (n, window*input_dim)
    amap: np.ndarray  # (n_filters, n) tanh activation map
    left_argmax: np.ndarray | None  # per-filter argmax column, None when c == 0
    right_argmax: np.ndarray
    c: int
    lex_ids: np.ndarray  # (2*lex_window+1,)
    feature: np.ndarray  # (feature_dim,)
    fp: np.ndarray  # (proj_dim,) tanh-projected feature


def extract_branch(
    store: ParamStore, prefix: str, token_ids: np.ndarray, c: int, config: ExtractorConfig
) -> BranchCache:
    """Feature vector for the token at index c of one branch's token sequence."""
    ids = np.asarray(token_ids, dtype=np.int64)
    n = ids.shape[0]
    if n == 0:
        raise ShapeError("cannot extract features from an empty token sequence")
    if not 0 <= c < n:
        raise ShapeError(f"center index {c} out of range [0, {n})")

    tok_emb = store[f"{prefix}.tok_emb"].value
    pos_emb = store[f"{prefix}.pos_emb"].value
    h = config.window
    pad_left = (h - 1) // 2
    pad_right = h - 1 - pad_left

    # virtual indices -pad_left .. n+pad_right-1 keep conv column j on token j
    virtual = np.arange(-pad_left, n + pad_right)
    padded_ids = np.where((virtual >= 0) & (virtual < n), ids[np.clip(virtual, 0, n - 1)], PAD_ID)
    padded_pos = np.array(
        [relative_position_index(int(v) - c, config.max_rel_dist) for v in virtual], dtype=np.int64
    )
    x = np.concatenate([tok_emb[padded_ids], pos_emb[padded_pos]], axis=1)

    windows = conv_windows(x, h)
    amap = np.tanh(windows @ store[f"{prefix}.conv_w"].value.T + store[f"{prefix}.conv_b"].value).T

    if c > 0:
        left_argmax = amap[:, :c].argmax(axis=1)
        left = amap[np.arange(amap.shape[0]), left_argmax]
    else:
        left_argmax = None
        left = np.zeros(amap.shape[0])
    right_argmax = amap[:, c:].argmax(axis=1)
    right = amap[np.arange(amap.shape[0]), c + right_argmax]

    lex_slots = np.arange(c - config.lex_window, c + config.lex_window + 1)
    lex_ids = np.where((lex_slots >= 0) & (lex_slots < n), ids[np.clip(lex_slots, 0, n - 1)], PAD_ID)
    feature = np.concatenate([left, right, tok_emb[lex_ids].reshape(-1)])

    fp = np.tanh(store[f"{prefix}.proj_w"].value @ feature + store[f"{prefix}.proj_b"].value)
    return BranchCache(padded_ids, padded_pos, windows, amap, left_argmax, right_argmax, c, lex_ids, feature, fp)


def branch_backward(store: ParamStore, prefix: str, cache: BranchCache, dfp: np.ndarray, config: ExtractorConfig) -> None:
    """Accumulate gradients for one branch given dL/d(projected feature)."""
    proj_w = store[f"{prefix}.proj_w"]
    dz = dfp * (1.0 - cache.fp * cache.fp)
    proj_w.grad += np.outer(dz, cache.feature)
    store[f"{prefix}.proj_b"].grad += dz
    dfeature = proj_w.value.T @ dz

    m = config.n_filters
    dleft = dfeature[:m]
    dright = dfeature[m : 2 * m]
    dlex = dfeature[2 * m :].reshape(-1, config.token_emb_dim)

    tok_emb = store[f"{prefix}.tok_emb"]
    np.add.at(tok_emb.grad, cache.lex_ids, dlex)

    damap = np.zeros_like(cache.amap)
    rows = np.arange(m)
    if cache.left_argmax is not None:
        damap[rows, cache.left_argmax] += dleft
    damap[rows, cache.c + cache.right_argmax] += dright

    dpre = damap * (1.0 - cache.amap * cache.amap)  # (m, n)
    conv_w = store[f"{prefix}.conv_w"]
    conv_w.grad += dpre @ cache.windows
    store[f"{prefix}.conv_b"].grad += dpre.sum(axis=1)

    dwindows = dpre.T @ conv_w.value  # (n, h*input_dim)
    h = config.window
    d_in = config.input_dim
    n_pad = cache.padded_ids.shape[0]
    dx = np.zeros((n_pad, d_in))
    per_row = dwindows.reshape(-1, h, d_in)
    for offset in range(h):
        dx[offset : offset + per_row.shape[0]] += per_row[:, offset, :]

    np.add.at(tok_emb.grad, cache.padded_ids, dx[:, : config.token_emb_dim])
    np.add.at(store[f"{prefix}.pos_emb"].grad, cache.padded_pos, dx[:, config.token_emb_dim :])


# ---------------------------------------------------------------------------
# Fusion
# ---------------------------------------------------------------------------


@dataclass
class FusionCache:
    fp_char: np.ndarray | None
    fp_word: np.ndarray | None
    gates: dict[str, np.ndarray]  # task -> sigmoid gate vector
    f_nugget: np.ndarray
    f_type: np.ndarray


def _gate(store: ParamStore, scope: str, fp_char: np.ndarray, fp_word: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    z = sigmoid(
        store[f"{scope}.gate_w_char"].value @ fp_char
        + store[f"{scope}.gate_w_word"].value @ fp_word
        + store[f"{scope}.gate_b"].value
    )
    return z, z * fp_char + (1.0 - z) * fp_word


def _gate_backward(
    store: ParamStore, scope: str, z: np.ndarray, fp_char: np.ndarray, fp_word: np.ndarray, df: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    dz = df * (fp_char - fp_word)
    dpre = dz * z * (1.0 - z)
    store[f"{scope}.gate_w_char"].grad += np.outer(dpre, fp_char)
    store[f"{scope}.gate_w_word"].grad += np.outer(dpre, fp_word)
    store[f"{scope}.gate_b"].grad += dpre
    dfp_char = df * z + store[f"{scope}.gate_w_char"].value.T @ dpre
    dfp_word = df * (1.0 - z) + store[f"{scope}.gate_w_word"].value.T @ dpre
    return dfp_char, dfp_word


def fuse(
    store: ParamStore,
    config: ExtractorConfig,
    fp_char: np.ndarray | None,
    fp_word: np.ndarray | None,
) -> FusionCache:
    """Combine branch features into the nugget-head and type-head inputs."""
    if not config.both_branches:
        single = fp_char if fp_char is not None else fp_word
        if single is None:
            raise ShapeError("fusion needs at least one branch feature")
        return FusionCache(fp_char, fp_word, {}, single, single)
    assert fp_char is not None and fp_word is not None
    if config.hybrid_mode is HybridMode.CONCAT:
        f = np.concatenate([fp_char, fp_word])
        return FusionCache(fp_char, fp_word, {}, f, f)
    if config.hybrid_mode is HybridMode.GENERAL:
        z, f = _gate(store, "fuse", fp_char, fp_word)
        return FusionCache(fp_char, fp_word, {"shared": z}, f, f)
    z_n, f_n = _gate(store, "fuse.nugget", fp_char, fp_word)
    z_t, f_t = _gate(store, "fuse.type", fp_char, fp_word)
    return FusionCache(fp_char, fp_word, {"nugget": z_n, "type": z_t}, f_n, f_t)


def fuse_backward(
    store: ParamStore,
    config: ExtractorConfig,
    cache: FusionCache,
    df_nugget: np.ndarray,
    df_type: np.ndarray,
) -> tuple[np.ndarray | None, np.ndarray | None]:
    """Route head-input gradients back to the branch features."""
    if not config.both_branches:
        d = df_nugget + df_type
        return (d, None) if cache.fp_char is not None else (None, d)
    fp_char, fp_word = cache.fp_char, cache.fp_word
    if config.hybrid_mode is HybridMode.CONCAT:
        d = df_nugget + df_type
        k = config.proj_dim
        return d[:k].copy(), d[k:].copy()
    if config.hybrid_mode is HybridMode.GENERAL:
        return _gate_backward(store, "fuse", cache.gates["shared"], fp_char, fp_word, df_nugget + df_type)
    dc_n, dw_n = _gate_backward(store, "fuse.nugget", cache.gates["nugget"], fp_char, fp_word, df_nugget)
    dc_t, dw_t = _gate_backward(store, "fuse.type", cache.gates["type"], fp_char, fp_word, df_type)
    return dc_n + dc_t, dw_n + dw_t


# ---------------------------------------------------------------------------
# Pretrained embeddings
# ---------------------------------------------------------------------------


def load_embeddings_file(path, store: ParamStore, prefix: str, token_to_id: dict[str, int]) -> int:
    """Overwrite embedding rows from a text file of "token v1 v2 ..." lines.

    Tokens absent from the vocabulary are skipped.  Returns the number of
    rows loaded.  Dimension mismatches raise ConfigError.
    """
    emb = store[f"{prefix}.tok_emb"].value
    loaded = 0
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.rstrip("\n").split(" ")
            if len(parts) == 2 and lineno == 1 and all(p.isdigit() for p in parts):
                continue  # optional "count dim" header
            token, values = parts[0], parts[1:]
            if token not in token_to_id:
                continue
            if len(values) != emb.shape[1]:
                raise ConfigError(
                    f"{path}: line {lineno}: embedding has {len(values)} dims, expected {emb.shape[1]}"
                )
            emb[token_to_id[token]] = np.array([float(v) for v in values])
            loaded += 1
    return loaded
