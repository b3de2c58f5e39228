"""Span-proposal model: per-character nugget and subtype distributions.

A CharSpanModel owns one ParamStore plus everything needed to map a raw
annotated sentence to per-character probability distributions: a character
branch, an optional word branch aligned through the segmentation, gated or
concatenated fusion, and the two softmax heads.  Losses are summed
cross-entropies over two instance streams: every sampled character for the
span head, gold in-nugget characters for the subtype head.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .corpus import AnnotatedSentence, SubtypeInventory, TrainingInstance, Vocabulary
from .encoder import (
    BranchCache,
    ExtractorConfig,
    FusionCache,
    branch_backward,
    extract_branch,
    fuse,
    fuse_backward,
    register_encoder_params,
)
from .errors import CheckpointError, ConfigError
from .heads import (
    head_backward,
    head_scores,
    label_to_class,
    num_nugget_classes,
    register_head_params,
)
from .ndcore import ParamStore, load_checkpoint, restore_store, save_checkpoint, softmax, softmax_xent


@dataclass(frozen=True)
class ModelConfig:
    extractor: ExtractorConfig = field(default_factory=ExtractorConfig)
    max_nugget_len: int = 3
    max_tokens: int = 120

    def __post_init__(self):
        if self.max_nugget_len < 1:
            raise ConfigError(f"max_nugget_len must be >= 1, got {self.max_nugget_len}")
        if self.max_tokens < self.extractor.window:
            raise ConfigError(
                f"max_tokens {self.max_tokens} shorter than the conv window {self.extractor.window}"
            )

    def to_json(self) -> dict:
        return {
            "extractor": self.extractor.to_json(),
            "max_nugget_len": self.max_nugget_len,
            "max_tokens": self.max_tokens,
        }

    @classmethod
    def from_json(cls, data: dict) -> "ModelConfig":
        return cls(
            extractor=ExtractorConfig.from_json(data["extractor"]),
            max_nugget_len=int(data["max_nugget_len"]),
            max_tokens=int(data["max_tokens"]),
        )


@dataclass
class SentenceEncoding:
    """Id arrays for one sentence, reused across its characters."""

    char_ids: np.ndarray
    word_ids: np.ndarray
    char_to_word: np.ndarray


@dataclass
class _CharForward:
    char_cache: BranchCache | None
    word_cache: BranchCache | None
    fusion: FusionCache
    f_nugget: np.ndarray  # head inputs, after dropout when training
    f_type: np.ndarray
    mask_nugget: np.ndarray | None
    mask_type: np.ndarray | None


def _centered_view(ids: np.ndarray, c: int, max_tokens: int) -> tuple[np.ndarray, int]:
    n = ids.shape[0]
    if n <= max_tokens:
        return ids, c
    start = min(max(c - max_tokens // 2, 0), n - max_tokens)
    return ids[start : start + max_tokens], c - start


class CharEncoderBase:
    """Shared sentence encoding and per-character forward/backward plumbing.

    Subclasses own the store, config, vocab and their heads; this base turns
    (sentence, char index) into fused head inputs and routes head gradients
    back down.
    """

    config: ModelConfig
    vocab: Vocabulary
    store: ParamStore

    def encode_sentence(self, sentence: AnnotatedSentence) -> SentenceEncoding:
        char_ids = np.array([self.vocab.char_id(ch) for ch in sentence.text], dtype=np.int64)
        word_ids = np.array([self.vocab.word_id(w) for w in sentence.words], dtype=np.int64)
        char_to_word = np.array(
            [sentence.word_index_of(i) for i in range(len(sentence.text))], dtype=np.int64
        )
        return SentenceEncoding(char_ids, word_ids, char_to_word)

    def _forward(
        self, enc: SentenceEncoding, ci: int, drop_rng: np.random.Generator | None = None
    ) -> _CharForward:
        cfg = self.config.extractor
        char_cache = word_cache = None
        if cfg.use_chars:
            ids, c = _centered_view(enc.char_ids, ci, self.config.max_tokens)
            char_cache = extract_branch(self.store, "char", ids, c, cfg)
        if cfg.use_words:
            wi = int(enc.char_to_word[ci])
            ids, c = _centered_view(enc.word_ids, wi, self.config.max_tokens)
            word_cache = extract_branch(self.store, "word", ids, c, cfg)
        fusion = fuse(
            self.store,
            cfg,
            char_cache.fp if char_cache else None,
            word_cache.fp if word_cache else None,
        )
        f_nugget, f_type = fusion.f_nugget, fusion.f_type
        mask_nugget = mask_type = None
        if drop_rng is not None and cfg.dropout > 0.0:
            keep = 1.0 - cfg.dropout
            mask_nugget = (drop_rng.random(f_nugget.shape[0]) < keep) / keep
            mask_type = (drop_rng.random(f_type.shape[0]) < keep) / keep
            f_nugget = f_nugget * mask_nugget
            f_type = f_type * mask_type
        return _CharForward(char_cache, word_cache, fusion, f_nugget, f_type, mask_nugget, mask_type)

    def _backward(self, fwd: _CharForward, df_nugget: np.ndarray, df_type: np.ndarray) -> None:
        if fwd.mask_nugget is not None:
            df_nugget = df_nugget * fwd.mask_nugget
        if fwd.mask_type is not None:
            df_type = df_type * fwd.mask_type
        cfg = self.config.extractor
        dfp_char, dfp_word = fuse_backward(self.store, cfg, fwd.fusion, df_nugget, df_type)
        if fwd.char_cache is not None and dfp_char is not None:
            branch_backward(self.store, "char", fwd.char_cache, dfp_char, cfg)
        if fwd.word_cache is not None and dfp_word is not None:
            branch_backward(self.store, "word", fwd.word_cache, dfp_word, cfg)


class CharSpanModel(CharEncoderBase):
    """Joint nugget-proposal and subtype classifier over characters."""

    kind = "proposal"

    def __init__(
        self,
        config: ModelConfig,
        vocab: Vocabulary,
        subtypes: SubtypeInventory,
        rng_seed: int = 0,
    ):
        if len(subtypes) < 1:
            raise ConfigError("model needs at least one event subtype")
        self.config = config
        self.vocab = vocab
        self.subtypes = subtypes
        self.rng_seed = rng_seed
        self.n_nugget_classes = num_nugget_classes(config.max_nugget_len)
        self.store = ParamStore(rng_seed)
        register_encoder_params(self.store, config.extractor, vocab)
        register_head_params(self.store, config.extractor.fused_dim, self.n_nugget_classes, len(subtypes))

    # -- inference ---------------------------------------------------------

    def char_distributions(self, enc: SentenceEncoding, ci: int) -> tuple[np.ndarray, np.ndarray]:
        """(span-class probabilities, subtype probabilities) for one character."""
        fwd = self._forward(enc, ci)
        pn = softmax(head_scores(self.store, "nugget", fwd.f_nugget))
        pt = softmax(head_scores(self.store, "type", fwd.f_type))
        return pn, pt

    def predict_sentence(self, sentence: AnnotatedSentence):
        from .decoder import decode_sentence

        return decode_sentence(self, sentence)

    # -- training ----------------------------------------------------------

    def training_streams(self, corpus, neg_ratio: float = 5.0, rng_seed: int = 0):
        """(span-head instances, subtype-head instances) for the trainer."""
        from .corpus import make_instances

        sets = make_instances(corpus, neg_ratio=neg_ratio, rng_seed=rng_seed, max_len=self.config.max_nugget_len)
        return sets.generator, sets.classifier

    def loss_and_grads(
        self,
        gen_batch: Sequence[TrainingInstance],
        cls_batch: Sequence[TrainingInstance],
        drop_rng: np.random.Generator | None = None,
    ) -> float:
        """Summed cross-entropy over both instance streams; grads accumulate."""
        encodings: dict[int, SentenceEncoding] = {}

        def enc_of(sentence: AnnotatedSentence) -> SentenceEncoding:
            key = id(sentence)
            if key not in encodings:
                encodings[key] = self.encode_sentence(sentence)
            return encodings[key]

        total = 0.0
        zeros = np.zeros(self.config.extractor.fused_dim)
        for inst in gen_batch:
            fwd = self._forward(enc_of(inst.sentence), inst.char_index, drop_rng)
            gold = label_to_class(inst.nugget_label, self.config.max_nugget_len)
            _, loss, dscores = softmax_xent(head_scores(self.store, "nugget", fwd.f_nugget), gold)
            total += loss
            df = head_backward(self.store, "nugget", fwd.f_nugget, dscores)
            self._backward(fwd, df, zeros)
        for inst in cls_batch:
            if inst.type_label is None:
                raise ConfigError("classifier stream instance is missing its subtype label")
            fwd = self._forward(enc_of(inst.sentence), inst.char_index, drop_rng)
            gold = self.subtypes.id_of(inst.type_label)
            _, loss, dscores = softmax_xent(head_scores(self.store, "type", fwd.f_type), gold)
            total += loss
            df = head_backward(self.store, "type", fwd.f_type, dscores)
            self._backward(fwd, zeros, df)
        return total

    # -- persistence -------------------------------------------------------

    def save(self, path, trainer_state: dict | None = None) -> None:
        meta = {
            "kind": self.kind,
            "config": self.config.to_json(),
            "vocab": self.vocab.to_json(),
            "subtypes": self.subtypes.names,
            "rng_seed": self.rng_seed,
        }
        if trainer_state is not None:
            meta["trainer_state"] = trainer_state
        save_checkpoint(path, self.store, meta)

    @classmethod
    def from_meta(cls, meta: dict) -> "CharSpanModel":
        return cls(
            config=ModelConfig.from_json(meta["config"]),
            vocab=Vocabulary.from_json(meta["vocab"]),
            subtypes=SubtypeInventory(meta["subtypes"]),
            rng_seed=int(meta.get("rng_seed", 0)),
        )

    @classmethod
    def load(cls, path) -> tuple["CharSpanModel", dict]:
        meta, tensors = load_checkpoint(path)
        if meta.get("kind") != cls.kind:
            raise CheckpointError(f"{path}: checkpoint kind {meta.get('kind')!r} is not {cls.kind!r}")
        model = cls.from_meta(meta)
        restore_store(model.store, tensors)
        return model, meta


def load_model(path):
    """Open any checkpoint, dispatching on its recorded model kind."""
    meta, tensors = load_checkpoint(path)
    kind = meta.get("kind")
    if kind == CharSpanModel.kind:
        model = CharSpanModel.from_meta(meta)
    else:
        from .baselines import IOBModel, WordwiseModel

        if kind == IOBModel.kind:
            model = IOBModel.from_meta(meta)
        elif kind == WordwiseModel.kind:
            model = WordwiseModel.from_meta(meta)
        else:
            raise CheckpointError(f"{path}: unknown model kind {kind!r}")
    restore_store(model.store, tensors)
    return model, meta
