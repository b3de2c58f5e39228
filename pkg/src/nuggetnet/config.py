"""Run configuration: one YAML file describing data, model, and training.

Unknown keys are rejected by name so typos fail loudly instead of silently
falling back to defaults.  The loaded config can be echoed back as JSON
with every default filled in.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import yaml

from .encoder import ExtractorConfig
from .errors import ConfigError
from .model import ModelConfig
from .synthgen import GenSpec
from .train import TrainConfig

MODEL_KINDS = ("proposal", "iob", "wordwise")


def _check_keys(section: dict, allowed: set[str], where: str) -> None:
    unknown = set(section) - allowed
    if unknown:
        raise ConfigError(f"unknown {where} keys: {', '.join(sorted(unknown))}")


def _section(data: dict, name: str) -> dict:
    value = data.get(name) or {}
    if not isinstance(value, dict):
        raise ConfigError(f"section {name!r} must be a mapping, got {type(value).__name__}")
    return value


@dataclass
class RunConfig:
    model_kind: str = "proposal"
    model: ModelConfig = field(default_factory=ModelConfig)
    training: TrainConfig = field(default_factory=TrainConfig)
    generator: GenSpec | None = None
    generator_seed: int = 0
    train_path: str | None = None
    dev_path: str | None = None
    test_path: str | None = None
    char_embeddings: str | None = None
    word_embeddings: str | None = None
    vocab_min_count: int = 1
    out_dir: str | None = None

    def to_json(self) -> dict:
        gen = None
        if self.generator is not None:
            gen = {
                "n_sentences": self.generator.n_sentences,
                "subtypes": list(self.generator.subtypes),
                "proportions": list(self.generator.proportions),
                "min_context_words": self.generator.min_context_words,
                "max_context_words": self.generator.max_context_words,
                "n_distractor_words": self.generator.n_distractor_words,
                "doc_prefix": self.generator.doc_prefix,
                "seed": self.generator_seed,
            }
        return {
            "model_kind": self.model_kind,
            "model": self.model.to_json(),
            "training": self.training.to_json(),
            "generator": gen,
            "data": {"train": self.train_path, "dev": self.dev_path, "test": self.test_path},
            "embeddings": {"chars": self.char_embeddings, "words": self.word_embeddings},
            "vocab_min_count": self.vocab_min_count,
            "out_dir": self.out_dir,
        }


def parse_run_config(data: dict) -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError(f"config root must be a mapping, got {type(data).__name__}")
    _check_keys(
        data,
        {"model", "training", "generator", "data", "embeddings", "vocab_min_count", "out_dir"},
        "top-level",
    )

    model_section = dict(_section(data, "model"))
    _check_keys(model_section, {"kind", "max_nugget_len", "max_tokens", "extractor"}, "model")
    kind = model_section.pop("kind", "proposal")
    if kind not in MODEL_KINDS:
        raise ConfigError(f"model.kind must be one of {MODEL_KINDS}, got {kind!r}")
    extractor_section = model_section.pop("extractor", {}) or {}
    _check_keys(extractor_section, set(ExtractorConfig().to_json()), "model.extractor")
    try:
        extractor = ExtractorConfig(**extractor_section)
        model = ModelConfig(extractor=extractor, **model_section)
    except TypeError as exc:
        raise ConfigError(f"bad model section: {exc}") from exc

    training_section = _section(data, "training")
    _check_keys(training_section, set(TrainConfig().to_json()), "training")
    try:
        training = TrainConfig(**training_section)
    except TypeError as exc:
        raise ConfigError(f"bad training section: {exc}") from exc

    gen = None
    gen_seed = 0
    if data.get("generator") is not None:
        gen_section = dict(_section(data, "generator"))
        gen_seed = int(gen_section.pop("seed", 0))
        allowed = {
            "n_sentences",
            "subtypes",
            "proportions",
            "min_context_words",
            "max_context_words",
            "n_distractor_words",
            "doc_prefix",
        }
        _check_keys(gen_section, allowed, "generator")
        if "subtypes" in gen_section:
            gen_section["subtypes"] = tuple(gen_section["subtypes"])
        if "proportions" in gen_section:
            gen_section["proportions"] = tuple(gen_section["proportions"])
        try:
            gen = GenSpec(**gen_section)
        except TypeError as exc:
            raise ConfigError(f"bad generator section: {exc}") from exc

    data_section = _section(data, "data")
    _check_keys(data_section, {"train", "dev", "test"}, "data")
    emb_section = _section(data, "embeddings")
    _check_keys(emb_section, {"chars", "words"}, "embeddings")

    return RunConfig(
        model_kind=kind,
        model=model,
        training=training,
        generator=gen,
        generator_seed=gen_seed,
        train_path=data_section.get("train"),
        dev_path=data_section.get("dev"),
        test_path=data_section.get("test"),
        char_embeddings=emb_section.get("chars"),
        word_embeddings=emb_section.get("words"),
        vocab_min_count=int(data.get("vocab_min_count", 1)),
        out_dir=data.get("out_dir"),
    )


def load_run_config(path) -> RunConfig:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = yaml.safe_load(fh)
        except yaml.YAMLError as exc:
            raise ConfigError(f"{path}: not valid YAML: {exc}") from exc
    try:
        return parse_run_config(data or {})
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def dump_resolved_config(config: RunConfig, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(config.to_json(), fh, indent=2, sort_keys=True)
        fh.write("\n")
