"""Flat key=value run configuration with CLI overrides and fingerprints."""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field

from .errors import ConfigError

_KEY_ALIASES = {"lambda": "lambda_"}


@dataclass
class RunConfig:
    # paths
    corpus: str | None = None
    lexicon: str | None = None
    out: str = "out"
    # planner
    lambda_: float = 0.7
    L: int = 2
    k: int = 6
    renormalize: bool = False
    # model backends
    ssg_backend: str = "markov"
    ufp_backend: str = "linear"
    markov_order: int = 1
    markov_alpha: float = 1.0
    ridge: float = 1e-6
    d_emb: int = 64
    heads: int = 4
    layers: int = 2
    epochs: int = 30
    lr: float = 0.01
    batch_size: int = 16
    weight_decay: float = 0.0
    seed: int = 0
    l_max: int = 8
    window: int = 128
    max_states: int = 64
    vocab_size: int = 2000
    augment_count: int = 0
    oov_emotion_mode: str = "special"
    # lexicon quantization
    n_v: int = 8
    n_a: int = 8
    # evaluation
    feedback_mode: str = "chosen"
    metric_ufp: str | None = None
    sweep_axis: str = "k"
    sweep_values: tuple[float, ...] = (1, 2, 3, 4, 5, 6, 7, 8)

    def validate(self) -> None:
        checks = [
            (self.lambda_ >= 0, "lambda must be >= 0"),
            (self.L >= 1, "L must be >= 1"),
            (self.k >= 1, "k must be >= 1"),
            (self.l_max >= self.L, "l_max must be >= L"),
            (self.markov_order >= 0, "markov_order must be >= 0"),
            (self.markov_alpha >= 0, "markov_alpha must be >= 0"),
            (self.ridge > 0, "ridge must be > 0"),
            (self.epochs >= 0, "epochs must be >= 0"),
            (self.lr > 0, "lr must be > 0"),
            (self.batch_size >= 1, "batch_size must be >= 1"),
            (self.n_v >= 1 and self.n_a >= 1, "n_v and n_a must be >= 1"),
            (self.window >= 1, "window must be >= 1"),
            (self.max_states >= 1, "max_states must be >= 1"),
            (self.augment_count >= 0, "augment_count must be >= 0"),
            (self.ssg_backend in ("markov", "neural"), f"unknown ssg_backend {self.ssg_backend!r}"),
            (self.ufp_backend in ("linear", "neural"), f"unknown ufp_backend {self.ufp_backend!r}"),
            (self.feedback_mode in ("chosen", "chosen_plus_truth"),
             f"unknown feedback_mode {self.feedback_mode!r}"),
            (self.oov_emotion_mode in ("special", "average"),
             f"unknown oov_emotion_mode {self.oov_emotion_mode!r}"),
            (self.sweep_axis in ("k", "lambda", "L"), f"unknown sweep_axis {self.sweep_axis!r}"),
            (len(self.sweep_values) >= 1, "sweep_values must be non-empty"),
        ]
        for ok, message in checks:
            if not ok:
                raise ConfigError(message)
        if self.ssg_backend == "neural" or self.ufp_backend == "neural":
            if self.d_emb % self.heads != 0:
                raise ConfigError(f"d_emb {self.d_emb} must be divisible by heads {self.heads}")

    def fingerprint(self) -> str:
        """Hash of the computational parameters (paths excluded)."""
        payload = dataclasses.asdict(self)
        for path_field in ("corpus", "lexicon", "out", "metric_ufp"):
            payload.pop(path_field, None)
        payload["sweep_values"] = list(payload["sweep_values"])
        canon = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode("utf-8")).hexdigest()[:12]


_FIELDS = {f.name: f for f in dataclasses.fields(RunConfig)}


def _coerce(name: str, raw: str):
    f = _FIELDS[name]
    text = raw.strip()
    tp = f.type
    try:
        if tp in ("bool", bool):
            lowered = text.casefold()
            if lowered in ("1", "true", "yes", "on"):
                return True
            if lowered in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        if tp in ("int", int):
            return int(text)
        if tp in ("float", float):
            return float(text)
        if name == "sweep_values":
            return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise ConfigError(f"cannot parse {name}={raw!r}") from None
    if text.casefold() in ("none", ""):
        return None
    return text


def apply_setting(config: RunConfig, key: str, value: str) -> None:
    name = _KEY_ALIASES.get(key, key)
    if name not in _FIELDS:
        raise ConfigError(f"unknown configuration key {key!r}")
    setattr(config, name, _coerce(name, value))


def load_config(path: str | None = None, overrides: list[str] | None = None) -> RunConfig:
    """Build a RunConfig from an optional key=value file plus overrides."""
    config = RunConfig()
    if path:
        try:
            with open(path, "r", encoding="utf-8") as f:
                lines = f.readlines()
        except OSError as e:
            raise ConfigError(f"cannot read config file {path}: {e}") from e
        for lineno, line in enumerate(lines, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            if "=" not in stripped:
                raise ConfigError(f"{path}:{lineno}: expected key=value, got {stripped!r}")
            key, _, value = stripped.partition("=")
            apply_setting(config, key.strip(), value)
    for item in overrides or []:
        if "=" not in item:
            raise ConfigError(f"override must be key=value, got {item!r}")
        key, _, value = item.partition("=")
        apply_setting(config, key.strip(), value)
    config.validate()
    return config
