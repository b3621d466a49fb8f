"""Experiment configuration: flat dotted-key text files plus CLI overrides.

Files contain `key = value` lines (# comments allowed). CLI `--set
key=value` overrides file values. The config hash identifies an output
directory and changes exactly when a semantically relevant field changes
(the output root itself is excluded from the hash).
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, replace
from pathlib import Path

from .downstream import RegressorConfig
from .errors import ConfigInvalid
from .metrics import MetricConfig
from .projections import PROJECTION_METHODS
from .training import TrainingConfig

METHODS = ("cagan", "wgangp_star", "smote")
REFERENCES = ("minority", "all")


@dataclass(frozen=True)
class ExperimentConfig:
    """All knobs for one experiment; `seed` is mandatory."""

    data: str = ""
    out: str = "out"
    schema: str = ""  # empty -> bundled reference schema
    method: str = "cagan"
    seed: int | None = None
    holdout_minority: int = 0
    generate_count: int | None = None  # None -> class deficit
    smote_k: int = 5
    synthetic: str = ""  # optional override of the synthetic CSV location
    reference: str = "minority"  # fidelity reference: minority split or all patients
    projections: tuple[str, ...] = ("pca",)
    toy_n_major: int = 100
    toy_n_minor: int = 20
    downstream_w_in: int = 20
    downstream_w_out: int = 1
    train: TrainingConfig = field(default_factory=TrainingConfig)
    metrics: MetricConfig = field(default_factory=MetricConfig)
    downstream: RegressorConfig = field(default_factory=RegressorConfig)

    def validate(self) -> None:
        if self.seed is None:
            raise ConfigInvalid("seed is mandatory (set `seed = <int>`)")
        if self.method not in METHODS:
            raise ConfigInvalid(f"method must be one of {METHODS}, got {self.method!r}")
        if self.reference not in REFERENCES:
            raise ConfigInvalid(f"metrics.reference must be one of {REFERENCES}")
        for m in self.projections:
            if m not in PROJECTION_METHODS:
                raise ConfigInvalid(f"unknown projection method {m!r}")
        if self.holdout_minority < 0:
            raise ConfigInvalid("holdout.minority must be >= 0")
        if self.smote_k < 1:
            raise ConfigInvalid("smote.k must be >= 1")
        self.train.validate()


def _parse_bool(raw: str) -> bool:
    lowered = raw.strip().lower()
    if lowered in ("true", "1", "yes"):
        return True
    if lowered in ("false", "0", "no"):
        return False
    raise ValueError(f"expected a boolean, got {raw!r}")


def _parse_projections(raw: str) -> tuple[str, ...]:
    items = tuple(p.strip() for p in raw.split(",") if p.strip())
    return items


def _parse_optional_int(raw: str):
    raw = raw.strip()
    return None if raw == "" else int(raw)


# key -> (section, field, caster); section "" is the top level.
_KEY_TABLE = {
    "data": ("", "data", str),
    "out": ("", "out", str),
    "schema": ("", "schema", str),
    "method": ("", "method", str),
    "seed": ("", "seed", int),
    "holdout.minority": ("", "holdout_minority", int),
    "generate.count": ("", "generate_count", _parse_optional_int),
    "smote.k": ("", "smote_k", int),
    "paths.synthetic": ("", "synthetic", str),
    "metrics.reference": ("", "reference", str),
    "projections": ("", "projections", _parse_projections),
    "toy.n_major": ("", "toy_n_major", int),
    "toy.n_minor": ("", "toy_n_minor", int),
    "downstream.w_in": ("", "downstream_w_in", int),
    "downstream.w_out": ("", "downstream_w_out", int),
    "train.lambda_gp": ("train", "lambda_gp", float),
    "train.lambda_corr": ("train", "lambda_corr", float),
    "train.lr": ("train", "lr", float),
    "train.batch_size": ("train", "batch_size", int),
    "train.critic_steps": ("train", "critic_steps", int),
    "train.epochs": ("train", "epochs", int),
    "train.latent_dim": ("train", "latent_dim", int),
    "train.hidden_size": ("train", "hidden_size", int),
    "train.num_layers": ("train", "num_layers", int),
    "train.embed_dim": ("train", "embed_dim", int),
    "train.label_dim": ("train", "label_dim", int),
    "train.gp_mode": ("train", "gp_mode", str),
    "train.corr_source": ("train", "corr_source", str),
    "train.stratify": ("train", "stratify", _parse_bool),
    "train.adam_beta1": ("train", "adam_beta1", float),
    "train.adam_beta2": ("train", "adam_beta2", float),
    "train.probe_every": ("train", "probe_every", int),
    "train.probe_sequences": ("train", "probe_sequences", int),
    "train.probe_points": ("train", "probe_points", int),
    "train.checkpoint_every": ("train", "checkpoint_every", int),
    "metrics.bins": ("metrics", "bins", int),
    "metrics.epsilon": ("metrics", "epsilon", float),
    "metrics.sigma": ("metrics", "sigma", float),
    "metrics.max_points": ("metrics", "max_points", int),
    "metrics.max_patients": ("metrics", "max_patients", int),
    "metrics.embed_dim": ("metrics", "embed_dim", int),
    "downstream.hidden_size": ("downstream", "hidden_size", int),
    "downstream.lr": ("downstream", "lr", float),
    "downstream.epochs": ("downstream", "epochs", int),
    "downstream.batch_size": ("downstream", "batch_size", int),
}

# Keys whose value does not change the meaning of results.
_HASH_EXCLUDED = {"out"}


def _read_pairs(text: str, origin: str) -> list[tuple[str, str]]:
    pairs = []
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigInvalid(f"{origin}:{lineno}: expected 'key = value', got {raw_line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        pairs.append((key, value))
    return pairs


def _apply_pairs(cfg: ExperimentConfig, pairs, origin: str) -> tuple[ExperimentConfig, set]:
    top: dict = {}
    nested: dict[str, dict] = {"train": {}, "metrics": {}, "downstream": {}}
    seen = set()
    for key, raw in pairs:
        if key not in _KEY_TABLE:
            raise ConfigInvalid(f"{origin}: unknown config key {key!r}")
        section, attr, caster = _KEY_TABLE[key]
        try:
            value = caster(raw)
        except (ValueError, TypeError) as exc:
            raise ConfigInvalid(f"{origin}: bad value for {key!r}: {exc}") from None
        seen.add(key)
        if section:
            nested[section][attr] = value
        else:
            top[attr] = value
    if nested["train"]:
        top["train"] = replace(cfg.train, **nested["train"])
    if nested["metrics"]:
        top["metrics"] = replace(cfg.metrics, **nested["metrics"])
    if nested["downstream"]:
        top["downstream"] = replace(cfg.downstream, **nested["downstream"])
    return replace(cfg, **top), seen


def default_architecture(cfg: ExperimentConfig, explicit_keys: set) -> ExperimentConfig:
    """Derive conditioning and depth from the method.

    The baseline method is unconditional with one recurrent layer; an
    explicit train.num_layers setting still wins.
    """
    if cfg.method == "wgangp_star":
        train = replace(cfg.train, conditional=False)
        if "train.num_layers" not in explicit_keys:
            train = replace(train, num_layers=1)
        return replace(cfg, train=train)
    if cfg.method == "cagan":
        return replace(cfg, train=replace(cfg.train, conditional=True))
    return cfg


def load_config(path=None, overrides: list[str] | None = None) -> ExperimentConfig:
    """Build a validated config from an optional file plus `key=value` overrides."""
    cfg = ExperimentConfig()
    explicit: set = set()
    if path is not None:
        path = Path(path)
        if not path.exists():
            raise ConfigInvalid(f"config file not found: {path}")
        cfg, seen = _apply_pairs(
            cfg, _read_pairs(path.read_text(encoding="utf-8"), str(path)), str(path)
        )
        explicit |= seen
    if overrides:
        pairs = []
        for item in overrides:
            if "=" not in item:
                raise ConfigInvalid(f"--set expects key=value, got {item!r}")
            key, value = item.split("=", 1)
            pairs.append((key.strip(), value.strip()))
        cfg, seen = _apply_pairs(cfg, pairs, "--set")
        explicit |= seen
    cfg = default_architecture(cfg, explicit)
    cfg.validate()
    return cfg


def dump_config(cfg: ExperimentConfig, include_excluded: bool = True) -> str:
    """Canonical serialization: one sorted `key = value` line per setting."""
    sections = {"": cfg, "train": cfg.train, "metrics": cfg.metrics, "downstream": cfg.downstream}
    lines = []
    for key in sorted(_KEY_TABLE):
        if not include_excluded and key in _HASH_EXCLUDED:
            continue
        section, attr, _ = _KEY_TABLE[key]
        value = getattr(sections[section], attr)
        if isinstance(value, tuple):
            value = ",".join(value)
        lines.append(f"{key} = {'' if value is None else value}")
    return "\n".join(lines) + "\n"


def config_hash(cfg: ExperimentConfig) -> str:
    """12-hex digest over every semantically relevant field."""
    canonical = dump_config(cfg, include_excluded=False)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:12]


def resolve_train_config(cfg: ExperimentConfig) -> TrainingConfig:
    """Training config with its seed drawn from the experiment substreams."""
    from .seeding import substream_seed

    return replace(cfg.train, seed=substream_seed(cfg.seed, "train"))
