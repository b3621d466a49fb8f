"""Adversarial training loop and trained-model artifacts.

Each generator update is preceded by a fixed number of critic updates;
both use Adam. The loop records per-step losses, gradient-penalty and
alignment values, and a periodic distribution probe (mean per-variable
MMD against a fixed real reference) into a TrainingTrace. Training is
fully deterministic under the config seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np
import torch

from .cohort import MINORITY_LABEL, Cohort
from .encoding import CohortCodec, EncodedBatch, EncodingParams, ScalingParams
from .errors import ConfigInvalid, Diverged, SingleClassConditional
from .losses import GP_MODES, SeqTensors, correlation_targets, critic_loss, generator_loss
from .metrics import mmd_rbf
from .models import GanModel, sample_noise
from .schema import CohortSchema, parse_schema_text
from .seeding import substream_seed

CORR_SOURCES = ("batch", "dataset")


@dataclass(frozen=True)
class TrainingConfig:
    """Hyperparameters for the adversarial trainer.

    `conditional=True, num_layers=3` is the conditional augmentation
    model; `conditional=False, num_layers=1` is the unconditional
    baseline. Everything else is shared between the two.
    """

    lambda_gp: float = 10.0
    lambda_corr: float = 1.0
    lr: float = 1e-4
    batch_size: int = 32
    critic_steps: int = 5  # critic updates per generator update
    epochs: int = 20
    latent_dim: int = 16
    hidden_size: int = 64
    num_layers: int = 3
    embed_dim: int = 4
    label_dim: int = 4
    seed: int = 0
    conditional: bool = True
    gp_mode: str = "fake"  # where the penalty gradient is taken
    corr_source: str = "batch"  # correlation target from batch or whole dataset
    stratify: bool = True  # conditional mode: draw class-balanced minibatches
    adam_beta1: float = 0.5
    adam_beta2: float = 0.9
    probe_every: int = 50
    probe_sequences: int = 64
    probe_points: int = 1024
    checkpoint_every: int = 0  # generator steps between checkpoints; 0 = final only

    def validate(self) -> None:
        if self.lambda_gp < 0 or self.lambda_corr < 0:
            raise ConfigInvalid("lambda_gp and lambda_corr must be >= 0")
        if self.lr <= 0:
            raise ConfigInvalid("lr must be > 0")
        if self.batch_size < 2:
            raise ConfigInvalid("batch_size must be >= 2")
        if self.critic_steps < 1:
            raise ConfigInvalid("critic_steps must be >= 1")
        if self.epochs < 0:
            raise ConfigInvalid("epochs must be >= 0")
        if min(self.latent_dim, self.hidden_size, self.num_layers, self.embed_dim,
               self.label_dim) < 1:
            raise ConfigInvalid("model dimensions must be >= 1")
        if self.gp_mode not in GP_MODES:
            raise ConfigInvalid(f"gp_mode must be one of {GP_MODES}")
        if self.corr_source not in CORR_SOURCES:
            raise ConfigInvalid(f"corr_source must be one of {CORR_SOURCES}")


def baseline_config(cfg: TrainingConfig) -> TrainingConfig:
    """The unconditional single-layer variant of a config."""
    return replace(cfg, conditional=False, num_layers=1)


@dataclass(frozen=True)
class TraceRow:
    step: int
    critic_loss: float
    generator_loss: float
    gp_term: float
    alignment_term: float
    probe_mmd: float  # NaN when no probe ran at this step


@dataclass
class TrainingTrace:
    rows: list[TraceRow] = field(default_factory=list)

    def probe_series(self) -> list[tuple[int, float]]:
        return [(r.step, r.probe_mmd) for r in self.rows if not math.isnan(r.probe_mmd)]

    def write_csv(self, path) -> None:
        with Path(path).open("w", encoding="utf-8") as fh:
            fh.write("step,critic_loss,generator_loss,gp_term,alignment_term,probe_mmd\n")
            for r in self.rows:
                probe = "" if math.isnan(r.probe_mmd) else repr(r.probe_mmd)
                fh.write(
                    f"{r.step},{r.critic_loss!r},{r.generator_loss!r},"
                    f"{r.gp_term!r},{r.alignment_term!r},{probe}\n"
                )


@dataclass
class ModelBundle:
    """A trained model plus everything needed to decode its output."""

    schema: CohortSchema
    cfg: TrainingConfig
    model: GanModel
    codec: CohortCodec  # carries the trained embedding tables
    steps: int

    def save(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        scaling = self.codec.params.scaling
        torch.save(
            {
                "state_dict": self.model.state_dict(),
                "config": {f.name: getattr(self.cfg, f.name) for f in fields(TrainingConfig)},
                "schema_text": self.schema.to_text(),
                "scaling": {
                    "low": scaling.low,
                    "span": scaling.span,
                    "degenerate": scaling.degenerate,
                },
                "tables": list(self.codec.params.tables),
                "embed_dim": self.codec.params.embed_dim,
                "steps": self.steps,
            },
            path,
        )
        manifest = path.with_suffix(path.suffix + ".manifest")
        manifest.write_text(
            f"schema_hash = {self.schema.hash()}\n"
            f"steps = {self.steps}\n"
            + "".join(
                f"train.{f.name} = {getattr(self.cfg, f.name)}\n"
                for f in fields(TrainingConfig)
            ),
            encoding="utf-8",
        )
        return path

    @classmethod
    def load(cls, path) -> "ModelBundle":
        payload = torch.load(Path(path), map_location="cpu", weights_only=False)
        schema = parse_schema_text(payload["schema_text"])
        cfg = TrainingConfig(**payload["config"])
        params = EncodingParams(
            schema_hash=schema.hash(),
            embed_dim=payload["embed_dim"],
            scaling=ScalingParams(**payload["scaling"]),
            tables=tuple(payload["tables"]),
        )
        codec = CohortCodec(schema, params)
        model = GanModel(schema, cfg, initial_tables=params.tables)
        model.load_state_dict(payload["state_dict"])
        model.eval()
        return cls(schema=schema, cfg=cfg, model=model, codec=codec, steps=payload["steps"])


class _Prober:
    """Mean per-variable MMD between generated probes and a real reference.

    Scalars live on the encoded scale: numeric channels as generated, and
    category indices (after snapping against the current tables) mapped to
    [-1, 1]. Lower is closer to the real marginals.
    """

    def __init__(self, model, codec, numeric, cat_idx, labels, cfg):
        self.model = model
        self.cfg = cfg
        n = numeric.shape[0]
        take = min(cfg.probe_sequences, n)
        idx = np.linspace(0, n - 1, take).round().astype(int)
        self.real_scalars = self._scalars_from_indices(
            numeric[idx].numpy(), cat_idx[idx].numpy(), codec
        )
        self.labels = labels[torch.as_tensor(idx)]
        self.schema = codec.schema
        self.noise = None  # fixed probe noise, set once

    @staticmethod
    def _normalize_indices(indices: np.ndarray, n_categories: list[int]) -> np.ndarray:
        out = np.empty_like(indices, dtype=float)
        for k, n_cat in enumerate(n_categories):
            out[..., k] = 2.0 * indices[..., k] / (n_cat - 1) - 1.0
        return out

    def _scalars_from_indices(self, numeric, indices, codec):
        n_categories = [len(v.categories) for v in codec.schema.discrete_variables]
        norm = self._normalize_indices(indices, n_categories)
        cols = []
        num_iter = iter(range(numeric.shape[2]))
        disc_iter = iter(range(norm.shape[2]))
        for spec in codec.schema.variables:
            if spec.kind == "numeric":
                cols.append(numeric[:, :, next(num_iter)].reshape(-1))
            else:
                cols.append(norm[:, :, next(disc_iter)].reshape(-1))
        return np.stack(cols, axis=1)

    def __call__(self, codec_now: CohortCodec, generator: torch.Generator) -> float:
        T = self.schema.series_length
        if self.noise is None:
            self.noise = sample_noise(
                self.real_scalars.shape[0] // T, T, self.cfg.latent_dim, generator
            )
        with torch.no_grad():
            fake = self.model.generator(
                self.noise, self.labels if self.cfg.conditional else None
            )
        fake_idx = codec_now.snap_embedded(fake.embedded.double().numpy())
        fake_scalars = self._scalars_from_indices(
            fake.numeric.double().numpy(), fake_idx, codec_now
        )
        n_points = self.real_scalars.shape[0]
        cap = min(self.cfg.probe_points, n_points)
        keep = np.linspace(0, n_points - 1, cap).round().astype(int)
        values = []
        for j in range(self.real_scalars.shape[1]):
            values.append(
                mmd_rbf(self.real_scalars[keep, j], fake_scalars[keep, j], sigma=1.0)
            )
        return float(np.mean(values))


def train(
    train_cohort: Cohort,
    cfg: TrainingConfig,
    checkpoint_dir=None,
) -> tuple[ModelBundle, TrainingTrace]:
    """Run the adversarial loop; returns the trained bundle and its trace.

    Raises SingleClassConditional when conditional training is requested
    on a one-class cohort, and Diverged if any loss goes non-finite.
    """
    cfg.validate()
    if len(train_cohort) == 0:
        raise SingleClassConditional("cannot train on an empty cohort")
    labels_np = train_cohort.labels
    if cfg.conditional and np.unique(labels_np).size < 2:
        raise SingleClassConditional(
            "conditional training needs both classes present in the training cohort"
        )

    # single-threaded LSTM updates are faster at these sizes and keep the
    # loop reproducible regardless of the host's thread default
    previous_threads = torch.get_num_threads()
    torch.set_num_threads(1)
    try:
        return _train_loop(train_cohort, cfg, checkpoint_dir, labels_np)
    finally:
        torch.set_num_threads(previous_threads)


def _train_loop(train_cohort, cfg, checkpoint_dir, labels_np):
    torch.manual_seed(substream_seed(cfg.seed, "model-init"))
    codec = CohortCodec.fit(
        train_cohort, embed_dim=cfg.embed_dim, seed=substream_seed(cfg.seed, "codec")
    )
    model = GanModel.from_codec(codec, cfg)

    numeric = torch.from_numpy(
        codec.scale_numeric(codec.numeric_matrix(train_cohort))
    ).float()
    cat_idx = torch.from_numpy(codec.category_indices(train_cohort))
    labels = torch.from_numpy(labels_np)
    n = numeric.shape[0]
    T = train_cohort.schema.series_length
    num_pos = train_cohort.schema.numeric_positions
    disc_pos = train_cohort.schema.discrete_positions

    opt_d = torch.optim.Adam(
        model.critic_parameters(), lr=cfg.lr, betas=(cfg.adam_beta1, cfg.adam_beta2)
    )
    opt_g = torch.optim.Adam(
        model.generator_parameters(), lr=cfg.lr, betas=(cfg.adam_beta1, cfg.adam_beta2)
    )

    batch_rng = np.random.default_rng(substream_seed(cfg.seed, "batches"))
    noise_gen = torch.Generator().manual_seed(substream_seed(cfg.seed, "noise"))
    probe_gen = torch.Generator().manual_seed(substream_seed(cfg.seed, "probe"))
    prober = _Prober(model, codec, numeric, cat_idx, labels, cfg)

    def current_codec() -> CohortCodec:
        return codec.with_tables(model.export_tables())

    class_indices = [np.flatnonzero(labels_np == c) for c in (0, 1)]
    stratified = cfg.conditional and cfg.stratify and all(len(ix) for ix in class_indices)

    def draw_indices():
        if not stratified:
            return batch_rng.choice(n, size=min(cfg.batch_size, n), replace=False)
        # class-balanced minibatches give the conditional pathway equal
        # exposure to both classes regardless of the imbalance ratio
        half = max(1, cfg.batch_size // 2)
        parts = [
            batch_rng.choice(ix, size=min(half, len(ix)), replace=len(ix) < half)
            for ix in class_indices
        ]
        return np.concatenate(parts)

    def draw_batch():
        idx = torch.as_tensor(draw_indices())
        real = SeqTensors(
            numeric=numeric[idx], embedded=model.embed_categories(cat_idx[idx])
        )
        return real, labels[idx]

    steps_per_epoch = max(1, math.ceil(n / cfg.batch_size))
    total_steps = cfg.epochs * steps_per_epoch
    trace = TrainingTrace()
    probe_value = prober(current_codec(), probe_gen)
    trace.rows.append(TraceRow(0, math.nan, math.nan, math.nan, math.nan, probe_value))

    for step in range(1, total_steps + 1):
        d_loss_val = gp_val = 0.0
        for _ in range(cfg.critic_steps):
            real, batch_labels = draw_batch()
            z = sample_noise(real.numeric.shape[0], T, cfg.latent_dim, noise_gen)
            with torch.no_grad():
                fake = model.generator(z, batch_labels if cfg.conditional else None)
            cond = batch_labels if cfg.conditional else None
            loss_d, gp = critic_loss(
                model.critic, real, fake, cond, cfg.lambda_gp, cfg.gp_mode, noise_gen
            )
            opt_d.zero_grad(set_to_none=True)
            loss_d.backward()
            opt_d.step()
            d_loss_val, gp_val = loss_d.item(), gp.item()

        real, batch_labels = draw_batch()
        z = sample_noise(real.numeric.shape[0], T, cfg.latent_dim, noise_gen)
        cond = batch_labels if cfg.conditional else None
        fake = model.generator(z, cond)
        if cfg.lambda_corr > 0:
            reference = real
            if cfg.corr_source == "dataset":
                with torch.no_grad():
                    ds_embedded = model.embed_categories(cat_idx)
                reference = SeqTensors(numeric=numeric, embedded=ds_embedded)
            targets = correlation_targets(reference, fake, num_pos, disc_pos)
        else:
            targets = None
        loss_g, align = generator_loss(model.critic, fake, cond, targets, cfg.lambda_corr)
        opt_g.zero_grad(set_to_none=True)
        loss_g.backward()
        opt_g.step()

        g_loss_val, align_val = loss_g.item(), align.item()
        if not all(map(math.isfinite, (d_loss_val, g_loss_val, gp_val, align_val))):
            raise Diverged(
                f"non-finite loss at step {step}: "
                f"L_D={d_loss_val}, L_G={g_loss_val}, gp={gp_val}, align={align_val}"
            )

        probe_value = math.nan
        if step == total_steps or (cfg.probe_every > 0 and step % cfg.probe_every == 0):
            probe_value = prober(current_codec(), probe_gen)
        trace.rows.append(
            TraceRow(step, d_loss_val, g_loss_val, gp_val, align_val, probe_value)
        )

        if checkpoint_dir and cfg.checkpoint_every > 0 and step % cfg.checkpoint_every == 0:
            bundle = ModelBundle(train_cohort.schema, cfg, model, current_codec(), step)
            bundle.save(Path(checkpoint_dir) / f"model_step{step:06d}.pt")

    model.eval()
    bundle = ModelBundle(train_cohort.schema, cfg, model, current_codec(), total_steps)
    if checkpoint_dir:
        bundle.save(Path(checkpoint_dir) / "model.pt")
    return bundle, trace


def generate_minority(
    bundle: ModelBundle, count: int, seed: int, id_prefix: str = "gan"
) -> Cohort:
    """Sample `count` minority-class patients from a trained bundle.

    Conditional bundles are asked for label-1 sequences; unconditional
    bundles (trained on minority-only data) sample freely. Output cells
    are decoded, so they always satisfy the schema domain.
    """
    if count < 0:
        raise ValueError("count must be >= 0")
    schema = bundle.schema
    T = schema.series_length
    gen = torch.Generator().manual_seed(substream_seed(seed, "generate"))
    numeric_parts, embedded_parts = [], []
    remaining = count
    while remaining > 0:
        draw = min(remaining, 256)
        z = sample_noise(draw, T, bundle.cfg.latent_dim, gen)
        labels = torch.full((draw,), MINORITY_LABEL, dtype=torch.long)
        with torch.no_grad():
            fake = bundle.model.generator(z, labels if bundle.cfg.conditional else None)
        numeric_parts.append(fake.numeric.double().numpy())
        embedded_parts.append(fake.embedded.double().numpy())
        remaining -= draw
    if count == 0:
        n_num = len(schema.numeric_variables)
        n_disc = len(schema.discrete_variables)
        numeric = np.empty((0, T, n_num))
        embedded = np.empty((0, T, n_disc, bundle.codec.params.embed_dim))
    else:
        numeric = np.concatenate(numeric_parts)
        embedded = np.concatenate(embedded_parts)
    batch = EncodedBatch(
        numeric=numeric,
        embedded=embedded,
        labels=np.full(count, MINORITY_LABEL, dtype=np.int64),
        patient_ids=tuple(f"{id_prefix}-{i:05d}" for i in range(count)),
        params=bundle.codec.params,
    )
    return bundle.codec.decode(batch)
