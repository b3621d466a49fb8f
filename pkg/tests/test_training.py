"""Training loop: determinism, error paths, generation contracts,
checkpointing, and conditional separation on a class-shifted toy cohort."""

import math

import numpy as np
import pytest
import torch

from seqaugment.errors import ConfigInvalid, Diverged, SingleClassConditional
from seqaugment.models import GanModel, sample_noise
from seqaugment.training import (
    ModelBundle,
    TrainingConfig,
    baseline_config,
    generate_minority,
    train,
)

from conftest import random_mini_cohort

FAST = dict(
    batch_size=8, critic_steps=1, hidden_size=12, latent_dim=4, num_layers=1,
    embed_dim=2, label_dim=2, probe_every=0, probe_sequences=8, probe_points=64,
)


def fast_config(**overrides):
    params = dict(FAST)
    params.update(overrides)
    return TrainingConfig(**params)


class TestTrainingConfig:
    def test_field_bounds(self):
        with pytest.raises(ConfigInvalid):
            TrainingConfig(lambda_gp=-1.0).validate()
        with pytest.raises(ConfigInvalid):
            TrainingConfig(lr=0.0).validate()
        with pytest.raises(ConfigInvalid):
            TrainingConfig(batch_size=1).validate()
        with pytest.raises(ConfigInvalid):
            TrainingConfig(critic_steps=0).validate()
        with pytest.raises(ConfigInvalid):
            TrainingConfig(gp_mode="nope").validate()
        TrainingConfig().validate()

    def test_baseline_variant(self):
        base = baseline_config(TrainingConfig())
        assert base.conditional is False
        assert base.num_layers == 1


class TestTrainLoop:
    def test_deterministic_trace(self):
        cohort = random_mini_cohort(6, 4, seed=1)
        cfg = fast_config(epochs=2, seed=42)
        _, trace_a = train(cohort, cfg)
        _, trace_b = train(cohort, cfg)
        assert trace_a.rows == trace_b.rows
        _, trace_c = train(cohort, fast_config(epochs=2, seed=43))
        assert trace_a.rows != trace_c.rows

    def test_single_class_conditional_rejected(self):
        cohort = random_mini_cohort(5, 0, seed=2)
        with pytest.raises(SingleClassConditional):
            train(cohort, fast_config(epochs=1, conditional=True))

    def test_single_class_fine_for_baseline(self):
        cohort = random_mini_cohort(0, 5, seed=3)
        cfg = fast_config(epochs=1, conditional=False)
        bundle, trace = train(cohort, cfg)
        assert bundle.steps == 1
        assert len(trace.rows) == 2  # step-0 probe row + one training row

    def test_empty_cohort_rejected(self):
        cohort = random_mini_cohort(0, 0, seed=4)
        with pytest.raises(SingleClassConditional):
            train(cohort, fast_config(epochs=1))

    def test_divergence_detected(self):
        cohort = random_mini_cohort(4, 3, seed=5)
        # an astronomically large penalty weight overflows the critic loss
        cfg = fast_config(epochs=1, lambda_gp=1e308)
        with pytest.raises(Diverged):
            train(cohort, cfg)

    def test_trace_csv_layout(self, tmp_path):
        cohort = random_mini_cohort(4, 3, seed=6)
        cfg = fast_config(epochs=1, probe_every=1, seed=0)
        _, trace = train(cohort, cfg)
        path = tmp_path / "trace.csv"
        trace.write_csv(path)
        lines = path.read_text().splitlines()
        assert lines[0] == "step,critic_loss,generator_loss,gp_term,alignment_term,probe_mmd"
        assert len(lines) == 1 + len(trace.rows)

    def test_probe_rows_present_at_start_and_end(self):
        cohort = random_mini_cohort(4, 3, seed=7)
        cfg = fast_config(epochs=2, probe_every=0, seed=1)
        _, trace = train(cohort, cfg)
        probes = trace.probe_series()
        assert probes[0][0] == 0
        assert probes[-1][0] == trace.rows[-1].step


class TestGeneratorForward:
    @pytest.fixture(scope="class")
    def toy_model(self):
        torch.manual_seed(0)
        from seqaugment.encoding import CohortCodec

        cohort = random_mini_cohort(4, 3, seed=8)
        cfg = fast_config()
        codec = CohortCodec.fit(cohort, embed_dim=cfg.embed_dim, seed=0)
        return GanModel.from_codec(codec, cfg), cfg, cohort

    def test_output_shapes(self, toy_model):
        model, cfg, cohort = toy_model
        T = cohort.schema.series_length
        gen = torch.Generator().manual_seed(1)
        z = sample_noise(5, T, cfg.latent_dim, gen)
        out = model.generator(z, torch.ones(5, dtype=torch.long))
        assert out.numeric.shape == (5, T, 2)
        assert out.embedded.shape == (5, T, 2, cfg.embed_dim)

    def test_numeric_channels_in_open_unit_interval(self, toy_model):
        model, cfg, cohort = toy_model
        gen = torch.Generator().manual_seed(2)
        z = sample_noise(8, cohort.schema.series_length, cfg.latent_dim, gen)
        out = model.generator(z, torch.zeros(8, dtype=torch.long))
        assert (out.numeric > -1.0).all() and (out.numeric < 1.0).all()

    def test_deterministic_given_noise_and_label(self, toy_model):
        model, cfg, cohort = toy_model
        gen = torch.Generator().manual_seed(3)
        z = sample_noise(4, cohort.schema.series_length, cfg.latent_dim, gen)
        labels = torch.tensor([0, 1, 0, 1])
        a = model.generator(z, labels)
        b = model.generator(z.clone(), labels.clone())
        assert torch.equal(a.numeric, b.numeric)
        assert torch.equal(a.embedded, b.embedded)

    def test_critic_scores_one_per_sequence(self, toy_model):
        model, cfg, cohort = toy_model
        gen = torch.Generator().manual_seed(4)
        z = sample_noise(6, cohort.schema.series_length, cfg.latent_dim, gen)
        out = model.generator(z, torch.ones(6, dtype=torch.long))
        scores = model.critic(out.numeric, out.embedded, torch.ones(6, dtype=torch.long))
        assert scores.shape == (6,)
        assert torch.isfinite(scores).all()


class TestGenerateMinority:
    @pytest.fixture(scope="class")
    def trained(self):
        cohort = random_mini_cohort(8, 6, seed=9)
        cfg = fast_config(epochs=2, seed=11)
        bundle, _ = train(cohort, cfg)
        return bundle, cohort

    def test_exact_count_and_label(self, trained):
        bundle, _ = trained
        syn = generate_minority(bundle, 7, seed=1)
        assert len(syn) == 7
        assert all(p.label == 1 for p in syn.patients)

    def test_zero_count(self, trained):
        bundle, _ = trained
        syn = generate_minority(bundle, 0, seed=1)
        assert len(syn) == 0

    def test_cells_in_domain(self, trained):
        bundle, _ = trained
        syn = generate_minority(bundle, 5, seed=2)
        for p in syn.patients:
            for j, spec in enumerate(syn.schema.variables):
                for cell in p.observations[:, j]:
                    spec.parse_cell(str(cell))

    def test_deterministic_under_seed(self, trained):
        bundle, _ = trained
        a = generate_minority(bundle, 4, seed=5)
        b = generate_minority(bundle, 4, seed=5)
        for pa, pb in zip(a.patients, b.patients):
            assert (pa.observations == pb.observations).all()


class TestCheckpointRoundTrip:
    def test_save_load_identical_generation(self, tmp_path):
        cohort = random_mini_cohort(6, 5, seed=12)
        cfg = fast_config(epochs=1, seed=13)
        bundle, _ = train(cohort, cfg, checkpoint_dir=tmp_path)
        path = tmp_path / "model.pt"
        assert path.exists()
        assert path.with_suffix(".pt.manifest").exists()
        restored = ModelBundle.load(path)
        a = generate_minority(bundle, 4, seed=3)
        b = generate_minority(restored, 4, seed=3)
        for pa, pb in zip(a.patients, b.patients):
            for j, spec in enumerate(a.schema.variables):
                ca, cb = pa.observations[:, j], pb.observations[:, j]
                if spec.kind == "numeric":
                    assert np.allclose(ca.astype(float), cb.astype(float), atol=1e-6)
                else:
                    assert (ca == cb).all()

    def test_manifest_contents(self, tmp_path):
        cohort = random_mini_cohort(4, 3, seed=14)
        cfg = fast_config(epochs=1, seed=15)
        train(cohort, cfg, checkpoint_dir=tmp_path)
        manifest = (tmp_path / "model.pt.manifest").read_text()
        assert "schema_hash = " in manifest
        assert "steps = " in manifest
        assert "train.lambda_gp = " in manifest


class TestConditionalSeparation:
    def test_trained_toy_model_separates_classes(self):
        # class-shifted cohort: pressure +30 for the minority class
        cohort = random_mini_cohort(24, 24, seed=16, series_length=6)
        cfg = fast_config(
            epochs=40, batch_size=16, critic_steps=2, hidden_size=24, latent_dim=8,
            lr=1e-3, lambda_corr=0.1, seed=17,
        )
        bundle, trace = train(cohort, cfg)
        gen = torch.Generator().manual_seed(99)
        z = sample_noise(256, cohort.schema.series_length, cfg.latent_dim, gen)
        with torch.no_grad():
            out0 = bundle.model.generator(z, torch.zeros(256, dtype=torch.long))
            out1 = bundle.model.generator(z, torch.ones(256, dtype=torch.long))
        per_seq0 = out0.numeric[:, :, 0].mean(dim=1)
        per_seq1 = out1.numeric[:, :, 0].mean(dim=1)
        gap = float(per_seq1.mean() - per_seq0.mean())
        se = math.sqrt(
            float(per_seq0.var() / len(per_seq0)) + float(per_seq1.var() / len(per_seq1))
        )
        real_gap = (
            cohort.minority().column_values("pressure").mean()
            - cohort.majority().column_values("pressure").mean()
        )
        assert real_gap > 0
        assert gap > 3 * se, f"class-conditional gap {gap} not separated (se {se})"
        # probe should not have degraded from start to finish
        probes = trace.probe_series()
        assert probes[-1][1] < probes[0][1]
