"""Scratch: diagnose conditional learning on the mini cohort."""
import math
import sys

import torch

sys.path.insert(0, "tests")
from conftest import random_mini_cohort

from seqaugment.models import sample_noise
from seqaugment.training import TrainingConfig, train


def run(seed, epochs, lr, stratify=True, lambda_corr=0.1, critic_steps=2):
    cohort = random_mini_cohort(24, 24, seed=16, series_length=6)
    cfg = TrainingConfig(
        epochs=epochs, batch_size=16, critic_steps=critic_steps, hidden_size=24,
        latent_dim=8, num_layers=1, embed_dim=2, label_dim=2, lr=lr,
        lambda_corr=lambda_corr, stratify=stratify, probe_every=0,
        probe_sequences=16, probe_points=128, seed=seed,
    )
    bundle, trace = train(cohort, cfg)
    gen = torch.Generator().manual_seed(99)
    z = sample_noise(256, 6, cfg.latent_dim, gen)
    with torch.no_grad():
        out0 = bundle.model.generator(z, torch.zeros(256, dtype=torch.long))
        out1 = bundle.model.generator(z, torch.ones(256, dtype=torch.long))
        # critic label sensitivity on real data
        numeric = torch.from_numpy(
            bundle.codec.scale_numeric(bundle.codec.numeric_matrix(cohort))
        ).float()
        cat = torch.from_numpy(bundle.codec.category_indices(cohort))
        emb = bundle.model.embed_categories(cat)
        labels = torch.from_numpy(cohort.labels)
        minority_mask = labels == 1
        x_min_num, x_min_emb = numeric[minority_mask], emb[minority_mask]
        d_match = bundle.model.critic(x_min_num, x_min_emb,
                                      torch.ones(int(minority_mask.sum()), dtype=torch.long))
        d_mismatch = bundle.model.critic(x_min_num, x_min_emb,
                                         torch.zeros(int(minority_mask.sum()), dtype=torch.long))
    gap = float(out1.numeric[:, :, 0].mean() - out0.numeric[:, :, 0].mean())
    probes = trace.probe_series()
    print(
        f"seed={seed} epochs={epochs} lr={lr} strat={stratify}: "
        f"gen gap={gap:+.4f}  D(min|1)-D(min|0)={float(d_match.mean()-d_mismatch.mean()):+.4f}  "
        f"probe {probes[0][1]:.4f}->{probes[-1][1]:.4f}",
        flush=True,
    )


if __name__ == "__main__":
    for seed in (17, 18, 19):
        run(seed, epochs=40, lr=1e-3)
    run(17, epochs=120, lr=1e-3)
    run(17, epochs=40, lr=1e-3, stratify=False)
