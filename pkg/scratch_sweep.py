"""Scratch: sweep lambda_corr/lr to find a learning acceptance config."""
import sys
import time

import numpy as np
import torch

from seqaugment.models import sample_noise
from seqaugment.toydata import make_toy_cohort
from seqaugment.training import TrainingConfig, train


def sign_agreement(bundle, cohort):
    schema = cohort.schema
    gen = torch.Generator().manual_seed(123)
    z = sample_noise(200, schema.series_length, bundle.cfg.latent_dim, gen)
    with torch.no_grad():
        out0 = bundle.model.generator(z, torch.zeros(200, dtype=torch.long))
        out1 = bundle.model.generator(z, torch.ones(200, dtype=torch.long))
    minority, majority = cohort.minority(), cohort.majority()
    agree, gaps = 0, []
    for k, spec in enumerate(schema.numeric_variables):
        real_gap = minority.column_values(spec.name).mean() - majority.column_values(spec.name).mean()
        gen_gap = float(out1.numeric[:, :, k].mean() - out0.numeric[:, :, k].mean())
        gaps.append(round(gen_gap, 4))
        agree += int(np.sign(gen_gap) == np.sign(real_gap))
    return agree, gaps


def main():
    cohort = make_toy_cohort(400, 80, seed=2024)
    grid = [
        dict(lambda_corr=0.1, lr=1e-3, tag="A corr0.1 lr1e-3"),
        dict(lambda_corr=1.0, lr=1e-3, tag="B corr1.0 lr1e-3"),
        dict(lambda_corr=0.1, lr=3e-4, tag="C corr0.1 lr3e-4"),
    ]
    for g in grid:
        cfg = TrainingConfig(
            epochs=5, batch_size=16, critic_steps=3, hidden_size=48, latent_dim=16,
            num_layers=3, lr=g["lr"], lambda_corr=g["lambda_corr"],
            probe_every=50, probe_sequences=64, probe_points=512, seed=77,
        )
        t0 = time.time()
        bundle, trace = train(cohort, cfg)
        wall = (time.time() - t0) / 60
        probes = trace.probe_series()
        agree, gaps = sign_agreement(bundle, cohort)
        print(f"[{g['tag']}] steps={bundle.steps} wall={wall:.1f}min "
              f"probes={[(s, round(v,4)) for s, v in probes]} sign={agree}/9 gaps={gaps}",
              flush=True)


if __name__ == "__main__":
    main()
