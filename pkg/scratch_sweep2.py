"""Scratch: sweep 2 - stability-focused configs."""
import time

from scratch_sweep import sign_agreement
from seqaugment.toydata import make_toy_cohort
from seqaugment.training import TrainingConfig, train


def main():
    cohort = make_toy_cohort(400, 80, seed=2024)
    grid = [
        dict(tag="D corr0.1 lr5e-4 interp cs3",
             lambda_corr=0.1, lr=5e-4, gp_mode="interpolate", critic_steps=3, epochs=7),
        dict(tag="F corr0 lr5e-4 interp cs3",
             lambda_corr=0.0, lr=5e-4, gp_mode="interpolate", critic_steps=3, epochs=7),
        dict(tag="E corr0.1 lr2e-4 fake cs5",
             lambda_corr=0.1, lr=2e-4, gp_mode="fake", critic_steps=5, epochs=5),
    ]
    for g in grid:
        cfg = TrainingConfig(
            epochs=g["epochs"], batch_size=16, critic_steps=g["critic_steps"],
            hidden_size=48, latent_dim=16, num_layers=3, lr=g["lr"],
            lambda_corr=g["lambda_corr"], gp_mode=g["gp_mode"],
            probe_every=25, probe_sequences=64, probe_points=512, seed=77,
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
