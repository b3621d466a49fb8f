"""Scratch: sweep 3 - stratified batches on the full toy cohort."""
import time

from scratch_sweep import sign_agreement
from seqaugment.toydata import make_toy_cohort
from seqaugment.training import TrainingConfig, train


def main():
    cohort = make_toy_cohort(400, 80, seed=2024)
    grid = [
        dict(tag="G strat corr0.1 lr5e-4 cs2 fake", lambda_corr=0.1, lr=5e-4,
             gp_mode="fake", critic_steps=2, epochs=17, batch_size=16),
        dict(tag="H strat corr0.1 lr1e-3 cs2 interp", lambda_corr=0.1, lr=1e-3,
             gp_mode="interpolate", critic_steps=2, epochs=17, batch_size=16),
    ]
    for g in grid:
        cfg = TrainingConfig(
            epochs=g["epochs"], batch_size=g["batch_size"], critic_steps=g["critic_steps"],
            hidden_size=48, latent_dim=16, num_layers=3, lr=g["lr"],
            lambda_corr=g["lambda_corr"], gp_mode=g["gp_mode"], stratify=True,
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
