"""Command implementations behind the CLI.

Every command is idempotent given the same config and seed: all
randomness flows from the experiment seed through named substreams, and
outputs land under ``<out>/<config-hash>/`` with a sidecar manifest per
artifact recording the hash.
"""

from __future__ import annotations

from pathlib import Path

from .cohort import Cohort, deficit, holdout_split, load_cohort
from .config import ExperimentConfig, config_hash, dump_config, resolve_train_config
from .downstream import (
    RegressionReport,
    assert_no_leakage,
    evaluate_regressor,
    make_windows,
    train_regressor,
)
from .encoding import CohortCodec
from .errors import ConfigInvalid, MissingArtifact
from .metrics import fidelity_report
from .projections import project_2d
from .schema import CohortSchema, hypotension_schema, load_schema
from .seeding import substream_seed
from .smote import smote_minority_cohort
from .toydata import write_toy_csv
from .training import ModelBundle, generate_minority, train

from dataclasses import replace


def resolve_schema(cfg: ExperimentConfig) -> CohortSchema:
    return load_schema(cfg.schema) if cfg.schema else hypotension_schema()


def out_root(cfg: ExperimentConfig) -> Path:
    return Path(cfg.out) / config_hash(cfg)


def _subdir(cfg: ExperimentConfig, name: str) -> Path:
    path = out_root(cfg) / name
    path.mkdir(parents=True, exist_ok=True)
    return path


def write_manifest(artifact: Path, cfg: ExperimentConfig, command: str, **extra) -> Path:
    manifest = artifact.with_name(artifact.name + ".manifest")
    lines = [f"config_hash = {config_hash(cfg)}", f"command = {command}"]
    lines += [f"{k} = {v}" for k, v in sorted(extra.items())]
    manifest.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return manifest


def _require_data(cfg: ExperimentConfig) -> Path:
    if not cfg.data:
        raise ConfigInvalid("`data` must point at the cohort CSV")
    path = Path(cfg.data)
    if not path.exists():
        raise MissingArtifact(f"cohort CSV not found: {path}", produced_by="maketoy")
    return path


def load_and_split(cfg: ExperimentConfig) -> tuple[Cohort, Cohort]:
    """Load the cohort and set the minority holdout aside (before any training)."""
    cohort = load_cohort(_require_data(cfg), resolve_schema(cfg))
    return holdout_split(cohort, cfg.holdout_minority, substream_seed(cfg.seed, "split"))


def synthetic_csv_path(cfg: ExperimentConfig) -> Path:
    if cfg.synthetic:
        return Path(cfg.synthetic)
    return out_root(cfg) / "synthetic" / "synthetic.csv"


def checkpoint_path(cfg: ExperimentConfig) -> Path:
    return out_root(cfg) / "checkpoints" / "model.pt"


def cmd_maketoy(cfg: ExperimentConfig) -> Path:
    """Write a toy cohort CSV to the configured data path."""
    if not cfg.data:
        raise ConfigInvalid("`data` must name the CSV file maketoy should write")
    path = Path(cfg.data)
    path.parent.mkdir(parents=True, exist_ok=True)
    write_toy_csv(path, cfg.toy_n_major, cfg.toy_n_minor, substream_seed(cfg.seed, "maketoy"))
    write_manifest(path, cfg, "maketoy", n_major=cfg.toy_n_major, n_minor=cfg.toy_n_minor)
    return path


def cmd_train(cfg: ExperimentConfig) -> Path:
    """Train the configured generative method and save its checkpoint."""
    if cfg.method == "smote":
        raise ConfigInvalid("method=smote has no training step; run `balance` directly")
    train_cohort, _ = load_and_split(cfg)
    if cfg.method == "wgangp_star":
        train_cohort = train_cohort.minority()
    tcfg = resolve_train_config(cfg)
    ckpt_dir = _subdir(cfg, "checkpoints")
    bundle, trace = train(train_cohort, tcfg, checkpoint_dir=ckpt_dir)
    model_path = ckpt_dir / "model.pt"
    write_manifest(model_path, cfg, "train", steps=bundle.steps,
                   schema_hash=bundle.schema.hash())
    trace_path = ckpt_dir / "trace.csv"
    trace.write_csv(trace_path)
    write_manifest(trace_path, cfg, "train")
    return model_path


def _load_bundle(cfg: ExperimentConfig) -> ModelBundle:
    path = checkpoint_path(cfg)
    if not path.exists():
        raise MissingArtifact(
            f"no trained checkpoint at {path}; run `train` first", produced_by="train"
        )
    return ModelBundle.load(path)


def _generate(cfg: ExperimentConfig, count: int) -> Cohort:
    train_cohort, _ = load_and_split(cfg)
    if cfg.method == "smote":
        codec = CohortCodec.fit(
            train_cohort,
            embed_dim=cfg.train.embed_dim,
            seed=substream_seed(cfg.seed, "codec"),
        )
        return smote_minority_cohort(
            train_cohort, codec, count,
            seed=substream_seed(cfg.seed, "smote"), k=cfg.smote_k,
        )
    return generate_minority(
        _load_bundle(cfg), count, seed=substream_seed(cfg.seed, "generate"),
        id_prefix=cfg.method,
    )


def cmd_generate(cfg: ExperimentConfig, count: int | None = None) -> Path:
    """Generate synthetic minority patients and write them as CSV."""
    if count is None:
        count = cfg.generate_count
    if count is None:
        train_cohort, _ = load_and_split(cfg)
        count = deficit(train_cohort)
    syn = _generate(cfg, count)
    path = synthetic_csv_path(cfg)
    path.parent.mkdir(parents=True, exist_ok=True)
    syn.write_csv(path)
    write_manifest(path, cfg, "generate", count=count, method=cfg.method)
    return path


def cmd_balance(cfg: ExperimentConfig) -> tuple[Path, Path]:
    """Generate exactly the class deficit and write synthetic + augmented CSVs."""
    train_cohort, _ = load_and_split(cfg)
    need = deficit(train_cohort)
    syn = _generate(cfg, need)
    syn_path = synthetic_csv_path(cfg)
    syn_path.parent.mkdir(parents=True, exist_ok=True)
    syn.write_csv(syn_path)
    write_manifest(syn_path, cfg, "balance", count=need, method=cfg.method)
    augmented = train_cohort.merge(syn)
    aug_path = syn_path.parent / "augmented.csv"
    augmented.write_csv(aug_path)
    write_manifest(aug_path, cfg, "balance", n_majority=augmented.n_majority,
                   n_minority=augmented.n_minority)
    return syn_path, aug_path


def _load_synthetic(cfg: ExperimentConfig) -> Cohort:
    path = synthetic_csv_path(cfg)
    if not path.exists():
        raise MissingArtifact(
            f"no synthetic CSV at {path}; run `generate` or `balance` first",
            produced_by="generate",
        )
    return load_cohort(path, resolve_schema(cfg))


def cmd_evaluate(cfg: ExperimentConfig) -> Path:
    """Fidelity report (CSV tables + figures) of synthetic vs real data."""
    from . import plots

    train_cohort, _ = load_and_split(cfg)
    reference = train_cohort.minority() if cfg.reference == "minority" else train_cohort
    syn = _load_synthetic(cfg)
    mcfg = replace(cfg.metrics, seed=substream_seed(cfg.seed, "metrics"))
    projections = {}
    for method in cfg.projections:
        projections[method] = project_2d(
            reference, syn, method=method, embed_dim=mcfg.embed_dim, seed=mcfg.seed
        )
    report = fidelity_report(reference, syn, mcfg, projections=projections)
    metrics_dir = _subdir(cfg, "metrics")
    for path in report.write(metrics_dir):
        write_manifest(path, cfg, "evaluate")
    figures_dir = _subdir(cfg, "figures")
    fig_paths = [
        plots.variable_distribution_grid(reference, syn, figures_dir / "distributions.png"),
        plots.kendall_heatmaps(report, figures_dir / "kendall.png"),
    ]
    for method, proj in projections.items():
        fig_paths.append(
            plots.projection_scatter(proj, figures_dir / f"projection_{method}.png")
        )
    for path in fig_paths:
        write_manifest(path, cfg, "evaluate")
    return metrics_dir


def cmd_downstream(cfg: ExperimentConfig) -> Path:
    """Train the forecasting probe on real/synthetic/augmented data; report errors."""
    train_cohort, test_cohort = load_and_split(cfg)
    if len(test_cohort) == 0:
        raise ConfigInvalid("downstream evaluation needs holdout.minority > 0")
    syn = _load_synthetic(cfg)
    assert_no_leakage(test_cohort, train_cohort, syn)

    codec = CohortCodec.fit(
        train_cohort, embed_dim=cfg.train.embed_dim,
        seed=substream_seed(cfg.seed, "downstream-codec"),
    )
    w_in, w_out = cfg.downstream_w_in, cfg.downstream_w_out
    regimes = {
        "real": train_cohort,
        "synthetic": syn,
        "augmented": train_cohort.merge(syn),
    }
    errors = {}
    for regime, data in regimes.items():
        windows = make_windows(data, codec, w_in=w_in, w_out=w_out)
        rcfg = replace(
            cfg.downstream, seed=substream_seed(cfg.seed, f"downstream-{regime}")
        )
        bundle = train_regressor(windows, rcfg)
        errors[regime] = evaluate_regressor(bundle, test_cohort, codec, w_in=w_in, w_out=w_out)
    report = RegressionReport.from_errors(errors)
    metrics_dir = _subdir(cfg, "metrics")
    path = metrics_dir / "downstream.csv"
    report.write_csv(path)
    write_manifest(path, cfg, "downstream", w_in=w_in, w_out=w_out)
    return path


def cmd_report(cfg: ExperimentConfig) -> Path:
    """Collate metric tables and figures into one summary document."""
    root = out_root(cfg)
    metrics_dir = root / "metrics"
    per_var = metrics_dir / "fidelity_per_variable.csv"
    if not per_var.exists():
        raise MissingArtifact(
            f"no fidelity tables under {metrics_dir}; run `evaluate` first",
            produced_by="evaluate",
        )
    lines = [
        "# Experiment summary",
        "",
        f"config hash: `{config_hash(cfg)}`",
        f"method: {cfg.method}",
        "",
        "## Configuration",
        "```",
        dump_config(cfg).rstrip(),
        "```",
        "",
        "## Distribution fidelity (per variable)",
        "",
    ]
    lines += _csv_to_markdown(per_var)
    auth = metrics_dir / "authenticity.csv"
    if auth.exists():
        lines += ["", "## Authenticity audit", ""]
        lines += _csv_to_markdown(auth)
    downstream = metrics_dir / "downstream.csv"
    if downstream.exists():
        lines += ["", "## Downstream forecasting errors (%)", ""]
        lines += _csv_to_markdown(downstream)
    figures_dir = root / "figures"
    if figures_dir.exists():
        figures = sorted(p.name for p in figures_dir.glob("*.png"))
        if figures:
            lines += ["", "## Figures", ""]
            lines += [f"- `figures/{name}`" for name in figures]
    reports_dir = _subdir(cfg, "reports")
    path = reports_dir / "summary.md"
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    write_manifest(path, cfg, "report")
    return path


def _csv_to_markdown(path: Path) -> list[str]:
    rows = [line.split(",") for line in path.read_text(encoding="utf-8").splitlines()]
    if not rows:
        return []
    header, body = rows[0], rows[1:]
    out = ["| " + " | ".join(header) + " |", "|" + "---|" * len(header)]
    for row in body:
        cells = [_round_cell(c) for c in row]
        out.append("| " + " | ".join(cells) + " |")
    return out


def _round_cell(cell: str) -> str:
    try:
        return f"{float(cell):.5g}"
    except ValueError:
        return cell
