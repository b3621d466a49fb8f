"""Fidelity metrics comparing a synthetic cohort against a real one.

Per-variable Kullback-Leibler divergence on shared-support histograms,
per-variable and per-patient maximum mean discrepancy with an RBF kernel,
Kendall tau-b correlation matrices, and a nearest-neighbour Euclidean
authenticity audit. All estimators are deterministic and permutation
invariant; comparing a cohort against itself yields exact zeros.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import stats

from .cohort import Cohort
from .encoding import DEFAULT_EMBED_DIM, CohortCodec
from .schema import VariableSpec


@dataclass(frozen=True)
class Histogram:
    """Discrete density on a shared support, epsilon-smoothed.

    Smoothing mixes the empirical frequencies with the uniform density:
    p' = (1 - K*eps) * p + eps, which keeps every bin >= eps and the total
    exactly 1.
    """

    support: tuple  # bin edges (numeric) or category labels (discrete)
    probabilities: np.ndarray
    epsilon: float


def _smooth(counts: np.ndarray, epsilon: float) -> np.ndarray:
    k = counts.size
    if epsilon <= 0:
        raise ValueError("epsilon must be > 0")
    if k * epsilon >= 1.0:
        raise ValueError(f"epsilon {epsilon} too large for {k} bins")
    probs = counts / counts.sum()
    return (1.0 - k * epsilon) * probs + epsilon


def histogram_pair(
    real_col: np.ndarray,
    syn_col: np.ndarray,
    spec: VariableSpec,
    bins: int = 50,
    epsilon: float = 1e-8,
) -> tuple[Histogram, Histogram]:
    """Histograms of both columns on one shared support.

    Numeric variables use `bins` equal-width bins over the pooled min/max;
    discrete variables use the spec's category list.
    """
    if len(real_col) == 0 or len(syn_col) == 0:
        raise ValueError("histogram columns must be nonempty")
    if spec.is_discrete:
        support = spec.categories
        lookup = {c: i for i, c in enumerate(support)}
        real_counts = np.bincount([lookup[v] for v in real_col], minlength=len(support))
        syn_counts = np.bincount([lookup[v] for v in syn_col], minlength=len(support))
        sup: tuple = support
    else:
        real_col = np.asarray(real_col, dtype=float)
        syn_col = np.asarray(syn_col, dtype=float)
        lo = min(real_col.min(), syn_col.min())
        hi = max(real_col.max(), syn_col.max())
        if hi == lo:  # all pooled values identical: single occupied bin
            hi = lo + 1.0
        edges = np.linspace(lo, hi, bins + 1)
        real_counts, _ = np.histogram(real_col, bins=edges)
        syn_counts, _ = np.histogram(syn_col, bins=edges)
        sup = tuple(edges)
    return (
        Histogram(sup, _smooth(real_counts.astype(float), epsilon), epsilon),
        Histogram(sup, _smooth(syn_counts.astype(float), epsilon), epsilon),
    )


def kl_divergence(
    real_col: np.ndarray,
    syn_col: np.ndarray,
    spec: VariableSpec,
    bins: int = 50,
    epsilon: float = 1e-8,
) -> float:
    """D_KL(real || synthetic) in nats over shared-support histograms."""
    p, q = histogram_pair(real_col, syn_col, spec, bins=bins, epsilon=epsilon)
    return float(np.sum(p.probabilities * np.log(p.probabilities / q.probabilities)))


def _pairwise_sq_dists(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    xn = (x * x).sum(axis=1)
    yn = (y * y).sum(axis=1)
    return np.maximum(xn[:, None] + yn[None, :] - 2.0 * x @ y.T, 0.0)


def _as_points(values) -> np.ndarray:
    """Coerce a sample set to (n, d); 1-D input is read as n scalar points."""
    arr = np.asarray(values, dtype=float)
    if arr.ndim == 0:
        return arr.reshape(1, 1)
    if arr.ndim == 1:
        return arr.reshape(-1, 1)
    if arr.ndim == 2:
        return arr
    raise ValueError(f"sample set must be 1-D or 2-D, got shape {arr.shape}")


def mmd_rbf(x, y, sigma: float = 1.0) -> float:
    """Biased MMD^2 estimate between sample sets with an RBF kernel.

    K(a, b) = exp(-||a - b||^2 / (2 sigma^2)); the V-statistic averages
    include diagonal terms, so the estimate is nonnegative and exactly 0
    for identical sample sets.
    """
    if sigma <= 0:
        raise ValueError("sigma must be > 0")
    x = _as_points(x)
    y = _as_points(y)
    if x.size == 0 or y.size == 0:
        raise ValueError("MMD requires nonempty sample sets")
    if x.shape[1] != y.shape[1]:
        raise ValueError("sample sets must share dimensionality")
    gamma = 1.0 / (2.0 * sigma * sigma)
    k_xx = np.exp(-gamma * _pairwise_sq_dists(x, x))
    k_yy = np.exp(-gamma * _pairwise_sq_dists(y, y))
    k_xy = np.exp(-gamma * _pairwise_sq_dists(x, y))
    value = k_xx.mean() + k_yy.mean() - 2.0 * k_xy.mean()
    return float(max(value, 0.0))


def kendall_matrix(columns: np.ndarray) -> np.ndarray:
    """Pairwise Kendall tau-b matrix of (n_obs, V) columns.

    Symmetric with unit diagonal for non-constant variables; rows/columns
    of constant variables are NaN (undefined).
    """
    columns = np.asarray(columns, dtype=float)
    if columns.ndim != 2 or columns.shape[0] < 2:
        raise ValueError("kendall_matrix needs a (n_obs >= 2, V) matrix")
    V = columns.shape[1]
    varying = np.array([np.unique(columns[:, j]).size > 1 for j in range(V)])
    out = np.full((V, V), np.nan)
    for i in range(V):
        if varying[i]:
            out[i, i] = 1.0
        for j in range(i + 1, V):
            if varying[i] and varying[j]:
                tau = stats.kendalltau(columns[:, i], columns[:, j], variant="b").statistic
                out[i, j] = out[j, i] = tau
    return out


@dataclass(frozen=True)
class AuthenticityAudit:
    """Nearest-real-neighbour distance summary for a synthetic cohort."""

    min_distance: float
    percentiles: dict[int, float]  # 1/5/50th percentiles of per-sample NN distance

    PERCENTILES = (1, 5, 50)


def authenticity_audit(
    syn: Cohort,
    real: Cohort,
    embed_dim: int = DEFAULT_EMBED_DIM,
    seed: int = 0,
    codec: CohortCodec | None = None,
) -> AuthenticityAudit:
    """Exact brute-force Euclidean audit on flattened encoded sequences.

    The encoding frame is fitted on the real cohort (or supplied); each
    synthetic patient's distance to its nearest real patient is computed
    over all pairs.
    """
    if len(syn) == 0 or len(real) == 0:
        raise ValueError("authenticity audit needs nonempty cohorts")
    if codec is None:
        codec = CohortCodec.fit(real, embed_dim=embed_dim, seed=seed)
    syn_flat = codec.encode(syn).flat_matrix()
    real_flat = codec.encode(real).flat_matrix()
    nn_dists = np.sqrt(_pairwise_sq_dists(syn_flat, real_flat)).min(axis=1)
    percentiles = {
        p: float(np.percentile(nn_dists, p)) for p in AuthenticityAudit.PERCENTILES
    }
    return AuthenticityAudit(min_distance=float(nn_dists.min()), percentiles=percentiles)


def normalized_value_matrix(cohort: Cohort, codec: CohortCodec) -> np.ndarray:
    """(n*T, V) pooled per-variable scalars on a common [-1, 1]-ish scale.

    Numeric variables are codec-scaled; a category with index i among K
    classes maps to 2*i/(K-1) - 1. Used for per-variable MMD, where a
    unit-order scale keeps the sigma=1 kernel informative.
    """
    schema = cohort.schema
    n, T = len(cohort), schema.series_length
    V = len(schema.variables)
    out = np.empty((n * T, V), dtype=float)
    if n == 0:
        return out
    numeric = codec.scale_numeric(codec.numeric_matrix(cohort))
    indices = codec.category_indices(cohort)
    for k, pos in enumerate(schema.numeric_positions):
        out[:, pos] = numeric[:, :, k].reshape(-1)
    for k, pos in enumerate(schema.discrete_positions):
        n_cat = len(schema.discrete_variables[k].categories)
        out[:, pos] = 2.0 * indices[:, :, k].reshape(-1) / (n_cat - 1) - 1.0
    return out


def _systematic_subsample(values: np.ndarray, max_points: int) -> np.ndarray:
    """Evenly spaced deterministic subsample along axis 0."""
    n = values.shape[0]
    if n <= max_points:
        return values
    idx = np.linspace(0, n - 1, max_points).round().astype(int)
    return values[idx]


@dataclass(frozen=True)
class MetricConfig:
    """Knobs for the fidelity report; defaults echo the report output."""

    bins: int = 50
    epsilon: float = 1e-8
    sigma: float = 1.0
    max_points: int = 2000
    max_patients: int = 500
    embed_dim: int = DEFAULT_EMBED_DIM
    seed: int = 0


@dataclass
class FidelityReport:
    """All fidelity metrics for one real/synthetic cohort pair."""

    variables: list[str]
    kl: dict[str, float]
    mmd: dict[str, float]
    kl_median: float
    mmd_median: float
    kendall_real: np.ndarray
    kendall_syn: np.ndarray
    authenticity: AuthenticityAudit
    patient_mmd: float
    config: MetricConfig
    projections: dict = field(default_factory=dict)

    def per_variable_rows(self) -> list[tuple[str, float, float]]:
        return [(name, self.kl[name], self.mmd[name]) for name in self.variables]

    def write(self, out_dir) -> list[Path]:
        """Write the report as CSV files; returns the created paths."""
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        written = []

        per_var = out_dir / "fidelity_per_variable.csv"
        with per_var.open("w", encoding="utf-8") as fh:
            fh.write("variable,kl_divergence,mmd\n")
            for name, kl, mmd in self.per_variable_rows():
                fh.write(f"{name},{kl!r},{mmd!r}\n")
            fh.write(f"median,{self.kl_median!r},{self.mmd_median!r}\n")
        written.append(per_var)

        for tag, matrix in (("real", self.kendall_real), ("syn", self.kendall_syn)):
            path = out_dir / f"kendall_{tag}.csv"
            with path.open("w", encoding="utf-8") as fh:
                fh.write("variable," + ",".join(self.variables) + "\n")
                for i, name in enumerate(self.variables):
                    cells = ",".join(repr(float(v)) for v in matrix[i])
                    fh.write(f"{name},{cells}\n")
            written.append(path)

        auth = out_dir / "authenticity.csv"
        with auth.open("w", encoding="utf-8") as fh:
            fh.write("statistic,value\n")
            fh.write(f"min_distance,{self.authenticity.min_distance!r}\n")
            for p, v in sorted(self.authenticity.percentiles.items()):
                fh.write(f"nn_distance_p{p},{v!r}\n")
            fh.write(f"patient_mmd,{self.patient_mmd!r}\n")
        written.append(auth)

        for method, proj in self.projections.items():
            path = out_dir / f"projection_{method}.csv"
            with path.open("w", encoding="utf-8") as fh:
                fh.write("source,patient_id,x,y\n")
                for src, pid, (x, y) in zip(proj.sources, proj.ids, proj.coordinates):
                    fh.write(f"{src},{pid},{x!r},{y!r}\n")
            written.append(path)
        return written


def fidelity_report(
    real: Cohort,
    syn: Cohort,
    cfg: MetricConfig = MetricConfig(),
    projections: dict | None = None,
) -> FidelityReport:
    """Assemble every fidelity metric; medians use the exact midpoint rule."""
    if len(real) == 0 or len(syn) == 0:
        raise ValueError("fidelity report needs nonempty cohorts")
    schema = real.schema
    codec = CohortCodec.fit(real, embed_dim=cfg.embed_dim, seed=cfg.seed)

    kl = {}
    for spec in schema.variables:
        kl[spec.name] = kl_divergence(
            real.column_values(spec.name),
            syn.column_values(spec.name),
            spec,
            bins=cfg.bins,
            epsilon=cfg.epsilon,
        )

    real_scalars = normalized_value_matrix(real, codec)
    syn_scalars = normalized_value_matrix(syn, codec)
    mmd = {}
    for j, spec in enumerate(schema.variables):
        x = _systematic_subsample(real_scalars[:, j : j + 1], cfg.max_points)
        y = _systematic_subsample(syn_scalars[:, j : j + 1], cfg.max_points)
        mmd[spec.name] = mmd_rbf(x, y, sigma=cfg.sigma)

    kendall_real = kendall_matrix(real.value_matrix())
    kendall_syn = kendall_matrix(syn.value_matrix())

    audit = authenticity_audit(syn, real, codec=codec)
    real_flat = _systematic_subsample(codec.encode(real).flat_matrix(), cfg.max_patients)
    syn_flat = _systematic_subsample(codec.encode(syn).flat_matrix(), cfg.max_patients)
    patient_mmd = mmd_rbf(real_flat, syn_flat, sigma=cfg.sigma)

    names = schema.names
    return FidelityReport(
        variables=names,
        kl=kl,
        mmd=mmd,
        kl_median=float(np.median([kl[n] for n in names])),
        mmd_median=float(np.median([mmd[n] for n in names])),
        kendall_real=kendall_real,
        kendall_syn=kendall_syn,
        authenticity=audit,
        patient_mmd=patient_mmd,
        config=cfg,
        projections=projections or {},
    )
