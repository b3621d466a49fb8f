"""2-D projections of real and synthetic cohorts for visual comparison.

PCA is computed in-core: the basis is fitted on the real cohort's
flattened encodings only and synthetic points are projected into that
same basis. t-SNE and UMAP are optional backends resolved at call time;
they embed the pooled point set jointly (neither supports out-of-sample
projection in general).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cohort import Cohort
from .encoding import DEFAULT_EMBED_DIM, CohortCodec
from .errors import BackendUnavailable

PROJECTION_METHODS = ("pca", "tsne", "umap")


@dataclass(frozen=True)
class ProjectionResult:
    method: str
    coordinates: np.ndarray  # (n_real + n_syn, 2)
    sources: tuple[str, ...]  # "real" | "syn" per row
    ids: tuple[str, ...]


def pca_basis(points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Mean and top-2 principal directions of (n, d) points.

    Component signs are fixed so the largest-magnitude loading of each
    component is positive, making the output deterministic.
    """
    mean = points.mean(axis=0)
    centered = points - mean
    _, _, vt = np.linalg.svd(centered, full_matrices=False)
    components = vt[:2].copy()
    if components.shape[0] < 2:  # single sample: pad with an arbitrary axis
        pad = np.zeros((2 - components.shape[0], points.shape[1]))
        components = np.vstack([components, pad])
    for i in range(2):
        j = int(np.argmax(np.abs(components[i])))
        if components[i, j] < 0:
            components[i] = -components[i]
    return mean, components


def project_2d(
    real: Cohort,
    syn: Cohort,
    method: str = "pca",
    embed_dim: int = DEFAULT_EMBED_DIM,
    seed: int = 0,
    codec: CohortCodec | None = None,
) -> ProjectionResult:
    """Project both cohorts to two dimensions with the requested backend."""
    if method not in PROJECTION_METHODS:
        raise ValueError(f"unknown projection method {method!r}")
    if len(real) + len(syn) < 3:
        raise ValueError("projection needs at least 3 points in total")
    if codec is None:
        codec = CohortCodec.fit(real, embed_dim=embed_dim, seed=seed)
    real_flat = codec.encode(real).flat_matrix()
    syn_flat = codec.encode(syn).flat_matrix()
    sources = ("real",) * len(real) + ("syn",) * len(syn)
    ids = real.patient_ids + syn.patient_ids

    if method == "pca":
        mean, components = pca_basis(real_flat)
        coords = np.vstack([(real_flat - mean), (syn_flat - mean)]) @ components.T
    else:
        pooled = np.vstack([real_flat, syn_flat])
        coords = _external_backend(method, pooled, seed)
    return ProjectionResult(method=method, coordinates=coords, sources=sources, ids=ids)


def _external_backend(method: str, pooled: np.ndarray, seed: int) -> np.ndarray:
    if method == "tsne":
        try:
            from sklearn.manifold import TSNE
        except ImportError:
            raise BackendUnavailable(
                "t-SNE projection needs scikit-learn (pip install scikit-learn)"
            ) from None
        perplexity = min(30.0, max(2.0, (pooled.shape[0] - 1) / 3.0))
        return TSNE(
            n_components=2, random_state=seed, perplexity=perplexity, init="pca"
        ).fit_transform(pooled)
    if method == "umap":
        try:
            from umap import UMAP
        except ImportError:
            raise BackendUnavailable(
                "UMAP projection needs umap-learn (pip install umap-learn)"
            ) from None
        return UMAP(n_components=2, random_state=seed).fit_transform(pooled)
    raise ValueError(method)
