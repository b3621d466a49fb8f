"""SMOTE oversampling on flattened encoded sequences.

Each synthetic sample is a point on the segment between a randomly
chosen minority sample and one of its k nearest minority neighbours:
x + u * (x_nn - x) with u ~ Uniform[0, 1). Interpolation happens in the
continuous encoded space; category cells are recovered afterwards by
the codec's nearest-embedding snap.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cohort import MINORITY_LABEL, Cohort
from .encoding import CohortCodec, EncodedBatch, batch_from_flat
from .errors import PoolTooSmall

DEFAULT_K = 5


@dataclass(frozen=True)
class FlatSample:
    """One whole sequence flattened to a vector, tagged with its source."""

    vector: np.ndarray
    origin_id: str


def flatten(batch: EncodedBatch) -> list[FlatSample]:
    """Flatten every sequence of a batch, preserving order."""
    flat = batch.flat_matrix()
    return [FlatSample(flat[i].copy(), batch.patient_ids[i]) for i in range(len(batch))]


def unflatten(samples: list[FlatSample], labels, params, series_length: int) -> EncodedBatch:
    """Rebuild an EncodedBatch from flat samples (inverse of flatten)."""
    if not samples:
        width = params.scaling.low.shape[0] + len(params.tables) * params.embed_dim
        flat = np.empty((0, series_length * width))
    else:
        flat = np.stack([s.vector for s in samples])
    return batch_from_flat(
        flat,
        labels=np.asarray(labels, dtype=np.int64),
        patient_ids=[s.origin_id for s in samples],
        params=params,
        series_length=series_length,
    )


def _neighbor_order(distances: np.ndarray, self_index: int) -> np.ndarray:
    """Pool indices sorted by distance, excluding self, stable on ties."""
    order = np.argsort(distances, kind="stable")
    return order[order != self_index]


def knn(sample: FlatSample, pool: list[FlatSample], k: int) -> list[FlatSample]:
    """The k nearest pool members to `sample`, excluding the sample itself.

    Only the sample's own entry in the pool is excluded; zero-distance
    duplicates are valid neighbours. Ties are broken by pool order.
    """
    self_index = next((i for i, p in enumerate(pool) if p is sample), None)
    if self_index is None:
        raise ValueError("sample must be a member of the pool")
    if k > len(pool) - 1:
        raise PoolTooSmall(f"requested k={k} neighbours from a pool of {len(pool)}")
    matrix = np.stack([p.vector for p in pool])
    distances = np.linalg.norm(matrix - sample.vector, axis=1)
    return [pool[i] for i in _neighbor_order(distances, self_index)[:k]]


def smote_generate(
    minority: list[FlatSample], k: int, count: int, seed: int
) -> list[FlatSample]:
    """Draw `count` interpolated samples from the minority pool.

    Deterministic under `seed`. Each output keeps the origin_id of the
    sample it interpolates away from.
    """
    if count < 0:
        raise ValueError("count must be >= 0")
    if len(minority) < k + 1:
        raise PoolTooSmall(
            f"SMOTE with k={k} needs at least {k + 1} minority samples, got {len(minority)}"
        )
    matrix = np.stack([s.vector for s in minority])
    sq_norms = (matrix * matrix).sum(axis=1)
    distances = np.sqrt(
        np.maximum(sq_norms[:, None] + sq_norms[None, :] - 2.0 * matrix @ matrix.T, 0.0)
    )
    neighbors = np.stack(
        [_neighbor_order(distances[i], i)[:k] for i in range(len(minority))]
    )
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        i = int(rng.integers(len(minority)))
        j = int(neighbors[i, rng.integers(k)])
        u = rng.random()
        vector = matrix[i] + u * (matrix[j] - matrix[i])
        out.append(FlatSample(vector, minority[i].origin_id))
    return out


def smote_minority_cohort(
    train: Cohort,
    codec: CohortCodec,
    count: int,
    seed: int,
    k: int = DEFAULT_K,
    id_prefix: str = "smote",
) -> Cohort:
    """End-to-end SMOTE: encode minority patients, interpolate, decode.

    Returns `count` new minority-labelled patients with fresh ids.
    """
    minority_batch = codec.encode(train.minority())
    samples = smote_generate(flatten(minority_batch), k=k, count=count, seed=seed)
    renamed = [
        FlatSample(s.vector, f"{id_prefix}-{i:05d}") for i, s in enumerate(samples)
    ]
    batch = unflatten(
        renamed,
        labels=np.full(len(renamed), MINORITY_LABEL),
        params=codec.params,
        series_length=train.schema.series_length,
    )
    return codec.decode(batch)
