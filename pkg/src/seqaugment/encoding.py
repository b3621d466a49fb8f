"""Model-space encoding of cohorts and the inverse decoding.

Numeric variables are min-max scaled to [-1, 1] with statistics taken
from the fitting cohort; categorical/binary variables are mapped through
per-variable embedding tables (orthogonally initialized, and replaceable
by trained tables after GAN training). Decoding inverts the affine scale
with clamping and snaps embedded vectors to the nearest table row.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .cohort import Cohort, PatientSeries
from .errors import DegenerateVariable
from .schema import CohortSchema

DEFAULT_EMBED_DIM = 4


def orthogonal_rows(n_rows: int, n_cols: int, rng: np.random.Generator) -> np.ndarray:
    """Semi-orthogonal (n_rows, n_cols) matrix from a seeded QR factorization."""
    flat = rng.standard_normal((max(n_rows, n_cols), min(n_rows, n_cols)))
    q, r = np.linalg.qr(flat)
    q = q * np.sign(np.diag(r))  # fix the sign ambiguity for determinism
    if n_rows < n_cols:
        q = q.T
    return np.ascontiguousarray(q[:n_rows, :n_cols])


@dataclass(frozen=True)
class ScalingParams:
    """Per-numeric-variable affine records: x_enc = 2*(x-low)/span - 1."""

    low: np.ndarray       # (n_numeric,)
    span: np.ndarray      # (n_numeric,), 1.0 where degenerate
    degenerate: np.ndarray  # (n_numeric,) bool


@dataclass(frozen=True)
class EncodingParams:
    """Everything needed to invert an encoding: scaler and embedding tables."""

    schema_hash: str
    embed_dim: int
    scaling: ScalingParams
    tables: tuple[np.ndarray, ...]  # one (n_categories, embed_dim) table per discrete variable


@dataclass(frozen=True)
class EncodedBatch:
    """Model-space view of a set of sequences.

    numeric:  (n, T, n_numeric) scaled values
    embedded: (n, T, n_discrete, embed_dim) embedding-space vectors
    labels:   (n,) class labels
    """

    numeric: np.ndarray
    embedded: np.ndarray
    labels: np.ndarray
    patient_ids: tuple[str, ...]
    params: EncodingParams

    def __len__(self) -> int:
        return self.numeric.shape[0]

    @property
    def series_length(self) -> int:
        return self.numeric.shape[1]

    @property
    def width(self) -> int:
        """Encoded channels per timestep: numerics then embedded variables."""
        return self.numeric.shape[2] + self.embedded.shape[2] * self.embedded.shape[3]

    def flat_matrix(self) -> np.ndarray:
        """(n, T * width) matrix, timestep-major: all of hour 0, then hour 1, ..."""
        n, T = self.numeric.shape[:2]
        per_step = np.concatenate(
            [self.numeric, self.embedded.reshape(n, T, -1)], axis=2
        )
        return per_step.reshape(n, -1)


def batch_from_flat(
    flat: np.ndarray,
    labels: np.ndarray,
    patient_ids,
    params: EncodingParams,
    series_length: int,
) -> EncodedBatch:
    """Inverse of EncodedBatch.flat_matrix for a given codec layout."""
    n_numeric = params.scaling.low.shape[0]
    n_discrete = len(params.tables)
    width = n_numeric + n_discrete * params.embed_dim
    n = flat.shape[0]
    per_step = np.asarray(flat, dtype=float).reshape(n, series_length, width)
    numeric = per_step[:, :, :n_numeric]
    embedded = per_step[:, :, n_numeric:].reshape(n, series_length, n_discrete, params.embed_dim)
    return EncodedBatch(
        numeric=np.ascontiguousarray(numeric),
        embedded=np.ascontiguousarray(embedded),
        labels=np.asarray(labels, dtype=np.int64),
        patient_ids=tuple(patient_ids),
        params=params,
    )


class CohortCodec:
    """Fitted encoder/decoder between schema-domain cohorts and model space."""

    def __init__(self, schema: CohortSchema, params: EncodingParams):
        self.schema = schema
        self.params = params
        self._category_lookup = [
            {c: i for i, c in enumerate(v.categories)} for v in schema.discrete_variables
        ]

    @classmethod
    def fit(cls, cohort: Cohort, embed_dim: int = DEFAULT_EMBED_DIM, seed: int = 0) -> "CohortCodec":
        """Fit scaling statistics on `cohort` and draw fresh embedding tables."""
        if embed_dim < 1:
            raise ValueError("embed_dim must be >= 1")
        schema = cohort.schema
        n_num = len(schema.numeric_variables)
        low = np.zeros(n_num)
        span = np.ones(n_num)
        degenerate = np.zeros(n_num, dtype=bool)
        for k, spec in enumerate(schema.numeric_variables):
            col = cohort.column_values(spec.name)
            if col.size == 0:
                degenerate[k] = True
                continue
            lo, hi = float(col.min()), float(col.max())
            if hi > lo:
                low[k], span[k] = lo, hi - lo
            else:
                low[k], span[k] = lo, 1.0
                degenerate[k] = True
                warnings.warn(
                    f"numeric variable {spec.name!r} is constant over the fitting data; "
                    "encoding it as 0.0",
                    DegenerateVariable,
                    stacklevel=2,
                )
        rng = np.random.default_rng(seed)
        tables = tuple(
            orthogonal_rows(len(v.categories), embed_dim, rng)
            for v in schema.discrete_variables
        )
        params = EncodingParams(
            schema_hash=schema.hash(),
            embed_dim=embed_dim,
            scaling=ScalingParams(low=low, span=span, degenerate=degenerate),
            tables=tables,
        )
        return cls(schema, params)

    def with_tables(self, tables) -> "CohortCodec":
        """Copy of this codec with replacement embedding tables (same shapes)."""
        tables = tuple(np.asarray(t, dtype=float) for t in tables)
        if len(tables) != len(self.params.tables):
            raise ValueError("wrong number of embedding tables")
        for new, old in zip(tables, self.params.tables):
            if new.shape != old.shape:
                raise ValueError(f"table shape {new.shape} != expected {old.shape}")
        params = EncodingParams(
            schema_hash=self.params.schema_hash,
            embed_dim=self.params.embed_dim,
            scaling=self.params.scaling,
            tables=tables,
        )
        return CohortCodec(self.schema, params)

    # -- raw-array helpers shared with the training loop ------------------

    def numeric_matrix(self, cohort: Cohort) -> np.ndarray:
        """(n, T, n_numeric) raw physical values."""
        T = self.schema.series_length
        positions = self.schema.numeric_positions
        out = np.empty((len(cohort), T, len(positions)), dtype=float)
        for i, p in enumerate(cohort.patients):
            out[i] = p.observations[:, positions].astype(float)
        return out

    def category_indices(self, cohort: Cohort) -> np.ndarray:
        """(n, T, n_discrete) integer category indices."""
        T = self.schema.series_length
        positions = self.schema.discrete_positions
        out = np.empty((len(cohort), T, len(positions)), dtype=np.int64)
        for i, p in enumerate(cohort.patients):
            for k, j in enumerate(positions):
                lookup = self._category_lookup[k]
                out[i, :, k] = [lookup[c] for c in p.observations[:, j]]
        return out

    def scale_numeric(self, raw: np.ndarray) -> np.ndarray:
        scaling = self.params.scaling
        scaled = 2.0 * (raw - scaling.low) / scaling.span - 1.0
        if scaling.degenerate.any():
            scaled[..., scaling.degenerate] = 0.0
        return scaled

    def unscale_numeric(self, scaled: np.ndarray) -> np.ndarray:
        scaling = self.params.scaling
        clipped = np.clip(scaled, -1.0, 1.0)
        raw = scaling.low + (clipped + 1.0) * scaling.span / 2.0
        if scaling.degenerate.any():
            raw[..., scaling.degenerate] = scaling.low[scaling.degenerate]
        for k, spec in enumerate(self.schema.numeric_variables):
            if spec.numeric_range is not None:
                raw[..., k] = np.clip(raw[..., k], *spec.numeric_range)
        return raw

    def embed_indices(self, indices: np.ndarray) -> np.ndarray:
        """(n, T, n_discrete) indices -> (n, T, n_discrete, embed_dim) vectors."""
        n, T, n_disc = indices.shape
        out = np.empty((n, T, n_disc, self.params.embed_dim), dtype=float)
        for k, table in enumerate(self.params.tables):
            out[:, :, k, :] = table[indices[:, :, k]]
        return out

    def snap_embedded(self, embedded: np.ndarray) -> np.ndarray:
        """Nearest-row (Euclidean) category indices for embedded vectors."""
        n, T, n_disc, _ = embedded.shape
        out = np.empty((n, T, n_disc), dtype=np.int64)
        for k, table in enumerate(self.params.tables):
            vecs = embedded[:, :, k, :].reshape(-1, self.params.embed_dim)
            # argmin over ||v - row||^2 = ||row||^2 - 2 v.row (+ const in row)
            scores = (table * table).sum(axis=1)[None, :] - 2.0 * vecs @ table.T
            out[:, :, k] = np.argmin(scores, axis=1).reshape(n, T)
        return out

    # -- public encode/decode ---------------------------------------------

    def encode(self, cohort: Cohort) -> EncodedBatch:
        if cohort.schema != self.schema:
            raise ValueError("cohort schema does not match codec schema")
        numeric = self.scale_numeric(self.numeric_matrix(cohort))
        embedded = self.embed_indices(self.category_indices(cohort))
        return EncodedBatch(
            numeric=numeric,
            embedded=embedded,
            labels=cohort.labels,
            patient_ids=cohort.patient_ids,
            params=self.params,
        )

    def decode(self, batch: EncodedBatch) -> Cohort:
        n, T = batch.numeric.shape[:2]
        raw_numeric = self.unscale_numeric(np.asarray(batch.numeric, dtype=float))
        indices = self.snap_embedded(np.asarray(batch.embedded, dtype=float))
        num_positions = self.schema.numeric_positions
        disc_positions = self.schema.discrete_positions
        disc_specs = self.schema.discrete_variables
        patients = []
        for i in range(n):
            obs = np.empty((T, len(self.schema.variables)), dtype=object)
            for k, j in enumerate(num_positions):
                obs[:, j] = raw_numeric[i, :, k]
            for k, j in enumerate(disc_positions):
                cats = disc_specs[k].categories
                obs[:, j] = [cats[c] for c in indices[i, :, k]]
            patients.append(
                PatientSeries(batch.patient_ids[i], int(batch.labels[i]), obs)
            )
        return Cohort(self.schema, tuple(patients))


def encode(cohort: Cohort, embed_dim: int = DEFAULT_EMBED_DIM, seed: int = 0) -> EncodedBatch:
    """Fit a codec on `cohort` and encode it (convenience wrapper)."""
    return CohortCodec.fit(cohort, embed_dim=embed_dim, seed=seed).encode(cohort)


def decode(batch: EncodedBatch, schema: CohortSchema) -> Cohort:
    """Decode a batch with the codec parameters it carries."""
    if batch.params.schema_hash != schema.hash():
        raise ValueError("batch was encoded under a different schema")
    return CohortCodec(schema, batch.params).decode(batch)
