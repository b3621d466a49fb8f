"""Cohort data model and CSV ingest/egress.

A cohort is a list of per-patient hourly series over a shared schema,
each carrying a static binary class label (1 = minority). The CSV wire
format is one row per patient-hour: ``patient_id,hour,label,<variables
in schema order>``.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd

from .errors import ClassInversion, DataError, DomainViolation, RaggedSeries, SchemaMismatch
from .schema import CohortSchema

MAJORITY_LABEL = 0
MINORITY_LABEL = 1

META_COLUMNS = ["patient_id", "hour", "label"]


@dataclass(frozen=True)
class PatientSeries:
    """One patient's series: (series_length x n_variables) observations.

    Cells hold floats for numeric variables and category strings for
    categorical/binary variables; the object array preserves both.
    """

    patient_id: str
    label: int
    observations: np.ndarray  # shape (T, V), dtype=object

    def __post_init__(self):
        if self.label not in (MAJORITY_LABEL, MINORITY_LABEL):
            raise ValueError(f"label must be 0 or 1, got {self.label!r}")

    def column(self, index: int) -> np.ndarray:
        return self.observations[:, index]


@dataclass(frozen=True)
class Cohort:
    """Immutable collection of patient series over one schema."""

    schema: CohortSchema
    patients: tuple[PatientSeries, ...]

    def __post_init__(self):
        T, V = self.schema.series_length, len(self.schema.variables)
        ids = set()
        for p in self.patients:
            if p.observations.shape != (T, V):
                raise ValueError(
                    f"patient {p.patient_id!r} has shape {p.observations.shape}, expected {(T, V)}"
                )
            if p.patient_id in ids:
                raise ValueError(f"duplicate patient_id {p.patient_id!r}")
            ids.add(p.patient_id)

    def __len__(self) -> int:
        return len(self.patients)

    @property
    def n_majority(self) -> int:
        return sum(1 for p in self.patients if p.label == MAJORITY_LABEL)

    @property
    def n_minority(self) -> int:
        return sum(1 for p in self.patients if p.label == MINORITY_LABEL)

    @property
    def labels(self) -> np.ndarray:
        return np.array([p.label for p in self.patients], dtype=np.int64)

    @property
    def patient_ids(self) -> tuple[str, ...]:
        return tuple(p.patient_id for p in self.patients)

    def subset(self, indices) -> "Cohort":
        return Cohort(self.schema, tuple(self.patients[i] for i in indices))

    def minority(self) -> "Cohort":
        return self.subset([i for i, p in enumerate(self.patients) if p.label == MINORITY_LABEL])

    def majority(self) -> "Cohort":
        return self.subset([i for i, p in enumerate(self.patients) if p.label == MAJORITY_LABEL])

    def merge(self, other: "Cohort") -> "Cohort":
        if other.schema != self.schema:
            raise SchemaMismatch("cannot merge cohorts with different schemas")
        return Cohort(self.schema, self.patients + other.patients)

    def column_values(self, name: str) -> np.ndarray:
        """All values of one variable pooled over patients and timesteps.

        Numeric variables yield a float array; discrete variables yield an
        object array of category strings. Pool order is patient-major.
        """
        idx = self.schema.index_of(name)
        spec = self.schema.variables[idx]
        cells = [p.observations[:, idx] for p in self.patients]
        if not cells:
            return np.empty(0, dtype=float if spec.kind == "numeric" else object)
        pooled = np.concatenate(cells)
        return pooled.astype(float) if spec.kind == "numeric" else pooled

    def value_matrix(self) -> np.ndarray:
        """Pooled (n_patients * T, V) float matrix of ordinal variable values.

        Numeric variables keep their physical values; categorical/binary
        cells are mapped to their category index, preserving class order.
        """
        T, V = self.schema.series_length, len(self.schema.variables)
        out = np.empty((len(self.patients) * T, V), dtype=float)
        for j, spec in enumerate(self.schema.variables):
            col = self.column_values(spec.name)
            if spec.is_discrete:
                lookup = {c: i for i, c in enumerate(spec.categories)}
                col = np.array([lookup[c] for c in col], dtype=float)
            out[:, j] = col
        return out

    def to_frame(self) -> pd.DataFrame:
        """Long-format DataFrame in the CSV wire layout."""
        T = self.schema.series_length
        records = {
            "patient_id": np.repeat([p.patient_id for p in self.patients], T),
            "hour": np.tile(np.arange(T), len(self.patients)),
            "label": np.repeat([p.label for p in self.patients], T),
        }
        for j, spec in enumerate(self.schema.variables):
            cells = [p.observations[:, j] for p in self.patients]
            records[spec.name] = np.concatenate(cells) if cells else np.empty(0, dtype=object)
        return pd.DataFrame(records, columns=META_COLUMNS + self.schema.names)

    def write_csv(self, path) -> None:
        self.to_frame().to_csv(path, index=False)


def load_cohort(path, schema: CohortSchema) -> Cohort:
    """Load and validate a cohort CSV against a schema.

    Raises SchemaMismatch for header problems, RaggedSeries when a patient
    does not contribute exactly one row for each hour 0..T-1, and
    DomainViolation (with location) for any out-of-domain cell.
    """
    path = Path(path)
    if not path.exists():
        raise SchemaMismatch(f"cohort file not found: {path}")
    frame = pd.read_csv(path, dtype=str, keep_default_na=False)
    expected = META_COLUMNS + schema.names
    got = list(frame.columns)
    if got != expected:
        missing = [c for c in expected if c not in got]
        extra = [c for c in got if c not in expected]
        raise SchemaMismatch(
            f"CSV header mismatch: missing={missing}, unexpected={extra}, "
            f"expected order {expected}"
        )
    return _cohort_from_string_frame(frame, schema)


def _cohort_from_string_frame(frame: pd.DataFrame, schema: CohortSchema) -> Cohort:
    T = schema.series_length
    patients: list[PatientSeries] = []
    # groupby(sort=False) preserves first-appearance order of patients
    for patient_id, rows in frame.groupby("patient_id", sort=False):
        if len(rows) != T:
            raise RaggedSeries(
                f"patient {patient_id!r} has {len(rows)} rows, expected {T}",
                patient_id=patient_id,
            )
        try:
            hours = rows["hour"].astype(int).to_numpy()
        except ValueError:
            raise RaggedSeries(
                f"patient {patient_id!r} has a non-integer hour value", patient_id=patient_id
            ) from None
        if sorted(hours.tolist()) != list(range(T)):
            raise RaggedSeries(
                f"patient {patient_id!r} hours are not exactly 0..{T - 1}", patient_id=patient_id
            )
        rows = rows.iloc[np.argsort(hours, kind="stable")]

        raw_labels = set(rows["label"])
        if len(raw_labels) != 1:
            raise DomainViolation(
                f"patient {patient_id!r} has inconsistent labels {sorted(raw_labels)}",
                patient_id=patient_id, variable="label",
            )
        raw_label = raw_labels.pop()
        if raw_label not in ("0", "1"):
            raise DomainViolation(
                f"patient {patient_id!r} label {raw_label!r} is not 0 or 1",
                patient_id=patient_id, variable="label",
            )

        observations = np.empty((T, len(schema.variables)), dtype=object)
        for j, spec in enumerate(schema.variables):
            raw_col = rows[spec.name].to_numpy()
            for t in range(T):
                try:
                    observations[t, j] = spec.parse_cell(raw_col[t])
                except ValueError as exc:
                    raise DomainViolation(
                        f"patient {patient_id!r}, hour {t}, variable {spec.name!r}: {exc}",
                        patient_id=patient_id, hour=t, variable=spec.name,
                    ) from None
        patients.append(PatientSeries(str(patient_id), int(raw_label), observations))
    return Cohort(schema, tuple(patients))


def deficit(cohort: Cohort) -> int:
    """Number of minority samples needed to reach class balance (N - M)."""
    n, m = cohort.n_majority, cohort.n_minority
    if n < m:
        raise ClassInversion(
            f"minority class ({m}) outnumbers majority ({n}); labels look inverted"
        )
    return n - m


def holdout_split(cohort: Cohort, n_minority_holdout: int, seed: int) -> tuple[Cohort, Cohort]:
    """Set aside `n_minority_holdout` minority patients as a test cohort.

    Sampling is without replacement and deterministic under `seed`; the
    train cohort keeps every remaining patient in original order.
    """
    if n_minority_holdout < 0:
        raise DataError("n_minority_holdout must be >= 0")
    minority_idx = [i for i, p in enumerate(cohort.patients) if p.label == MINORITY_LABEL]
    if n_minority_holdout > len(minority_idx):
        raise DataError(
            f"cannot hold out {n_minority_holdout} minority patients, only "
            f"{len(minority_idx)} available"
        )
    rng = np.random.default_rng(seed)
    chosen = rng.choice(len(minority_idx), size=n_minority_holdout, replace=False)
    test_set = {minority_idx[i] for i in chosen}
    train_idx = [i for i in range(len(cohort.patients)) if i not in test_set]
    test_idx = [i for i in range(len(cohort.patients)) if i in test_set]
    return cohort.subset(train_idx), cohort.subset(test_idx)
