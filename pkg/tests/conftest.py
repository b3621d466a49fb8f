import numpy as np
import pytest

from seqaugment.cohort import Cohort, PatientSeries
from seqaugment.schema import CohortSchema, VariableSpec


def mini_schema(series_length: int = 6) -> CohortSchema:
    """Small mixed-type schema used across unit tests."""
    return CohortSchema(
        variables=(
            VariableSpec("pressure", "numeric", "mmHg", numeric_range=(0.0, 200.0)),
            VariableSpec("flow", "numeric", "mL"),
            VariableSpec("dose", "categorical", "mg", categories=("low", "mid", "high")),
            VariableSpec("flag", "binary", "", categories=("0", "1")),
        ),
        series_length=series_length,
    )


def numeric_schema(series_length: int = 6, n_vars: int = 2) -> CohortSchema:
    """Schema with only numeric variables (no embeddings involved)."""
    return CohortSchema(
        variables=tuple(
            VariableSpec(f"v{k}", "numeric") for k in range(n_vars)
        ),
        series_length=series_length,
    )


def build_cohort(schema: CohortSchema, rows_per_patient, labels) -> Cohort:
    """Cohort from explicit per-patient observation lists.

    rows_per_patient: list of (T, V) nested lists with in-domain cells.
    """
    patients = []
    for i, (rows, label) in enumerate(zip(rows_per_patient, labels)):
        obs = np.empty((schema.series_length, len(schema.variables)), dtype=object)
        for t, row in enumerate(rows):
            for j, cell in enumerate(row):
                obs[t, j] = cell
        patients.append(PatientSeries(f"p{i:03d}", label, obs))
    return Cohort(schema, tuple(patients))


def random_mini_cohort(n0: int, n1: int, seed: int, series_length: int = 6) -> Cohort:
    """Random in-domain cohort over the mini schema, class-shifted numerics."""
    schema = mini_schema(series_length)
    rng = np.random.default_rng(seed)
    rows_all, labels = [], []
    for label, count in ((0, n0), (1, n1)):
        for _ in range(count):
            rows = []
            for t in range(series_length):
                pressure = 80.0 + 30.0 * label + rng.normal(0, 8)
                pressure = float(np.clip(pressure, 0.0, 200.0))
                flow = float(rng.normal(10 - 4 * label, 2))
                dose = ("low", "mid", "high")[rng.integers(3)]
                flag = str(rng.integers(2))
                rows.append([pressure, flow, dose, flag])
            rows_all.append(rows)
            labels.append(label)
    return build_cohort(schema, rows_all, labels)


@pytest.fixture
def small_cohort():
    return random_mini_cohort(5, 3, seed=42)
