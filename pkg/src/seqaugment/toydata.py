"""Synthetic toy cohort with known class structure, for tests and demos.

Numeric variables follow class-shifted means plus class-phased daily
oscillations, a shared per-patient latent factor (inducing known
inter-variable correlations), and Gaussian noise. Discrete variables are
drawn from class-specific probability tables through the same latent
factor, so they correlate with the numeric block. The construction
parameters are exposed so tests can verify sample statistics against
them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from .cohort import Cohort, PatientSeries
from .schema import CohortSchema, hypotension_schema

LATENT_WEIGHT = 0.6  # discrete latent: u = 0.6*f + 0.8*eps keeps u ~ N(0,1)


@dataclass(frozen=True)
class NumericToyParams:
    """x_t = center + gap*label + amp*sin(2*pi*t/period + phase_c) + load*f + noise."""

    center: float
    class_gap: float
    amplitude: float
    period: int
    phase0: float
    phase1: float
    loading: float
    noise: float

    def class_mean(self, label: int) -> float:
        return self.center + self.class_gap * label


# Keyed by variable name of the reference schema. Gaps are several noise
# standard deviations wide and alternate in sign.
NUMERIC_PARAMS: dict[str, NumericToyParams] = {
    "map": NumericToyParams(65.0, +18.0, 4.0, 24, 0.0, 1.0, 3.0, 2.0),
    "diastolic_bp": NumericToyParams(54.0, -10.0, 3.0, 24, 0.5, 1.5, -2.5, 2.0),
    "systolic_bp": NumericToyParams(113.0, +20.0, 6.0, 12, 0.0, 0.8, 4.0, 3.0),
    "urine": NumericToyParams(120.0, +45.0, 20.0, 48, 1.0, 2.2, 12.0, 8.0),
    "alt": NumericToyParams(60.0, -15.0, 5.0, 24, 0.3, 1.3, 4.0, 3.0),
    "ast": NumericToyParams(70.0, +16.0, 6.0, 12, 0.7, 1.7, 5.0, 3.0),
    "po2": NumericToyParams(103.0, -12.0, 5.0, 24, 0.2, 1.2, -4.0, 3.0),
    "lactic_acid": NumericToyParams(2.0, +0.8, 0.3, 12, 0.4, 1.4, 0.25, 0.15),
    "serum_creatinine": NumericToyParams(1.5, +0.5, 0.2, 48, 0.6, 1.6, 0.18, 0.12),
}

# Class-specific category distributions (rows sum to 1).
DISCRETE_PROBS: dict[str, tuple[tuple[float, ...], tuple[float, ...]]] = {
    "fluid_boluses": ((0.85, 0.08, 0.05, 0.02), (0.55, 0.20, 0.15, 0.10)),
    "vasopressors": ((0.80, 0.12, 0.05, 0.03), (0.45, 0.25, 0.18, 0.12)),
    "fio2": (
        (0.001, 0.005, 0.030, 0.110, 0.600, 0.090, 0.020, 0.004, 0.030, 0.110),
        (0.001, 0.004, 0.020, 0.060, 0.350, 0.200, 0.100, 0.020, 0.060, 0.185),
    ),
    "gcs": (
        (0.05, 0.02, 0.01, 0.02, 0.03, 0.01, 0.02, 0.03, 0.02, 0.03, 0.01, 0.10, 0.65),
        (0.18, 0.08, 0.04, 0.08, 0.09, 0.03, 0.06, 0.08, 0.05, 0.06, 0.03, 0.07, 0.15),
    ),
    "urine_m": ((0.65, 0.35), (0.45, 0.55)),
    "alt_ast_m": ((0.90, 0.10), (0.75, 0.25)),
    "fio2_m": ((0.88, 0.12), (0.70, 0.30)),
    "gcs_m": ((0.80, 0.20), (0.60, 0.40)),
    "po2_m": ((0.92, 0.08), (0.78, 0.22)),
    "lactic_acid_m": ((0.90, 0.10), (0.72, 0.28)),
    "serum_creatinine_m": ((0.90, 0.10), (0.74, 0.26)),
}


def _category_edges(probs) -> np.ndarray:
    """Standard-normal thresholds realizing the given category probabilities."""
    cum = np.cumsum(probs)[:-1]
    return norm.ppf(cum)


def _simulate_patient(
    schema: CohortSchema, label: int, f: float, rng: np.random.Generator
) -> np.ndarray:
    T = schema.series_length
    t = np.arange(T)
    obs = np.empty((T, len(schema.variables)), dtype=object)
    for j, spec in enumerate(schema.variables):
        if spec.kind == "numeric":
            p = NUMERIC_PARAMS[spec.name]
            phase = p.phase1 if label == 1 else p.phase0
            values = (
                p.class_mean(label)
                + p.amplitude * np.sin(2.0 * math.pi * t / p.period + phase)
                + p.loading * f
                + p.noise * rng.standard_normal(T)
            )
            if spec.numeric_range is not None:
                values = np.clip(values, *spec.numeric_range)
            obs[:, j] = values
        else:
            probs = DISCRETE_PROBS[spec.name][label]
            if len(probs) != len(spec.categories):
                raise ValueError(f"toy probabilities for {spec.name!r} have wrong length")
            edges = _category_edges(probs)
            u = LATENT_WEIGHT * f + math.sqrt(1.0 - LATENT_WEIGHT**2) * rng.standard_normal(T)
            idx = np.searchsorted(edges, u, side="right")
            obs[:, j] = [spec.categories[i] for i in idx]
    return obs


def _class_factors(n: int, rng: np.random.Generator) -> np.ndarray:
    """Per-patient latent factors, standardized within the class.

    Standardizing pins the class's factor mean at exactly zero, so sample
    class means converge to the construction means at cell-level rates
    (otherwise the patient-level factor dominates the error).
    """
    f = rng.standard_normal(n)
    if n >= 2 and f.std() > 0:
        f = (f - f.mean()) / f.std()
    return f


def make_toy_cohort(n_major: int, n_minor: int, seed: int) -> Cohort:
    """Build a reference-schema cohort with n_major label-0 and n_minor label-1 patients."""
    if n_major < 0 or n_minor < 0:
        raise ValueError("patient counts must be >= 0")
    schema = hypotension_schema()
    rng = np.random.default_rng(seed)
    patients = []
    for label, count, tag in ((0, n_major, "maj"), (1, n_minor, "min")):
        factors = _class_factors(count, rng)
        for i in range(count):
            patients.append(
                PatientSeries(
                    f"toy-{tag}-{i:04d}",
                    label,
                    _simulate_patient(schema, label, float(factors[i]), rng),
                )
            )
    return Cohort(schema, tuple(patients))


def write_toy_csv(path, n_major: int, n_minor: int, seed: int) -> Cohort:
    """Generate a toy cohort and write it in the standard CSV layout."""
    cohort = make_toy_cohort(n_major, n_minor, seed)
    cohort.write_csv(path)
    return cohort
