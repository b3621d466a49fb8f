"""Class-balancing toolkit for mixed-type clinical time series.

Synthesizes minority-class sequences with a conditional Wasserstein GAN
(gradient penalty + correlation alignment loss), benchmarks against an
unconditional baseline and SMOTE, and audits fidelity, authenticity, and
downstream forecasting utility.
"""

from .cohort import Cohort, PatientSeries, deficit, holdout_split, load_cohort
from .encoding import CohortCodec, EncodedBatch, decode, encode
from .errors import SeqAugmentError
from .metrics import (
    authenticity_audit,
    fidelity_report,
    kendall_matrix,
    kl_divergence,
    mmd_rbf,
)
from .projections import project_2d
from .schema import CohortSchema, VariableSpec, hypotension_schema, load_schema
from .smote import flatten, knn, smote_generate, unflatten
from .training import ModelBundle, TrainingConfig, generate_minority, train

__version__ = "0.1.0"

__all__ = [
    "Cohort",
    "CohortCodec",
    "CohortSchema",
    "EncodedBatch",
    "ModelBundle",
    "PatientSeries",
    "SeqAugmentError",
    "TrainingConfig",
    "VariableSpec",
    "authenticity_audit",
    "decode",
    "deficit",
    "encode",
    "fidelity_report",
    "flatten",
    "generate_minority",
    "holdout_split",
    "hypotension_schema",
    "kendall_matrix",
    "kl_divergence",
    "knn",
    "load_cohort",
    "load_schema",
    "mmd_rbf",
    "project_2d",
    "smote_generate",
    "train",
    "unflatten",
]
