"""Downstream utility probe: next-hour forecasting with a small biLSTM.

A sliding window of encoded history predicts the next hour's values for
the 13 non-flag variables (numeric channels plus categorical embedding
vectors). Reported errors are mean relative errors in decoded physical
units: raw values for numeric variables, class indices for categorical
ones.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch
from torch import nn

from .cohort import Cohort
from .encoding import CohortCodec
from .errors import DataError, WindowTooLong
from .schema import CohortSchema
from .seeding import substream_seed

REL_EPS = 1e-6  # stabilizer for relative error at zero-valued truths


def target_variables(schema: CohortSchema) -> list[str]:
    """Forecast targets: every non-flag variable (numeric + categorical)."""
    return [v.name for v in schema.variables if v.kind != "binary"]


@dataclass(frozen=True)
class WindowedSample:
    """One training pair: w_in hours of history and the following values."""

    inputs: np.ndarray  # (w_in, encoded_width)
    target: np.ndarray  # (w_out * target_width,)
    source_patient: str


def _target_layout(schema: CohortSchema, embed_dim: int):
    """Column slices of the target vector for each target variable.

    Targets pack scaled numeric channels first, then the embedding vector
    of each categorical variable, in schema order within each group.
    """
    numeric_names = [v.name for v in schema.numeric_variables]
    categorical = [v for v in schema.discrete_variables if v.kind == "categorical"]
    layout = {}
    offset = 0
    for name in numeric_names:
        layout[name] = slice(offset, offset + 1)
        offset += 1
    for spec in categorical:
        layout[spec.name] = slice(offset, offset + embed_dim)
        offset += embed_dim
    return layout, offset


def make_windows(
    cohort: Cohort, codec: CohortCodec, w_in: int = 20, w_out: int = 1
) -> list[WindowedSample]:
    """Stride-1 sliding windows per patient; never crosses patients.

    Each patient of length T yields T - w_in - w_out + 1 windows.
    """
    if w_in < 1 or w_out < 1:
        raise DataError("w_in and w_out must be >= 1")
    T = cohort.schema.series_length
    if T < w_in + w_out:
        raise WindowTooLong(
            f"series length {T} cannot fit a {w_in}h input + {w_out}h target window"
        )
    batch = codec.encode(cohort)
    per_step = np.concatenate(
        [batch.numeric, batch.embedded.reshape(len(batch), T, -1)], axis=2
    )
    layout, width = _target_layout(cohort.schema, codec.params.embed_dim)
    cat_specs = [v for v in cohort.schema.discrete_variables if v.kind == "categorical"]
    cat_channel = {
        v.name: k for k, v in enumerate(cohort.schema.discrete_variables)
    }

    windows = []
    n_numeric = batch.numeric.shape[2]
    for i in range(len(batch)):
        for t0 in range(T - w_in - w_out + 1):
            t_pred = t0 + w_in
            target = np.empty(w_out * width)
            for h in range(w_out):
                base = h * width
                row = np.empty(width)
                for k in range(n_numeric):
                    row[k] = batch.numeric[i, t_pred + h, k]
                for spec in cat_specs:
                    row[layout[spec.name]] = batch.embedded[
                        i, t_pred + h, cat_channel[spec.name]
                    ]
                target[base : base + width] = row
            windows.append(
                WindowedSample(
                    inputs=per_step[i, t0 : t0 + w_in].copy(),
                    target=target,
                    source_patient=batch.patient_ids[i],
                )
            )
    return windows


class WindowRegressor(nn.Module):
    """One bidirectional LSTM layer plus a linear head on the final state."""

    def __init__(self, input_width: int, target_width: int, hidden_size: int = 64):
        super().__init__()
        self.lstm = nn.LSTM(
            input_width, hidden_size, num_layers=1, bidirectional=True, batch_first=True
        )
        self.head = nn.Linear(2 * hidden_size, target_width)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        h, _ = self.lstm(x)
        return self.head(h[:, -1, :])


@dataclass(frozen=True)
class RegressorConfig:
    hidden_size: int = 64
    lr: float = 1e-3
    epochs: int = 10
    batch_size: int = 128
    seed: int = 0


@dataclass
class RegressorBundle:
    model: WindowRegressor
    cfg: RegressorConfig
    input_width: int
    target_width: int
    history: list[float] = field(default_factory=list)  # per-epoch mean MSE

    def predict(self, inputs: np.ndarray) -> np.ndarray:
        with torch.no_grad():
            return self.model(torch.as_tensor(inputs, dtype=torch.float32)).numpy()


def train_regressor(windows: list[WindowedSample], cfg: RegressorConfig) -> RegressorBundle:
    """Minimize MSE on encoded targets; deterministic under cfg.seed.

    With epochs=0 the freshly initialized model is returned untouched.
    """
    if not windows:
        raise DataError("cannot train a regressor on zero windows")
    torch.manual_seed(substream_seed(cfg.seed, "regressor-init"))
    inputs = torch.as_tensor(
        np.stack([w.inputs for w in windows]), dtype=torch.float32
    )
    targets = torch.as_tensor(
        np.stack([w.target for w in windows]), dtype=torch.float32
    )
    model = WindowRegressor(inputs.shape[2], targets.shape[1], cfg.hidden_size)
    bundle = RegressorBundle(
        model=model, cfg=cfg, input_width=inputs.shape[2], target_width=targets.shape[1]
    )

    optimizer = torch.optim.Adam(model.parameters(), lr=cfg.lr)
    loss_fn = nn.MSELoss()
    order_rng = np.random.default_rng(substream_seed(cfg.seed, "regressor-batches"))
    n = inputs.shape[0]
    for _ in range(cfg.epochs):
        perm = order_rng.permutation(n)
        epoch_losses = []
        for start in range(0, n, cfg.batch_size):
            idx = torch.as_tensor(perm[start : start + cfg.batch_size])
            optimizer.zero_grad(set_to_none=True)
            loss = loss_fn(model(inputs[idx]), targets[idx])
            loss.backward()
            optimizer.step()
            epoch_losses.append(float(loss))
        bundle.history.append(float(np.mean(epoch_losses)))
    model.eval()
    return bundle


def _decode_targets(
    encoded: np.ndarray, schema: CohortSchema, codec: CohortCodec
) -> np.ndarray:
    """Encoded target rows -> physical scalars per target variable.

    Numeric channels are inverse-scaled (with clamping); categorical
    embedding blocks snap to the nearest table row and report the class
    index.
    """
    layout, width = _target_layout(schema, codec.params.embed_dim)
    if encoded.shape[1] != width:
        raise ValueError(f"target width {encoded.shape[1]} != expected {width}")
    names = target_variables(schema)
    out = np.empty((encoded.shape[0], len(names)))
    numeric_names = [v.name for v in schema.numeric_variables]
    numeric_block = encoded[:, : len(numeric_names)]
    raw = codec.unscale_numeric(numeric_block.copy())
    discrete_names = [v.name for v in schema.discrete_variables]
    for j, name in enumerate(names):
        if name in numeric_names:
            out[:, j] = raw[:, numeric_names.index(name)]
        else:
            table = codec.params.tables[discrete_names.index(name)]
            vecs = encoded[:, layout[name]]
            scores = (table * table).sum(axis=1)[None, :] - 2.0 * vecs @ table.T
            out[:, j] = np.argmin(scores, axis=1)
    return out


def evaluate_regressor(
    bundle: RegressorBundle,
    test: Cohort,
    codec: CohortCodec,
    w_in: int = 20,
    w_out: int = 1,
) -> dict[str, float]:
    """Per-variable mean relative error (%) on the held-out cohort.

    error_v = mean over windows of |pred - true| / (|true| + eps) * 100,
    in decoded physical units.
    """
    windows = make_windows(test, codec, w_in=w_in, w_out=w_out)
    if not windows:
        raise DataError("test cohort produced no evaluation windows")
    inputs = np.stack([w.inputs for w in windows])
    true_encoded = np.stack([w.target for w in windows])
    pred_encoded = bundle.predict(inputs)
    schema = test.schema
    pred = _decode_targets(pred_encoded, schema, codec)
    true = _decode_targets(true_encoded, schema, codec)
    rel = np.abs(pred - true) / (np.abs(true) + REL_EPS) * 100.0
    names = target_variables(schema)
    return {name: float(rel[:, j].mean()) for j, name in enumerate(names)}


def assert_no_leakage(test: Cohort, *training_cohorts: Cohort) -> None:
    """Raise if any test patient id appears in any training input."""
    test_ids = set(test.patient_ids)
    for cohort in training_cohorts:
        overlap = test_ids & set(cohort.patient_ids)
        if overlap:
            raise DataError(
                f"test-set leakage: {sorted(overlap)[:5]} appear in training data"
            )


REGIMES = ("real", "synthetic", "augmented")


@dataclass
class RegressionReport:
    """Per-variable relative errors for each training regime, plus medians."""

    variables: list[str]
    errors: dict[str, dict[str, float]]  # regime -> variable -> error %
    medians: dict[str, float]

    @classmethod
    def from_errors(cls, errors: dict[str, dict[str, float]]) -> "RegressionReport":
        regimes = [r for r in REGIMES if r in errors]
        if not regimes:
            raise ValueError("no regimes supplied")
        variables = list(errors[regimes[0]].keys())
        medians = {
            r: float(np.median([errors[r][v] for v in variables])) for r in regimes
        }
        return cls(variables=variables, errors=errors, medians=medians)

    def write_csv(self, path) -> None:
        regimes = [r for r in REGIMES if r in self.errors]
        with Path(path).open("w", encoding="utf-8") as fh:
            fh.write("variable," + ",".join(regimes) + "\n")
            for v in self.variables:
                cells = ",".join(repr(self.errors[r][v]) for r in regimes)
                fh.write(f"{v},{cells}\n")
            fh.write("median," + ",".join(repr(self.medians[r]) for r in regimes) + "\n")


def window_count(series_length: int, w_in: int, w_out: int) -> int:
    """Number of stride-1 windows in one series (precondition checked)."""
    if series_length < w_in + w_out:
        raise WindowTooLong(
            f"series length {series_length} cannot fit {w_in}+{w_out} hours"
        )
    return series_length - w_in - w_out + 1
