"""Adversarial losses: Wasserstein critic/generator terms, gradient
penalty, and the correlation alignment loss.

Critic loss:    E[D(fake)] - E[D(real)] + lambda_gp * E[(||grad D||_2 - 1)^2]
Generator loss: -E[D(fake)] + lambda_corr * sum_{i>j} |r_syn(i,j) - r_real(i,j)|

The gradient penalty is evaluated at generated samples by default
(gp_mode="fake"); gp_mode="interpolate" uses random real/fake mixes
instead. The alignment term compares Pearson correlation matrices of
per-variable scalars pooled over all timesteps of the batch.
"""

from __future__ import annotations

import logging
from typing import NamedTuple

import torch

from .models import SeqTensors

logger = logging.getLogger(__name__)

_STD_EPS = 1e-8

GP_MODES = ("fake", "interpolate")


class CorrelationTargets(NamedTuple):
    """Pearson matrices of the real reference and the current synthetic batch.

    `valid` flags variables whose pooled scalar series had nonzero variance
    on BOTH sides; pairs involving an invalid variable contribute nothing.
    """

    r_real: torch.Tensor  # (V, V)
    r_syn: torch.Tensor   # (V, V)
    valid: torch.Tensor   # (V,) bool


def variable_scalars(
    batch: SeqTensors, numeric_positions, discrete_positions
) -> torch.Tensor:
    """Per-variable scalar series pooled over sequences and timesteps.

    Numeric variables use their encoded channel; discrete variables use the
    mean of their embedding channels (differentiable for generated vectors).
    Returns (n*T, V) in schema variable order.
    """
    b, T = batch.numeric.shape[:2]
    V = len(numeric_positions) + len(discrete_positions)
    columns: list[torch.Tensor | None] = [None] * V
    for k, pos in enumerate(numeric_positions):
        columns[pos] = batch.numeric[:, :, k].reshape(-1)
    for k, pos in enumerate(discrete_positions):
        columns[pos] = batch.embedded[:, :, k, :].mean(dim=-1).reshape(-1)
    return torch.stack(columns, dim=1)


def pearson_matrix(scalars: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
    """Pearson correlation matrix of (n_obs, V) columns.

    Returns (r, valid): r has unit diagonal for valid variables; rows and
    columns of zero-variance variables are zeroed and flagged invalid.
    """
    n = scalars.shape[0]
    centered = scalars - scalars.mean(dim=0, keepdim=True)
    std = torch.sqrt((centered * centered).mean(dim=0))
    valid = std > _STD_EPS
    safe_std = torch.where(valid, std, torch.ones_like(std))
    normalized = centered / safe_std
    r = normalized.T @ normalized / n
    mask = valid.unsqueeze(0) & valid.unsqueeze(1)
    r = torch.where(mask, r, torch.zeros_like(r))
    return r, valid


def correlation_targets(
    real: SeqTensors, fake: SeqTensors, numeric_positions, discrete_positions
) -> CorrelationTargets:
    """Build alignment targets; the real side is detached (it is a target)."""
    r_real, valid_real = pearson_matrix(
        variable_scalars(real, numeric_positions, discrete_positions).detach()
    )
    r_syn, valid_syn = pearson_matrix(
        variable_scalars(fake, numeric_positions, discrete_positions)
    )
    return CorrelationTargets(r_real=r_real, r_syn=r_syn, valid=valid_real & valid_syn)


def alignment_loss(targets: CorrelationTargets, lambda_corr: float) -> torch.Tensor:
    """lambda_corr * sum of |r_syn - r_real| over unique unordered pairs.

    Only the strict lower triangle contributes, so diagonal entries never
    matter; pairs with an undefined correlation contribute zero.
    """
    V = targets.r_real.shape[0]
    rows, cols = torch.tril_indices(V, V, offset=-1)
    diffs = torch.abs(targets.r_syn[rows, cols] - targets.r_real[rows, cols])
    pair_valid = (targets.valid[rows] & targets.valid[cols]).to(diffs.dtype)
    return lambda_corr * (diffs * pair_valid).sum()


def gradient_penalty(
    critic, points: SeqTensors, labels: torch.Tensor | None
) -> torch.Tensor:
    """Mean over the batch of (||grad_points D(points|y)||_2 - 1)^2.

    The norm is taken over all entries of a sequence (numeric and embedded
    channels together). `points` must not be attached to parameter graphs.
    """
    numeric = points.numeric.detach().clone().requires_grad_(True)
    embedded = points.embedded.detach().clone().requires_grad_(True)
    scores = critic(numeric, embedded, labels)
    inputs = [numeric, embedded]
    grads = torch.autograd.grad(
        outputs=scores.sum(), inputs=inputs, create_graph=True, allow_unused=True
    )
    b = numeric.shape[0]
    flat = torch.cat(
        [
            (g if g is not None else torch.zeros_like(x)).reshape(b, -1)
            for g, x in zip(grads, inputs)
        ],
        dim=1,
    )
    norms = flat.norm(2, dim=1)
    return ((norms - 1.0) ** 2).mean()


def interpolate(
    real: SeqTensors, fake: SeqTensors, generator: torch.Generator | None = None
) -> SeqTensors:
    """Per-sequence random convex mixes of real and fake points."""
    b = real.numeric.shape[0]
    eps = torch.rand(b, generator=generator, dtype=real.numeric.dtype)
    e_num = eps.view(b, 1, 1)
    e_emb = eps.view(b, 1, 1, 1)
    return SeqTensors(
        numeric=e_num * real.numeric + (1.0 - e_num) * fake.numeric,
        embedded=e_emb * real.embedded + (1.0 - e_emb) * fake.embedded,
    )


def critic_loss(
    critic,
    real: SeqTensors,
    fake: SeqTensors,
    labels: torch.Tensor | None,
    lambda_gp: float,
    gp_mode: str = "fake",
    generator: torch.Generator | None = None,
) -> tuple[torch.Tensor, torch.Tensor]:
    """Full critic objective. Returns (loss, gradient-penalty value)."""
    if gp_mode not in GP_MODES:
        raise ValueError(f"gp_mode must be one of {GP_MODES}, got {gp_mode!r}")
    score_gap = critic(*fake, labels).mean() - critic(*real, labels).mean()
    if lambda_gp == 0.0:
        gp = torch.zeros_like(score_gap)
    else:
        points = fake if gp_mode == "fake" else interpolate(real, fake, generator)
        gp = gradient_penalty(critic, points, labels)
    return score_gap + lambda_gp * gp, gp


def generator_loss(
    critic,
    fake: SeqTensors,
    labels: torch.Tensor | None,
    targets: CorrelationTargets | None,
    lambda_corr: float,
) -> tuple[torch.Tensor, torch.Tensor]:
    """Full generator objective. Returns (loss, alignment-term value)."""
    score = -critic(*fake, labels).mean()
    if targets is None or lambda_corr == 0.0:
        align = torch.zeros_like(score)
    else:
        if not bool(targets.valid.all()):
            _warn_invalid_once(targets)
        align = alignment_loss(targets, lambda_corr)
    return score + align, align


_invalid_warned = False


def _warn_invalid_once(targets: CorrelationTargets) -> None:
    global _invalid_warned
    if not _invalid_warned:
        n_bad = int((~targets.valid).sum())
        logger.warning(
            "alignment loss: %d variable(s) have zero variance in this batch; "
            "their pairs contribute 0", n_bad,
        )
        _invalid_warned = True
