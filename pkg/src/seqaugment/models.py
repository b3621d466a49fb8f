"""Generator and critic networks for sequence synthesis.

Both networks are stacks of bidirectional LSTM layers (3 for the
conditional model, 1 for the unconditional baseline). Conditioning, when
enabled, concatenates a learned per-class embedding to every timestep's
input; the label channels are appended last so an unconditional network
with the same remaining weights computes the identical function when the
label embedding is zero.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np
import torch
from torch import nn

from .encoding import CohortCodec
from .schema import CohortSchema

N_CLASSES = 2


class SeqTensors(NamedTuple):
    """Model-space minibatch: numeric (b,T,Nn) and embedded (b,T,Nd,E)."""

    numeric: torch.Tensor
    embedded: torch.Tensor


class SequenceGenerator(nn.Module):
    """Maps per-timestep latent noise (and a class label) to sequences.

    Numeric channels go through tanh heads so outputs stay in (-1, 1);
    each discrete variable has a linear head into its embedding space.
    """

    def __init__(
        self,
        n_numeric: int,
        n_discrete: int,
        embed_dim: int,
        latent_dim: int,
        hidden_size: int,
        num_layers: int,
        conditional: bool,
        label_dim: int = 4,
    ):
        super().__init__()
        self.conditional = conditional
        self.latent_dim = latent_dim
        self.embed_dim = embed_dim
        in_dim = latent_dim + (label_dim if conditional else 0)
        self.lstm = nn.LSTM(
            in_dim, hidden_size, num_layers=num_layers, bidirectional=True, batch_first=True
        )
        self.numeric_head = nn.Linear(2 * hidden_size, n_numeric)
        self.discrete_heads = nn.ModuleList(
            nn.Linear(2 * hidden_size, embed_dim) for _ in range(n_discrete)
        )
        self.label_embedding = nn.Embedding(N_CLASSES, label_dim) if conditional else None

    def forward(self, noise: torch.Tensor, labels: torch.Tensor | None = None) -> SeqTensors:
        b, T, _ = noise.shape
        x = noise
        if self.conditional:
            if labels is None:
                raise ValueError("conditional generator requires labels")
            lab = self.label_embedding(labels).unsqueeze(1).expand(b, T, -1)
            x = torch.cat([noise, lab], dim=2)
        h, _ = self.lstm(x)
        numeric = torch.tanh(self.numeric_head(h))
        if self.discrete_heads:
            embedded = torch.stack([head(h) for head in self.discrete_heads], dim=2)
        else:
            embedded = h.new_zeros(b, T, 0, self.embed_dim)
        return SeqTensors(numeric=numeric, embedded=embedded)


class SequenceCritic(nn.Module):
    """Scores sequences with an unbounded linear head (no saturation)."""

    def __init__(
        self,
        n_numeric: int,
        n_discrete: int,
        embed_dim: int,
        hidden_size: int,
        num_layers: int,
        conditional: bool,
        label_dim: int = 4,
    ):
        super().__init__()
        self.conditional = conditional
        in_dim = n_numeric + n_discrete * embed_dim + (label_dim if conditional else 0)
        self.lstm = nn.LSTM(
            in_dim, hidden_size, num_layers=num_layers, bidirectional=True, batch_first=True
        )
        self.head = nn.Linear(2 * hidden_size, 1)
        self.label_embedding = nn.Embedding(N_CLASSES, label_dim) if conditional else None

    def forward(
        self,
        numeric: torch.Tensor,
        embedded: torch.Tensor,
        labels: torch.Tensor | None = None,
    ) -> torch.Tensor:
        b, T = numeric.shape[:2]
        x = torch.cat([numeric, embedded.reshape(b, T, -1)], dim=2)
        if self.conditional:
            if labels is None:
                raise ValueError("conditional critic requires labels")
            lab = self.label_embedding(labels).unsqueeze(1).expand(b, T, -1)
            x = torch.cat([x, lab], dim=2)
        h, _ = self.lstm(x)
        return self.head(h.mean(dim=1)).squeeze(-1)


class GanModel(nn.Module):
    """Generator + critic + the shared trainable category embedding tables."""

    def __init__(self, schema: CohortSchema, cfg, initial_tables=None):
        super().__init__()
        self.schema = schema
        self.conditional = cfg.conditional
        n_numeric = len(schema.numeric_variables)
        discrete = schema.discrete_variables
        self.embeddings = nn.ModuleList(
            nn.Embedding(len(v.categories), cfg.embed_dim) for v in discrete
        )
        for k, emb in enumerate(self.embeddings):
            if initial_tables is not None:
                with torch.no_grad():
                    emb.weight.copy_(torch.as_tensor(initial_tables[k], dtype=emb.weight.dtype))
            else:
                nn.init.orthogonal_(emb.weight)
        self.generator = SequenceGenerator(
            n_numeric=n_numeric,
            n_discrete=len(discrete),
            embed_dim=cfg.embed_dim,
            latent_dim=cfg.latent_dim,
            hidden_size=cfg.hidden_size,
            num_layers=cfg.num_layers,
            conditional=cfg.conditional,
            label_dim=cfg.label_dim,
        )
        self.critic = SequenceCritic(
            n_numeric=n_numeric,
            n_discrete=len(discrete),
            embed_dim=cfg.embed_dim,
            hidden_size=cfg.hidden_size,
            num_layers=cfg.num_layers,
            conditional=cfg.conditional,
            label_dim=cfg.label_dim,
        )

    @classmethod
    def from_codec(cls, codec: CohortCodec, cfg) -> "GanModel":
        return cls(codec.schema, cfg, initial_tables=codec.params.tables)

    def embed_categories(self, indices: torch.Tensor) -> torch.Tensor:
        """(b,T,Nd) category indices -> (b,T,Nd,E) trainable embeddings."""
        if not self.embeddings:
            b, T = indices.shape[:2]
            return torch.zeros(b, T, 0, self.generator.embed_dim)
        return torch.stack(
            [emb(indices[:, :, k]) for k, emb in enumerate(self.embeddings)], dim=2
        )

    def export_tables(self) -> tuple[np.ndarray, ...]:
        """Current embedding tables as float64 arrays, for codec decode."""
        return tuple(
            emb.weight.detach().cpu().double().numpy().copy() for emb in self.embeddings
        )

    def critic_parameters(self):
        """Parameters updated by the critic optimizer (tables included)."""
        yield from self.critic.parameters()
        yield from self.embeddings.parameters()

    def generator_parameters(self):
        yield from self.generator.parameters()


def sample_noise(
    n: int, series_length: int, latent_dim: int, generator: torch.Generator | None = None,
    dtype: torch.dtype = torch.float32,
) -> torch.Tensor:
    """Standard-normal latent noise, one vector per timestep."""
    return torch.randn(n, series_length, latent_dim, generator=generator, dtype=dtype)
