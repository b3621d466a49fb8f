"""Named substreams derived from one top-level seed.

Every random component (split, training, generation, smote, ...) draws
its seed from the experiment seed through a stable hash, so components
are independently reproducible and insensitive to each other's draws.
"""

from __future__ import annotations

import hashlib


def substream_seed(seed: int, name: str) -> int:
    """Stable 63-bit seed for the substream `name` under `seed`."""
    digest = hashlib.sha256(f"{seed}:{name}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little") >> 1
