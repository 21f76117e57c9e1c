"""Deterministic, splittable pseudo-random streams.

All randomness in the package flows from one explicit 64-bit root seed.
Substreams are derived by hashing the root seed together with a label
path, so concurrent samplers get independent streams and any individual
sample can be reproduced from its derived seed alone.  No ambient
entropy is ever used.
"""
from __future__ import annotations

import hashlib
import random

_SEP = b"\x1f"


def derive_seed(root: int, *labels: int | str) -> int:
    """A 64-bit seed obtained by hashing the root seed and a label path."""
    h = hashlib.sha256()
    h.update(str(int(root)).encode("ascii"))
    for label in labels:
        h.update(_SEP)
        h.update(str(label).encode("utf-8"))
    return int.from_bytes(h.digest()[:8], "big")


def stream(root: int, *labels: int | str) -> random.Random:
    """An independent deterministic generator for the given label path."""
    return random.Random(derive_seed(root, *labels))
