"""Shared utilities: deterministic RNG stream derivation and rational helpers."""

from __future__ import annotations

import hashlib
import random
from fractions import Fraction

import numpy as np


def derive_seed(run_seed: int, purpose: str, stream_index: int = 0) -> int:
    """Deterministic 128-bit seed for a named substream of a run.

    The derivation is a fixed hash of (run_seed, purpose, stream_index), so any
    consumer that names its stream reproduces the same randomness regardless of
    the order in which streams are created.
    """
    key = f"{run_seed}:{purpose}:{stream_index}".encode()
    digest = hashlib.sha256(key).digest()
    return int.from_bytes(digest[:16], "big")


def stream(run_seed: int, purpose: str, stream_index: int = 0) -> random.Random:
    """A `random.Random` on an independent, reproducible substream."""
    return random.Random(derive_seed(run_seed, purpose, stream_index))


def np_stream(run_seed: int, purpose: str, stream_index: int = 0) -> np.random.Generator:
    """A numpy Generator on an independent, reproducible substream."""
    return np.random.default_rng(derive_seed(run_seed, purpose, stream_index))


def as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    raise TypeError(f"cannot convert {x!r} to an exact rational")


def fmt_fraction(q: Fraction) -> str:
    return f"{q.numerator}/{q.denominator}"
