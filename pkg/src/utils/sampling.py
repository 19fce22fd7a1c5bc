"""
Seeded sampling helpers.
All randomness in the engine goes through these functions so a single root seed reproduces every run.
"""

import zlib
from typing import Dict, Iterable, List

import numpy as np
import sympy as sp


def derive_seed(seed: int, *labels: object) -> int:
    """
    Derive a stable child seed from a root seed and a sequence of labels.

    Python's hash() is salted per process, so labels are hashed with crc32.

    Args:
        seed: Root seed
        labels: Any printable labels (model name, level number, purpose)

    Returns:
        Non-negative 63-bit integer seed
    """
    entropy = [int(seed) & 0xFFFFFFFF] + [zlib.crc32(str(label).encode('utf-8')) for label in labels]
    return int(np.random.SeedSequence(entropy).generate_state(1, dtype=np.uint64)[0]) >> 1


def make_rng(seed: int, *labels: object) -> np.random.Generator:
    return np.random.default_rng(derive_seed(seed, *labels))


def sample_point(
    rng: np.random.Generator,
    symbols: Iterable[sp.Symbol],
    radius: float = 2.0
) -> Dict[sp.Symbol, float]:
    """Draw every symbol uniformly from [-radius, radius]."""
    symbols = list(symbols)
    values = rng.uniform(-radius, radius, size=len(symbols))
    return {s: float(v) for s, v in zip(symbols, values)}


def sample_points(
    rng: np.random.Generator,
    symbols: Iterable[sp.Symbol],
    count: int,
    radius: float = 2.0
) -> List[Dict[sp.Symbol, float]]:
    symbols = list(symbols)
    return [sample_point(rng, symbols, radius) for _ in range(count)]
