# src/core/rng.py

import hashlib

import numpy as np


def _label_words(labels) -> list:
    digest = hashlib.sha256("/".join(str(label) for label in labels).encode("utf-8")).digest()
    return [int.from_bytes(digest[i:i + 4], "little") for i in range(0, 16, 4)]


def derive_rng(seed: int, *labels) -> np.random.Generator:
    """
    Independent generator for (seed, labels); adding new labels never perturbs existing streams.
    """
    sequence = np.random.SeedSequence(int(seed), spawn_key=tuple(_label_words(labels)))
    return np.random.default_rng(sequence)
