"""Seeded random streams.

Every random draw in the package comes from a ``numpy.random.Generator``
backed by the counter-based Philox4x64 bit generator. Sub-streams are keyed
by a purpose label, so adding a new consumer never shifts the draws of an
existing one.
"""
import hashlib

import numpy as np

RNG_ALGORITHM = "numpy.random.Philox (Philox4x64-10), SeedSequence([seed, sha256(label)[:8]])"


def _label_key(label):
    return int.from_bytes(hashlib.sha256(label.encode("utf-8")).digest()[:8], "little")


def make_rng(seed):
    """Return a Generator for ``seed`` (an int, a SeedSequence or a Generator)."""
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, np.random.SeedSequence):
        return np.random.Generator(np.random.Philox(seed))
    if seed is None:
        raise ValueError("an explicit seed is required")
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed))))


def substream(seed, label):
    """Independent stream for ``label`` derived from the run seed."""
    return np.random.Generator(
        np.random.Philox(np.random.SeedSequence([int(seed), _label_key(label)]))
    )


def subseed(seed, label):
    """Integer seed for ``label``; handy where a plain int must be passed on."""
    return int(np.random.SeedSequence([int(seed), _label_key(label)]).generate_state(1, np.uint64)[0])
