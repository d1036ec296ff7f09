"""Small helpers for enumerating and encoding bitstrings."""

from __future__ import annotations

import numpy as np

# Hard cap on exhaustive enumeration; keeps brute-force oracles honest about
# what they can check exactly.
ENUMERATION_CAP = 2**20


def all_bitstrings(length: int) -> np.ndarray:
    """Every bitstring of the given length, one per row, in numeric order.

    Row i holds the big-endian binary digits of i. Raises ValueError when the
    space exceeds the enumeration cap.
    """
    if length < 0:
        raise ValueError("length must be non-negative")
    count = 1 << length
    if count > ENUMERATION_CAP:
        raise ValueError(
            f"enumeration of 2^{length} genomes exceeds the cap of {ENUMERATION_CAP}"
        )
    if length == 0:
        return np.zeros((1, 0), dtype=np.uint8)
    shifts = np.arange(length - 1, -1, -1, dtype=np.uint32)
    return ((np.arange(count, dtype=np.uint32)[:, None] >> shifts) & 1).astype(np.uint8)


def bits_to_int(bits: np.ndarray) -> np.ndarray:
    """Big-endian integer value of the trailing axis of a bit array."""
    bits = np.asarray(bits, dtype=np.int64)
    if bits.shape[-1] == 0:
        return np.zeros(bits.shape[:-1], dtype=np.int64)
    weights = 1 << np.arange(bits.shape[-1] - 1, -1, -1, dtype=np.int64)
    return bits @ weights
