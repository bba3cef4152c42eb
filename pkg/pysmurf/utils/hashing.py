"""
Hashing utilities for reproducibility checks.
"""

import hashlib

import numpy as np


def array_digest(array: np.ndarray) -> str:
    """
    SHA-256 of an array's dtype, shape and bytes.

    Two runs that produce bit-identical results share a digest.
    """
    arr = np.ascontiguousarray(array)
    h = hashlib.sha256()
    h.update(str(arr.dtype).encode())
    h.update(str(arr.shape).encode())
    h.update(arr.tobytes())
    return h.hexdigest()
