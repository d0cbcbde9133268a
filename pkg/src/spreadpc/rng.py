"""
Counter-based random numbers.

Every variate is a pure function of a tuple of integer keys (seed, trial,
generation, site hash, counter, ...), computed by chaining the splitmix64
finalizer.  Nothing depends on evaluation order, so results are identical
whatever the chunking or worker count, and the same variate can be re-read
at a different parameter value (common random numbers).
"""

from __future__ import annotations

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30, _S27, _S31 = np.uint64(30), np.uint64(27), np.uint64(31)
_S11 = np.uint64(11)
_INV53 = 1.0 / 9007199254740992.0  # 2^-53


def _as_u64(x) -> np.ndarray:
    arr = np.asarray(x)
    if arr.dtype == np.uint64:
        return arr
    if arr.dtype.kind in "iu":
        return arr.astype(np.int64).view(np.uint64) if arr.dtype.kind == "i" \
            else arr.astype(np.uint64)
    # python ints of arbitrary size
    return np.asarray(np.asarray(x, dtype=object) % (1 << 64), dtype=np.uint64)


def mix64(z) -> np.ndarray:
    """splitmix64 finalizer (a bijection on 64-bit words)."""
    z = _as_u64(z)
    with np.errstate(over="ignore"):
        z = (z ^ (z >> _S30)) * _M1
        z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


def hash_keys(*keys) -> np.ndarray:
    """Broadcasted 64-bit hash of a sequence of integer keys."""
    h = np.uint64(0x243F6A8885A308D3)
    with np.errstate(over="ignore"):
        for k in keys:
            h = mix64(h + _GOLDEN + mix64(k))
    return np.asarray(h)


def uniform(*keys) -> np.ndarray:
    """Uniform variates on [0, 1) keyed by ``keys`` (broadcasted)."""
    return (hash_keys(*keys) >> _S11).astype(np.float64) * _INV53


def hash_rows(coords: np.ndarray) -> np.ndarray:
    """64-bit hash of each row of an integer array."""
    coords = np.asarray(coords, dtype=np.int64)
    h = np.full(coords.shape[0], 0x452821E638D01377, dtype=np.uint64)
    for j in range(coords.shape[1]):
        h = mix64(h ^ mix64(coords[:, j].view(np.uint64) + np.uint64(j)))
    return h
