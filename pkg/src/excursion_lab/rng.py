"""Counter-based random numbers for reproducible lattices.

Every noise value is a pure function of a 64-bit stream key and the
absolute integer coordinates of the lattice site, so regeneration is
identical no matter how sites are iterated or how work is split across
workers.  The mixer is the splitmix64 finalizer applied per coordinate;
Gaussians come from the inverse normal CDF of the resulting 53-bit
uniform.
"""

from __future__ import annotations

import numpy as np
from scipy.special import ndtri

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB

# Stream tags keep the primary noise W and the resampling copy W' apart.
STREAM_W = "W"
STREAM_WPRIME = "Wprime"
_STREAM_TAGS = {STREAM_W: 0x243F6A8885A308D3, STREAM_WPRIME: 0x13198A2E03707344}


def mix64(z: int) -> int:
    """splitmix64 finalizer on a python integer (wrapping at 64 bits)."""
    z &= _MASK64
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def _mix64_array(z: np.ndarray) -> np.ndarray:
    z = z ^ (z >> np.uint64(30))
    z = z * np.uint64(_MIX1)
    z = z ^ (z >> np.uint64(27))
    z = z * np.uint64(_MIX2)
    return z ^ (z >> np.uint64(31))


def derive_seed(master: int, replicate: int, stream: str = STREAM_W) -> int:
    """Collision-resistant 64-bit seed for one (replicate, stream) pair."""
    if stream not in _STREAM_TAGS:
        raise ValueError(f"unknown stream {stream!r}; expected one of {sorted(_STREAM_TAGS)}")
    s = mix64((master & _MASK64) + (_GOLDEN * ((replicate & _MASK64) + 1) & _MASK64))
    return mix64(s ^ _STREAM_TAGS[stream])


def site_uniforms(key: int, coords: tuple[np.ndarray, ...]) -> np.ndarray:
    """Open-interval (0, 1) uniforms keyed by integer site coordinates.

    `coords` holds one integer array per axis (broadcastable shapes); the
    chain folds each coordinate into the key with splitmix64.
    """
    if not coords:
        raise ValueError("coords must contain at least one axis")
    # Scalar-scalar uint64 ops warn on wrap in numpy 2, so fold the first
    # offset in python-int space and keep everything else array-valued.
    start = np.uint64((key + _GOLDEN) & _MASK64)
    z = None
    for axis_coords in coords:
        c = np.asarray(axis_coords, dtype=np.int64).astype(np.uint64)
        if z is None:
            z = _mix64_array(c + start)
        else:
            z = _mix64_array(z + np.uint64(_GOLDEN) + c)
    mantissa = (z >> np.uint64(11)).astype(np.float64)
    return (mantissa + 0.5) * (2.0 ** -53)


def site_gaussians(key: int, coords: tuple[np.ndarray, ...]) -> np.ndarray:
    """Standard normals keyed by integer site coordinates."""
    return ndtri(site_uniforms(key, coords))
