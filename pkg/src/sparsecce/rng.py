"""Splittable per-cell randomness based on the SplitMix64 finalizer.

Random matrix and graph builders in this package draw each cell directly
from ``(seed, i, j)`` rather than from a sequential stream, so generation
order is irrelevant and construction can be parallelized or re-run
per-entry with identical output.  The mixing function is the standard
SplitMix64 finalizer (Steele, Lea & Flood's generator), chained once per
key component; it is portable 64-bit integer arithmetic with no platform
dependence.
"""

from __future__ import annotations

_MASK = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15  # golden-ratio increment used by SplitMix64
_KEY_I = 0xBF58476D1CE4E5B9
_KEY_J = 0x94D049BB133111EB


def _finalize(z: int) -> int:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9 & _MASK
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB & _MASK
    return z ^ (z >> 31)


def cell_uniform64(seed: int, i: int, j: int) -> int:
    """A uniform 64-bit word for cell (i, j) under the given seed."""
    z = _finalize((seed + _GAMMA) & _MASK)
    z = _finalize((z ^ (i * _KEY_I)) & _MASK)
    z = _finalize((z ^ (j * _KEY_J)) & _MASK)
    return z


def cell_coin(seed: int, i: int, j: int) -> bool:
    """A fair coin for cell (i, j)."""
    return bool(cell_uniform64(seed, i, j) & 1)


def cell_bernoulli(seed: int, i: int, j: int, num: int, den: int) -> bool:
    """Exact Bernoulli(num/den) draw for cell (i, j).

    True iff u < (num/den) * 2**64 for the cell's uniform 64-bit word u,
    compared in exact integer arithmetic; the realized probability differs
    from num/den by less than 2**-64.
    """
    if not 0 <= num <= den or den <= 0:
        raise ValueError(f"need 0 <= num <= den, got {num}/{den}")
    return cell_uniform64(seed, i, j) * den < num << 64
