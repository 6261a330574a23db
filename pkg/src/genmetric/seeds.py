"""Deterministic seed derivation for experiment stages.

Every random stage of a run gets its own 64-bit seed derived from the
master seed, a purpose label, and an index:

    h = fnv1a64(utf8(purpose))           # 64-bit FNV-1a over the label
    z = (master ^ h) + (index+1)*GOLDEN  # odd-constant index injection
    seed = splitmix64_finalizer(z)

The finalizer is bijective on 64-bit words and the index multiplier is
odd, so distinct indices always map to distinct seeds for a fixed
(master, purpose); distinct purposes collide only if FNV-1a collides.
"""

from __future__ import annotations

_U64 = 0xFFFFFFFFFFFFFFFF
_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_GOLDEN = 0x9E3779B97F4A7C15


def _splitmix64(z: int) -> int:
    z &= _U64
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9 & _U64
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB & _U64
    return z ^ (z >> 31)


def derive_seed(master: int, purpose: str, index: int = 0) -> int:
    """Derive a stable 64-bit seed from (master, purpose, index)."""
    h = _FNV_OFFSET
    for b in purpose.encode("utf-8"):
        h = ((h ^ b) * _FNV_PRIME) & _U64
    z = ((master & _U64) ^ h) + (index + 1) * _GOLDEN
    return _splitmix64(z)
