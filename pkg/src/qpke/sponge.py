"""Keyed sponge over 64-bit words; the package's only hash/PRF core.

Permutation: 8 rounds of an ARX mix on a 4-word state (add, rotate, xor;
rotations 13/32/16/21/17/32). Initialization XORs the key into words 0-1,
a domain tag into word 2, and the input byte length into word 3. Absorption
XORs two words per block and permutes; a final 0xFF marker is folded into
word 2 before the last permutation. Squeezing reads words 0-1, permuting
between blocks. All values little-endian within 64-bit words.

Not cryptographically vetted; chosen for self-contained, bit-exact
reproducibility at experiment scale.
"""
from __future__ import annotations

import numpy as np
from numba import njit, uint64

_C0 = uint64(0x9E3779B97F4A7C15)
_C1 = uint64(0xBF58476D1CE4E5B9)
_C2 = uint64(0x94D049BB133111EB)
_C3 = uint64(0xD6E8FEB86659FD93)

U64 = np.uint64
_ROUNDS = 8


@njit(cache=True)
def _perm(v0, v1, v2, v3):
    for _ in range(_ROUNDS):
        v0 = v0 + v1
        v1 = ((v1 << uint64(13)) | (v1 >> uint64(51)))
        v1 ^= v0
        v0 = ((v0 << uint64(32)) | (v0 >> uint64(32)))
        v2 = v2 + v3
        v3 = ((v3 << uint64(16)) | (v3 >> uint64(48)))
        v3 ^= v2
        v0 = v0 + v3
        v3 = ((v3 << uint64(21)) | (v3 >> uint64(43)))
        v3 ^= v0
        v2 = v2 + v1
        v1 = ((v1 << uint64(17)) | (v1 >> uint64(47)))
        v1 ^= v2
        v2 = ((v2 << uint64(32)) | (v2 >> uint64(32)))
    return v0, v1, v2, v3


@njit(cache=True)
def _sponge2(k0, k1, tag, data, nwords, nbytes):
    """Absorb nwords of data; return a two-word squeeze."""
    v0 = _C0 ^ k0
    v1 = _C1 ^ k1
    v2 = _C2 ^ tag
    v3 = _C3 ^ uint64(nbytes)
    v0, v1, v2, v3 = _perm(v0, v1, v2, v3)
    i = 0
    while i < nwords:
        v0 ^= data[i]
        if i + 1 < nwords:
            v1 ^= data[i + 1]
        v0, v1, v2, v3 = _perm(v0, v1, v2, v3)
        i += 2
    v2 ^= uint64(0xFF)
    v0, v1, v2, v3 = _perm(v0, v1, v2, v3)
    return v0, v1


@njit(cache=True)
def _sponge_stream(k0, k1, tag, data, nwords, nbytes, out):
    """Absorb data, then squeeze len(out) words."""
    v0 = _C0 ^ k0
    v1 = _C1 ^ k1
    v2 = _C2 ^ tag
    v3 = _C3 ^ uint64(nbytes)
    v0, v1, v2, v3 = _perm(v0, v1, v2, v3)
    i = 0
    while i < nwords:
        v0 ^= data[i]
        if i + 1 < nwords:
            v1 ^= data[i + 1]
        v0, v1, v2, v3 = _perm(v0, v1, v2, v3)
        i += 2
    v2 ^= uint64(0xFF)
    v0, v1, v2, v3 = _perm(v0, v1, v2, v3)
    j = 0
    n = out.shape[0]
    while j < n:
        out[j] = v0
        if j + 1 < n:
            out[j + 1] = v1
        v0, v1, v2, v3 = _perm(v0, v1, v2, v3)
        j += 2


_KW_CACHE: dict[bytes, tuple] = {}


def key_words(key: bytes) -> tuple[np.uint64, np.uint64]:
    hit = _KW_CACHE.get(key)
    if hit is not None:
        return hit
    if len(key) != 16:
        raise ValueError("keys are 16 bytes")
    kw = (U64(int.from_bytes(key[:8], "little")),
          U64(int.from_bytes(key[8:], "little")))
    if len(_KW_CACHE) > 4096:
        _KW_CACHE.clear()
    _KW_CACHE[key] = kw
    return kw


def words_from_bytes(data: bytes) -> np.ndarray:
    pad = (-len(data)) % 8
    return np.frombuffer(data + b"\x00" * pad, dtype="<u8").copy()


def hash_bytes(key: bytes, tag: int, data: bytes, out_bits: int) -> int:
    """Hash byte data to an out_bits-bit integer."""
    k0, k1 = key_words(key)
    words = words_from_bytes(data)
    if out_bits <= 128:
        o0, o1 = _sponge2(k0, k1, U64(tag), words, len(words), len(data))
        val = int(o0) | (int(o1) << 64)
    else:
        out = np.empty((out_bits + 63) // 64, dtype=np.uint64)
        _sponge_stream(k0, k1, U64(tag), words, len(words), len(data), out)
        val = 0
        for j, w in enumerate(out):
            val |= int(w) << (64 * j)
    return val & ((1 << out_bits) - 1)


ZERO_KEY = b"\x00" * 16


def hash_public(tag: int, data: bytes, out_bits: int) -> int:
    """Unkeyed variant for publicly recomputable digests."""
    return hash_bytes(ZERO_KEY, tag, data, out_bits)


# Domain-separation tags. Parameter values are folded in at call sites via
# tag_word so that different profiles never share a hash domain.
TAG_OTS_SK = 0x01
TAG_OTS_LEAF = 0x02
TAG_OTS_COMPRESS = 0x03
TAG_SIG_CERT = 0x04
TAG_SIG_PATH = 0x05
TAG_SIG_LEAFMSG = 0x06
TAG_PRF = 0x07
TAG_SKE_STREAM = 0x08
TAG_SKE_MAC = 0x09
TAG_SLOT = 0x0A
TAG_TMAC = 0x0B


def tag_word(tag: int, a: int = 0, b: int = 0) -> int:
    """Mix a base tag with up to two small parameters."""
    return (tag & 0xFF) | ((a & 0xFFFFFF) << 8) | ((b & 0xFFFFFF) << 32)
