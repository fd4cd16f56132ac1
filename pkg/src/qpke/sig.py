"""Deterministic hash-tree digital signatures.

A stateless certification tree of one-time keys: every tree node owns a
one-time keypair derived from the signing seed by position, each level
certifies the compressed keys of its two children, and the leaf (selected by
a path digest of the message) signs a message digest. Signing is a pure
function of (seed, params, message), which is what lets encryption evaluate
verification coherently over superpositions.

Digest values travel as little-endian 64-bit words inside kernels and as
big-endian byte fields inside serialized signatures; `digest_bits` and
`tree_depth` must be multiples of 8 so every signature field is byte-aligned.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit, uint64

from .bits import BitString
from .sponge import (
    TAG_OTS_COMPRESS,
    TAG_OTS_LEAF,
    TAG_OTS_SK,
    TAG_SIG_CERT,
    TAG_SIG_PATH,
    U64,
    ZERO_KEY,
    _sponge2,
    hash_bytes,
    key_words,
    tag_word,
)

_NODE_CACHE_DEPTH = 10
_SIG_CACHE_MAX = 4096

_BE_DTYPE = {16: ">u2", 32: ">u4", 64: ">u8"}


@dataclass(frozen=True)
class SigParams:
    """digest_bits is the hash width (lambda_h); tree_depth the path length."""

    digest_bits: int = 128
    tree_depth: int = 16

    def __post_init__(self):
        if self.digest_bits not in (16, 32, 64, 128):
            raise ValueError("digest_bits must be one of 16, 32, 64, 128")
        if self.tree_depth % 8 or self.tree_depth > 32:
            raise ValueError("tree_depth must be a multiple of 8, at most 32")

    @property
    def words(self) -> int:
        return (self.digest_bits + 63) // 64

    @property
    def sig_len(self) -> int:
        lam, mu = self.digest_bits, self.tree_depth
        per_level = 2 * lam + 2 * lam * lam
        return mu + mu * per_level + 2 * lam * lam


def _masks(lam: int) -> tuple[np.uint64, np.uint64]:
    lo = (1 << min(lam, 64)) - 1
    hi = (1 << max(lam - 64, 0)) - 1 if lam > 64 else 0
    return U64(lo), U64(hi)


@njit(cache=True)
def _node_batch(k0, k1, tsk, tleaf, tcomp, lam, nw, m0, m1,
                levels, indices, sk, ph, vk):
    """Derive one-time keys for a batch of tree nodes.

    sk, ph: (n, 2, lam, nw); vk: (n, nw). Preimage j (= chain_bit * lam +
    position) is chunk j % per of squeeze block j // per, where per = 128 //
    lam. Compression input order is [level, index] then hashes in
    (position, chain-bit) order.
    """
    n = levels.shape[0]
    per = 128 // lam
    dbuf = np.empty(2, dtype=np.uint64)
    pbuf = np.empty(2, dtype=np.uint64)
    cbuf = np.empty(2 + 2 * lam * nw, dtype=np.uint64)
    z = uint64(0)
    o0 = z
    o1 = z
    for t in range(n):
        lvl = levels[t]
        idx = indices[t]
        cbuf[0] = lvl
        cbuf[1] = idx
        for j in range(2 * lam):
            slot = j % per
            if slot == 0:
                dbuf[0] = (lvl << uint64(48)) | idx
                dbuf[1] = uint64(j // per)
                o0, o1 = _sponge2(k0, k1, tsk, dbuf, 2, 16)
            b = j // lam
            i = j % lam
            if lam == 128:
                w0 = o0
                w1 = o1 & m1
                sk[t, b, i, 0] = w0
                sk[t, b, i, 1] = w1
                pbuf[0] = w0
                pbuf[1] = w1
            else:
                word = o0 if slot < 64 // lam else o1
                w0 = (word >> uint64(lam * (slot % (64 // lam)))) & m0
                sk[t, b, i, 0] = w0
                pbuf[0] = w0
            h0, h1 = _sponge2(z, z, tleaf, pbuf, nw, lam // 8)
            cpos = 2 + (2 * i + b) * nw
            ph[t, b, i, 0] = h0 & m0
            cbuf[cpos] = h0 & m0
            if nw == 2:
                ph[t, b, i, 1] = h1 & m1
                cbuf[cpos + 1] = h1 & m1
        nwords = 2 + 2 * lam * nw
        o0, o1 = _sponge2(z, z, tcomp, cbuf, nwords, 8 * nwords)
        vk[t, 0] = o0 & m0
        if nw == 2:
            vk[t, 1] = o1 & m1


@njit(cache=True)
def _ver_levels(tleaf, tcomp, lam, nw, m0, m1,
                levels, indices, mbits, revealed, compl, vk_out):
    """Recompute node keys from revealed preimages and complement hashes.

    mbits: (n, lam) uint8; revealed, compl: (n, lam, nw); vk_out: (n, nw).
    """
    n = levels.shape[0]
    pbuf = np.empty(2, dtype=np.uint64)
    cbuf = np.empty(2 + 2 * lam * nw, dtype=np.uint64)
    z = uint64(0)
    for t in range(n):
        cbuf[0] = levels[t]
        cbuf[1] = indices[t]
        pos = 2
        for i in range(lam):
            pbuf[0] = revealed[t, i, 0]
            if nw == 2:
                pbuf[1] = revealed[t, i, 1]
            h0, h1 = _sponge2(z, z, tleaf, pbuf, nw, lam // 8)
            h0 &= m0
            h1 &= m1
            b = mbits[t, i]
            for cb in range(2):
                if cb == b:
                    cbuf[pos] = h0
                    pos += 1
                    if nw == 2:
                        cbuf[pos] = h1
                        pos += 1
                else:
                    cbuf[pos] = compl[t, i, 0]
                    pos += 1
                    if nw == 2:
                        cbuf[pos] = compl[t, i, 1]
                        pos += 1
        o0, o1 = _sponge2(z, z, tcomp, cbuf, pos, 8 * pos)
        vk_out[t, 0] = o0 & m0
        if nw == 2:
            vk_out[t, 1] = o1 & m1


@njit(cache=True)
def _hash_words_batch(k0, k1, tag, data, out):
    """Row-wise sponge over fixed-width word rows; out: (n, 2)."""
    n = data.shape[0]
    m = data.shape[1]
    for t in range(n):
        o0, o1 = _sponge2(k0, k1, tag, data[t], m, 8 * m)
        out[t, 0] = o0
        out[t, 1] = o1


def _words_to_int(w: np.ndarray, lam: int) -> int:
    val = int(w[0])
    if lam > 64:
        val |= int(w[1]) << 64
    return val & ((1 << lam) - 1)


def _field_bytes(arr: np.ndarray, lam: int) -> bytes:
    """Big-endian bytes of a (k, nw) word array of lam-bit digests."""
    if lam <= 64:
        be = arr[:, 0].astype(">u8").view(np.uint8).reshape(-1, 8)
        return be[:, 8 - lam // 8:].tobytes()
    # 128-bit: value = w0 | w1 << 64, so big-endian is w1 then w0
    hi = arr[:, 1].astype(">u8").view(np.uint8).reshape(-1, 8)
    lo = arr[:, 0].astype(">u8").view(np.uint8).reshape(-1, 8)
    return np.concatenate([hi, lo], axis=1).tobytes()


def _fields_from_bytes(data: bytes, lam: int) -> np.ndarray:
    """Inverse of _field_bytes: (k, nw) uint64 array."""
    if lam <= 64:
        vals = np.frombuffer(data, dtype=_BE_DTYPE[lam]).astype(np.uint64)
        return vals.reshape(-1, 1)
    pairs = np.frombuffer(data, dtype=">u8").astype(np.uint64).reshape(-1, 2)
    return np.stack([pairs[:, 1], pairs[:, 0]], axis=1)


def _msg_bytes(msg: BitString) -> bytes:
    return len(msg).to_bytes(8, "little") + msg.to_bytes()


class SigningKey:
    """Holds the seed plus caches for tree nodes and finished signatures."""

    def __init__(self, seed: bytes, params: SigParams):
        if len(seed) != 16:
            raise ValueError("signing seeds are 16 bytes")
        self.seed = seed
        self.params = params
        self._k0, self._k1 = key_words(seed)
        self._nodes: dict[tuple[int, int], tuple] = {}
        self._sigs: dict[BitString, BitString] = {}
        self._tag_cache = (
            U64(tag_word(TAG_OTS_SK, params.digest_bits, params.tree_depth)),
            U64(tag_word(TAG_OTS_LEAF, params.digest_bits, params.tree_depth)),
            U64(tag_word(TAG_OTS_COMPRESS, params.digest_bits, params.tree_depth)),
        )

    def _tags(self) -> tuple:
        return self._tag_cache

    def nodes(self, wanted: list[tuple[int, int]]) -> dict[tuple[int, int], tuple]:
        """Fetch (sk, ph, vk) arrays per node, computing cache misses in one batch."""
        out = {}
        missing = []
        for key in wanted:
            hit = self._nodes.get(key)
            if hit is not None:
                out[key] = hit
            else:
                missing.append(key)
        if missing:
            p = self.params
            lam, nw = p.digest_bits, p.words
            m0, m1 = _masks(lam)
            tsk, tleaf, tcomp = self._tags()
            n = len(missing)
            levels = np.array([lv for lv, _ in missing], dtype=np.uint64)
            indices = np.array([ix for _, ix in missing], dtype=np.uint64)
            sk = np.empty((n, 2, lam, nw), dtype=np.uint64)
            ph = np.empty((n, 2, lam, nw), dtype=np.uint64)
            vk = np.empty((n, nw), dtype=np.uint64)
            _node_batch(self._k0, self._k1, tsk, tleaf, tcomp, lam, nw, m0, m1,
                        levels, indices, sk, ph, vk)
            for t, key in enumerate(missing):
                entry = (sk[t], ph[t], vk[t])
                out[key] = entry
                if key[0] <= _NODE_CACHE_DEPTH:
                    self._nodes[key] = entry
        return out


@dataclass(frozen=True)
class SigKeyPair:
    signing: SigningKey
    vk: BitString

    @property
    def params(self) -> SigParams:
        return self.signing.params


def sig_gen(seed: bytes, params: SigParams) -> SigKeyPair:
    """Derive a keypair; vk is the root node's compressed key."""
    sk = SigningKey(seed, params)
    root = sk.nodes([(0, 0)])[(0, 0)]
    vk = BitString(_words_to_int(root[2], params.digest_bits), params.digest_bits)
    return SigKeyPair(signing=sk, vk=vk)


def _msg_digests(params: SigParams, msg: BitString) -> tuple[BitString, int]:
    """(leaf path, leaf OTS digest) carved from one squeeze of the message."""
    t = tag_word(TAG_SIG_PATH, params.digest_bits, params.tree_depth)
    total = params.tree_depth + params.digest_bits
    full = BitString(hash_bytes(ZERO_KEY, t, _msg_bytes(msg), total), total)
    return (full.slice(0, params.tree_depth),
            full.slice(params.tree_depth, total).value)


def _digest_bits_array(digest: int, lam: int) -> np.ndarray:
    raw = np.frombuffer(digest.to_bytes(lam // 8, "little"), dtype=np.uint8)
    return np.unpackbits(raw, bitorder="little")[:lam]


def _cert_digest_bits(params: SigParams, vkl: np.ndarray, vkr: np.ndarray) -> np.ndarray:
    """Per-level certification digests as bit arrays: (n, lam) from (n, nw) pairs."""
    lam = params.digest_bits
    t = U64(tag_word(TAG_SIG_CERT, lam, params.tree_depth))
    data = np.ascontiguousarray(np.concatenate([vkl, vkr], axis=1))
    out = np.empty((data.shape[0], 2), dtype=np.uint64)
    _hash_words_batch(U64(0), U64(0), t, data, out)
    raw = out.astype("<u8").view(np.uint8).reshape(data.shape[0], 16)
    bits = np.unpackbits(raw, axis=1, bitorder="little")
    return bits[:, :lam]


def sig_sign(key: SigningKey | SigKeyPair, msg: BitString) -> BitString:
    """Deterministic signature of msg; byte-identical across processes."""
    sk = key.signing if isinstance(key, SigKeyPair) else key
    cached = sk._sigs.get(msg)
    if cached is not None:
        return cached
    p = sk.params
    lam, mu = p.digest_bits, p.tree_depth

    h, leaf_digest = _msg_digests(p, msg)
    path = [(0, 0)]
    for lv in range(mu):
        path.append((lv + 1, (path[lv][1] << 1) | h.bit(lv)))
    wanted = list(path)
    for lv, ix in path[:-1]:
        wanted.append((lv + 1, 2 * ix))
        wanted.append((lv + 1, 2 * ix + 1))
    nodes = sk.nodes(list(dict.fromkeys(wanted)))

    idx = np.arange(lam)
    chunks: list[bytes] = [h.value.to_bytes(mu // 8, "big") if mu else b""]
    if mu:
        vkl_all = np.stack([nodes[(lv + 1, 2 * ix)][2] for lv, ix in path[:-1]])
        vkr_all = np.stack([nodes[(lv + 1, 2 * ix + 1)][2] for lv, ix in path[:-1]])
        mbits = _cert_digest_bits(p, vkl_all, vkr_all)
        for lv, ix in path[:-1]:
            mb = mbits[lv]
            nsk, nph, _ = nodes[(lv, ix)]
            block = np.concatenate([
                vkl_all[lv].reshape(1, -1),
                vkr_all[lv].reshape(1, -1),
                nsk[mb, idx],
                nph[1 - mb, idx],
            ])
            chunks.append(_field_bytes(block, lam))
    mb = _digest_bits_array(leaf_digest, lam)
    nsk, nph, _ = nodes[path[-1]]
    chunks.append(_field_bytes(np.concatenate([nsk[mb, idx], nph[1 - mb, idx]]), lam))

    raw = b"".join(chunks)
    sigma = BitString(int.from_bytes(raw, "big"), p.sig_len)
    if len(sk._sigs) >= _SIG_CACHE_MAX:
        sk._sigs.pop(next(iter(sk._sigs)))
    sk._sigs[msg] = sigma
    return sigma


def sig_verify(vk: BitString, msg: BitString, sigma: BitString,
               params: SigParams) -> bool:
    """Pure verification; malformed signatures return False, never raise."""
    p = params
    lam, mu, nw = p.digest_bits, p.tree_depth, p.words
    if not isinstance(sigma, BitString) or sigma.width != p.sig_len:
        return False
    if vk.width != lam:
        return False

    h, leaf_digest = _msg_digests(p, msg)
    raw = sigma.value.to_bytes(p.sig_len // 8, "big")
    off = mu // 8
    if mu and int.from_bytes(raw[:off], "big") != h.value:
        return False

    fb = lam // 8
    level_bytes = 2 * fb + 2 * lam * fb
    nlev = mu + 1
    levels = np.empty(nlev, dtype=np.uint64)
    indices = np.empty(nlev, dtype=np.uint64)
    mbits = np.empty((nlev, lam), dtype=np.uint8)
    revealed = np.empty((nlev, lam, nw), dtype=np.uint64)
    compl = np.empty((nlev, lam, nw), dtype=np.uint64)
    expected = np.empty((nlev, nw), dtype=np.uint64)
    expected[0, 0] = vk.value & 0xFFFFFFFFFFFFFFFF
    if nw == 2:
        expected[0, 1] = vk.value >> 64

    ix = 0
    hbits = [h.bit(lv) for lv in range(mu)]
    if mu:
        per_level = _fields_from_bytes(raw[off:off + mu * level_bytes], lam)
        per_level = per_level.reshape(mu, 2 + 2 * lam, nw)
        mbits[:mu] = _cert_digest_bits(p, per_level[:, 0], per_level[:, 1])
        revealed[:mu] = per_level[:, 2:2 + lam]
        compl[:mu] = per_level[:, 2 + lam:]
        # expected key at level lv+1 is the child commitment selected by the
        # path bit at level lv
        expected[1:] = per_level[np.arange(mu), hbits]
        for lv in range(mu):
            levels[lv] = lv
            indices[lv] = ix
            ix = (ix << 1) | hbits[lv]
        off += mu * level_bytes
    block = raw[off:]
    levels[mu] = mu
    indices[mu] = ix
    mbits[mu] = _digest_bits_array(leaf_digest, lam)
    revealed[mu] = _fields_from_bytes(block[:lam * fb], lam)
    compl[mu] = _fields_from_bytes(block[lam * fb:], lam)

    m0, m1 = _masks(lam)
    tleaf = U64(tag_word(TAG_OTS_LEAF, lam, mu))
    tcomp = U64(tag_word(TAG_OTS_COMPRESS, lam, mu))
    out = np.empty((nlev, nw), dtype=np.uint64)
    _ver_levels(tleaf, tcomp, lam, nw, m0, m1,
                levels, indices, np.ascontiguousarray(mbits),
                np.ascontiguousarray(revealed), np.ascontiguousarray(compl), out)
    return bool(np.array_equal(out, expected))
