"""Classical primitives: PRF evaluation, symmetric encryption, seed derivation.

All keys and seeds are 16 bytes. The distinguished decryption-failure value
BOT is a ciphertext/plaintext-level value, not an exception.
"""
from __future__ import annotations

from .bits import BitString
from .sponge import (
    TAG_PRF,
    TAG_SKE_MAC,
    TAG_SKE_STREAM,
    TAG_SLOT,
    hash_bytes,
    tag_word,
)

KEY_BITS = 128


class _Bot:
    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self):
        return "BOT"

    def __bool__(self):
        return False


BOT = _Bot()


def is_bot(x) -> bool:
    return x is BOT


def _payload(data: BitString) -> bytes:
    # width header disambiguates leading zeros
    return len(data).to_bytes(8, "little") + data.to_bytes()


def prf_eval(key: bytes, data: BitString, out_len: int) -> BitString:
    """Keyed deterministic function of (key, data), out_len bits."""
    return BitString(hash_bytes(key, TAG_PRF, _payload(data), out_len), out_len)


def derive_seed(master: bytes, label: int, index: int) -> bytes:
    """Domain-separated 16-byte sub-seed."""
    data = label.to_bytes(8, "little") + index.to_bytes(8, "little")
    val = hash_bytes(master, TAG_SLOT, data, KEY_BITS)
    return val.to_bytes(16, "little")


# -- symmetric encryption ----------------------------------------------------
#
# Counter-mode stream from the PRF under a per-message 128-bit nonce; CCA mode
# appends an encrypt-then-authenticate tag under an independent subkey.
# Ciphertext layout: nonce(128) || body(|msg|) [|| tag(128)].


def _stream(key: bytes, nonce: BitString, nbits: int) -> BitString:
    return BitString(hash_bytes(key, TAG_SKE_STREAM, _payload(nonce), nbits), nbits)


def _mac(key: bytes, data: BitString) -> BitString:
    mac_key = derive_seed(key, TAG_SKE_MAC, 0)
    return BitString(hash_bytes(mac_key, TAG_SKE_MAC, _payload(data), KEY_BITS),
                     KEY_BITS)


def ske_enc(key: bytes, msg: BitString, mode: str = "cpa", *,
            nonce: BitString | None = None, rng=None) -> BitString:
    """Encrypt; the nonce comes from rng unless supplied (counter use)."""
    if mode not in ("cpa", "cca"):
        raise ValueError(f"unknown SKE mode {mode!r}")
    if nonce is None:
        if rng is None:
            raise ValueError("ske_enc needs a nonce or an rng")
        nonce = rng.bitstring(KEY_BITS)
    if nonce.width != KEY_BITS:
        raise ValueError("nonce must be 128 bits")
    body = msg ^ _stream(key, nonce, msg.width)
    ct = nonce.cat(body)
    if mode == "cca":
        ct = ct.cat(_mac(key, ct))
    return ct


def ske_dec(key: bytes, ct: BitString, msg_bits: int, mode: str = "cpa"):
    """Decrypt to a BitString; CCA-mode tag mismatch returns BOT."""
    if mode not in ("cpa", "cca"):
        raise ValueError(f"unknown SKE mode {mode!r}")
    want = KEY_BITS + msg_bits + (KEY_BITS if mode == "cca" else 0)
    if ct.width != want:
        return BOT
    if mode == "cca":
        tag = ct.slice(ct.width - KEY_BITS, ct.width)
        sealed = ct.slice(0, ct.width - KEY_BITS)
        if _mac(key, sealed) != tag:
            return BOT
        ct = sealed
    nonce = ct.slice(0, KEY_BITS)
    body = ct.slice(KEY_BITS, ct.width)
    return body ^ _stream(key, nonce, body.width)


def ske_ct_bits(msg_bits: int, mode: str = "cpa") -> int:
    return KEY_BITS + msg_bits + (KEY_BITS if mode == "cca" else 0)
