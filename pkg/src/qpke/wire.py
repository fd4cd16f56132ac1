"""Length-prefixed binary helpers and text manifests for keys.

Every length prefix is a 32-bit little-endian byte count. BitString fields
are packed per the package bit-packing rule with the bit width prefixed, so
parse(serialize(x)) = x even for widths that are not byte multiples.
"""
from __future__ import annotations

import io

from .bits import BitString
from .primitives import BOT, is_bot

TAG_BOT = 0x00
TAG_VALUE = 0x01


def write_lp(out: io.BytesIO, payload: bytes) -> None:
    out.write(len(payload).to_bytes(4, "little"))
    out.write(payload)


def read_lp(buf: io.BytesIO) -> bytes:
    raw = buf.read(4)
    if len(raw) != 4:
        raise ValueError("truncated length prefix")
    n = int.from_bytes(raw, "little")
    payload = buf.read(n)
    if len(payload) != n:
        raise ValueError("truncated payload")
    return payload


def bits_to_bytes(bs: BitString) -> bytes:
    return bs.width.to_bytes(4, "little") + bs.to_bytes()


def bits_from_bytes(data: bytes) -> BitString:
    width = int.from_bytes(data[:4], "little")
    return BitString.from_bytes(data[4:], width)


def write_bits(out: io.BytesIO, bs: BitString) -> None:
    write_lp(out, bits_to_bytes(bs))


def read_bits(buf: io.BytesIO) -> BitString:
    return bits_from_bytes(read_lp(buf))


def maybe_bot(encoder):
    """Wrap a ciphertext encoder with the BOT tag byte."""

    def enc(ct) -> bytes:
        if is_bot(ct):
            return bytes([TAG_BOT])
        return bytes([TAG_VALUE]) + encoder(ct)

    return enc


def maybe_bot_decode(decoder):
    def dec(data: bytes):
        if not data:
            raise ValueError("empty ciphertext encoding")
        if data[0] == TAG_BOT:
            return BOT
        if data[0] != TAG_VALUE:
            raise ValueError(f"bad ciphertext tag {data[0]:#x}")
        return decoder(data[1:])

    return dec


# -- key manifests -------------------------------------------------------------

def manifest_dump(fields: dict[str, str]) -> str:
    return "".join(f"{k} = {v}\n" for k, v in fields.items())


def manifest_load(text: str) -> dict[str, str]:
    fields = {}
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, _, value = line.partition("=")
        fields[key.strip()] = value.strip()
    return fields
