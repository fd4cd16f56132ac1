"""Security-upgrading transformations over an inner scheme interface.

Every transform sees its inner scheme only through skgen/pkgen/enc/dec plus
the canonical byte codecs, so any layer (or a classical mock) can slot in.

  cut-and-choose (CVA layer): 4*lam_r component instances; a random half is
    spot-checked against plain shares so undetected corruption cannot swing
    the majority decode of the masked shares.
  share-indexed (1CCA layer): a fresh binding signature key selects, per bit
    of its verification key, one of two component instances; the message is
    an XOR of per-instance shares and the signature binds the component
    ciphertexts together.
  token-gated (CCA layer): the public key carries a one-shot MAC token; a
    valid ciphertext requires a token signature over the inner ciphertext
    plus a binding signature tying the two, collapsing chosen-ciphertext
    access to a single meaningful query.
  serialized master key (MKey layer): per-key-copy instances are re-derived
    from a PRF under a serial number; the master signature on
    (serial, instance vk) stops key substitution.
  recyclable hybrid: one quantum encryption transports a symmetric key; the
    recycled key (K, qct) re-encrypts any number of messages classically.
"""
from __future__ import annotations

import io
from dataclasses import dataclass

from .bits import BitString
from .primitives import BOT, derive_seed, is_bot, prf_eval, KEY_BITS, \
    ske_ct_bits, ske_dec, ske_enc
from .rng import RandomSource
from .sig import SigParams, sig_gen, sig_sign, sig_verify
from .tmac import TmacKey, TmacParams, tmac_keygen, tmac_sign, tmac_token, \
    tmac_verify
from .wire import read_bits, read_lp, write_bits, write_lp

_CVA_LABEL = 0x20
_ONECCA_LABEL = 0x21
_CCA_LABEL = 0x22
_MKEY_LABEL = 0x23


def _bits_of_bytes(data: bytes) -> BitString:
    return BitString.from_bytes(data, 8 * len(data))


# -- cut-and-choose -------------------------------------------------------------

@dataclass(frozen=True)
class CvaCiphertext:
    test_set: frozenset[int]
    parts: tuple  # (inner ct, v) per slot


class CvaScheme:
    def __init__(self, inner, lam_r: int = 8):
        self.inner = inner
        self.lam_r = lam_r
        self.n_slots = 4 * lam_r
        self.msg_bits = inner.msg_bits

    def skgen(self, seed: bytes):
        sks, vks = [], []
        for i in range(self.n_slots):
            sk, vk = self.inner.skgen(derive_seed(seed, _CVA_LABEL, i))
            sks.append(sk)
            vks.append(vk)
        return tuple(sks), tuple(vks)

    def pkgen(self, sks, rng: RandomSource):
        return tuple(self.inner.pkgen(sk, rng) for sk in sks)

    def enc(self, vks, pks, msg: BitString, rng: RandomSource):
        if msg.width != self.msg_bits:
            raise ValueError(f"message must be {self.msg_bits} bits")
        if len(vks) != self.n_slots:
            raise ValueError("verification key bundle arity mismatch")
        if len(pks) != self.n_slots:
            return BOT
        test = rng.subset(self.n_slots, 2 * self.lam_r)
        parts = []
        for i in range(self.n_slots):
            u = rng.bitstring(self.msg_bits)
            ct = self.inner.enc(vks[i], pks[i], u, rng)
            v = u if i in test else u ^ msg
            parts.append((ct, v))
        return CvaCiphertext(frozenset(test), tuple(parts))

    def dec(self, sks, ct):
        if is_bot(ct):
            return BOT
        if len(ct.parts) != self.n_slots or len(ct.test_set) != 2 * self.lam_r:
            return BOT
        shares = []
        for i, (inner_ct, v) in enumerate(ct.parts):
            u = self.inner.dec(sks[i], inner_ct)
            if i in ct.test_set:
                if is_bot(u) or u != v:
                    return BOT
            else:
                if is_bot(u):
                    return BOT
                shares.append(v ^ u)
        counts: dict[BitString, int] = {}
        for s in shares:
            counts[s] = counts.get(s, 0) + 1
        best = max(counts.values())
        # lexicographically-first winner on ties
        return min((s for s, c in counts.items() if c == best),
                   key=lambda s: s.value)

    def vk_bytes(self, vks) -> bytes:
        return b"".join(self.inner.vk_bytes(vk) for vk in vks)

    def ct_to_bytes(self, ct) -> bytes:
        if is_bot(ct):
            return b"\x00"
        out = io.BytesIO()
        out.write(b"\x01")
        mask = 0
        for i in ct.test_set:
            mask |= 1 << i
        write_lp(out, mask.to_bytes((self.n_slots + 7) // 8, "little"))
        for inner_ct, v in ct.parts:
            write_lp(out, self.inner.ct_to_bytes(inner_ct))
            write_bits(out, v)
        return out.getvalue()

    def ct_from_bytes(self, data: bytes):
        if not data:
            raise ValueError("empty ciphertext encoding")
        if data[0] == 0:
            return BOT
        buf = io.BytesIO(data[1:])
        mask = int.from_bytes(read_lp(buf), "little")
        test = frozenset(i for i in range(self.n_slots) if (mask >> i) & 1)
        parts = tuple(
            (self.inner.ct_from_bytes(read_lp(buf)), read_bits(buf))
            for _ in range(self.n_slots)
        )
        return CvaCiphertext(test, parts)


# -- single-query chosen-ciphertext layer ---------------------------------------

@dataclass(frozen=True)
class OneCcaCiphertext:
    sigvk: BitString
    parts: tuple
    sigma: BitString


class OneCcaScheme:
    """n = binding-signature vk length; instance (i, b) encrypts share i when
    the fresh vk's i-th bit is b; the signature covers all component bytes."""

    def __init__(self, inner, binding_sig: SigParams):
        self.inner = inner
        self.binding_sig = binding_sig
        self.n = binding_sig.digest_bits
        self.msg_bits = inner.msg_bits

    def skgen(self, seed: bytes):
        sks, vks = [], []
        for i in range(self.n):
            row_sk, row_vk = [], []
            for alpha in range(2):
                sk, vk = self.inner.skgen(
                    derive_seed(seed, _ONECCA_LABEL, 2 * i + alpha))
                row_sk.append(sk)
                row_vk.append(vk)
            sks.append(tuple(row_sk))
            vks.append(tuple(row_vk))
        return tuple(sks), tuple(vks)

    def pkgen(self, sks, rng: RandomSource):
        return tuple(
            tuple(self.inner.pkgen(sk, rng) for sk in row) for row in sks
        )

    def _binding_payload(self, parts) -> BitString:
        return _bits_of_bytes(b"".join(self.inner.ct_to_bytes(ct) for ct in parts))

    def enc(self, vks, pks, msg: BitString, rng: RandomSource):
        if msg.width != self.msg_bits:
            raise ValueError(f"message must be {self.msg_bits} bits")
        if len(pks) != self.n or any(len(row) != 2 for row in pks):
            return BOT
        kp = sig_gen(rng.key(), self.binding_sig)
        shares = [rng.bitstring(self.msg_bits) for _ in range(self.n - 1)]
        last = msg
        for s in shares:
            last = last ^ s
        shares.append(last)
        parts = []
        for i in range(self.n):
            b = kp.vk.bit(i)
            parts.append(self.inner.enc(vks[i][b], pks[i][b], shares[i], rng))
        sigma = sig_sign(kp, self._binding_payload(parts))
        return OneCcaCiphertext(kp.vk, tuple(parts), sigma)

    def dec(self, sks, ct):
        if is_bot(ct):
            return BOT
        if (ct.sigvk.width != self.n or len(ct.parts) != self.n
                or not sig_verify(ct.sigvk, self._binding_payload(ct.parts),
                                  ct.sigma, self.binding_sig)):
            return BOT
        out = BitString.zeros(self.msg_bits)
        for i in range(self.n):
            u = self.inner.dec(sks[i][ct.sigvk.bit(i)], ct.parts[i])
            if is_bot(u):
                return BOT
            out = out ^ u
        return out

    def vk_bytes(self, vks) -> bytes:
        return b"".join(self.inner.vk_bytes(vk) for row in vks for vk in row)

    def ct_to_bytes(self, ct) -> bytes:
        if is_bot(ct):
            return b"\x00"
        out = io.BytesIO()
        out.write(b"\x01")
        write_bits(out, ct.sigvk)
        for part in ct.parts:
            write_lp(out, self.inner.ct_to_bytes(part))
        write_bits(out, ct.sigma)
        return out.getvalue()

    def ct_from_bytes(self, data: bytes):
        if not data:
            raise ValueError("empty ciphertext encoding")
        if data[0] == 0:
            return BOT
        buf = io.BytesIO(data[1:])
        sigvk = read_bits(buf)
        parts = tuple(self.inner.ct_from_bytes(read_lp(buf))
                      for _ in range(self.n))
        return OneCcaCiphertext(sigvk, parts, read_bits(buf))


# -- token-gated chosen-ciphertext layer ----------------------------------------

@dataclass
class CcaSecretKey:
    inner_sk: object
    mk: TmacKey


@dataclass
class CcaPublicKey:
    inner_pk: object
    token: object


@dataclass(frozen=True)
class CcaCiphertext:
    inner_ct: object
    tmac_sig: BitString
    bind_sig: BitString


class CcaScheme:
    def __init__(self, inner, tmac_params: TmacParams, binding_sig: SigParams):
        self.inner = inner
        self.tmac_params = tmac_params
        self.binding_sig = binding_sig
        self.msg_bits = inner.msg_bits - binding_sig.digest_bits
        if self.msg_bits <= 0:
            raise ValueError("inner message space cannot hold sigvk plus msg")

    def skgen(self, seed: bytes):
        inner_sk, inner_vk = self.inner.skgen(derive_seed(seed, _CCA_LABEL, 0))
        mk = tmac_keygen(derive_seed(seed, _CCA_LABEL, 1), self.tmac_params)
        return CcaSecretKey(inner_sk, mk), inner_vk

    def pkgen(self, sk: CcaSecretKey, rng: RandomSource):
        return CcaPublicKey(self.inner.pkgen(sk.inner_sk, rng),
                            tmac_token(sk.mk))

    def enc(self, vk, pk: CcaPublicKey, msg: BitString, rng: RandomSource):
        if msg.width != self.msg_bits:
            raise ValueError(f"message must be {self.msg_bits} bits")
        kp = sig_gen(rng.key(), self.binding_sig)
        inner_ct = self.inner.enc(vk, pk.inner_pk, kp.vk.cat(msg), rng)
        if is_bot(inner_ct):
            return BOT
        inner_bytes = self.inner.ct_to_bytes(inner_ct)
        tmac_sig = tmac_sign(pk.token, _bits_of_bytes(inner_bytes), rng)
        bind_sig = sig_sign(kp, _bits_of_bytes(inner_bytes).cat(tmac_sig))
        return CcaCiphertext(inner_ct, tmac_sig, bind_sig)

    def dec(self, sk: CcaSecretKey, ct, trace: list | None = None):
        """Checks run in the fixed order: token MAC, inner decrypt, binding."""
        if is_bot(ct):
            return BOT
        inner_bytes = self.inner.ct_to_bytes(ct.inner_ct)
        if trace is not None:
            trace.append("tmac_verify")
        if not tmac_verify(sk.mk, _bits_of_bytes(inner_bytes), ct.tmac_sig):
            return BOT
        if trace is not None:
            trace.append("inner_decrypt")
        plain = self.inner.dec(sk.inner_sk, ct.inner_ct)
        if is_bot(plain) or plain.width != self.inner.msg_bits:
            return BOT
        sigvk = plain.slice(0, self.binding_sig.digest_bits)
        msg = plain.slice(self.binding_sig.digest_bits, plain.width)
        if trace is not None:
            trace.append("binding_verify")
        if not sig_verify(sigvk, _bits_of_bytes(inner_bytes).cat(ct.tmac_sig),
                          ct.bind_sig, self.binding_sig):
            return BOT
        return msg

    def vk_bytes(self, vk) -> bytes:
        return self.inner.vk_bytes(vk)

    def ct_to_bytes(self, ct) -> bytes:
        if is_bot(ct):
            return b"\x00"
        out = io.BytesIO()
        out.write(b"\x01")
        write_lp(out, self.inner.ct_to_bytes(ct.inner_ct))
        write_bits(out, ct.tmac_sig)
        write_bits(out, ct.bind_sig)
        return out.getvalue()

    def ct_from_bytes(self, data: bytes):
        if not data:
            raise ValueError("empty ciphertext encoding")
        if data[0] == 0:
            return BOT
        buf = io.BytesIO(data[1:])
        inner_ct = self.inner.ct_from_bytes(read_lp(buf))
        return CcaCiphertext(inner_ct, read_bits(buf), read_bits(buf))


# -- many-key layer from a serialized master key --------------------------------

@dataclass
class MKeySecretKey:
    prf_key: bytes
    master: object  # signing keypair


@dataclass
class MKeyPublicKey:
    snum: BitString
    inner_vk: object
    inner_pk: object
    sigma: BitString


@dataclass(frozen=True)
class MKeyCiphertext:
    snum: BitString
    inner_ct: object


class MKeyScheme:
    def __init__(self, inner, master_sig: SigParams):
        self.inner = inner
        self.master_sig = master_sig
        self.msg_bits = inner.msg_bits

    def skgen(self, seed: bytes):
        prf_key = derive_seed(seed, _MKEY_LABEL, 0)
        master = sig_gen(derive_seed(seed, _MKEY_LABEL, 1), self.master_sig)
        return MKeySecretKey(prf_key, master), master.vk

    def _instance_seed(self, prf_key: bytes, snum: BitString) -> bytes:
        return prf_eval(prf_key, snum, KEY_BITS).to_bytes()

    def _cert_msg(self, snum: BitString, inner_vk) -> BitString:
        return snum.cat(_bits_of_bytes(self.inner.vk_bytes(inner_vk)))

    def pkgen(self, sk: MKeySecretKey, rng: RandomSource):
        snum = rng.bitstring(KEY_BITS)
        inner_sk, inner_vk = self.inner.skgen(self._instance_seed(sk.prf_key, snum))
        inner_pk = self.inner.pkgen(inner_sk, rng)
        sigma = sig_sign(sk.master, self._cert_msg(snum, inner_vk))
        return MKeyPublicKey(snum, inner_vk, inner_pk, sigma)

    def enc(self, vk, pk: MKeyPublicKey, msg: BitString, rng: RandomSource):
        if not sig_verify(vk, self._cert_msg(pk.snum, pk.inner_vk), pk.sigma,
                          self.master_sig):
            return BOT
        inner_ct = self.inner.enc(pk.inner_vk, pk.inner_pk, msg, rng)
        if is_bot(inner_ct):
            return BOT
        return MKeyCiphertext(pk.snum, inner_ct)

    def dec(self, sk: MKeySecretKey, ct):
        if is_bot(ct):
            return BOT
        inner_sk, _ = self.inner.skgen(self._instance_seed(sk.prf_key, ct.snum))
        return self.inner.dec(inner_sk, ct.inner_ct)

    def vk_bytes(self, vk) -> bytes:
        return vk.to_bytes()

    def ct_to_bytes(self, ct) -> bytes:
        if is_bot(ct):
            return b"\x00"
        out = io.BytesIO()
        out.write(b"\x01")
        write_bits(out, ct.snum)
        write_lp(out, self.inner.ct_to_bytes(ct.inner_ct))
        return out.getvalue()

    def ct_from_bytes(self, data: bytes):
        if not data:
            raise ValueError("empty ciphertext encoding")
        if data[0] == 0:
            return BOT
        buf = io.BytesIO(data[1:])
        snum = read_bits(buf)
        return MKeyCiphertext(snum, self.inner.ct_from_bytes(read_lp(buf)))


# -- recyclable hybrid -----------------------------------------------------------

@dataclass
class RecycledKey:
    key: bytes
    qct: object
    counter: int = 0


@dataclass(frozen=True)
class RecCiphertext:
    qct: object
    sct: BitString


class RecyclableScheme:
    """Hybrid construction: quantum-encrypt a symmetric key once, then reuse
    the recycled (K, qct) for unlimited classical encryptions. Repeat calls
    use a per-key counter as the symmetric nonce, so rEnc is deterministic in
    (rk, msg, counter) yet never reuses a stream."""

    def __init__(self, inner, msg_bits: int, mode: str = "cpa"):
        if inner.msg_bits != KEY_BITS:
            raise ValueError("inner message space must carry a symmetric key")
        self.inner = inner
        self.msg_bits = msg_bits
        self.mode = mode

    def skgen(self, seed: bytes):
        return self.inner.skgen(seed)

    def pkgen(self, sk, rng: RandomSource):
        return self.inner.pkgen(sk, rng)

    def enc(self, vk, pk, msg: BitString, rng: RandomSource):
        key = rng.key()
        qct = self.inner.enc(vk, pk, _bits_of_bytes(key), rng)
        rk = RecycledKey(key, qct)
        if is_bot(qct):
            return BOT, rk
        return self.renc(rk, msg), rk

    def renc(self, rk: RecycledKey, msg: BitString):
        if msg.width != self.msg_bits:
            raise ValueError(f"message must be {self.msg_bits} bits")
        if is_bot(rk.qct):
            return BOT
        nonce = BitString(rk.counter, KEY_BITS)
        rk.counter += 1
        return RecCiphertext(rk.qct, ske_enc(rk.key, msg, self.mode, nonce=nonce))

    def dec(self, sk, ct):
        if is_bot(ct):
            return BOT
        key_bits = self.inner.dec(sk, ct.qct)
        if is_bot(key_bits):
            return BOT
        return ske_dec(key_bits.to_bytes(), ct.sct, self.msg_bits, self.mode)

    def vk_bytes(self, vk) -> bytes:
        return self.inner.vk_bytes(vk)

    def ct_to_bytes(self, ct) -> bytes:
        if is_bot(ct):
            return b"\x00"
        out = io.BytesIO()
        out.write(b"\x01")
        write_lp(out, self.inner.ct_to_bytes(ct.qct))
        write_bits(out, ct.sct)
        return out.getvalue()

    def ct_from_bytes(self, data: bytes):
        if not data:
            raise ValueError("empty ciphertext encoding")
        if data[0] == 0:
            return BOT
        buf = io.BytesIO(data[1:])
        qct = self.inner.ct_from_bytes(read_lp(buf))
        return RecCiphertext(qct, read_bits(buf))
