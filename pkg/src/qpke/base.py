"""Quantum public-key encryption with tamper-checkable keys: base layer.

A public key is a classical tag r plus the two-branch state
(|0, s0> + |1, s1>)/sqrt(2) with s_b the deterministic signature of b||r.
Encryption coherently verifies the signatures under the classical
verification key, encodes the plaintext bit as a relative phase, and
Hadamard-measures everything; the receiver recovers the bit as a GF(2) inner
product with the XOR of the two branch strings it can recompute from the
signing key.

Multi-bit messages use independent single-bit instances per position. The
detect wrapper signs the message under a fresh one-shot key inside the
ciphertext so that tampering-induced decryption errors surface as BOT.
"""
from __future__ import annotations

from dataclasses import dataclass

from .bits import BitString, RegisterLayout
from .primitives import BOT, derive_seed, is_bot, prf_eval
from .qsim import (
    SparseState,
    apply_z_power,
    coherent_eval,
    extend_with_register,
    measure_computational,
    measure_hadamard_all,
)
from .rng import RandomSource
from .sig import SigKeyPair, SigParams, sig_gen, sig_sign, sig_verify

FLAG_REG = "D"  # verification ancilla; reserved, 1 = accept

_SLOT_LABEL = 0x10
_DETECT_LABEL = 0x11
_STRAW_LABEL = 0x12


@dataclass(frozen=True)
class BaseParams:
    sig: SigParams
    u: int = 64  # randomizer tag length

    def __post_init__(self):
        if self.u % 8 or self.u <= 0:
            raise ValueError("u must be a positive multiple of 8")

    @property
    def branch_bits(self) -> int:
        return 1 + self.sig.sig_len


@dataclass
class BaseSecretKey:
    keypair: SigKeyPair


@dataclass
class QuantumPublicKey:
    r: BitString
    state: SparseState


@dataclass(frozen=True)
class BaseCiphertext:
    r: BitString
    d: BitString


def _zero(b: int) -> BitString:
    return BitString(b, 1)


class BaseScheme:
    """Single-bit scheme; enc accepts arbitrary states exposing (A, B)."""

    def __init__(self, params: BaseParams):
        self.params = params
        self.msg_bits = 1
        self._ver_cache: dict[tuple, bool] = {}

    def layout(self) -> RegisterLayout:
        return RegisterLayout.of(A=1, B=self.params.sig.sig_len)

    def skgen(self, seed: bytes) -> tuple[BaseSecretKey, BitString]:
        kp = sig_gen(seed, self.params.sig)
        return BaseSecretKey(kp), kp.vk

    def branch_strings(self, sk: BaseSecretKey, r: BitString) -> tuple[BitString, BitString]:
        s0 = sig_sign(sk.keypair, _zero(0).cat(r))
        s1 = sig_sign(sk.keypair, _zero(1).cat(r))
        return _zero(0).cat(s0), _zero(1).cat(s1)

    def pkgen(self, sk: BaseSecretKey, rng: RandomSource) -> QuantumPublicKey:
        r = rng.bitstring(self.params.u)
        x0, x1 = self.branch_strings(sk, r)
        state = SparseState(self.layout(), {x0: 2 ** -0.5, x1: 2 ** -0.5})
        return QuantumPublicKey(r, state)

    # -- encryption stages (the security games drive them separately) --------

    def _verifier(self, vk: BitString, r: BitString):
        cache = self._ver_cache
        params = self.params.sig

        def f(x: BitString) -> BitString:
            key = (vk, r, x)
            hit = cache.get(key)
            if hit is None:
                alpha = x.slice(0, 1)
                beta = x.slice(1, x.width)
                hit = sig_verify(vk, alpha.cat(r), beta, params)
                if len(cache) > 8192:
                    cache.clear()
                cache[key] = hit
            return BitString(1 if hit else 0, 1)

        return f

    def verify_stage(self, vk: BitString, pk: QuantumPublicKey,
                     rng: RandomSource, trace: list | None = None):
        """Coherent signature check plus flag measurement; BOT on reject."""
        layout = pk.state.layout
        names = layout.names
        if ("A" not in names or "B" not in names or FLAG_REG in names
                or layout.reg_width("A") != 1
                or layout.reg_width("B") != self.params.sig.sig_len
                or pk.r.width != self.params.u):
            if trace is not None:
                trace.append("reject_malformed")
            return BOT
        state = extend_with_register(pk.state, FLAG_REG, 1)
        state = coherent_eval(state, self._verifier(vk, pk.r), ["A", "B"], FLAG_REG)
        if trace is not None:
            trace.append("coherent_verify")
        flag, state = measure_computational(state, FLAG_REG, rng)
        if trace is not None:
            trace.append("measure_flag")
        if flag.value == 0:
            return BOT
        return state

    def phase_stage(self, state: SparseState, bit: int,
                    trace: list | None = None) -> SparseState:
        out = apply_z_power(state, "A", bit)
        if trace is not None:
            trace.append("apply_phase")
        return out

    def measure_stage(self, state: SparseState, rng: RandomSource,
                      trace: list | None = None):
        d, rest = measure_hadamard_all(state, ["A", "B"], rng)
        if trace is not None:
            trace.append("hadamard_measure")
        return d, rest

    def enc(self, vk: BitString, pk: QuantumPublicKey, msg: BitString,
            rng: RandomSource, trace: list | None = None):
        if msg.width != 1:
            raise ValueError("base scheme encrypts one bit")
        state = self.verify_stage(vk, pk, rng, trace)
        if is_bot(state):
            return BOT
        state = self.phase_stage(state, msg.value, trace)
        d, _ = self.measure_stage(state, rng, trace)
        return BaseCiphertext(pk.r, d)

    def dec(self, sk: BaseSecretKey, ct):
        if is_bot(ct):
            return BOT
        if ct.r.width != self.params.u or ct.d.width != self.params.branch_bits:
            return BOT
        x0, x1 = self.branch_strings(sk, ct.r)
        return BitString(ct.d.dot(x0 ^ x1), 1)

    def vk_bytes(self, vk: BitString) -> bytes:
        return vk.to_bytes()

    # spec wire layout: tag byte, then r, then d, bit-packed
    def ct_to_bytes(self, ct) -> bytes:
        if is_bot(ct):
            return b"\x00"
        return b"\x01" + ct.r.to_bytes() + ct.d.to_bytes()

    def ct_from_bytes(self, data: bytes):
        if not data:
            raise ValueError("empty ciphertext encoding")
        if data[0] == 0:
            return BOT
        if data[0] != 1:
            raise ValueError(f"bad ciphertext tag {data[0]:#x}")
        rb = self.params.u // 8
        db = (self.params.branch_bits + 7) // 8
        if len(data) != 1 + rb + db:
            raise ValueError("ciphertext length mismatch")
        r = BitString.from_bytes(data[1:1 + rb], self.params.u)
        d = BitString.from_bytes(data[1 + rb:], self.params.branch_bits)
        return BaseCiphertext(r, d)


@dataclass
class MultiCiphertext:
    parts: tuple


class MultiBitScheme:
    """ell independent single-bit instances under domain-separated seeds."""

    def __init__(self, params: BaseParams, ell: int):
        self.params = params
        self.ell = ell
        self.msg_bits = ell
        self.slots = [BaseScheme(params) for _ in range(ell)]

    def skgen(self, seed: bytes):
        sks, vks = [], []
        for i, slot in enumerate(self.slots):
            sk, vk = slot.skgen(derive_seed(seed, _SLOT_LABEL, i))
            sks.append(sk)
            vks.append(vk)
        return tuple(sks), tuple(vks)

    def pkgen(self, sks, rng: RandomSource):
        return tuple(slot.pkgen(sk, rng) for slot, sk in zip(self.slots, sks))

    def enc(self, vks, pks, msg: BitString, rng: RandomSource):
        if msg.width != self.ell:
            raise ValueError(f"message must be {self.ell} bits")
        if len(pks) != self.ell or len(vks) != self.ell:
            return BOT
        parts = []
        for i, slot in enumerate(self.slots):
            ct = slot.enc(vks[i], pks[i], BitString(msg.bit(i), 1), rng)
            if is_bot(ct):
                return BOT
            parts.append(ct)
        return MultiCiphertext(tuple(parts))

    def dec(self, sks, ct):
        if is_bot(ct):
            return BOT
        if len(ct.parts) != self.ell:
            return BOT
        bits = []
        for slot, sk, part in zip(self.slots, sks, ct.parts):
            b = slot.dec(sk, part)
            if is_bot(b):
                return BOT
            bits.append(b.value)
        return BitString.from_bits(bits)

    def vk_bytes(self, vks) -> bytes:
        return b"".join(vk.to_bytes() for vk in vks)

    def ct_to_bytes(self, ct) -> bytes:
        if is_bot(ct):
            return b"\x00"
        return b"\x01" + b"".join(self.slots[0].ct_to_bytes(p) for p in ct.parts)

    def ct_from_bytes(self, data: bytes):
        if not data:
            raise ValueError("empty ciphertext encoding")
        if data[0] == 0:
            return BOT
        rb = self.params.u // 8
        db = (self.params.branch_bits + 7) // 8
        step = 1 + rb + db
        body = data[1:]
        if len(body) != step * self.ell:
            raise ValueError("ciphertext length mismatch")
        parts = tuple(self.slots[0].ct_from_bytes(body[i * step:(i + 1) * step])
                      for i in range(self.ell))
        return MultiCiphertext(parts)


@dataclass(frozen=True)
class DetectWrapCiphertext:
    svk: BitString
    inner: object


class DetectWrapScheme:
    """Adds decryption error detectability: encrypt msg plus its signature
    under a per-encryption signing key whose verification key rides along."""

    def __init__(self, inner, eph_sig: SigParams):
        self.inner = inner
        self.eph_sig = eph_sig
        self.msg_bits = inner.msg_bits - eph_sig.sig_len
        if self.msg_bits <= 0:
            raise ValueError("inner message space cannot hold msg plus signature")

    def skgen(self, seed: bytes):
        return self.inner.skgen(seed)

    def pkgen(self, sk, rng: RandomSource):
        return self.inner.pkgen(sk, rng)

    def enc(self, vk, pk, msg: BitString, rng: RandomSource):
        if msg.width != self.msg_bits:
            raise ValueError(f"message must be {self.msg_bits} bits")
        eph = sig_gen(rng.key(), self.eph_sig)
        tau = sig_sign(eph, msg)
        inner_ct = self.inner.enc(vk, pk, msg.cat(tau), rng)
        if is_bot(inner_ct):
            return BOT
        return DetectWrapCiphertext(eph.vk, inner_ct)

    def dec(self, sk, ct):
        if is_bot(ct):
            return BOT
        plain = self.inner.dec(sk, ct.inner)
        if is_bot(plain):
            return BOT
        if plain.width != self.msg_bits + self.eph_sig.sig_len:
            return BOT
        msg = plain.slice(0, self.msg_bits)
        tau = plain.slice(self.msg_bits, plain.width)
        if not sig_verify(ct.svk, msg, tau, self.eph_sig):
            return BOT
        return msg

    def vk_bytes(self, vk) -> bytes:
        return self.inner.vk_bytes(vk)

    def ct_to_bytes(self, ct) -> bytes:
        if is_bot(ct):
            return b"\x00"
        return b"\x01" + ct.svk.to_bytes() + self.inner.ct_to_bytes(ct.inner)

    def ct_from_bytes(self, data: bytes):
        if not data:
            raise ValueError("empty ciphertext encoding")
        if data[0] == 0:
            return BOT
        nb = self.eph_sig.digest_bits // 8
        svk = BitString.from_bytes(data[1:1 + nb], self.eph_sig.digest_bits)
        return DetectWrapCiphertext(svk, self.inner.ct_from_bytes(data[1 + nb:]))


class NoSigStrawmanScheme:
    """The unauthenticated strawman: branch tags are PRF values and Enc never
    checks them, so a substituted key with known branches leaks the bit."""

    def __init__(self, u: int = 16, tag_bits: int = 32):
        self.u = u
        self.tag_bits = tag_bits
        self.msg_bits = 1

    def layout(self) -> RegisterLayout:
        return RegisterLayout.of(A=1, B=self.tag_bits)

    def skgen(self, seed: bytes):
        return derive_seed(seed, _STRAW_LABEL, 0), BitString(0, 0)

    def branch_strings(self, sk: bytes, r: BitString):
        x0 = _zero(0).cat(prf_eval(sk, _zero(0).cat(r), self.tag_bits))
        x1 = _zero(1).cat(prf_eval(sk, _zero(1).cat(r), self.tag_bits))
        return x0, x1

    def pkgen(self, sk, rng: RandomSource) -> QuantumPublicKey:
        r = rng.bitstring(self.u)
        x0, x1 = self.branch_strings(sk, r)
        state = SparseState(self.layout(), {x0: 2 ** -0.5, x1: 2 ** -0.5})
        return QuantumPublicKey(r, state)

    def enc(self, vk, pk: QuantumPublicKey, msg: BitString, rng: RandomSource,
            trace: list | None = None):
        state = apply_z_power(pk.state, "A", msg.value)
        if trace is not None:
            trace.append("apply_phase")
        d, _ = measure_hadamard_all(state, ["A", "B"], rng)
        if trace is not None:
            trace.append("hadamard_measure")
        return BaseCiphertext(pk.r, d)

    def dec(self, sk, ct):
        if is_bot(ct):
            return BOT
        x0, x1 = self.branch_strings(sk, ct.r)
        if ct.d.width != x0.width:
            return BOT
        return BitString(ct.d.dot(x0 ^ x1), 1)

    def vk_bytes(self, vk) -> bytes:
        return b""

    def ct_to_bytes(self, ct) -> bytes:
        if is_bot(ct):
            return b"\x00"
        return b"\x01" + ct.r.to_bytes() + ct.d.to_bytes()

    def ct_from_bytes(self, data: bytes):
        if not data:
            raise ValueError("empty ciphertext encoding")
        if data[0] == 0:
            return BOT
        rb = self.u // 8
        r = BitString.from_bytes(data[1:1 + rb], self.u)
        d = BitString.from_bytes(data[1 + rb:], 1 + self.tag_bits)
        return BaseCiphertext(r, d)
