"""Pure-state public keys: one superposition over every randomizer tag.

The public key is the uniform superposition over (r, b, y(b,r), sigma(b,r))
with y a PRF tag and sigma a signature over b||r||y. Encryption coherently
verifies, phases the plaintext bit, measures the tag register to collapse to
a single r (after which the state is exactly a base-layer two-branch key),
and Hadamard-measures the rest. Measuring R before the Hadamard step is also
what keeps the support inside the sampler's cap at usable u.
"""
from __future__ import annotations

from dataclasses import dataclass

from .base import BaseCiphertext
from .bits import BitString, RegisterLayout
from .primitives import BOT, derive_seed, is_bot, prf_eval
from .qsim import (
    SUPPORT_CAP,
    SparseState,
    apply_z_power,
    coherent_eval,
    extend_with_register,
    measure_computational,
    measure_hadamard_all,
)
from .rng import RandomSource
from .sig import SigKeyPair, SigParams, sig_gen, sig_sign, sig_verify

_PURE_LABEL = 0x30
FLAG_REG = "E"


@dataclass(frozen=True)
class PureParams:
    sig: SigParams
    u: int = 4          # randomizer length; support is 2^(u+1) branches
    v: int = 32         # PRF tag length
    t_budget: int | None = None  # nominal security-budget note, not enforced

    def __post_init__(self):
        if 2 ** (self.u + 1) > SUPPORT_CAP:
            raise ValueError("2^(u+1) branches exceed the simulator support cap")

    @property
    def branch_bits(self) -> int:
        return 1 + self.v + self.sig.sig_len


@dataclass
class PureSecretKey:
    keypair: SigKeyPair
    prf_key: bytes


class PureScheme:
    def __init__(self, params: PureParams):
        self.params = params
        self.msg_bits = 1
        self._ver_cache: dict[tuple, bool] = {}

    def layout(self) -> RegisterLayout:
        p = self.params
        return RegisterLayout.of(R=p.u, A=1, B=p.v, C=p.sig.sig_len)

    def skgen(self, seed: bytes):
        kp = sig_gen(derive_seed(seed, _PURE_LABEL, 0), self.params.sig)
        return PureSecretKey(kp, derive_seed(seed, _PURE_LABEL, 1)), kp.vk

    def tag_of(self, sk: PureSecretKey, b: int, r: BitString) -> BitString:
        return prf_eval(sk.prf_key, BitString(b, 1).cat(r), self.params.v)

    def branch_of(self, sk: PureSecretKey, b: int, r: BitString) -> BitString:
        """Full branch string b || y(b,r) || sigma(b,r)."""
        y = self.tag_of(sk, b, r)
        sigma = sig_sign(sk.keypair, BitString(b, 1).cat(r).cat(y))
        return BitString(b, 1).cat(y).cat(sigma)

    def pkgen(self, sk: PureSecretKey, rng: RandomSource) -> SparseState:
        p = self.params
        amp = 2 ** (-(p.u + 1) / 2)
        terms = {}
        for rv in range(1 << p.u):
            r = BitString(rv, p.u)
            for b in range(2):
                terms[r.cat(self.branch_of(sk, b, r))] = amp
        return SparseState(self.layout(), terms)

    def _verifier(self, vk: BitString):
        p = self.params
        cache = self._ver_cache

        def f(x: BitString) -> BitString:
            key = (vk, x)
            hit = cache.get(key)
            if hit is None:
                r = x.slice(0, p.u)
                alpha = x.slice(p.u, p.u + 1)
                beta = x.slice(p.u + 1, p.u + 1 + p.v)
                gamma = x.slice(p.u + 1 + p.v, x.width)
                hit = sig_verify(vk, alpha.cat(r).cat(beta), gamma, p.sig)
                if len(cache) > 8192:
                    cache.clear()
                cache[key] = hit
            return BitString(1 if hit else 0, 1)

        return f

    def enc(self, vk: BitString, pk: SparseState, msg: BitString,
            rng: RandomSource, trace: list | None = None):
        p = self.params
        if msg.width != 1:
            raise ValueError("pure scheme encrypts one bit")
        names = pk.layout.names
        if (set(("R", "A", "B", "C")) - set(names) or FLAG_REG in names
                or pk.layout.reg_width("R") != p.u
                or pk.layout.reg_width("A") != 1
                or pk.layout.reg_width("B") != p.v
                or pk.layout.reg_width("C") != p.sig.sig_len):
            if trace is not None:
                trace.append("reject_malformed")
            return BOT
        state = extend_with_register(pk, FLAG_REG, 1)
        state = coherent_eval(state, self._verifier(vk), ["R", "A", "B", "C"],
                              FLAG_REG)
        if trace is not None:
            trace.append("coherent_verify")
        flag, state = measure_computational(state, FLAG_REG, rng)
        if trace is not None:
            trace.append("measure_flag")
        if flag.value == 0:
            return BOT
        state = apply_z_power(state, "A", msg.value)
        if trace is not None:
            trace.append("apply_phase")
        r, state = measure_computational(state, "R", rng)
        if trace is not None:
            trace.append("measure_r")
        d, _ = measure_hadamard_all(state, ["A", "B", "C"], rng)
        if trace is not None:
            trace.append("hadamard_measure")
        return BaseCiphertext(r, d)

    def dec(self, sk: PureSecretKey, ct):
        if is_bot(ct):
            return BOT
        p = self.params
        if ct.r.width != p.u or ct.d.width != p.branch_bits:
            return BOT
        x0 = self.branch_of(sk, 0, ct.r)
        x1 = self.branch_of(sk, 1, ct.r)
        return BitString(ct.d.dot(x0 ^ x1), 1)

    def vk_bytes(self, vk) -> bytes:
        return vk.to_bytes()

    def ct_to_bytes(self, ct) -> bytes:
        if is_bot(ct):
            return b"\x00"
        return b"\x01" + ct.r.to_bytes() + ct.d.to_bytes()

    def ct_from_bytes(self, data: bytes):
        if not data:
            raise ValueError("empty ciphertext encoding")
        if data[0] == 0:
            return BOT
        p = self.params
        rb = (p.u + 7) // 8
        r = BitString.from_bytes(data[1:1 + rb], p.u)
        d = BitString.from_bytes(data[1 + rb:], p.branch_bits)
        return BaseCiphertext(r, d)


# -- the find-both-tags experiment --------------------------------------------

@dataclass(frozen=True)
class FindBothReport:
    strategy: str
    m_copies: int
    trials: int
    successes: int
    paper_bound: float

    @property
    def rate(self) -> float:
        return self.successes / self.trials


FIND_BOTH_STRATEGIES = ("measure-all", "measure-and-guess")


def cannot_find_both_trial(scheme: PureScheme, m_copies: int, strategy: str,
                           trials: int, rng: RandomSource) -> FindBothReport:
    """Empirical rate at which a scripted strategy outputs (r, y(0,r), y(1,r)).

    Reported next to the analytic bound (2m+1)^4 (2^-u + 2^-v), which is
    vacuous (>1) at desk-scale parameters; the point is the measured rate.
    """
    if strategy not in FIND_BOTH_STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}")
    p = scheme.params
    bound = (2 * m_copies + 1) ** 4 * (2 ** -p.u + 2 ** -p.v)
    wins = 0
    layout = scheme.layout()
    for t in range(trials):
        r_trial = rng.spawn(t)
        sk, _vk = scheme.skgen(r_trial.key())
        samples = []
        for _ in range(m_copies):
            pk = scheme.pkgen(sk, r_trial)
            # full computational measurement: read every register in turn
            rest = pk
            outs = {}
            for reg in layout.names:
                out, rest = measure_computational(rest, reg, r_trial)
                outs[reg] = out
            samples.append((outs["R"], outs["A"].value, outs["B"]))
        guess = None
        by_r: dict[BitString, dict[int, BitString]] = {}
        for rv, b, y in samples:
            by_r.setdefault(rv, {})[b] = y
            if len(by_r[rv]) == 2:
                guess = (rv, by_r[rv][0], by_r[rv][1])
        if guess is None:
            if strategy == "measure-and-guess" and samples:
                rv, b, y = samples[0]
                other = r_trial.bitstring(p.v)
                guess = (rv, y, other) if b == 0 else (rv, other, y)
            elif strategy == "measure-and-guess":
                guess = (r_trial.bitstring(p.u), r_trial.bitstring(p.v),
                         r_trial.bitstring(p.v))
        if guess is not None:
            rv, y0, y1 = guess
            if (y0 == scheme.tag_of(sk, 0, rv)
                    and y1 == scheme.tag_of(sk, 1, rv)):
                wins += 1
    return FindBothReport(strategy, m_copies, trials, wins, bound)


class XorShareScheme:
    """Optional composition wrapper: XOR-share one bit across several
    instances (the share algebra of the single-query layer). Off by default;
    exists to exercise the parallel-instance parameterization."""

    def __init__(self, schemes: list):
        if not schemes:
            raise ValueError("need at least one component scheme")
        self.schemes = schemes
        self.msg_bits = schemes[0].msg_bits

    def skgen(self, seed: bytes):
        pairs = [s.skgen(derive_seed(seed, _PURE_LABEL, 2 + i))
                 for i, s in enumerate(self.schemes)]
        return tuple(p[0] for p in pairs), tuple(p[1] for p in pairs)

    def pkgen(self, sks, rng: RandomSource):
        return tuple(s.pkgen(sk, rng) for s, sk in zip(self.schemes, sks))

    def enc(self, vks, pks, msg: BitString, rng: RandomSource):
        shares = [rng.bitstring(self.msg_bits)
                  for _ in range(len(self.schemes) - 1)]
        last = msg
        for s in shares:
            last = last ^ s
        shares.append(last)
        parts = []
        for s, vk, pk, share in zip(self.schemes, vks, pks, shares):
            ct = s.enc(vk, pk, share, rng)
            if is_bot(ct):
                return BOT
            parts.append(ct)
        return tuple(parts)

    def dec(self, sks, ct):
        if is_bot(ct):
            return BOT
        out = BitString.zeros(self.msg_bits)
        for s, sk, part in zip(self.schemes, sks, ct):
            u = s.dec(sk, part)
            if is_bot(u):
                return BOT
            out = out ^ u
        return out
