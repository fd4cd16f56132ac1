"""Tokenized MAC from conjugate coding.

The secret key fixes, per message-digest bit j and qubit slot i, a basis bit
theta and a value bit v. The quantum signing token carries |v> in basis theta
for every slot. Signing hashes the message to one bit per block and measures
every qubit of block j in that bit's basis, consuming the token; measuring a
slot in its preparation basis recovers v exactly, any other slot is a coin
flip. Verification checks v at exactly the slots whose preparation basis
matches the requested digest bit, so one token can honestly answer a single
message and statistically resists answering two.
"""
from __future__ import annotations

from dataclasses import dataclass

from .bits import BitString, RegisterLayout
import math

from .qsim import SparseState, make_basis_state, superpose
from .rng import RandomSource
from .sponge import TAG_TMAC, hash_bytes, hash_public, tag_word


@dataclass(frozen=True)
class TmacParams:
    qubits_per_block: int = 16   # lambda_t
    blocks: int = 16             # message digest bits

    @property
    def total_qubits(self) -> int:
        return self.qubits_per_block * self.blocks


@dataclass(frozen=True)
class TmacKey:
    params: TmacParams
    theta: BitString  # basis bits, blocks x qubits_per_block
    values: BitString


class TokenConsumedError(RuntimeError):
    pass


class TmacToken:
    """One-shot signing token: a product of single-qubit states."""

    def __init__(self, params: TmacParams, qubits: list[SparseState]):
        self.params = params
        self.qubits = qubits
        self.consumed = False


_QUBIT = RegisterLayout.of(Q=1)


def tmac_keygen(seed: bytes, params: TmacParams) -> TmacKey:
    n = params.total_qubits
    raw = hash_bytes(seed, tag_word(TAG_TMAC, params.qubits_per_block,
                                    params.blocks), b"key", 2 * n)
    bits = BitString(raw, 2 * n)
    return TmacKey(params, bits.slice(0, n), bits.slice(n, 2 * n))


# The four possible slot states; SparseState is immutable, so tokens share them.
_SLOT_STATES = {
    (0, 0): make_basis_state(_QUBIT, BitString(0, 1)),
    (0, 1): make_basis_state(_QUBIT, BitString(1, 1)),
    (1, 0): superpose([(BitString(0, 1), 1), (BitString(1, 1), 1)], layout=_QUBIT),
    (1, 1): superpose([(BitString(0, 1), 1), (BitString(1, 1), -1)], layout=_QUBIT),
}


def tmac_token(mk: TmacKey) -> TmacToken:
    qubits = [
        _SLOT_STATES[(mk.theta.bit(j), mk.values.bit(j))]
        for j in range(mk.params.total_qubits)
    ]
    return TmacToken(mk.params, qubits)


def _msg_digest(params: TmacParams, msg: BitString) -> BitString:
    data = len(msg).to_bytes(8, "little") + msg.to_bytes()
    t = tag_word(TAG_TMAC, params.qubits_per_block, params.blocks) | (1 << 60)
    return BitString(hash_public(t, data, params.blocks), params.blocks)


_ZERO = BitString(0, 1)
_ONE = BitString(1, 1)


def _measure_qubit(q: SparseState, basis: int, rng: RandomSource) -> int:
    """Born-rule sample of one qubit; basis 1 measures in the +/- basis."""
    a0 = q.amplitude(_ZERO)
    a1 = q.amplitude(_ONE)
    if basis == 1:
        a0, a1 = (a0 + a1) / math.sqrt(2), (a0 - a1) / math.sqrt(2)
    return 1 if rng.uniform() < abs(a1) ** 2 else 0


def tmac_sign(token: TmacToken, msg: BitString, rng: RandomSource) -> BitString:
    """Measure block j in the basis of digest bit j; consumes the token."""
    if token.consumed:
        raise TokenConsumedError("token already consumed")
    token.consumed = True
    p = token.params
    digest = _msg_digest(p, msg)
    out_bits = []
    for j in range(p.blocks):
        basis = digest.bit(j)
        for i in range(p.qubits_per_block):
            q = token.qubits[j * p.qubits_per_block + i]
            out_bits.append(_measure_qubit(q, basis, rng))
    token.qubits = []
    return BitString.from_bits(out_bits)


def tmac_verify(mk: TmacKey, msg: BitString, sigma: BitString) -> bool:
    """Accept iff sigma matches v at every slot whose basis equals the digest bit."""
    p = mk.params
    if not isinstance(sigma, BitString) or sigma.width != p.total_qubits:
        return False
    digest = _msg_digest(p, msg)
    for j in range(p.blocks):
        basis = digest.bit(j)
        for i in range(p.qubits_per_block):
            k = j * p.qubits_per_block + i
            if mk.theta.bit(k) == basis and sigma.bit(k) != mk.values.bit(k):
                return False
    return True


# -- scripted one-timeness attacks -------------------------------------------

FORGERY_STRATEGIES = ("honest-reuse", "measure-computational", "random-guess")


@dataclass(frozen=True)
class ForgeryReport:
    strategy: str
    trials: int
    successes: int
    analytic: float

    @property
    def rate(self) -> float:
        return self.successes / self.trials


def find_messages_one_block_apart(params: TmacParams,
                                  rng: RandomSource) -> tuple[BitString, BitString]:
    """Message pair whose digests differ in exactly one block."""
    m1 = rng.bitstring(32)
    d1 = _msg_digest(params, m1)
    while True:
        m2 = rng.bitstring(32)
        if m2 != m1 and (d1 ^ _msg_digest(params, m2)).popcount() == 1:
            return m1, m2


def _forgery_analytic(strategy: str, params: TmacParams,
                      d1: BitString, d2: BitString) -> float:
    """Expected double-verification rate over the key's random basis bits."""
    lt = params.qubits_per_block
    if strategy == "honest-reuse":
        # blocks measured in the wrong basis for msg2 pass at (3/4)^lt each
        return 0.75 ** (lt * (d1 ^ d2).popcount())
    if strategy == "measure-computational":
        hot = sum(1 for j in range(params.blocks) if d1.bit(j) or d2.bit(j))
        return 0.75 ** (lt * hot)
    if strategy == "random-guess":
        acc = 1.0
        for j in range(params.blocks):
            acc *= (0.625 if d1.bit(j) == d2.bit(j) else 0.5) ** lt
        return acc
    raise ValueError(f"unknown strategy {strategy!r}")


def run_forgery_trials(strategy: str, params: TmacParams, trials: int,
                       rng: RandomSource) -> ForgeryReport:
    """Empirical double-sign success rate of a scripted token attack."""
    m1, m2 = find_messages_one_block_apart(params, rng.spawn(0))
    d1, d2 = _msg_digest(params, m1), _msg_digest(params, m2)
    analytic = _forgery_analytic(strategy, params, d1, d2)
    wins = 0
    r = rng.spawn(1)
    for _ in range(trials):
        mk = tmac_keygen(r.key(), params)
        token = tmac_token(mk)
        if strategy == "honest-reuse":
            s1 = tmac_sign(token, m1, r)
            s2 = s1
        elif strategy == "measure-computational":
            outs = [_measure_qubit(q, 0, r) for q in token.qubits]
            token.consumed = True
            s1 = s2 = BitString.from_bits(outs)
        elif strategy == "random-guess":
            s1 = r.bitstring(params.total_qubits)
            s2 = r.bitstring(params.total_qubits)
        else:
            raise ValueError(f"unknown strategy {strategy!r}")
        if tmac_verify(mk, m1, s1) and tmac_verify(mk, m2, s2):
            wins += 1
    return ForgeryReport(strategy, trials, wins, analytic)
