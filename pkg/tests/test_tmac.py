import math

import numpy as np
import pytest

from qpke.bits import BitString
from qpke.qsim import dense_reference
from qpke.rng import RandomSource
from qpke.tmac import (
    FORGERY_STRATEGIES,
    TmacParams,
    TokenConsumedError,
    _msg_digest,
    find_messages_one_block_apart,
    run_forgery_trials,
    tmac_keygen,
    tmac_sign,
    tmac_token,
    tmac_verify,
)

B = BitString.from_str
SMALL = TmacParams(qubits_per_block=6, blocks=4)


def test_keygen_shapes():
    mk = tmac_keygen(b"K" * 16, SMALL)
    assert mk.theta.width == 24
    assert mk.values.width == 24
    assert tmac_keygen(b"K" * 16, SMALL) == mk


def test_token_qubits_match_preparation():
    # dense-reference check of each slot state against the conjugate-coding rule
    mk = tmac_keygen(b"T" * 16, SMALL)
    token = tmac_token(mk)
    r = 1 / math.sqrt(2)
    for j, q in enumerate(token.qubits):
        v = mk.values.bit(j)
        vec = dense_reference(q)
        if mk.theta.bit(j) == 0:
            expect = np.array([1 - v, v], dtype=complex)
        else:
            expect = np.array([r, r * (-1) ** v], dtype=complex)
        assert np.allclose(vec, expect, atol=1e-12)


def test_all_computational_key_gives_basis_states():
    mk = tmac_keygen(b"T" * 16, SMALL)
    forced = type(mk)(mk.params, BitString(0, 24), mk.values)
    for j, q in enumerate(tmac_token(forced).qubits):
        vec = dense_reference(q)
        assert vec[forced.values.bit(j)] == 1.0 + 0j


def test_all_hadamard_key_gives_plus_minus_states():
    mk = tmac_keygen(b"T" * 16, SMALL)
    forced = type(mk)(mk.params, BitString((1 << 24) - 1, 24), mk.values)
    r = 1 / math.sqrt(2)
    for j, q in enumerate(tmac_token(forced).qubits):
        vec = dense_reference(q)
        sign = (-1) ** forced.values.bit(j)
        assert np.allclose(vec, [r, sign * r], atol=1e-12)


def test_honest_sign_verify_always():
    rng = RandomSource(3)
    for t in range(50):
        r = rng.spawn(t)
        mk = tmac_keygen(r.key(), SMALL)
        msg = r.bitstring(20)
        sigma = tmac_sign(tmac_token(mk), msg, r)
        assert tmac_verify(mk, msg, sigma)


def test_sign_outcomes_match_values_in_preparation_basis():
    rng = RandomSource(4)
    mk = tmac_keygen(b"V" * 16, SMALL)
    msg = B("110011")
    digest = _msg_digest(SMALL, msg)
    sigma = tmac_sign(tmac_token(mk), msg, rng)
    for j in range(SMALL.blocks):
        for i in range(SMALL.qubits_per_block):
            k = j * SMALL.qubits_per_block + i
            if mk.theta.bit(k) == digest.bit(j):
                assert sigma.bit(k) == mk.values.bit(k)


def test_token_consumed():
    rng = RandomSource(5)
    mk = tmac_keygen(b"W" * 16, SMALL)
    token = tmac_token(mk)
    tmac_sign(token, B("1"), rng)
    with pytest.raises(TokenConsumedError):
        tmac_sign(token, B("0"), rng)


def test_random_signature_rejected():
    rng = RandomSource(6)
    lt = SMALL.qubits_per_block
    rejections = 0
    for t in range(1000):
        r = rng.spawn(t)
        mk = tmac_keygen(r.key(), SMALL)
        if not tmac_verify(mk, B("01"), r.bitstring(SMALL.total_qubits)):
            rejections += 1
    assert rejections / 1000 >= 1 - 2 ** (-lt / 2)


def test_malformed_length_rejected():
    mk = tmac_keygen(b"X" * 16, SMALL)
    assert not tmac_verify(mk, B("0"), B("101"))


def test_message_pair_search():
    rng = RandomSource(7)
    m1, m2 = find_messages_one_block_apart(SMALL, rng)
    assert (_msg_digest(SMALL, m1) ^ _msg_digest(SMALL, m2)).popcount() == 1


@pytest.mark.parametrize("strategy", FORGERY_STRATEGIES)
def test_forgery_strategies_below_analytic_bound(strategy):
    # one-timeness at toy scale: empirical rate <= derived bound + 0.02
    params = TmacParams(qubits_per_block=16, blocks=2)
    report = run_forgery_trials(strategy, params, 10_000, RandomSource(11))
    assert report.rate <= report.analytic + 0.02


def test_honest_reuse_rate_near_analytic():
    # the informative strategy: (3/4)^lambda_t for a one-block-apart pair
    params = TmacParams(qubits_per_block=16, blocks=2)
    report = run_forgery_trials("honest-reuse", params, 10_000, RandomSource(13))
    assert report.analytic == pytest.approx(0.75 ** 16)
    assert abs(report.rate - report.analytic) <= 0.02
