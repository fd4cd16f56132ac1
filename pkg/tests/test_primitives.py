import subprocess
import sys

import pytest
from hypothesis import given, settings, strategies as st

from qpke.bits import BitString
from qpke.primitives import (
    BOT,
    derive_seed,
    is_bot,
    prf_eval,
    ske_ct_bits,
    ske_dec,
    ske_enc,
)
from qpke.rng import RandomSource
from qpke.sig import SigParams, sig_gen, sig_sign, sig_verify
from qpke.sponge import hash_bytes

B = BitString.from_str
TOY = SigParams(digest_bits=32, tree_depth=16)
FAST = SigParams(digest_bits=16, tree_depth=8)


# -- sponge -------------------------------------------------------------------

def test_sponge_stability():
    # pinned values; any change to the permutation or padding breaks replay
    assert hash_bytes(b"\x00" * 16, 1, b"", 64) == 0x0358D9F190518078
    assert hash_bytes(b"\x01" * 16, 7, b"abc", 64) == 0x8652B35AB5494ADF


def test_sponge_length_separation():
    a = hash_bytes(b"k" * 16, 3, b"\x00", 64)
    b = hash_bytes(b"k" * 16, 3, b"\x00\x00", 64)
    assert a != b


def test_sponge_long_output_prefix_free():
    short = hash_bytes(b"k" * 16, 3, b"data", 128)
    longer = hash_bytes(b"k" * 16, 3, b"data", 256)
    assert longer & ((1 << 128) - 1) == short


# -- signatures ---------------------------------------------------------------

def test_sig_gen_deterministic():
    a = sig_gen(b"S" * 16, TOY)
    b = sig_gen(b"S" * 16, TOY)
    assert a.vk == b.vk


def test_sig_gen_vk_width():
    assert sig_gen(b"S" * 16, TOY).vk.width == 32
    assert sig_gen(b"S" * 16, FAST).vk.width == 16


def test_sig_gen_distinct_seeds_distinct_vk():
    rng = RandomSource(1)
    vks = {sig_gen(rng.key(), TOY).vk for _ in range(1000)}
    assert len(vks) == 1000


def test_sig_sign_deterministic_and_correct():
    kp = sig_gen(b"T" * 16, TOY)
    msg = B("010101010101010101")
    s1 = sig_sign(kp, msg)
    kp.signing._sigs.clear()
    s2 = sig_sign(kp, msg)
    assert s1 == s2
    assert sig_verify(kp.vk, msg, s1, TOY)


def test_sig_sign_deterministic_across_processes():
    code = (
        "from qpke.bits import BitString\n"
        "from qpke.sig import SigParams, sig_gen, sig_sign\n"
        "kp = sig_gen(b'X' * 16, SigParams(digest_bits=16, tree_depth=8))\n"
        "print(sig_sign(kp, BitString.from_str('1011')).value)\n"
    )
    outs = {
        subprocess.run([sys.executable, "-c", code], capture_output=True,
                       text=True, check=True).stdout
        for _ in range(2)
    }
    assert len(outs) == 1
    kp = sig_gen(b"X" * 16, FAST)
    assert str(sig_sign(kp, B("1011")).value) == outs.pop().strip()


def test_sig_single_bit_flips_rejected():
    kp = sig_gen(b"U" * 16, TOY)
    msg = B("1100")
    sigma = sig_sign(kp, msg)
    rng = RandomSource(8)
    rejected = 0
    for _ in range(1000):
        pos = rng.integer(TOY.sig_len)
        flipped = sigma ^ BitString(1 << pos, TOY.sig_len)
        if not sig_verify(kp.vk, msg, flipped, TOY):
            rejected += 1
    assert rejected >= 990


def test_sig_wrong_message_rejected():
    kp = sig_gen(b"V" * 16, TOY)
    msg = B("0000")
    sigma = sig_sign(kp, msg)
    rng = RandomSource(9)
    for _ in range(200):
        other = rng.bitstring(12)
        if other != msg:
            assert not sig_verify(kp.vk, other, sigma, TOY)


def test_sig_truncated_rejected():
    kp = sig_gen(b"W" * 16, TOY)
    msg = B("01")
    sigma = sig_sign(kp, msg)
    assert not sig_verify(kp.vk, msg, sigma.slice(0, sigma.width - 8), TOY)
    assert not sig_verify(kp.vk, msg, B(""), TOY)


def test_sig_depth_zero_tree_is_single_ots():
    p = SigParams(digest_bits=16, tree_depth=0)
    kp = sig_gen(b"Y" * 16, p)
    msg = B("10101")
    sigma = sig_sign(kp, msg)
    assert sigma.width == p.sig_len == 2 * 16 * 16
    assert sig_verify(kp.vk, msg, sigma, p)
    assert not sig_verify(kp.vk, B("10100"), sigma, p)


# -- PRF ----------------------------------------------------------------------

def test_prf_deterministic_and_length():
    k = b"P" * 16
    x = B("0110")
    assert prf_eval(k, x, 128) == prf_eval(k, x, 128)
    for n in (1, 7, 128, 300):
        assert prf_eval(k, x, n).width == n


def test_prf_distinct_inputs_distinct_outputs():
    k = b"Q" * 16
    seen = {prf_eval(k, BitString(i, 20), 128) for i in range(10_000)}
    assert len(seen) == 10_000


def test_prf_output_bias():
    k = b"R" * 16
    ones = 0
    n_inputs, width = 10_000, 64
    for i in range(n_inputs):
        ones += prf_eval(k, BitString(i, 20), width).popcount()
    bias = abs(ones / (n_inputs * width) - 0.5)
    assert bias <= 0.02


def test_prf_leading_zeros_matter():
    k = b"Z" * 16
    assert prf_eval(k, B("01"), 64) != prf_eval(k, B("001"), 64)


def test_derive_seed_separation():
    m = b"M" * 16
    assert derive_seed(m, 1, 0) != derive_seed(m, 1, 1)
    assert derive_seed(m, 1, 0) != derive_seed(m, 2, 0)
    assert len(derive_seed(m, 1, 0)) == 16


# -- SKE ----------------------------------------------------------------------

@given(st.integers(min_value=1, max_value=200), st.integers(min_value=0),
       st.sampled_from(["cpa", "cca"]))
@settings(max_examples=40)
def test_ske_roundtrip(width, seed, mode):
    rng = RandomSource(seed)
    key = rng.key()
    msg = rng.bitstring(width)
    ct = ske_enc(key, msg, mode, rng=rng)
    assert ske_dec(key, ct, width, mode) == msg


def test_ske_cpa_ciphertext_length():
    rng = RandomSource(0)
    ct = ske_enc(b"K" * 16, B("1" * 40), "cpa", rng=rng)
    assert ct.width == 40 + 128 == ske_ct_bits(40, "cpa")
    assert ske_ct_bits(40, "cca") == 40 + 256


def test_ske_cca_rejects_any_bitflip():
    rng = RandomSource(5)
    key = b"L" * 16
    msg = B("10" * 16)
    ct = ske_enc(key, msg, "cca", rng=rng)
    for _ in range(1000):
        pos = rng.integer(ct.width)
        tampered = ct ^ BitString(1 << pos, ct.width)
        assert is_bot(ske_dec(key, tampered, msg.width, "cca"))


def test_ske_deterministic_with_explicit_nonce():
    key = b"N" * 16
    msg = B("0101")
    nonce = BitString(7, 128)
    assert ske_enc(key, msg, "cca", nonce=nonce) == ske_enc(key, msg, "cca",
                                                            nonce=nonce)


def test_bot_is_singleton_and_falsy():
    assert is_bot(BOT)
    assert not BOT
    assert not is_bot(None)
    assert repr(BOT) == "BOT"
