import math

import pytest

from qpke.base import (
    BaseCiphertext,
    BaseParams,
    BaseScheme,
    DetectWrapScheme,
    MultiBitScheme,
    NoSigStrawmanScheme,
    QuantumPublicKey,
)
from qpke.bits import BitString, RegisterLayout
from qpke.primitives import BOT, is_bot
from qpke.qsim import SparseState, exact_distribution
from qpke.rng import RandomSource
from qpke.sig import SigParams, sig_gen

B = BitString.from_str

FAST = BaseParams(sig=SigParams(digest_bits=16, tree_depth=8), u=16)
TINY = BaseParams(sig=SigParams(digest_bits=16, tree_depth=0), u=16)
TOY = BaseParams(sig=SigParams(digest_bits=32, tree_depth=16), u=16)


def test_skgen_deterministic_and_matches_sig_gen():
    sch = BaseScheme(FAST)
    sk1, vk1 = sch.skgen(b"s" * 16)
    sk2, vk2 = sch.skgen(b"s" * 16)
    assert vk1 == vk2
    assert vk1 == sig_gen(b"s" * 16, FAST.sig).vk


def test_pkgen_two_branch_equal_amplitudes():
    sch = BaseScheme(FAST)
    sk, vk = sch.skgen(b"p" * 16)
    pk = sch.pkgen(sk, RandomSource(1))
    amps = list(pk.state.terms.values())
    assert len(amps) == 2
    for a in amps:
        assert abs(a - 1 / math.sqrt(2)) < 1e-12


def test_pkgen_branches_differ_in_first_bit():
    sch = BaseScheme(FAST)
    sk, _ = sch.skgen(b"p" * 16)
    rng = RandomSource(2)
    for _ in range(20):
        pk = sch.pkgen(sk, rng)
        firsts = sorted(bs.bit(0) for bs in pk.state.support())
        assert firsts == [0, 1]
        x0, x1 = pk.state.support()
        assert not (x0 ^ x1).is_zero()


def test_pkgen_fresh_r_values():
    sch = BaseScheme(BaseParams(sig=SigParams(16, 0), u=64))
    sk, _ = sch.skgen(b"r" * 16)
    rng = RandomSource(3)
    rs = {sch.pkgen(sk, rng).r for _ in range(1000)}
    assert len(rs) == 1000


def test_enc_honest_always_top_and_parity_holds():
    sch = BaseScheme(FAST)
    sk, vk = sch.skgen(b"e" * 16)
    rng = RandomSource(4)
    for t in range(40):
        pk = sch.pkgen(sk, rng)
        x0, x1 = sch.branch_strings(sk, pk.r)
        b = t % 2
        ct = sch.enc(vk, pk, BitString(b, 1), rng)
        assert not is_bot(ct)
        assert ct.d.dot(x0 ^ x1) == b
        assert sch.dec(sk, ct) == BitString(b, 1)


def test_enc_rejects_fully_invalid_superposition():
    sch = BaseScheme(FAST)
    sk, vk = sch.skgen(b"f" * 16)
    rng = RandomSource(5)
    pk = sch.pkgen(sk, rng)
    w = sch.params.branch_bits
    garbage = SparseState(sch.layout(), {
        BitString(3, w): 2 ** -0.5, BitString(5, w): 2 ** -0.5})
    for _ in range(20):
        assert is_bot(sch.enc(vk, QuantumPublicKey(pk.r, garbage),
                              BitString(1, 1), rng))


def test_enc_half_valid_superposition():
    # one honest branch, one garbage branch: accept with prob 1/2 and the
    # post-accept state is the single valid branch
    sch = BaseScheme(FAST)
    sk, vk = sch.skgen(b"g" * 16)
    rng = RandomSource(6)
    pk = sch.pkgen(sk, rng)
    x0, _x1 = sch.branch_strings(sk, pk.r)
    half = SparseState(sch.layout(), {
        x0: 2 ** -0.5,
        BitString(12345, sch.params.branch_bits): 2 ** -0.5,
    })
    tops = 0
    n = 400
    for _ in range(n):
        st = sch.verify_stage(vk, QuantumPublicKey(pk.r, half), rng)
        if not is_bot(st):
            tops += 1
            comp = exact_distribution(st, "computational", ["A", "B"])
            assert set(comp) == {x0}
    assert abs(tops / n - 0.5) < 0.08


def test_enc_rejects_wrong_register_shape():
    sch = BaseScheme(FAST)
    sk, vk = sch.skgen(b"h" * 16)
    rng = RandomSource(7)
    pk = sch.pkgen(sk, rng)
    bad_layout = RegisterLayout.of(A=1, B=sch.params.sig.sig_len - 8)
    bad = SparseState(bad_layout, {BitString(0, bad_layout.width): 1.0})
    assert is_bot(sch.enc(vk, QuantumPublicKey(pk.r, bad), B("0"), rng))


def test_post_accept_support_containment_with_entangled_register():
    # literal finite-scale version of the two-branch collapse lemma: with no
    # valid branch outside {x0, x1}, accepting projects onto those branches
    sch = BaseScheme(FAST)
    sk, vk = sch.skgen(b"i" * 16)
    rng = RandomSource(8)
    pk = sch.pkgen(sk, rng)
    x0, x1 = sch.branch_strings(sk, pk.r)
    layout = RegisterLayout.of(A=1, B=sch.params.sig.sig_len, C=2)
    c0, c1, c2 = B("00"), B("10"), B("11")
    entangled = SparseState(layout, {
        x0.cat(c0): 0.5,
        x1.cat(c1): 0.5 * 1j,
        BitString(999, x0.width).cat(c2): 2 ** -0.5,
    })
    seen_top = 0
    for _ in range(100):
        st = sch.verify_stage(vk, QuantumPublicKey(pk.r, entangled), rng)
        if is_bot(st):
            continue
        seen_top += 1
        support = {bs.slice(0, x0.width) for bs in st.support()}
        assert support == {x0, x1}
        # amplitudes renormalized to the surviving mass
        for bs, amp in st.terms.items():
            assert abs(abs(amp) - 1 / math.sqrt(2)) < 1e-9
    assert seen_top > 0


def test_dec_formula_on_spec_strings():
    # d . (0||s0 ^ 1||s1) with the worked 4-bit example strings
    x0 = B("0").cat(B("0101"))
    x1 = B("1").cat(B("0110"))
    assert x0 ^ x1 == B("10011")
    assert B("10000").dot(x0 ^ x1) == 1
    assert B("00000").dot(x0 ^ x1) == 0


def test_dec_all_zero_d_gives_zero():
    sch = BaseScheme(FAST)
    sk, vk = sch.skgen(b"j" * 16)
    rng = RandomSource(9)
    pk = sch.pkgen(sk, rng)
    ct = sch.enc(vk, pk, B("1"), rng)
    zero = BaseCiphertext(ct.r, BitString(0, ct.d.width))
    assert sch.dec(sk, zero) == B("0")


def test_dec_rejects_bad_widths_and_bot():
    sch = BaseScheme(FAST)
    sk, _ = sch.skgen(b"k" * 16)
    assert is_bot(sch.dec(sk, BOT))
    assert is_bot(sch.dec(sk, BaseCiphertext(B("01"), BitString(0, 4))))


def test_roundtrip_many_trials():
    sch = BaseScheme(FAST)
    sk, vk = sch.skgen(b"l" * 16)
    rng = RandomSource(10)
    for t in range(200):
        pk = sch.pkgen(sk, rng)
        msg = BitString(t % 2, 1)
        assert sch.dec(sk, sch.enc(vk, pk, msg, rng)) == msg


def test_toy_profile_roundtrip():
    sch = BaseScheme(TOY)
    sk, vk = sch.skgen(b"m" * 16)
    rng = RandomSource(11)
    for t in range(20):
        pk = sch.pkgen(sk, rng)
        msg = BitString(t % 2, 1)
        assert sch.dec(sk, sch.enc(vk, pk, msg, rng)) == msg


# -- multi-bit ----------------------------------------------------------------

def test_multi_slots_are_independent_and_rederivable():
    sch = MultiBitScheme(FAST, 4)
    sks, vks = sch.skgen(b"n" * 16)
    assert len(set(vks)) == 4
    sks2, vks2 = MultiBitScheme(FAST, 4).skgen(b"n" * 16)
    assert vks == vks2


def test_multi_roundtrip():
    sch = MultiBitScheme(FAST, 8)
    sks, vks = sch.skgen(b"o" * 16)
    rng = RandomSource(12)
    msg = B("10110010")
    pks = sch.pkgen(sks, rng)
    ct = sch.enc(vks, pks, msg, rng)
    assert sch.dec(sks, ct) == msg


def test_multi_bot_propagates():
    sch = MultiBitScheme(FAST, 3)
    sks, vks = sch.skgen(b"p" * 16)
    rng = RandomSource(13)
    pks = list(sch.pkgen(sks, rng))
    w = sch.params.branch_bits
    garbage = SparseState(sch.slots[0].layout(),
                          {BitString(7, w): 1.0})
    pks[1] = QuantumPublicKey(pks[1].r, garbage)
    assert is_bot(sch.enc(vks, tuple(pks), B("101"), rng))


def test_multi_empty_message():
    sch = MultiBitScheme(FAST, 0)
    sks, vks = sch.skgen(b"q" * 16)
    rng = RandomSource(14)
    ct = sch.enc(vks, sch.pkgen(sks, rng), B(""), rng)
    assert sch.dec(sks, ct) == B("")


# -- detect wrapper -----------------------------------------------------------

EPH = SigParams(digest_bits=16, tree_depth=0)


def _detect_scheme(msg_bits=2):
    inner = MultiBitScheme(TINY, msg_bits + EPH.sig_len)
    return DetectWrapScheme(inner, EPH)


def test_detect_wrap_roundtrip():
    sch = _detect_scheme()
    sk, vk = sch.skgen(b"r" * 16)
    rng = RandomSource(15)
    pk = sch.pkgen(sk, rng)
    ct = sch.enc(vk, pk, B("10"), rng)
    assert sch.dec(sk, ct) == B("10")


def test_detect_wrap_wrong_svk_rejected():
    sch = _detect_scheme()
    sk, vk = sch.skgen(b"s" * 16)
    rng = RandomSource(16)
    ct = sch.enc(vk, sch.pkgen(sk, rng), B("01"), rng)
    other = sig_gen(b"z" * 16, EPH).vk
    forged = type(ct)(other, ct.inner)
    assert is_bot(sch.dec(sk, forged))


def _tamper_slots(sch, pks, rng, how_many):
    # garbage-branch tamper: replace a slot's state with an invalid branch pair
    pks = list(pks)
    w = sch.inner.params.branch_bits
    for idx in rng.subset(len(pks), how_many):
        junk = SparseState(sch.inner.slots[0].layout(), {
            rng.bitstring(w): 2 ** -0.5,
            rng.bitstring(w): 2 ** -0.5,
        })
        pks[idx] = QuantumPublicKey(pks[idx].r, junk)
    return tuple(pks)


def test_detect_wrap_tamper_never_wrong_message():
    sch = _detect_scheme(msg_bits=1)
    sk, vk = sch.skgen(b"t" * 16)
    rng = RandomSource(17)
    wrong = 0
    bots = 0
    for t in range(500):
        pk = sch.pkgen(sk, rng)
        pk = _tamper_slots(sch, pk, rng, 1 + rng.integer(4))
        msg = BitString(t % 2, 1)
        ct = sch.enc(vk, pk, msg, rng)
        out = sch.dec(sk, ct) if not is_bot(ct) else BOT
        if is_bot(out):
            bots += 1
        elif out != msg:
            wrong += 1
    assert wrong == 0
    assert bots > 0


# -- strawman -----------------------------------------------------------------

def test_strawman_roundtrip():
    sch = NoSigStrawmanScheme()
    sk, vk = sch.skgen(b"u" * 16)
    rng = RandomSource(18)
    for t in range(50):
        pk = sch.pkgen(sk, rng)
        msg = BitString(t % 2, 1)
        assert sch.dec(sk, sch.enc(vk, pk, msg, rng)) == msg


def test_strawman_accepts_substituted_key():
    # the failure mode the real scheme's verification blocks
    sch = NoSigStrawmanScheme()
    sk, vk = sch.skgen(b"v" * 16)
    rng = RandomSource(19)
    atk_sk, _ = sch.skgen(b"w" * 16)
    for t in range(100):
        fake = sch.pkgen(atk_sk, rng)
        msg = BitString(t % 2, 1)
        ct = sch.enc(vk, fake, msg, rng)
        x0, x1 = sch.branch_strings(atk_sk, fake.r)
        assert ct.d.dot(x0 ^ x1) == msg.value
