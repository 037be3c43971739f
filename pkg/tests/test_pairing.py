import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from abekit.errors import DeserializationError
from abekit.pairing import (G1, GT, GroupElement, SecurityLevel, suite_init)

LEVELS = [SecurityLevel.S80, SecurityLevel.S112, SecurityLevel.S128]


@pytest.fixture(scope="module", params=LEVELS, ids=lambda l: f"S{l.bits}")
def suite(request):
    return suite_init(request.param)


def test_parameter_sizes():
    for level, fq2_bits, r_bits in [(SecurityLevel.S80, 1024, 160),
                                    (SecurityLevel.S112, 2048, 224),
                                    (SecurityLevel.S128, 3072, 256)]:
        s = suite_init(level)
        assert 2 * s.q.bit_length() == fq2_bits
        assert s.p.bit_length() == r_bits
        assert (s.q + 1) == s.cofactor * s.p
        assert s.q % 4 == 3


def test_generator_deterministic(suite):
    other = suite_init(suite.level)
    assert other.g == suite.g
    assert suite.g.value is not None
    assert suite._on_curve(suite.g.value)
    # g has exact order p
    assert suite.group_exp(suite.g, int(suite.p)).value is None


def test_pairing_bilinearity(suite):
    rng = random.Random(suite.level.bits)
    n_cases = 25 if suite.level is SecurityLevel.S80 else 5
    for _ in range(n_cases):
        a = suite.random_scalar(rng)
        b = suite.random_scalar(rng)
        ga = suite.group_exp(suite.g, a)
        gb = suite.group_exp(suite.g, b)
        lhs = suite.pairing(ga, gb)
        rhs = suite.group_exp(suite.pairing(suite.g, suite.g), a * b)
        assert lhs == rhs


def test_pairing_non_degenerate(suite):
    e = suite.pairing(suite.g, suite.g)
    assert e != suite.identity(GT)
    # and has order p
    assert suite.group_exp(e, int(suite.p)) == suite.identity(GT)


def test_pairing_with_hashed_points(suite):
    rng = random.Random(7)
    h = suite.hash_to_group(b"test", b"attr")
    a = suite.random_scalar(rng)
    assert suite.pairing(suite.group_exp(h, a), suite.g) == \
        suite.group_exp(suite.pairing(h, suite.g), a)


@settings(max_examples=400, deadline=None)
@given(a=st.integers(min_value=0, max_value=2**160),
       b=st.integers(min_value=0, max_value=2**160))
def test_exponent_laws_g1(a, b):
    suite = suite_init(SecurityLevel.S80)
    p = int(suite.p)
    ga = suite.group_exp(suite.g, a)
    gb = suite.group_exp(suite.g, b)
    assert suite.mul(ga, gb) == suite.group_exp(suite.g, (a + b) % p)
    assert suite.group_exp(ga, b) == suite.group_exp(suite.g, a * b % p)
    assert suite.mul(ga, suite.inv(ga)).value is None


@settings(max_examples=200, deadline=None)
@given(a=st.integers(min_value=1, max_value=2**160),
       b=st.integers(min_value=1, max_value=2**160))
def test_exponent_laws_gt(a, b):
    suite = suite_init(SecurityLevel.S80)
    p = int(suite.p)
    e = suite.pairing(suite.g, suite.g)
    ea = suite.group_exp(e, a)
    eb = suite.group_exp(e, b)
    assert suite.mul(ea, eb) == suite.group_exp(e, (a + b) % p)
    assert suite.group_exp(ea, b) == suite.group_exp(e, a * b % p)
    assert suite.mul(ea, suite.inv(ea)) == suite.identity(GT)


def test_hash_to_group_properties(suite):
    h1 = suite.hash_to_group(b"tag", b"payload")
    h2 = suite.hash_to_group(b"tag", b"payload")
    assert h1 == h2
    assert suite._on_curve(h1.value)
    # p-torsion after cofactor clearing
    assert suite.group_exp(h1, int(suite.p)).value is None
    # domain separation: tag and payload both matter
    assert suite.hash_to_group(b"tag2", b"payload") != h1
    assert suite.hash_to_group(b"tag", b"payload2") != h1
    # prefix ambiguity is blocked by length framing
    assert suite.hash_to_group(b"ta", b"gpayload") != h1


def test_serialization_round_trips(suite):
    rng = random.Random(3)
    a = suite.random_scalar(rng)
    elems = [suite.g,
             suite.group_exp(suite.g, a),
             suite.identity(G1),
             suite.pairing(suite.g, suite.g),
             suite.identity(GT),
             suite.hash_to_group(b"t", b"x")]
    for el in elems:
        blob = suite.serialize_element(el)
        back, off = suite.deserialize_element(blob, 0)
        assert back == el and off == len(blob)
    blob = suite.serialize_scalar(a)
    back, off = suite.deserialize_scalar(blob, 0)
    assert back == a and off == len(blob)


def test_deserialize_rejects_garbage(suite80):
    s = suite80
    with pytest.raises(DeserializationError):
        s.deserialize_element(b"\xff\x00\x01\x00", 0)
    # off-curve point
    blob = bytearray(s.serialize_element(s.g))
    blob[-1] ^= 1
    with pytest.raises(DeserializationError):
        s.deserialize_element(bytes(blob), 0)
    with pytest.raises(DeserializationError):
        s.deserialize_scalar(b"\x01" + b"\x00" * 20, 0)


def test_counters(suite80):
    s = suite80
    before = s.counters.snapshot()
    s.group_exp(s.g, 12345)
    s.hash_to_group(b"t", b"y")
    s.pairing(s.g, s.g)
    e = s.pairing(s.g, s.g)
    s.group_exp(e, 7)
    d = s.counters.diff(before)
    assert (d.exp_g1, d.exp_g2, d.exp_gt) == (1, 0, 1)
    assert d.pairings == 2
    assert d.hash_to_group == 1
    assert d.exp_total == 2
    # mul/inv/identity are free
    before = s.counters.snapshot()
    s.mul(s.g, s.g)
    s.inv(s.g)
    s.identity(GT)
    d = s.counters.diff(before)
    assert (d.exp_g1, d.exp_gt, d.pairings, d.hash_to_group) == (0, 0, 0, 0)


def test_random_scalar_range_and_reproducibility(suite80):
    s = suite80
    xs = [s.random_scalar(random.Random(42)) for _ in range(3)]
    assert xs[0] == xs[1] == xs[2]
    rng = random.Random(1)
    for _ in range(100):
        x = s.random_scalar(rng)
        assert 1 <= x < int(s.p)


def test_symmetric_pairing_order_invariance(suite80):
    s = suite80
    rng = random.Random(9)
    a, b = s.random_scalar(rng), s.random_scalar(rng)
    ga, gb = s.group_exp(s.g, a), s.group_exp(s.g, b)
    assert s.pairing(ga, gb) == s.pairing(gb, ga)
