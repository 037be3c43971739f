"""Instrumented bilinear pairing suite.

The suite wraps a symmetric (type-1) pairing on the supersingular curve
y^2 = x^3 + x over F_q with q = h*r - 1, q = 3 mod 4, r prime.  The
distortion map (x, y) -> (-x, i*y) into E(F_q^2) turns the Tate pairing
into a symmetric bilinear map e: G1 x G1 -> GT, where GT is the order-r
subgroup of F_q^2.  All bignum arithmetic is delegated to gmpy2.

Every group operation that dominates scheme cost (hash-to-group,
exponentiation, pairing) bumps a counter on the suite; benchmark code
reads them via snapshot/diff.
"""

from __future__ import annotations

import enum
import hashlib
import time
from dataclasses import dataclass, field

from gmpy2 import mpz, invert, is_prime, powmod

from .errors import DeserializationError


class SecurityLevel(enum.Enum):
    """Symmetric-equivalent strength of the group parameters."""

    S80 = 80
    S112 = 112
    S128 = 128

    @property
    def bits(self) -> int:
        return self.value

    @classmethod
    def from_bits(cls, bits: int) -> "SecurityLevel":
        return cls(int(bits))


# Fixed, versioned parameter table (v1).  One entry per level:
#   r: prime group order (scalar modulus), sized 160/224/256 bits to match
#      80/112/128-bit symmetric strength;
#   q: field prime with q = h*r - 1, q = 3 mod 4, sized so the pairing
#      target field F_q^2 has 1024/2048/3072 bits (the RSA equivalences
#      for the three levels);
#   h: even cofactor.
# Generated deterministically: r = next_prime(2^(b-1) + 2^(b-2)), h the
# smallest admissible even cofactor.
_PARAM_TABLE = {
    SecurityLevel.S80: (
        "0xc000000000000000000000000000000000000019",
        "0x8000000000000000000000000000000000000000000000000000000000000000000000"
        "00000000000000002671c71c71c71c71c71c71c71c71c764c84bda17f7",
        "0xaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaa9471c71c71c71c71c71c71c71c71c71c"
        "71c71c74abda12f6b8",
    ),
    SecurityLevel.S112: (
        "0xc0000000000000000000000000000000000000000000000000000025",
        "0x8000000000000000000000000000000000000000000000000000000000000000000000"
        "000000000000000000000000000000000000000000000000000000000000000000000000"
        "000000000000000000000000000000000000000000000000000000052d2f684bda12f684"
        "bda1023766b74f0329161f9add3c0ca4587e6c744f",
        "0xaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaa89c71c71c71c71c7"
        "1c71c71c71c71c71c71c71c71c71c71c71c71c781da12f684bda12f684bda12f684bda12"
        "f684bda12f684bda12f68384f4f0329161f9add3c0ca4587e6b74f0a10",
    ),
    SecurityLevel.S128: (
        "0xc000000000000000000000000000000000000000000000000000000000000031",
        "0x8000000000000000000000000000000000000000000000000000000000000000000000"
        "000000000000000000000000000000000000000000000000000000000000000000000000"
        "000000000000000000000000000000000000000000000000000000000000000000000000"
        "000000000000000000000000000000000000000000000000000000000000000000000000"
        "000000000000000000000000000000043c937d5dc2e5a99cf8a021b641511e8d2b3183af"
        "ef24df5770b96a67351a53ddff",
        "0xaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaa7f1c71c7"
        "1c71c71c71c71c71c71c71c71c71c71c71c71c71c71c71c71c71c7278f684bda12f684bd"
        "a12f684bda12f684bda12f684bda12f684bda12f684bd73cbc0ca4587e6b74f0329161f9"
        "add3c0ca4587e6b74f0329161f9add3c0ca511d55770b96a673e28086d905447a34acc60"
        "ebfbc937d5dc2e5a99cf8a021b34c83e00",
    ),
}

G1 = "G1"
G2 = "G2"  # alias group: the suite is symmetric, kept for schema parity
GT = "GT"

_ELEMENT_TAGS = {G1: 0x01, G2: 0x02, GT: 0x03}
_TAG_GROUPS = {v: k for k, v in _ELEMENT_TAGS.items()}
_SCALAR_TAG = 0x00

_H2G_PREFIX = b"abekit/h2g/v1"
_GENERATOR_TAG = b"abekit/generator/v1"


@dataclass
class OpCounters:
    """Monotonic per-suite operation counters."""

    exp_g1: int = 0
    exp_g2: int = 0
    exp_gt: int = 0
    pairings: int = 0
    hash_to_group: int = 0

    def snapshot(self) -> "OpCounters":
        return OpCounters(self.exp_g1, self.exp_g2, self.exp_gt,
                          self.pairings, self.hash_to_group)

    def diff(self, earlier: "OpCounters") -> "OpCounters":
        return OpCounters(
            self.exp_g1 - earlier.exp_g1,
            self.exp_g2 - earlier.exp_g2,
            self.exp_gt - earlier.exp_gt,
            self.pairings - earlier.pairings,
            self.hash_to_group - earlier.hash_to_group,
        )

    @property
    def exp_total(self) -> int:
        return self.exp_g1 + self.exp_g2 + self.exp_gt


@dataclass(frozen=True)
class GroupElement:
    """Opaque group element.  value is (x, y) / None for G1 points and
    an (a, b) pair representing a + b*i in F_q^2 for GT."""

    group: str
    value: tuple | None


# ---------------------------------------------------------------------------
# F_q^2 arithmetic (i^2 = -1, valid because q = 3 mod 4)

def _fq2_mul(x, y, q):
    a, b = x
    c, d = y
    return ((a * c - b * d) % q, (a * d + b * c) % q)


def _fq2_sqr(x, q):
    a, b = x
    return ((a * a - b * b) % q, (2 * a * b) % q)


def _fq2_inv(x, q):
    a, b = x
    n = invert((a * a + b * b) % q, q)
    return ((a * n) % q, (-b * n) % q)


def _fq2_pow(x, e, q):
    if e == 0:
        return (mpz(1), mpz(0))
    result = x
    for bit in bin(e)[3:]:
        result = _fq2_sqr(result, q)
        if bit == "1":
            result = _fq2_mul(result, x, q)
    return result


# ---------------------------------------------------------------------------
# Curve arithmetic on y^2 = x^3 + x over F_q (affine + Jacobian)

def _ec_add_affine(P, Q, q):
    if P is None:
        return Q
    if Q is None:
        return P
    x1, y1 = P
    x2, y2 = Q
    if x1 == x2:
        if (y1 + y2) % q == 0:
            return None
        lam = (3 * x1 * x1 + 1) * invert(2 * y1, q) % q
    else:
        lam = (y2 - y1) * invert(x2 - x1, q) % q
    x3 = (lam * lam - x1 - x2) % q
    y3 = (lam * (x1 - x3) - y1) % q
    return (x3, y3)


def _ec_neg(P, q):
    if P is None:
        return None
    return (P[0], (-P[1]) % q)


def _jac_double(P, q):
    X, Y, Z = P
    if Y == 0 or Z == 0:
        return (mpz(0), mpz(1), mpz(0))
    XX = X * X % q
    YY = Y * Y % q
    YYYY = YY * YY % q
    ZZ = Z * Z % q
    S = 2 * ((X + YY) * (X + YY) - XX - YYYY) % q
    M = (3 * XX + ZZ * ZZ) % q  # curve coefficient a = 1
    X3 = (M * M - 2 * S) % q
    Y3 = (M * (S - X3) - 8 * YYYY) % q
    Z3 = 2 * Y * Z % q
    return (X3, Y3, Z3)


def _jac_add_mixed(P, Q, q):
    # P Jacobian, Q affine
    X1, Y1, Z1 = P
    if Z1 == 0:
        return (Q[0], Q[1], mpz(1))
    x2, y2 = Q
    Z1Z1 = Z1 * Z1 % q
    U2 = x2 * Z1Z1 % q
    S2 = y2 * Z1 * Z1Z1 % q
    H = (U2 - X1) % q
    R = (S2 - Y1) % q
    if H == 0:
        if R == 0:
            return _jac_double(P, q)
        return (mpz(0), mpz(1), mpz(0))
    HH = H * H % q
    HHH = H * HH % q
    V = X1 * HH % q
    X3 = (R * R - HHH - 2 * V) % q
    Y3 = (R * (V - X3) - Y1 * HHH) % q
    Z3 = Z1 * H % q
    return (X3, Y3, Z3)


def _ec_mul(k, P, q):
    """k * P with P affine (or None); returns affine or None."""
    if P is None or k == 0:
        return None
    R = (mpz(0), mpz(1), mpz(0))
    for bit in bin(k)[2:]:
        R = _jac_double(R, q)
        if bit == "1":
            R = _jac_add_mixed(R, P, q)
    X, Y, Z = R
    if Z == 0:
        return None
    zinv = invert(Z, q)
    zinv2 = zinv * zinv % q
    return (X * zinv2 % q, Y * zinv2 * zinv % q)


class PairingSuite:
    """Security-level-parameterized symmetric pairing context.

    Confined to one logical thread: counters and timing buckets are
    mutated without synchronization.
    """

    def __init__(self, level: SecurityLevel):
        r_hex, q_hex, h_hex = _PARAM_TABLE[level]
        self.level = level
        self.p = mpz(r_hex, 16)       # scalar modulus (group order)
        self.q = mpz(q_hex, 16)       # field prime
        self.cofactor = mpz(h_hex, 16)
        assert (self.q + 1) == self.cofactor * self.p
        assert self.q % 4 == 3
        self._sqrt_exp = (self.q + 1) // 4
        self.qbytes = (self.q.bit_length() + 7) // 8
        self.rbytes = (self.p.bit_length() + 7) // 8
        self.counters = OpCounters()
        self.timing_enabled = False
        self.op_time = {"hash_to_group": 0.0, "exp": 0.0, "pairing": 0.0}
        self._h2g_cache = {}
        self.g = GroupElement(G1, _generator(level, self))

    # -- internal helpers ---------------------------------------------------

    def _charge(self, op_class: str, t0: float) -> None:
        if self.timing_enabled:
            self.op_time[op_class] += time.perf_counter() - t0

    def _hash_point(self, domain_tag: bytes, data: bytes):
        q = self.q
        ctr = 0
        prefix = (_H2G_PREFIX + len(domain_tag).to_bytes(2, "big")
                  + domain_tag + data)
        while True:
            shake = hashlib.shake_256(prefix + ctr.to_bytes(4, "big"))
            x = mpz(int.from_bytes(shake.digest(self.qbytes + 16), "big")) % q
            t = (x * x * x + x) % q
            if t != 0:
                y = powmod(t, self._sqrt_exp, q)
                if y * y % q == t:
                    y = min(y, q - y)
                    P = _ec_mul(self.cofactor, (x, y), q)
                    if P is not None:
                        return P
            ctr += 1

    def _on_curve(self, P) -> bool:
        if P is None:
            return True
        x, y = P
        return (y * y - (x * x * x + x)) % self.q == 0

    # -- public operations --------------------------------------------------

    def identity(self, group: str) -> GroupElement:
        if group == GT:
            return GroupElement(GT, (mpz(1), mpz(0)))
        return GroupElement(group, None)

    def hash_to_group(self, domain_tag: bytes, data: bytes) -> GroupElement:
        # deterministic, so repeated inputs (attribute universes are
        # small) are memoized; the counter tracks logical operations
        t0 = time.perf_counter()
        key = (domain_tag, data)
        P = self._h2g_cache.get(key)
        if P is None:
            P = self._hash_point(domain_tag, data)
            self._h2g_cache[key] = P
        self.counters.hash_to_group += 1
        self._charge("hash_to_group", t0)
        return GroupElement(G1, P)

    def group_exp(self, base: GroupElement, e: int) -> GroupElement:
        t0 = time.perf_counter()
        e = int(e) % int(self.p)
        if base.group == GT:
            value = _fq2_pow(base.value, e, self.q)
            self.counters.exp_gt += 1
        elif base.group == G1:
            value = _ec_mul(e, base.value, self.q)
            self.counters.exp_g1 += 1
        elif base.group == G2:
            value = _ec_mul(e, base.value, self.q)
            self.counters.exp_g2 += 1
        else:
            raise ValueError(f"unknown group {base.group!r}")
        self._charge("exp", t0)
        return GroupElement(base.group, value)

    def mul(self, a: GroupElement, b: GroupElement) -> GroupElement:
        if a.group != b.group:
            raise ValueError(f"group mismatch: {a.group} vs {b.group}")
        if a.group == GT:
            return GroupElement(GT, _fq2_mul(a.value, b.value, self.q))
        return GroupElement(a.group, _ec_add_affine(a.value, b.value, self.q))

    def inv(self, a: GroupElement) -> GroupElement:
        if a.group == GT:
            return GroupElement(GT, _fq2_inv(a.value, self.q))
        return GroupElement(a.group, _ec_neg(a.value, self.q))

    def pairing(self, x: GroupElement, y: GroupElement) -> GroupElement:
        if x.group not in (G1, G2) or y.group not in (G1, G2):
            raise ValueError("pairing arguments must be source-group elements")
        t0 = time.perf_counter()
        value = self._tate(x.value, y.value)
        self.counters.pairings += 1
        self._charge("pairing", t0)
        return GroupElement(GT, value)

    def random_scalar(self, rng) -> int:
        return rng.randrange(int(self.p))

    # -- pairing internals ----------------------------------------------------

    def _tate(self, P, Q):
        """Modified Tate pairing e(P, phi(Q)) with phi(x,y) = (-x, i*y)."""
        q = self.q
        if P is None or Q is None:
            return (mpz(1), mpz(0))
        xq, yq = Q
        mxq = (-xq) % q
        px, py = P
        vx, vy = px, py
        v_inf = False
        f = (mpz(1), mpz(0))
        for bit in bin(self.p)[3:]:  # bits after the leading 1
            f = _fq2_sqr(f, q)
            if not v_inf:
                lam = (3 * vx * vx + 1) * invert(2 * vy, q) % q
                c0 = (lam * (vx - mxq) - vy) % q
                f = _fq2_mul(f, (c0, yq), q)
                x3 = (lam * lam - 2 * vx) % q
                vy = (lam * (vx - x3) - vy) % q
                vx = x3
            if bit == "1":
                if v_inf:
                    vx, vy = px, py
                    v_inf = False
                    # vertical line lies in F_q: killed by final exponentiation
                elif vx == px and (vy + py) % q == 0:
                    v_inf = True  # vertical line, same reasoning
                else:
                    if vx == px:
                        lam = (3 * vx * vx + 1) * invert(2 * vy, q) % q
                    else:
                        lam = (vy - py) * invert(vx - px, q) % q
                    c0 = (lam * (vx - mxq) - vy) % q
                    f = _fq2_mul(f, (c0, yq), q)
                    x3 = (lam * lam - vx - px) % q
                    vy = (lam * (vx - x3) - vy) % q
                    vx = x3
        # final exponentiation: (q^2 - 1)/r = (q - 1) * cofactor
        a, b = f
        n = invert((a * a + b * b) % q, q)
        g = (((a * a - b * b) % q) * n % q, (-2 * a * b % q) * n % q)
        return _fq2_pow(g, self.cofactor, q)

    # -- serialization --------------------------------------------------------

    def serialize_element(self, el: GroupElement) -> bytes:
        tag = _ELEMENT_TAGS[el.group]
        if el.group == GT:
            a, b = el.value
            payload = (int(a).to_bytes(self.qbytes, "big")
                       + int(b).to_bytes(self.qbytes, "big"))
        else:
            if el.value is None:
                payload = b"\x00"
            else:
                x, y = el.value
                payload = (b"\x04" + int(x).to_bytes(self.qbytes, "big")
                           + int(y).to_bytes(self.qbytes, "big"))
        return bytes([tag]) + len(payload).to_bytes(2, "big") + payload

    def deserialize_element(self, data: bytes, offset: int = 0):
        """Returns (element, next_offset)."""
        try:
            tag = data[offset]
            length = int.from_bytes(data[offset + 1:offset + 3], "big")
            payload = data[offset + 3:offset + 3 + length]
            if len(payload) != length:
                raise DeserializationError("truncated element")
            group = _TAG_GROUPS.get(tag)
            if group is None:
                raise DeserializationError(f"unknown element tag {tag}")
            if group == GT:
                if length != 2 * self.qbytes:
                    raise DeserializationError("bad GT length")
                a = mpz(int.from_bytes(payload[:self.qbytes], "big"))
                b = mpz(int.from_bytes(payload[self.qbytes:], "big"))
                if a >= self.q or b >= self.q:
                    raise DeserializationError("GT coordinate out of range")
                el = GroupElement(GT, (a, b))
            elif payload == b"\x00":
                el = GroupElement(group, None)
            else:
                if length != 1 + 2 * self.qbytes or payload[0] != 0x04:
                    raise DeserializationError("bad point encoding")
                x = mpz(int.from_bytes(payload[1:1 + self.qbytes], "big"))
                y = mpz(int.from_bytes(payload[1 + self.qbytes:], "big"))
                if x >= self.q or y >= self.q:
                    raise DeserializationError("point coordinate out of range")
                el = GroupElement(group, (x, y))
                if not self._on_curve(el.value):
                    raise DeserializationError("point not on curve")
            return el, offset + 3 + length
        except IndexError as exc:
            raise DeserializationError("truncated element") from exc

    def serialize_scalar(self, s: int) -> bytes:
        payload = (int(s) % int(self.p)).to_bytes(self.rbytes, "big")
        return bytes([_SCALAR_TAG]) + len(payload).to_bytes(2, "big") + payload

    def deserialize_scalar(self, data: bytes, offset: int = 0):
        try:
            if data[offset] != _SCALAR_TAG:
                raise DeserializationError("not a scalar")
            length = int.from_bytes(data[offset + 1:offset + 3], "big")
            payload = data[offset + 3:offset + 3 + length]
            if len(payload) != length or length != self.rbytes:
                raise DeserializationError("bad scalar length")
            s = int.from_bytes(payload, "big")
            if s >= self.p:
                raise DeserializationError("scalar out of range")
            return s, offset + 3 + length
        except IndexError as exc:
            raise DeserializationError("truncated scalar") from exc


_GENERATOR_CACHE: dict[SecurityLevel, tuple] = {}


def _generator(level: SecurityLevel, suite: PairingSuite):
    P = _GENERATOR_CACHE.get(level)
    if P is None:
        P = suite._hash_point(_GENERATOR_TAG, b"g")
        _GENERATOR_CACHE[level] = P
    return P


def suite_init(level: SecurityLevel) -> PairingSuite:
    """Fresh suite with zeroed counters; parameters are fixed per level."""
    return PairingSuite(level)
