"""CP-ABE and KP-ABE key-encapsulation engines.

Both schemes are KEM-only: encryption returns a uniformly random GT
element K alongside the ciphertext; payload encryption lives in the
hybrid container.  CP-ABE puts the access tree on the ciphertext and an
attribute set on the key; KP-ABE swaps the roles and uses a small
attribute universe with a persistent registry, which keeps decryption
at one pairing per witness leaf.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

from .pairing import (G1, GT, GroupElement, PairingSuite, SecurityLevel,
                      suite_init)
from .access_tree import (AccessTree, AttributeBag, Leaf, Threshold,
                          satisfies, share_secret, witness_coefficients)
from .errors import (AbeError, DeserializationError, PolicyNotSatisfied,
                     UnknownAttribute)

MAGIC = b"ABE1"
SCHEME_CP = 0
SCHEME_KP = 1

_KIND_PARAMS = 0x01
_KIND_MASTER = 0x02
_KIND_KEY = 0x03
_KIND_CIPHERTEXT = 0x04
_KIND_UNIVERSE = 0x05

CP_ATTR_TAG = b"abekit/cp/attr/v1"  # domain separation for CP-ABE leaf hashing
_KP_REG_TAG = b"abekit/kp/reg/v1"


# ---------------------------------------------------------------------------
# CP-ABE (ciphertext-policy)

@dataclass
class CpPublicParams:
    suite: PairingSuite
    h: GroupElement       # g^beta
    f: GroupElement       # g^(1/beta)
    e_gg_alpha: GroupElement  # pair(g, g)^alpha


@dataclass
class CpMasterKey:
    beta: int
    g_alpha: GroupElement


@dataclass
class CpSecretKey:
    bag: AttributeBag
    d: GroupElement                     # g^((alpha + r)/beta)
    components: dict                    # attr -> (D_j, D'_j)


@dataclass
class CpCiphertext:
    tree: AccessTree
    c_tilde: GroupElement               # K * pair(g,g)^(alpha*s)
    c: GroupElement                     # h^s
    leaf_components: dict               # leaf id -> (C_y, C'_y)


def cp_setup(suite: PairingSuite, rng):
    g = suite.g
    alpha = suite.random_scalar(rng)
    beta = 0
    while beta == 0:
        beta = suite.random_scalar(rng)
    p = int(suite.p)
    h = suite.group_exp(g, beta)
    f = suite.group_exp(g, pow(beta, -1, p))
    g_alpha = suite.group_exp(g, alpha)
    e_gg_alpha = suite.pairing(g, g_alpha)
    return (CpPublicParams(suite, h, f, e_gg_alpha),
            CpMasterKey(beta, g_alpha))


def cp_keygen(params: CpPublicParams, master: CpMasterKey,
              bag: AttributeBag, rng) -> CpSecretKey:
    if not len(bag):
        raise AbeError("cannot issue a key for an empty attribute bag")
    suite = params.suite
    p = int(suite.p)
    r = suite.random_scalar(rng)
    g_r = suite.group_exp(suite.g, r)
    d = suite.group_exp(
        suite.mul(master.g_alpha, g_r),
        pow(master.beta, -1, p))
    components = {}
    for attr in sorted(bag.attrs):
        rj = suite.random_scalar(rng)
        h_attr = suite.hash_to_group(CP_ATTR_TAG, attr.encode())
        dj = suite.mul(g_r, suite.group_exp(h_attr, rj))
        dj_prime = suite.group_exp(suite.g, rj)
        components[attr] = (dj, dj_prime)
    return CpSecretKey(bag, d, components)


def cp_encrypt(params: CpPublicParams, tree: AccessTree, rng):
    """Returns (CpCiphertext, K) with K uniform in GT."""
    suite = params.suite
    s = suite.random_scalar(rng)
    k_exp = suite.random_scalar(rng)
    kem_key = suite.group_exp(params.e_gg_alpha, k_exp)
    c_tilde = suite.mul(kem_key, suite.group_exp(params.e_gg_alpha, s))
    c = suite.group_exp(params.h, s)
    shares = share_secret(suite, tree, s, rng)
    leaf_components = {}
    for leaf in tree.leaves():
        qy = shares[leaf.id]
        cy = suite.group_exp(suite.g, qy)
        h_attr = suite.hash_to_group(CP_ATTR_TAG, leaf.attr.encode())
        cy_prime = suite.group_exp(h_attr, qy)
        leaf_components[leaf.id] = (cy, cy_prime)
    return CpCiphertext(tree, c_tilde, c, leaf_components), kem_key


def cp_decrypt(params: CpPublicParams, key: CpSecretKey,
               ct: CpCiphertext) -> GroupElement:
    suite = params.suite
    witness = satisfies(ct.tree, key.bag)
    if witness is None:
        raise PolicyNotSatisfied("key attributes do not satisfy the policy")
    p = int(suite.p)
    coeffs = witness_coefficients(ct.tree, witness, p)
    a = suite.identity(GT)
    for leaf_id, coeff in coeffs.items():
        leaf = ct.tree.node(leaf_id)
        cy, cy_prime = ct.leaf_components[leaf_id]
        dj, dj_prime = key.components[leaf.attr]
        num = suite.pairing(cy, dj)
        den = suite.pairing(cy_prime, dj_prime)
        contrib = suite.mul(num, suite.inv(den))   # pair(g,g)^(r*q_y(0))
        a = suite.mul(a, suite.group_exp(contrib, coeff))
    # a == pair(g,g)^(r*s); blinding factor pair(g,g)^(alpha*s) follows
    e_c_d = suite.pairing(ct.c, key.d)             # pair(g,g)^(s*(alpha+r))
    blind = suite.mul(e_c_d, suite.inv(a))
    return suite.mul(ct.c_tilde, suite.inv(blind))


# ---------------------------------------------------------------------------
# KP-ABE (key-policy, small universe with persistent registry)

@dataclass
class KpPublicParams:
    suite: PairingSuite
    y_pub: GroupElement   # pair(g,g)^y


@dataclass
class KpMasterKey:
    y: int
    registry_seed: bytes  # deterministic per-attribute exponent derivation


class KpUniverse:
    """Append-only attribute registry: attr -> (secret t_i, public T_i)."""

    VERSION = 1

    def __init__(self, suite: PairingSuite):
        self.suite = suite
        self._secret = {}
        self._public = {}

    def register(self, attr: str, t: int, big_t: GroupElement):
        existing = self._secret.get(attr)
        if existing is not None:
            if existing != t:
                raise AbeError(f"attribute {attr!r} already registered differently")
            return
        self._secret[attr] = t
        self._public[attr] = big_t

    def secret_exponent(self, attr: str) -> int:
        try:
            return self._secret[attr]
        except KeyError:
            raise UnknownAttribute(attr) from None

    def public_element(self, attr: str) -> GroupElement:
        try:
            return self._public[attr]
        except KeyError:
            raise UnknownAttribute(attr) from None

    def __contains__(self, attr: str) -> bool:
        return attr in self._secret

    def __len__(self) -> int:
        return len(self._secret)

    def attributes(self):
        return sorted(self._secret)

    def public_table(self) -> dict:
        return dict(self._public)


@dataclass
class KpKey:
    tree: AccessTree
    leaf_components: dict  # leaf id -> D_x = g^(q_x(0)/t_attr)


@dataclass
class KpCiphertext:
    attrs: tuple           # sorted canonical attribute strings
    e_prime: GroupElement  # K * pair(g,g)^(y*s)
    components: dict       # attr -> E_i = T_i^s


def kp_setup(suite: PairingSuite, rng):
    y = suite.random_scalar(rng)
    seed = rng.getrandbits(256).to_bytes(32, "big")
    g_y = suite.group_exp(suite.g, y)
    y_pub = suite.pairing(suite.g, g_y)
    return KpPublicParams(suite, y_pub), KpMasterKey(y, seed), KpUniverse(suite)


def _derive_exponent(master: KpMasterKey, attr: str, p: int) -> int:
    # deterministic so that re-registering is idempotent across processes
    digest = hashlib.sha512(_KP_REG_TAG + master.registry_seed
                            + attr.encode()).digest()
    t = int.from_bytes(digest, "big") % p
    return t if t else 1


def kp_register(universe: KpUniverse, master: KpMasterKey,
                attr: str) -> KpUniverse:
    suite = universe.suite
    if attr not in universe:
        t = _derive_exponent(master, attr, int(suite.p))
        universe.register(attr, t, suite.group_exp(suite.g, t))
    return universe


def kp_keygen(params: KpPublicParams, master: KpMasterKey,
              universe: KpUniverse, tree: AccessTree, rng) -> KpKey:
    suite = params.suite
    p = int(suite.p)
    shares = share_secret(suite, tree, master.y, rng)
    leaf_components = {}
    for leaf in tree.leaves():
        t = universe.secret_exponent(leaf.attr)
        leaf_components[leaf.id] = suite.group_exp(
            suite.g, shares[leaf.id] * pow(t, -1, p) % p)
    return KpKey(tree, leaf_components)


def kp_encrypt(params: KpPublicParams, universe: KpUniverse,
               bag, rng):
    """Returns (KpCiphertext, K) with K uniform in GT."""
    suite = params.suite
    attrs = sorted(bag.attrs if isinstance(bag, AttributeBag) else set(bag))
    if not attrs:
        raise AbeError("cannot encrypt to an empty attribute set")
    public = {attr: universe.public_element(attr) for attr in attrs}
    s = suite.random_scalar(rng)
    k_exp = suite.random_scalar(rng)
    kem_key = suite.group_exp(params.y_pub, k_exp)
    e_prime = suite.mul(kem_key, suite.group_exp(params.y_pub, s))
    components = {attr: suite.group_exp(public[attr], s) for attr in attrs}
    return KpCiphertext(tuple(attrs), e_prime, components), kem_key


def kp_decrypt(params: KpPublicParams, key: KpKey,
               ct: KpCiphertext) -> GroupElement:
    suite = params.suite
    witness = satisfies(key.tree, frozenset(ct.attrs))
    if witness is None:
        raise PolicyNotSatisfied("ciphertext attributes do not satisfy the key policy")
    p = int(suite.p)
    coeffs = witness_coefficients(key.tree, witness, p)
    y_s = suite.identity(GT)
    for leaf_id, coeff in coeffs.items():
        leaf = key.tree.node(leaf_id)
        contrib = suite.pairing(ct.components[leaf.attr],
                                key.leaf_components[leaf_id])
        y_s = suite.mul(y_s, suite.group_exp(contrib, coeff))
    return suite.mul(ct.e_prime, suite.inv(y_s))


# ---------------------------------------------------------------------------
# Serialization: b"ABE1" | scheme(1) | level(1) | kind(1) | body

def _header(scheme: int, level: SecurityLevel, kind: int) -> bytes:
    return MAGIC + bytes([scheme, level.bits & 0xFF, kind])


def _check_header(data: bytes, scheme: int, kind: int) -> SecurityLevel:
    if len(data) < 7 or data[:4] != MAGIC:
        raise DeserializationError("bad magic")
    if data[4] != scheme:
        raise DeserializationError("wrong scheme id")
    if data[6] != kind:
        raise DeserializationError("wrong object kind")
    try:
        return SecurityLevel.from_bits(data[5])
    except ValueError as exc:
        raise DeserializationError(f"unknown level byte {data[5]}") from exc


def _pack_str(s: str) -> bytes:
    raw = s.encode()
    return len(raw).to_bytes(2, "big") + raw


def _unpack_str(data: bytes, off: int):
    length = int.from_bytes(data[off:off + 2], "big")
    raw = data[off + 2:off + 2 + length]
    if len(raw) != length:
        raise DeserializationError("truncated string")
    try:
        return raw.decode(), off + 2 + length
    except UnicodeDecodeError as exc:
        raise DeserializationError("invalid utf-8 string") from exc


def serialize_tree(tree: AccessTree) -> bytes:
    out = bytearray()

    def walk(node):
        if isinstance(node, Leaf):
            out.append(0)
            out.extend(_pack_str(node.attr))
        else:
            out.append(1)
            out.extend(node.k.to_bytes(2, "big"))
            out.extend(node.n.to_bytes(2, "big"))
            for child in node.children:
                walk(child)

    walk(tree.root)
    return bytes(out)


def deserialize_tree(data: bytes, off: int = 0):
    def read(off):
        if off >= len(data):
            raise DeserializationError("truncated tree")
        kind = data[off]
        off += 1
        if kind == 0:
            attr, off = _unpack_str(data, off)
            return Leaf(attr), off
        if kind == 1:
            k = int.from_bytes(data[off:off + 2], "big")
            n = int.from_bytes(data[off + 2:off + 4], "big")
            off += 4
            children = []
            for _ in range(n):
                child, off = read(off)
                children.append(child)
            try:
                return Threshold(k, children), off
            except ValueError as exc:
                raise DeserializationError(str(exc)) from exc
        raise DeserializationError(f"unknown tree node kind {kind}")

    root, off = read(off)
    return AccessTree(root), off


def _pack_bag(bag: AttributeBag) -> bytes:
    out = bytearray()
    attrs = sorted(bag.attrs)
    out.extend(len(attrs).to_bytes(4, "big"))
    for attr in attrs:
        out.extend(_pack_str(attr))
    out.extend(len(bag.numeric_assignments).to_bytes(2, "big"))
    for name, value, width in bag.numeric_assignments:
        out.extend(_pack_str(name))
        out.extend(int(value).to_bytes(8, "big"))
        out.append(width)
    return bytes(out)


def _unpack_bag(data: bytes, off: int):
    count = int.from_bytes(data[off:off + 4], "big")
    off += 4
    attrs = []
    for _ in range(count):
        attr, off = _unpack_str(data, off)
        attrs.append(attr)
    n_num = int.from_bytes(data[off:off + 2], "big")
    off += 2
    assignments = []
    for _ in range(n_num):
        name, off = _unpack_str(data, off)
        value = int.from_bytes(data[off:off + 8], "big")
        width = data[off + 8]
        off += 9
        assignments.append((name, value, width))
    return AttributeBag(frozenset(attrs), tuple(assignments)), off


def serialize_cp_params(params: CpPublicParams) -> bytes:
    suite = params.suite
    return (_header(SCHEME_CP, suite.level, _KIND_PARAMS)
            + suite.serialize_element(params.h)
            + suite.serialize_element(params.f)
            + suite.serialize_element(params.e_gg_alpha))


def deserialize_cp_params(data: bytes) -> CpPublicParams:
    level = _check_header(data, SCHEME_CP, _KIND_PARAMS)
    suite = suite_init(level)
    h, off = suite.deserialize_element(data, 7)
    f, off = suite.deserialize_element(data, off)
    e_gg_alpha, off = suite.deserialize_element(data, off)
    return CpPublicParams(suite, h, f, e_gg_alpha)


def serialize_cp_master(suite: PairingSuite, master: CpMasterKey) -> bytes:
    return (_header(SCHEME_CP, suite.level, _KIND_MASTER)
            + suite.serialize_scalar(master.beta)
            + suite.serialize_element(master.g_alpha))


def deserialize_cp_master(suite: PairingSuite, data: bytes) -> CpMasterKey:
    level = _check_header(data, SCHEME_CP, _KIND_MASTER)
    if level is not suite.level:
        raise DeserializationError("level mismatch")
    beta, off = suite.deserialize_scalar(data, 7)
    g_alpha, off = suite.deserialize_element(data, off)
    return CpMasterKey(beta, g_alpha)


def serialize_cp_key(suite: PairingSuite, key: CpSecretKey) -> bytes:
    out = bytearray(_header(SCHEME_CP, suite.level, _KIND_KEY))
    out.extend(_pack_bag(key.bag))
    out.extend(suite.serialize_element(key.d))
    for attr in sorted(key.components):
        dj, dj_prime = key.components[attr]
        out.extend(_pack_str(attr))
        out.extend(suite.serialize_element(dj))
        out.extend(suite.serialize_element(dj_prime))
    return bytes(out)


def deserialize_cp_key(suite: PairingSuite, data: bytes) -> CpSecretKey:
    level = _check_header(data, SCHEME_CP, _KIND_KEY)
    if level is not suite.level:
        raise DeserializationError("level mismatch")
    bag, off = _unpack_bag(data, 7)
    d, off = suite.deserialize_element(data, off)
    components = {}
    while off < len(data):
        attr, off = _unpack_str(data, off)
        dj, off = suite.deserialize_element(data, off)
        dj_prime, off = suite.deserialize_element(data, off)
        components[attr] = (dj, dj_prime)
    if set(components) != set(bag.attrs):
        raise DeserializationError("key components do not match attribute bag")
    return CpSecretKey(bag, d, components)


def serialize_cp_ciphertext(suite: PairingSuite, ct: CpCiphertext) -> bytes:
    out = bytearray(_header(SCHEME_CP, suite.level, _KIND_CIPHERTEXT))
    tree_bytes = serialize_tree(ct.tree)
    out.extend(len(tree_bytes).to_bytes(4, "big"))
    out.extend(tree_bytes)
    out.extend(suite.serialize_element(ct.c_tilde))
    out.extend(suite.serialize_element(ct.c))
    for leaf in ct.tree.leaves():
        cy, cy_prime = ct.leaf_components[leaf.id]
        out.extend(suite.serialize_element(cy))
        out.extend(suite.serialize_element(cy_prime))
    return bytes(out)


def deserialize_cp_ciphertext(suite: PairingSuite, data: bytes) -> CpCiphertext:
    level = _check_header(data, SCHEME_CP, _KIND_CIPHERTEXT)
    if level is not suite.level:
        raise DeserializationError("level mismatch")
    tree_len = int.from_bytes(data[7:11], "big")
    tree, off = deserialize_tree(data[11:11 + tree_len])
    off = 11 + tree_len
    c_tilde, off = suite.deserialize_element(data, off)
    c, off = suite.deserialize_element(data, off)
    leaf_components = {}
    for leaf in tree.leaves():
        cy, off = suite.deserialize_element(data, off)
        cy_prime, off = suite.deserialize_element(data, off)
        leaf_components[leaf.id] = (cy, cy_prime)
    if off != len(data):
        raise DeserializationError("trailing bytes in ciphertext")
    return CpCiphertext(tree, c_tilde, c, leaf_components)


def serialize_kp_params(params: KpPublicParams) -> bytes:
    suite = params.suite
    return (_header(SCHEME_KP, suite.level, _KIND_PARAMS)
            + suite.serialize_element(params.y_pub))


def deserialize_kp_params(data: bytes) -> KpPublicParams:
    level = _check_header(data, SCHEME_KP, _KIND_PARAMS)
    suite = suite_init(level)
    y_pub, _ = suite.deserialize_element(data, 7)
    return KpPublicParams(suite, y_pub)


def serialize_kp_master(suite: PairingSuite, master: KpMasterKey) -> bytes:
    return (_header(SCHEME_KP, suite.level, _KIND_MASTER)
            + suite.serialize_scalar(master.y)
            + master.registry_seed)


def deserialize_kp_master(suite: PairingSuite, data: bytes) -> KpMasterKey:
    level = _check_header(data, SCHEME_KP, _KIND_MASTER)
    if level is not suite.level:
        raise DeserializationError("level mismatch")
    y, off = suite.deserialize_scalar(data, 7)
    seed = data[off:]
    if len(seed) != 32:
        raise DeserializationError("bad registry seed length")
    return KpMasterKey(y, seed)


def serialize_kp_universe(universe: KpUniverse) -> bytes:
    """Append-only record stream with a versioned header."""
    suite = universe.suite
    out = bytearray(_header(SCHEME_KP, suite.level, _KIND_UNIVERSE))
    out.append(KpUniverse.VERSION)
    for attr in universe.attributes():
        out.extend(_pack_str(attr))
        out.extend(suite.serialize_scalar(universe._secret[attr]))
        out.extend(suite.serialize_element(universe._public[attr]))
    return bytes(out)


def deserialize_kp_universe(suite: PairingSuite, data: bytes) -> KpUniverse:
    level = _check_header(data, SCHEME_KP, _KIND_UNIVERSE)
    if level is not suite.level:
        raise DeserializationError("level mismatch")
    if data[7] != KpUniverse.VERSION:
        raise DeserializationError("unsupported universe version")
    universe = KpUniverse(suite)
    off = 8
    while off < len(data):
        attr, off = _unpack_str(data, off)
        t, off = suite.deserialize_scalar(data, off)
        big_t, off = suite.deserialize_element(data, off)
        universe.register(attr, t, big_t)
    return universe


def serialize_kp_key(suite: PairingSuite, key: KpKey) -> bytes:
    out = bytearray(_header(SCHEME_KP, suite.level, _KIND_KEY))
    tree_bytes = serialize_tree(key.tree)
    out.extend(len(tree_bytes).to_bytes(4, "big"))
    out.extend(tree_bytes)
    for leaf in key.tree.leaves():
        out.extend(suite.serialize_element(key.leaf_components[leaf.id]))
    return bytes(out)


def deserialize_kp_key(suite: PairingSuite, data: bytes) -> KpKey:
    level = _check_header(data, SCHEME_KP, _KIND_KEY)
    if level is not suite.level:
        raise DeserializationError("level mismatch")
    tree_len = int.from_bytes(data[7:11], "big")
    tree, _ = deserialize_tree(data[11:11 + tree_len])
    off = 11 + tree_len
    leaf_components = {}
    for leaf in tree.leaves():
        el, off = suite.deserialize_element(data, off)
        leaf_components[leaf.id] = el
    return KpKey(tree, leaf_components)


def serialize_kp_ciphertext(suite: PairingSuite, ct: KpCiphertext) -> bytes:
    out = bytearray(_header(SCHEME_KP, suite.level, _KIND_CIPHERTEXT))
    out.extend(len(ct.attrs).to_bytes(4, "big"))
    for attr in ct.attrs:
        out.extend(_pack_str(attr))
    out.extend(suite.serialize_element(ct.e_prime))
    for attr in ct.attrs:
        out.extend(suite.serialize_element(ct.components[attr]))
    return bytes(out)


def deserialize_kp_ciphertext(suite: PairingSuite, data: bytes) -> KpCiphertext:
    level = _check_header(data, SCHEME_KP, _KIND_CIPHERTEXT)
    if level is not suite.level:
        raise DeserializationError("level mismatch")
    count = int.from_bytes(data[7:11], "big")
    off = 11
    attrs = []
    for _ in range(count):
        attr, off = _unpack_str(data, off)
        attrs.append(attr)
    e_prime, off = suite.deserialize_element(data, off)
    components = {}
    for attr in attrs:
        el, off = suite.deserialize_element(data, off)
        components[attr] = el
    if off != len(data):
        raise DeserializationError("trailing bytes in ciphertext")
    return KpCiphertext(tuple(attrs), e_prime, components)
