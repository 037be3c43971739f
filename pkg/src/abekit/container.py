"""KEM-DEM container: ABE-encapsulated key + AES-GCM payload.

Binary layout (bit-exact, little-endian lengths):

    magic(4)="ABEH" | version(1) | scheme(1) | level(1)
    | policy_len(u32 LE) | policy_utf8
    | abe_len(u32 LE) | abe_blob
    | nonce(12) | dem_len(u64 LE) | dem_ct_and_tag

The DEM key is SHA-256 over (domain tag || canonical GT bytes),
truncated to 128 bits at the 80-bit level and 256 bits otherwise.
Everything before the DEM ciphertext is authenticated as AAD.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

from cryptography.exceptions import InvalidTag
from cryptography.hazmat.primitives.ciphers.aead import AESGCM

from . import schemes as sch
from .access_tree import AccessTree, AttributeBag, compile_text
from .errors import (AbeError, AuthenticationFailure, DeserializationError,
                     PolicyNotSatisfied)
from .pairing import SecurityLevel
from .policy import PolicyAst, print_policy

MAGIC = b"ABEH"
VERSION = 1
NONCE_LEN = 12

_KDF_TAG = b"abekit/dem-key/v1"


@dataclass
class SealedContainer:
    version: int
    scheme: int            # sch.SCHEME_CP or sch.SCHEME_KP
    level: SecurityLevel
    policy_text: str       # CP: policy string; KP: comma-joined attributes
    abe_blob: bytes
    nonce: bytes
    dem_ciphertext: bytes  # AES-GCM ciphertext + tag

    def to_bytes(self) -> bytes:
        policy = self.policy_text.encode()
        return (MAGIC + bytes([self.version, self.scheme, self.level.bits & 0xFF])
                + len(policy).to_bytes(4, "little") + policy
                + len(self.abe_blob).to_bytes(4, "little") + self.abe_blob
                + self.nonce
                + len(self.dem_ciphertext).to_bytes(8, "little")
                + self.dem_ciphertext)

    @classmethod
    def from_bytes(cls, data: bytes) -> "SealedContainer":
        try:
            if data[:4] != MAGIC:
                raise AuthenticationFailure("bad container magic")
            version, scheme = data[4], data[5]
            if version != VERSION:
                raise AuthenticationFailure(f"unsupported version {version}")
            level = SecurityLevel.from_bits(data[6])
            off = 7
            policy_len = int.from_bytes(data[off:off + 4], "little")
            off += 4
            policy = data[off:off + policy_len]
            if len(policy) != policy_len:
                raise AuthenticationFailure("truncated policy")
            off += policy_len
            abe_len = int.from_bytes(data[off:off + 4], "little")
            off += 4
            abe_blob = data[off:off + abe_len]
            if len(abe_blob) != abe_len:
                raise AuthenticationFailure("truncated ABE blob")
            off += abe_len
            nonce = data[off:off + NONCE_LEN]
            off += NONCE_LEN
            dem_len = int.from_bytes(data[off:off + 8], "little")
            off += 8
            dem_ct = data[off:off + dem_len]
            if len(nonce) != NONCE_LEN or len(dem_ct) != dem_len \
                    or off + dem_len != len(data):
                raise AuthenticationFailure("truncated container")
            return cls(version, scheme, level, policy.decode("utf-8", "replace"),
                       abe_blob, nonce, dem_ct)
        except (IndexError, ValueError) as exc:
            raise AuthenticationFailure("malformed container") from exc

    def _aad(self) -> bytes:
        body = self.to_bytes()
        return body[:len(body) - 8 - len(self.dem_ciphertext)]


def _dem_key(level: SecurityLevel, gt_bytes: bytes) -> bytes:
    digest = hashlib.sha256(_KDF_TAG + bytes([level.bits & 0xFF])
                            + gt_bytes).digest()
    return digest[:16] if level is SecurityLevel.S80 else digest


def dem_key_for(suite, kem_key) -> bytes:
    """Exposed for test vectors: DEM key for an encapsulated GT element."""
    return _dem_key(suite.level, suite.serialize_element(kem_key))


def seal(params, policy_or_bag, payload: bytes, rng) -> SealedContainer:
    """CP-ABE: policy_or_bag is a policy (text, AST or AccessTree).
    KP-ABE: policy_or_bag is an attribute bag.  A fresh KEM key is drawn
    per call."""
    if isinstance(params, sch.CpPublicParams):
        scheme = sch.SCHEME_CP
        suite = params.suite
        if isinstance(policy_or_bag, AccessTree):
            tree = policy_or_bag
            policy_text = ""
        elif isinstance(policy_or_bag, str):
            tree = compile_text(policy_or_bag)
            policy_text = policy_or_bag
        elif isinstance(policy_or_bag, PolicyAst):
            policy_text = print_policy(policy_or_bag)
            tree = compile_text(policy_text)
        else:
            raise AbeError("CP-ABE seal needs a policy")
        ct, kem_key = sch.cp_encrypt(params, tree, rng)
        abe_blob = sch.serialize_cp_ciphertext(suite, ct)
    elif isinstance(params, sch.KpPublicParams):
        raise AbeError("KP-ABE seal needs the attribute universe; use seal_kp")
    else:
        raise AbeError(f"unknown params type {type(params).__name__}")
    return _assemble(suite, scheme, policy_text, abe_blob, kem_key,
                     payload, rng)


def seal_kp(params: "sch.KpPublicParams", universe, bag,
            payload: bytes, rng) -> SealedContainer:
    suite = params.suite
    ct, kem_key = sch.kp_encrypt(params, universe, bag, rng)
    abe_blob = sch.serialize_kp_ciphertext(suite, ct)
    policy_text = ",".join(ct.attrs)
    return _assemble(suite, sch.SCHEME_KP, policy_text, abe_blob, kem_key,
                     payload, rng)


def _assemble(suite, scheme, policy_text, abe_blob, kem_key, payload, rng):
    nonce = rng.randbytes(NONCE_LEN)
    key = _dem_key(suite.level, suite.serialize_element(kem_key))
    container = SealedContainer(VERSION, scheme, suite.level, policy_text,
                                abe_blob, nonce, b"")
    aad = container._aad()
    container.dem_ciphertext = AESGCM(key).encrypt(nonce, payload, aad)
    return container


def open_container(params, key, container) -> bytes:
    """Decapsulate and decrypt.  Raises PolicyNotSatisfied when the key
    cannot decrypt, AuthenticationFailure on any tampering."""
    if isinstance(container, (bytes, bytearray)):
        container = SealedContainer.from_bytes(bytes(container))
    suite = params.suite
    if container.level is not suite.level:
        raise AuthenticationFailure("container level does not match key material")
    try:
        if container.scheme == sch.SCHEME_CP:
            ct = sch.deserialize_cp_ciphertext(suite, container.abe_blob)
            kem_key = sch.cp_decrypt(params, key, ct)
        elif container.scheme == sch.SCHEME_KP:
            ct = sch.deserialize_kp_ciphertext(suite, container.abe_blob)
            kem_key = sch.kp_decrypt(params, key, ct)
        else:
            raise AuthenticationFailure("unknown scheme id")
    except PolicyNotSatisfied:
        raise
    except (DeserializationError, KeyError) as exc:
        raise AuthenticationFailure(f"corrupted ABE blob: {exc}") from exc
    dem_key = _dem_key(suite.level, suite.serialize_element(kem_key))
    try:
        return AESGCM(dem_key).decrypt(container.nonce,
                                       container.dem_ciphertext,
                                       container._aad())
    except InvalidTag as exc:
        raise AuthenticationFailure("authentication tag mismatch") from exc
