"""AES-128-GCM sealing under handshake-derived keys.

Wire format of a sealed message::

    nonce (12 bytes) | ciphertext length (u32, big-endian) | ciphertext | tag (16 bytes)
"""
from __future__ import annotations

import os
import struct
from dataclasses import dataclass

from cryptography.exceptions import InvalidTag
from cryptography.hazmat.primitives.ciphers.aead import AESGCM

from .errors import AuthError, ParseError
from .keygen import SymmetricKey

NONCE_BYTES = 12
TAG_BYTES = 16


@dataclass(frozen=True)
class SealedMessage:
    nonce: bytes
    ciphertext: bytes
    tag: bytes

    def to_bytes(self) -> bytes:
        return self.nonce + struct.pack(">I", len(self.ciphertext)) + self.ciphertext + self.tag

    @classmethod
    def from_bytes(cls, data: bytes) -> "SealedMessage":
        head = NONCE_BYTES + 4
        if len(data) < head + TAG_BYTES:
            raise ParseError("sealed message too short")
        (n,) = struct.unpack_from(">I", data, NONCE_BYTES)
        if len(data) != head + n + TAG_BYTES:
            raise ParseError(f"sealed message declares {n} ciphertext bytes, frame has {len(data) - head - TAG_BYTES}")
        return cls(data[:NONCE_BYTES], data[head:head + n], data[head + n:])


def seal(key: SymmetricKey, plaintext: bytes) -> SealedMessage:
    nonce = os.urandom(NONCE_BYTES)
    out = AESGCM(key.to_bytes()).encrypt(nonce, bytes(plaintext), None)
    return SealedMessage(nonce, out[:-TAG_BYTES], out[-TAG_BYTES:])


def open_sealed(key: SymmetricKey, msg: SealedMessage) -> bytes:
    """Decrypt and verify ``msg``; raise :class:`AuthError` on any mismatch."""
    try:
        return AESGCM(key.to_bytes()).decrypt(msg.nonce, msg.ciphertext + msg.tag, None)
    except (InvalidTag, ValueError) as exc:
        raise AuthError("message does not authenticate under this key") from exc


# ``open`` mirrors ``seal``; kept as an alias so callers can write crypto.open(...)
open = open_sealed  # noqa: A001
