import struct

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from handkey.crypto import NONCE_BYTES, TAG_BYTES, SealedMessage, open_sealed, seal
from handkey.errors import AuthError, ParseError
from handkey.keygen import SymmetricKey


def _key(rng):
    return SymmetricKey(rng.integers(0, 2, 128), 140)


@pytest.mark.parametrize("msg", [b"", b"hello", bytes(range(256))])
def test_roundtrip(rng, msg):
    k = _key(rng)
    assert open_sealed(k, seal(k, msg)) == msg


def test_fresh_nonces(rng):
    k = _key(rng)
    a, b = seal(k, b"same"), seal(k, b"same")
    assert len(a.nonce) == NONCE_BYTES
    assert a.nonce != b.nonce and a.ciphertext != b.ciphertext


def test_one_megabyte(rng):
    k = _key(rng)
    payload = rng.integers(0, 256, 1 << 20, dtype=np.uint8).tobytes()
    assert open_sealed(k, seal(k, payload)) == payload


def test_key_bit_flip(rng):
    k = _key(rng)
    bits = k.bits.copy()
    bits[77] ^= 1
    with pytest.raises(AuthError):
        open_sealed(SymmetricKey(bits, 140), seal(k, b"secret"))


def test_ciphertext_bit_flip(rng):
    k = _key(rng)
    m = seal(k, b"secret")
    ct = bytearray(m.ciphertext)
    ct[0] ^= 0x01
    with pytest.raises(AuthError):
        open_sealed(k, SealedMessage(m.nonce, bytes(ct), m.tag))


def test_wire_format(rng):
    k = _key(rng)
    m = seal(k, b"abc")
    data = m.to_bytes()
    assert len(data) == NONCE_BYTES + 4 + 3 + TAG_BYTES
    assert struct.unpack(">I", data[NONCE_BYTES:NONCE_BYTES + 4]) == (3,)
    assert SealedMessage.from_bytes(data) == m
    with pytest.raises(ParseError):
        SealedMessage.from_bytes(data[:-1])


def test_random_wrong_keys_always_fail():
    rng = np.random.default_rng(99)
    keys = rng.integers(0, 2, (10_000, 2, 128))
    for k1, k2 in keys:
        if np.array_equal(k1, k2):
            continue
        with pytest.raises(AuthError):
            open_sealed(SymmetricKey(k2, 140), seal(SymmetricKey(k1, 140), b"m"))


@settings(max_examples=30, deadline=None)
@given(st.binary(max_size=4096), st.integers(0, 2**32 - 1))
def test_roundtrip_property(msg, seed):
    k = _key(np.random.default_rng(seed))
    assert open_sealed(k, seal(k, msg)) == msg
