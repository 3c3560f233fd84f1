"""Tri-state quantisation, position-vector reconciliation and key assembly."""
from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import EmptyFeature, InsufficientBits, ParseError
from .feature import FeatureSeries

ONE = 1
ZERO = 0
INVALID = -1

DEFAULT_K = 0.75
DEFAULT_SEGMENT_LEN = 10
MIN_VALID_BITS = 140
KEY_BITS = 128


@dataclass(frozen=True)
class QuantizedBits:
    """Per-sample states drawn from ``ONE``, ``ZERO`` and ``INVALID``."""

    states: np.ndarray
    segment_len: int = DEFAULT_SEGMENT_LEN
    K: float = DEFAULT_K
    duration: float = 0.0

    def __len__(self):
        return len(self.states)

    @property
    def valid_count(self) -> int:
        return int(np.count_nonzero(self.states != INVALID))

    def __str__(self):
        return "".join("x" if s == INVALID else str(int(s)) for s in self.states)

    @classmethod
    def from_string(cls, text: str, **kwargs) -> "QuantizedBits":
        """Build from the compact notation ``"1x0xx11x00"`` (``x`` = invalid)."""
        table = {"1": ONE, "0": ZERO, "x": INVALID}
        return cls(np.array([table[c] for c in text], dtype=np.int8), **kwargs)


@dataclass(frozen=True)
class PositionVector:
    """Strictly increasing 1-based indices of valid bits."""

    positions: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.positions, dtype=np.int64).reshape(-1)
        if p.size and (p[0] < 1 or np.any(np.diff(p) <= 0)):
            raise ValueError("positions must be strictly increasing and 1-based")
        object.__setattr__(self, "positions", p)

    def __len__(self):
        return len(self.positions)

    def __eq__(self, other):
        if not isinstance(other, PositionVector):
            return NotImplemented
        return np.array_equal(self.positions, other.positions)

    def __hash__(self):
        return hash(self.positions.tobytes())

    def to_bytes(self) -> bytes:
        """Length-prefixed little-endian u32 encoding."""
        return struct.pack("<I", len(self.positions)) + self.positions.astype("<u4").tobytes()

    @classmethod
    def from_bytes(cls, data: bytes) -> "PositionVector":
        if len(data) < 4:
            raise ParseError("position vector shorter than its length prefix")
        (count,) = struct.unpack_from("<I", data)
        if len(data) != 4 + 4 * count:
            raise ParseError(f"position vector declares {count} entries but has {len(data) - 4} bytes")
        return cls(np.frombuffer(data, dtype="<u4", offset=4).astype(np.int64))


@dataclass(frozen=True)
class SymmetricKey:
    bits: np.ndarray
    source_valid_count: int

    def __post_init__(self):
        b = np.asarray(self.bits, dtype=np.uint8).reshape(-1)
        if b.size != KEY_BITS or np.any(b > 1):
            raise ValueError(f"a key is exactly {KEY_BITS} binary digits")
        object.__setattr__(self, "bits", b)

    def __eq__(self, other):
        if not isinstance(other, SymmetricKey):
            return NotImplemented
        return np.array_equal(self.bits, other.bits)

    def __hash__(self):
        return hash(self.bits.tobytes())

    def to_bytes(self) -> bytes:
        return np.packbits(self.bits).tobytes()

    def hex(self) -> str:
        return self.to_bytes().hex()


def quantize(
    feature: FeatureSeries,
    K: float = DEFAULT_K,
    segment_len: int = DEFAULT_SEGMENT_LEN,
) -> QuantizedBits:
    """Quantise a feature series segment by segment.

    Each run of ``segment_len`` samples gets thresholds ``mean +/- K * std``
    (population std). Samples strictly above the upper threshold become ONE,
    strictly below the lower become ZERO, everything else INVALID. A trailing
    partial segment is handled the same way when it has at least two samples.
    """
    x = np.asarray(feature.values, dtype=float)
    if x.size == 0:
        raise EmptyFeature("cannot quantise an empty feature series")
    if not K > 0:
        raise ValueError("K must be positive")
    if segment_len < 2:
        raise ValueError("segment_len must be at least 2")
    states = np.full(x.size, INVALID, dtype=np.int8)
    n_full = x.size // segment_len
    full = n_full * segment_len
    if n_full:
        _threshold(x[:full].reshape(n_full, segment_len), K, states[:full].reshape(n_full, segment_len))
    if x.size - full >= 2:
        _threshold(x[full:][None, :], K, states[full:][None, :])
    duration = x.size / feature.sample_rate
    return QuantizedBits(states, segment_len, K, duration)


def _threshold(segments: np.ndarray, K: float, out: np.ndarray) -> None:
    mu = segments.mean(axis=1, keepdims=True)
    sigma = segments.std(axis=1, keepdims=True)
    upper = mu + K * sigma
    lower = mu - K * sigma
    # A constant segment has sigma == 0; rounding in the mean must not leak bits.
    flat = np.ptp(segments, axis=1, keepdims=True) == 0
    out[(segments > upper) & ~flat] = ONE
    out[(segments < lower) & ~flat] = ZERO


def position_vector(bits: QuantizedBits) -> PositionVector:
    return PositionVector(np.flatnonzero(np.asarray(bits.states) != INVALID) + 1)


def agreed_positions(local_pv: PositionVector, remote_pv: PositionVector) -> np.ndarray:
    return np.intersect1d(local_pv.positions, remote_pv.positions, assume_unique=True)


def reconcile(
    local: QuantizedBits,
    local_pv: PositionVector,
    remote_pv: PositionVector,
) -> np.ndarray:
    """Keep only the local bits whose positions are valid on both sides."""
    common = agreed_positions(local_pv, remote_pv)
    common = common[common <= len(local)]
    return np.asarray(local.states)[common - 1].astype(np.uint8)


def assemble_key(
    reconciled: Sequence[int],
    min_valid_bits: int = MIN_VALID_BITS,
    key_len: int = KEY_BITS,
) -> SymmetricKey:
    bits = np.asarray(reconciled, dtype=np.uint8).reshape(-1)
    if bits.size < min_valid_bits:
        raise InsufficientBits(f"{bits.size} reconciled bits, need at least {min_valid_bits}")
    return SymmetricKey(bits[:key_len], int(bits.size))


def bit_rate(bits: QuantizedBits) -> float:
    """Valid bits per second of handshake."""
    if not bits.duration > 0:
        raise ValueError("duration must be positive")
    return bits.valid_count / bits.duration
