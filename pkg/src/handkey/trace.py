"""Accelerometer trace ingestion, handshake peak detection and window alignment.

Traces are stored as ``(N, 3)`` float arrays of ``(ax, ay, az)`` in m/s^2.
Gravity is left in the signal: the squared magnitude of a resting device
sits near ``g**2`` and handshake peaks stand out well above it.
"""
from __future__ import annotations

import io
import math
from dataclasses import dataclass
from typing import Optional, TextIO, Union

import numpy as np

from .errors import AnchorOutOfRange, EmptyTrace, ParseError

DEFAULT_SAMPLE_RATE = 200.0
DEFAULT_PEAK_FACTOR = 5.0
CSV_HEADER = "t,ax,ay,az"


@dataclass(frozen=True)
class MotionTrace:
    """Uniformly sampled 3-axis acceleration.

    Attributes:
        samples: array of shape (N, 3), m/s^2.
        sample_rate: samples per second.
        start_time: timestamp of the first sample in seconds.
    """

    samples: np.ndarray
    sample_rate: float = DEFAULT_SAMPLE_RATE
    start_time: float = 0.0

    def __post_init__(self):
        arr = np.array(self.samples, dtype=float)
        if arr.ndim != 2 or arr.shape[1] != 3:
            raise ValueError(f"samples must have shape (N, 3), got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("samples must be finite")
        if not self.sample_rate > 0:
            raise ValueError("sample_rate must be positive")
        arr.setflags(write=False)
        object.__setattr__(self, "samples", arr)

    def __len__(self):
        return self.samples.shape[0]

    @property
    def duration(self) -> float:
        return len(self) / self.sample_rate

    @property
    def times(self) -> np.ndarray:
        return self.start_time + np.arange(len(self)) / self.sample_rate

    def slice(self, start: int, stop: int) -> "MotionTrace":
        return MotionTrace(
            self.samples[start:stop],
            self.sample_rate,
            self.start_time + start / self.sample_rate,
        )


@dataclass(frozen=True)
class MagnitudeSeries:
    values: np.ndarray
    sample_rate: float = DEFAULT_SAMPLE_RATE

    def __len__(self):
        return len(self.values)


@dataclass(frozen=True)
class AnchorWindow:
    anchor_index: int
    window: MotionTrace
    complete: bool = True


def load_trace(source: Union[str, TextIO]) -> MotionTrace:
    """Read a trace from CSV text or an open text stream.

    The format is an optional ``# rate=<Hz>`` comment, the header
    ``t,ax,ay,az`` and one row per sample. Missing rate falls back to 200 Hz.
    """
    if isinstance(source, str):
        source = io.StringIO(source)
    rate = DEFAULT_SAMPLE_RATE
    header_seen = False
    times = []
    rows = []
    for lineno, raw in enumerate(source, start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if body.startswith("rate="):
                try:
                    rate = float(body[len("rate="):])
                except ValueError:
                    raise ParseError(f"line {lineno}: bad rate comment {line!r}") from None
                if not (math.isfinite(rate) and rate > 0):
                    raise ParseError(f"line {lineno}: rate must be positive and finite")
            continue
        if not header_seen:
            if line.replace(" ", "") != CSV_HEADER:
                raise ParseError(f"line {lineno}: expected header {CSV_HEADER!r}, got {line!r}")
            header_seen = True
            continue
        parts = line.split(",")
        if len(parts) != 4:
            raise ParseError(f"line {lineno}: expected 4 fields, got {len(parts)}")
        try:
            values = [float(p) for p in parts]
        except ValueError:
            raise ParseError(f"line {lineno}: non-numeric field in {line!r}") from None
        if not all(math.isfinite(v) for v in values):
            raise ParseError(f"line {lineno}: non-finite value in {line!r}")
        times.append(values[0])
        rows.append(values[1:])
    if not header_seen:
        raise ParseError("missing header line")
    if not rows:
        raise EmptyTrace("trace has no data rows")
    return MotionTrace(np.array(rows), rate, times[0])


def write_trace(trace: MotionTrace, stream: Optional[TextIO] = None) -> str:
    """Serialise ``trace`` in the CSV format read by :func:`load_trace`.

    Values are written with 6 significant digits. Returns the text and, if
    ``stream`` is given, also writes it there.
    """
    buf = io.StringIO()
    buf.write(f"# rate={trace.sample_rate:.6g}\n")
    buf.write(CSV_HEADER + "\n")
    for t, (ax, ay, az) in zip(trace.times, trace.samples):
        buf.write(f"{t:.6g},{ax:.6g},{ay:.6g},{az:.6g}\n")
    text = buf.getvalue()
    if stream is not None:
        stream.write(text)
    return text


def squared_magnitude(trace: MotionTrace) -> MagnitudeSeries:
    if len(trace) == 0:
        raise EmptyTrace("cannot take the magnitude of an empty trace")
    values = np.einsum("ij,ij->i", trace.samples, trace.samples)
    return MagnitudeSeries(values, trace.sample_rate)


def default_peak_threshold(mag: MagnitudeSeries) -> float:
    return DEFAULT_PEAK_FACTOR * float(np.median(mag.values))


def detect_anchor(
    mag: MagnitudeSeries,
    peak_threshold: Optional[float] = None,
    refractory: Optional[float] = None,
) -> Optional[int]:
    """Return the index of the first local maximum above ``peak_threshold``.

    A local maximum is a sample no smaller than its neighbours (end samples
    have a single neighbour). ``peak_threshold`` defaults to five times the
    median of ``mag``. ``refractory`` is accepted for API stability and is not
    used by the first-peak rule. Returns ``None`` when nothing qualifies.
    """
    x = np.asarray(mag.values, dtype=float)
    if x.size == 0:
        raise EmptyTrace("empty magnitude series")
    if peak_threshold is None:
        peak_threshold = default_peak_threshold(mag)
    if not peak_threshold > 0:
        raise ValueError("peak_threshold must be positive")
    left = np.empty_like(x)
    right = np.empty_like(x)
    left[0] = -np.inf
    left[1:] = x[:-1]
    right[-1] = -np.inf
    right[:-1] = x[1:]
    qualifying = np.flatnonzero((x > peak_threshold) & (x >= left) & (x >= right))
    if qualifying.size == 0:
        return None
    return int(qualifying[0])


def align_window(trace: MotionTrace, anchor: int, duration: float) -> AnchorWindow:
    """Cut ``duration`` seconds of ``trace`` starting at ``anchor``.

    The window is flagged incomplete when the trace ends early.
    """
    if not duration > 0:
        raise ValueError("duration must be positive")
    n = len(trace)
    if not 0 <= anchor < n:
        raise AnchorOutOfRange(f"anchor {anchor} outside trace of length {n}")
    want = int(round(duration * trace.sample_rate))
    stop = min(anchor + want, n)
    return AnchorWindow(anchor, trace.slice(anchor, stop), complete=stop - anchor == want)
