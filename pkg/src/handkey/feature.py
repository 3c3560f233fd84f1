"""Dominant-motion feature extraction and spectral coherence.

The principal axis of the 3x3 scatter matrix of a handshake window points
along the shared shake direction regardless of how each device is strapped
on, so projecting onto it gives a signal both devices can agree on.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy import signal

from .errors import DegenerateInput, LengthMismatch, TooFewSamples, TooShort
from .trace import MotionTrace

COHERENCE_SEGMENT = 64
DEFAULT_BAND_HZ = (0.0, 10.0)


@dataclass(frozen=True)
class FeatureSeries:
    values: np.ndarray
    sample_rate: float = 200.0
    sign_convention_applied: bool = True

    def __len__(self):
        return len(self.values)

    @property
    def duration(self) -> float:
        return len(self.values) / self.sample_rate


@dataclass(frozen=True)
class PcaDecomposition:
    """Eigen-decomposition of the unnormalised scatter matrix ``Xc @ Xc.T``.

    ``eigenvectors[:, i]`` pairs with ``eigenvalues[i]``; eigenvalues are in
    descending order.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    per_axis_means: np.ndarray
    degenerate: bool = False

    @property
    def first_axis(self) -> np.ndarray:
        return self.eigenvectors[:, 0]


def _as_matrix(window) -> np.ndarray:
    if isinstance(window, MotionTrace):
        return window.samples.T
    x = np.asarray(window, dtype=float)
    if x.ndim != 2 or x.shape[0] != 3:
        raise ValueError(f"expected a 3xN matrix, got shape {x.shape}")
    return x


def center(window) -> Tuple[np.ndarray, np.ndarray]:
    """Subtract each axis' temporal mean.

    Accepts a :class:`MotionTrace` or a 3xN array and returns the centred 3xN
    matrix together with the three subtracted means.
    """
    x = _as_matrix(window)
    if x.shape[1] < 2:
        raise TooFewSamples(f"need at least 2 samples, got {x.shape[1]}")
    means = x.mean(axis=1)
    xc = x - means[:, None]
    # A constant axis centres to exact zeros, whatever the mean's round-off.
    xc[np.ptp(x, axis=1) == 0] = 0.0
    return xc, means


def principal_axes(centered: np.ndarray, per_axis_means=None) -> PcaDecomposition:
    xc = np.asarray(centered, dtype=float)
    if xc.ndim != 2 or xc.shape[0] != 3:
        raise ValueError(f"expected a 3xN matrix, got shape {xc.shape}")
    if xc.shape[1] < 2:
        raise TooFewSamples(f"need at least 2 samples, got {xc.shape[1]}")
    if not np.all(np.isfinite(xc)):
        raise ValueError("matrix must be finite")
    means = np.zeros(3) if per_axis_means is None else np.asarray(per_axis_means, dtype=float)
    scatter = xc @ xc.T
    if not np.any(scatter):
        return PcaDecomposition(np.zeros(3), np.eye(3), means, degenerate=True)
    w, v = np.linalg.eigh(scatter)
    # Scatter matrices are PSD; clip round-off negatives.
    w = np.clip(w, 0.0, None)
    order = np.argsort(-np.abs(w), kind="stable")
    w = w[order]
    v = v[:, order]
    # Deterministic eigenvector orientation: largest component positive.
    pivot = np.argmax(np.abs(v), axis=0)
    signs = np.sign(v[pivot, np.arange(3)])
    signs[signs == 0] = 1.0
    return PcaDecomposition(w, v * signs, means)


def apply_sign_convention(values: np.ndarray) -> np.ndarray:
    """Flip ``values`` so its largest-magnitude sample (earliest on ties) is positive."""
    values = np.asarray(values, dtype=float)
    if values.size and values[np.argmax(np.abs(values))] < 0:
        return -values
    return values


def project_first_pc(window: MotionTrace) -> FeatureSeries:
    """Project a window onto its first principal axis.

    The output sign is fixed by :func:`apply_sign_convention`, which refers to
    the physical signal rather than the eigensolver, so two devices with
    different orientations produce matching series.
    """
    xc, means = center(window)
    pca = principal_axes(xc, means)
    if pca.degenerate:
        raise DegenerateInput("window has no motion (all axes constant)")
    values = apply_sign_convention(pca.first_axis @ xc)
    rate = window.sample_rate if isinstance(window, MotionTrace) else 200.0
    return FeatureSeries(values, rate, True)


def magnitude_feature(window: MotionTrace) -> FeatureSeries:
    """Acceleration magnitude as a feature series (the orientation-free baseline)."""
    values = np.sqrt(np.einsum("ij,ij->i", window.samples, window.samples))
    return FeatureSeries(values - values.mean(), window.sample_rate, False)


def coherence(
    a: FeatureSeries,
    b: FeatureSeries,
    band_hz: Tuple[float, float] = DEFAULT_BAND_HZ,
    segment: int = COHERENCE_SEGMENT,
) -> float:
    """Mean magnitude-squared coherence of ``a`` and ``b`` over ``band_hz``.

    Welch estimate with Hann-tapered segments of ``segment`` samples and 50%
    overlap. Segment means are removed, so the DC bin carries no information
    and is excluded from the band average.
    """
    x = np.asarray(a.values, dtype=float)
    y = np.asarray(b.values, dtype=float)
    if len(x) != len(y) or a.sample_rate != b.sample_rate:
        raise LengthMismatch(f"series differ: {len(x)}@{a.sample_rate} vs {len(y)}@{b.sample_rate}")
    if len(x) < segment:
        raise TooShort(f"need at least {segment} samples, got {len(x)}")
    freqs, pxy = signal.csd(x, y, fs=a.sample_rate, window="hann", nperseg=segment,
                            noverlap=segment // 2)
    _, pxx = signal.welch(x, fs=a.sample_rate, window="hann", nperseg=segment,
                          noverlap=segment // 2)
    _, pyy = signal.welch(y, fs=a.sample_rate, window="hann", nperseg=segment,
                          noverlap=segment // 2)
    lo, hi = band_hz
    sel = (freqs > 0) & (freqs >= lo) & (freqs <= hi)
    if not np.any(sel):
        raise ValueError(f"no frequency bins in band {band_hz}")
    denom = pxx[sel] * pyy[sel]
    with np.errstate(divide="ignore", invalid="ignore"):
        msc = np.where(denom > 0, np.abs(pxy[sel]) ** 2 / denom, 0.0)
    return float(np.clip(msc.mean(), 0.0, 1.0))
