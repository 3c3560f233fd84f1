"""Synthetic handshake traces for legitimate pairs and mimicking adversaries.

A handshake is modelled as a 1-D latent acceleration along a shared shake
axis: a short onset jolt followed by a frequency-jittered triangular
oscillation. Both wrists follow the latent along the shake axis (the hands
are clasped). Each device also wobbles on its strap in the plane orthogonal
to that axis, with a strength tied to its sensor noise, and sees the
world-frame signal plus gravity through its own random mounting rotation.

A mimicking adversary re-enacts the latent with a reaction lag and a random
time warp and amplitude modulation whose strength is ``adversary_distortion``.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Optional, Tuple

import numpy as np
from scipy.ndimage import gaussian_filter1d
from scipy.spatial.transform import Rotation

from .feature import FeatureSeries
from .trace import MotionTrace, write_trace

GRAVITY = np.array([0.0, 0.0, 9.81])

# Onset jolt shape, relative to spike_amplitude, starting at sample 0.
_SPIKE_TEMPLATE = np.array([1.0, 0.3])
_HARMONICS = ()
# Correlation time of the mimic's tempo and amplitude errors.
_MIMIC_CORR_S = 0.15

_STREAM_LATENT = 0
_STREAM_DEVICE = 1
_STREAM_ADVERSARY = 2


@dataclass(frozen=True)
class SynthParams:
    shake_freq_hz: float = 3.0
    duration_s: float = 2.0
    sample_rate: float = 200.0
    device_noise_sigma: float = 0.5
    orientation_seeds: Optional[Tuple[int, int]] = None
    adversary_lag_s: float = 0.15
    adversary_distortion: float = 0.2
    rng_seed: int = 0
    # calibration knobs
    shake_amplitude: float = 25.0
    spike_amplitude: float = 100.0
    freq_jitter: float = 0.1
    transverse_noise_factor: float = 14.0

    def __post_init__(self):
        for name in ("shake_freq_hz", "duration_s", "sample_rate"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not 0.0 <= self.adversary_distortion <= 1.0:
            raise ValueError("adversary_distortion must lie in [0, 1]")
        if self.device_noise_sigma < 0 or self.adversary_lag_s < 0 or self.transverse_noise_factor < 0:
            raise ValueError("noise, lag and transverse factor must be non-negative")

    @property
    def n_samples(self) -> int:
        return int(round(self.duration_s * self.sample_rate))

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "SynthParams":
        data = json.loads(text)
        if data.get("orientation_seeds") is not None:
            data["orientation_seeds"] = tuple(data["orientation_seeds"])
        return cls(**data)


def _rng(params: SynthParams, stream: int, *extra: int) -> np.random.Generator:
    return np.random.default_rng([params.rng_seed, stream, *extra])


def _smooth_noise(rng: np.random.Generator, n: int, corr_samples: float) -> np.ndarray:
    """Zero-mean, unit-variance Gaussian process with the given correlation length."""
    white = rng.standard_normal(n + int(8 * corr_samples))
    pad = int(4 * corr_samples)
    smooth = gaussian_filter1d(white, corr_samples, mode="wrap")[pad:pad + n]
    # Stationary std of Gaussian-filtered unit white noise.
    return smooth * np.sqrt(2.0 * np.sqrt(np.pi) * corr_samples)


def _spike(params: SynthParams, scale: float = 1.0) -> np.ndarray:
    out = np.zeros(params.n_samples)
    k = min(len(_SPIKE_TEMPLATE), params.n_samples)
    out[:k] = scale * params.spike_amplitude * _SPIKE_TEMPLATE[:k]
    return out


def _onset_ramp(params: SynthParams) -> np.ndarray:
    t = np.arange(params.n_samples) / params.sample_rate
    return np.clip(t / 0.1, 0.0, 1.0)


def _latent_oscillation(params: SynthParams, rng: np.random.Generator) -> np.ndarray:
    n, fs = params.n_samples, params.sample_rate
    freq = params.shake_freq_hz * (1.0 + params.freq_jitter * _smooth_noise(rng, n, 0.25 * fs))
    phase = 2 * np.pi * np.cumsum(freq) / fs + rng.uniform(0, 2 * np.pi)
    # Triangle fundamental: reversals are abrupt, so no segment sits on a flat crest.
    wave = (2 / np.pi) * np.arcsin(np.sin(phase))
    for order, weight in _HARMONICS:
        wave += weight * np.sin(order * phase + rng.uniform(0, 2 * np.pi))
    envelope = params.shake_amplitude * (1.0 + 0.15 * _smooth_noise(rng, n, 0.3 * fs))
    return envelope * _onset_ramp(params) * wave


def _random_axis(rng: np.random.Generator) -> np.ndarray:
    v = rng.standard_normal(3)
    return v / np.linalg.norm(v)


def _orthonormal_complement(axis: np.ndarray) -> np.ndarray:
    """Two unit vectors spanning the plane orthogonal to ``axis``."""
    helper = np.eye(3)[np.argmin(np.abs(axis))]
    e1 = np.cross(axis, helper)
    e1 /= np.linalg.norm(e1)
    return np.stack([e1, np.cross(axis, e1)])


def _device_trace(
    latent: np.ndarray,
    axis: np.ndarray,
    params: SynthParams,
    rng: np.random.Generator,
    orientation_seed: int,
) -> MotionTrace:
    n, fs = params.n_samples, params.sample_rate
    world = GRAVITY[None, :] + latent[:, None] * axis[None, :]
    wobble = params.device_noise_sigma * params.transverse_noise_factor
    if wobble > 0:
        # Strap wobble: the clasp couples the wrists along the shake axis only.
        world = world + wobble * rng.standard_normal((n, 2)) @ _orthonormal_complement(axis)
    mount = Rotation.random(random_state=np.random.default_rng(orientation_seed)).as_matrix()
    body = world @ mount.T
    if params.device_noise_sigma > 0:
        body = body + params.device_noise_sigma * rng.standard_normal(body.shape)
    return MotionTrace(body, fs)


def gen_handshake_pair(params: SynthParams = SynthParams()) -> Tuple[MotionTrace, MotionTrace, FeatureSeries]:
    """Generate the two wrist traces of one handshake and the shared latent signal."""
    rng = _rng(params, _STREAM_LATENT)
    axis = _random_axis(rng)
    latent = _latent_oscillation(params, rng) + _spike(params)
    seeds = params.orientation_seeds
    if seeds is None:
        seeds = tuple(int(s) for s in rng.integers(0, 2**63 - 1, size=2))
    a = _device_trace(latent, axis, params, _rng(params, _STREAM_DEVICE, 0), seeds[0])
    b = _device_trace(latent, axis, params, _rng(params, _STREAM_DEVICE, 1), seeds[1])
    return a, b, FeatureSeries(latent, params.sample_rate, False)


def gen_adversary_trace(latent: FeatureSeries, params: SynthParams = SynthParams()) -> MotionTrace:
    """Trace of an adversary who watches a handshake and mimics it in real time."""
    rng = _rng(params, _STREAM_ADVERSARY)
    n, fs = params.n_samples, params.sample_rate
    motion = np.asarray(latent.values, dtype=float)[:n] - _spike(params)[: len(latent)]
    dist = params.adversary_distortion
    rate = np.clip(1.0 + dist * _smooth_noise(rng, n, _MIMIC_CORR_S * fs), 0.2, None)
    warped_time = np.concatenate([[0.0], np.cumsum(rate[:-1])]) / fs - params.adversary_lag_s
    src_time = np.arange(len(motion)) / fs
    mimic = np.interp(warped_time, src_time, motion, left=0.0, right=motion[-1])
    mimic *= np.clip(1.0 + dist * _smooth_noise(rng, n, _MIMIC_CORR_S * fs), 0.0, None)
    mimic += _spike(params, scale=max(0.7, 1.0 + 0.3 * dist * rng.standard_normal()))
    axis = _random_axis(rng)
    return _device_trace(mimic, axis, params, rng, int(rng.integers(0, 2**63 - 1)))


def write_synthetic(directory, params: SynthParams = SynthParams()) -> dict:
    """Write ``a.csv``, ``b.csv``, ``adversary.csv`` and a ``params.json`` sidecar.

    Returns the mapping of role to written path.
    """
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    a, b, latent = gen_handshake_pair(params)
    adv = gen_adversary_trace(latent, params)
    paths = {}
    for role, tr in (("a", a), ("b", b), ("adversary", adv)):
        path = out / f"{role}.csv"
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            write_trace(tr, fh)
        paths[role] = path
    paths["params"] = out / "params.json"
    paths["params"].write_text(params.to_json() + "\n", encoding="utf-8")
    return paths
