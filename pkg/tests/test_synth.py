import numpy as np
import pytest

import oracles
from handkey import synth
from handkey.feature import coherence, project_first_pc
from handkey.trace import detect_anchor, load_trace, squared_magnitude
from handkey.evaluation import window_feature, _trim


def test_lengths():
    a, b, latent = synth.gen_handshake_pair(synth.SynthParams(rng_seed=1))
    assert len(a) == len(b) == len(latent) == 400


def test_zero_noise_features_identical():
    a, b, _ = synth.gen_handshake_pair(synth.SynthParams(rng_seed=2, device_noise_sigma=0.0))
    fa, fb = project_first_pc(a).values, project_first_pc(b).values
    assert np.linalg.norm(fa - fb) <= 1e-7 * np.linalg.norm(fa)


def test_deterministic():
    p = synth.SynthParams(rng_seed=9)
    a1, b1, l1 = synth.gen_handshake_pair(p)
    a2, b2, l2 = synth.gen_handshake_pair(p)
    assert np.array_equal(a1.samples, a2.samples) and np.array_equal(b1.samples, b2.samples)
    e1, e2 = synth.gen_adversary_trace(l1, p), synth.gen_adversary_trace(l2, p)
    assert np.array_equal(e1.samples, e2.samples)


def test_params_validation_and_json():
    with pytest.raises(ValueError):
        synth.SynthParams(adversary_distortion=1.5)
    with pytest.raises(ValueError):
        synth.SynthParams(sample_rate=0)
    p = synth.SynthParams(rng_seed=4, orientation_seeds=(1, 2))
    assert synth.SynthParams.from_json(p.to_json()) == p


def test_anchor_always_found():
    for seed in range(30):
        p = synth.SynthParams(rng_seed=seed)
        a, b, latent = synth.gen_handshake_pair(p)
        for tr in (a, b, synth.gen_adversary_trace(latent, p)):
            assert detect_anchor(squared_magnitude(tr)) is not None


def _coh(ta, tb):
    fa, fb = _trim(window_feature(ta), window_feature(tb))
    return coherence(fa, fb)


def test_degenerate_adversary_matches():
    p = synth.SynthParams(rng_seed=5, device_noise_sigma=0.0, adversary_lag_s=0.0, adversary_distortion=0.0)
    a, _, latent = synth.gen_handshake_pair(p)
    assert _coh(a, synth.gen_adversary_trace(latent, p)) > 0.999


def test_distortion_lowers_coherence():
    def mean_coh(dist):
        vals = []
        for seed in range(50):
            p = synth.SynthParams(rng_seed=seed, adversary_distortion=dist)
            a, _, latent = synth.gen_handshake_pair(p)
            vals.append(_coh(a, synth.gen_adversary_trace(latent, p)))
        return np.mean(vals)

    assert mean_coh(1.0) < mean_coh(0.2)


def test_correlation_decreases_with_noise():
    means = []
    for sigma in (0.0, 0.25, 0.5, 0.75):
        rs = []
        for seed in range(50):
            a, b, _ = synth.gen_handshake_pair(synth.SynthParams(rng_seed=seed, device_noise_sigma=sigma))
            rs.append(oracles.pearson(project_first_pc(a).values.tolist(), project_first_pc(b).values.tolist()))
        means.append(np.mean(rs))
    assert all(x > y for x, y in zip(means, means[1:])), means


def test_write_synthetic(tmp_path):
    p = synth.SynthParams(rng_seed=3)
    paths = synth.write_synthetic(tmp_path, p)
    a, _, _ = synth.gen_handshake_pair(p)
    back = load_trace(paths["a"].read_text())
    np.testing.assert_allclose(back.samples, a.samples, rtol=1e-5)
    assert synth.SynthParams.from_json(paths["params"].read_text()) == p
