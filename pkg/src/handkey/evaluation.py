"""Trial runner, population metrics and FAR/FRR sweeps.

A trial runs the whole local pipeline on two traces: anchor detection,
window alignment, feature extraction, quantisation, reconciliation and key
assembly. Bit rates recorded on a trial are *reconciled* rates, i.e. the
number of mutually valid bits per second of handshake, since those are the
bits that end up in a key and the quantity the acceptance threshold gates.
"""
from __future__ import annotations

import csv
import enum
import io
import json
from dataclasses import asdict, dataclass, replace
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from . import feature as feat
from . import keygen, synth, trace
from .config import Config
from .errors import EmptyPopulation, HandkeyError, InsufficientBits, LengthMismatch, NoAnchor
from .feature import FeatureSeries
from .keygen import INVALID, QuantizedBits
from .trace import MotionTrace


class Population(enum.Enum):
    LEGITIMATE = "LEGITIMATE"
    ADVERSARIAL = "ADVERSARIAL"


@dataclass(frozen=True)
class TrialRecord:
    trial_id: int
    population: Population
    K: float
    bit_rate_a: float = 0.0
    bit_rate_b: float = 0.0
    bit_agreement: float = 0.0
    key_success: bool = False
    coherence: float = 0.0
    shared_bits: int = 0
    error: Optional[str] = None

    @property
    def failed(self) -> bool:
        return self.error is not None

    def accepted(self, threshold: float) -> bool:
        return (not self.failed and self.key_success
                and min(self.bit_rate_a, self.bit_rate_b) >= threshold)


@dataclass(frozen=True)
class ErrorCurve:
    thresholds: np.ndarray
    far: np.ndarray
    frr: np.ndarray
    eer: float
    eer_threshold: float
    crossed: bool = True


# -- metrics --------------------------------------------------------------

def bit_agreement(a: QuantizedBits, b: QuantizedBits) -> Tuple[float, int]:
    """Agreement over positions valid on both sides, and how many there were.

    With no shared valid position the rate is 0 and the count 0.
    """
    sa, sb = np.asarray(a.states), np.asarray(b.states)
    if sa.shape != sb.shape:
        raise LengthMismatch(f"bit sequences differ in length: {len(sa)} vs {len(sb)}")
    both = (sa != INVALID) & (sb != INVALID)
    n = int(both.sum())
    if n == 0:
        return 0.0, 0
    return float(np.mean(sa[both] == sb[both])), n


def bit_agreement_rate(a: QuantizedBits, b: QuantizedBits) -> float:
    return bit_agreement(a, b)[0]


def key_success_rate(trials: Iterable[TrialRecord]) -> float:
    trials = list(trials)
    if not trials:
        raise EmptyPopulation("no trials")
    return sum(t.key_success for t in trials) / len(trials)


def coherence_cdf(values: Sequence[float]) -> Tuple[np.ndarray, np.ndarray]:
    """Empirical CDF: sorted values and the fraction of samples <= each value."""
    x = np.sort(np.asarray(values, dtype=float))
    if x.size == 0:
        raise EmptyPopulation("no coherence values")
    frac = np.searchsorted(x, x, side="right") / x.size
    return x, frac


def cdf_dominates(upper: Sequence[float], lower: Sequence[float]) -> bool:
    """True when ``upper`` first-order stochastically dominates ``lower``."""
    grid = np.union1d(upper, lower)
    fu = np.searchsorted(np.sort(upper), grid, side="right") / len(upper)
    fl = np.searchsorted(np.sort(lower), grid, side="right") / len(lower)
    return bool(np.all(fu <= fl))


def far_frr_sweep(
    legit: Sequence[TrialRecord],
    adv: Sequence[TrialRecord],
    thresholds: Sequence[float],
) -> ErrorCurve:
    """False accept / false reject rates over ascending rate thresholds.

    A trial is accepted at threshold ``t`` when its keys matched and both
    reconciled bit rates reach ``t``. The EER is read off where FAR - FRR
    changes sign, interpolating linearly between neighbouring thresholds; if
    the curves never meet, the closest point is used and ``crossed`` is False.
    """
    if not legit or not adv:
        raise EmptyPopulation("both populations must be non-empty")
    t = np.asarray(thresholds, dtype=float)
    if t.size == 0 or np.any(np.diff(t) <= 0):
        raise ValueError("thresholds must be non-empty and strictly ascending")
    far = np.array([np.mean([r.accepted(x) for r in adv]) for x in t])
    frr = np.array([1.0 - np.mean([r.accepted(x) for r in legit]) for x in t])
    eer, at, crossed = _equal_error(t, far, frr)
    return ErrorCurve(t, far, frr, eer, at, crossed)


def _equal_error(t: np.ndarray, far: np.ndarray, frr: np.ndarray) -> Tuple[float, float, bool]:
    d = far - frr
    exact = np.flatnonzero(d == 0)
    if exact.size:
        i = exact[0]
        return float(far[i]), float(t[i]), True
    flips = np.flatnonzero(np.sign(d[:-1]) != np.sign(d[1:]))
    if flips.size:
        i = flips[0]
        w = d[i] / (d[i] - d[i + 1])
        return (float(far[i] + w * (far[i + 1] - far[i])),
                float(t[i] + w * (t[i + 1] - t[i])), True)
    i = int(np.argmin(np.abs(d)))
    return float((far[i] + frr[i]) / 2), float(t[i]), False


# -- pipeline -------------------------------------------------------------

def window_feature(tr: MotionTrace, config: Config = Config(), kind: str = "pca") -> FeatureSeries:
    """Anchor, align and extract the feature series of one device's trace."""
    anchor = trace.detect_anchor(trace.squared_magnitude(tr))
    if anchor is None:
        raise NoAnchor("no handshake peak above the detection threshold")
    window = trace.align_window(tr, anchor, config.window_duration).window
    if kind == "pca":
        return feat.project_first_pc(window)
    if kind == "magnitude":
        return feat.magnitude_feature(window)
    raise ValueError(f"unknown feature kind {kind!r}")


def _trim(a: FeatureSeries, b: FeatureSeries) -> Tuple[FeatureSeries, FeatureSeries]:
    n = min(len(a), len(b))
    return replace(a, values=a.values[:n]), replace(b, values=b.values[:n])


def score_features(
    fa: FeatureSeries,
    fb: FeatureSeries,
    K: float,
    config: Config = Config(),
    trial_id: int = 0,
    population: Population = Population.LEGITIMATE,
    coherence: Optional[float] = None,
) -> TrialRecord:
    """Quantise, reconcile and assemble keys from two aligned feature series."""
    fa, fb = _trim(fa, fb)
    qa = keygen.quantize(fa, K, config.segment_len)
    qb = keygen.quantize(fb, K, config.segment_len)
    pa, pb = keygen.position_vector(qa), keygen.position_vector(qb)
    ra = keygen.reconcile(qa, pa, pb)
    rb = keygen.reconcile(qb, pb, pa)
    agreement, shared = bit_agreement(qa, qb)
    try:
        ka = keygen.assemble_key(ra, config.min_valid_bits, config.key_len)
        kb = keygen.assemble_key(rb, config.min_valid_bits, config.key_len)
        success = ka == kb
    except InsufficientBits:
        success = False
    if coherence is None:
        coherence = feat.coherence(fa, fb)
    return TrialRecord(
        trial_id, population, K,
        bit_rate_a=len(ra) / qa.duration,
        bit_rate_b=len(rb) / qb.duration,
        bit_agreement=agreement,
        key_success=bool(success),
        coherence=coherence,
        shared_bits=shared,
    )


def run_trial(
    trace_a: MotionTrace,
    trace_b: MotionTrace,
    K: Optional[float] = None,
    segment_len: Optional[int] = None,
    *,
    config: Config = Config(),
    trial_id: int = 0,
    population: Population = Population.LEGITIMATE,
    kind: str = "pca",
) -> TrialRecord:
    """Run both devices' pipelines and score the pair.

    Pipeline errors are caught and returned as a failed record carrying the
    error class name, so sweeps never abort.
    """
    config = config.merged({"K": K, "segment_len": segment_len})
    try:
        fa = window_feature(trace_a, config, kind)
        fb = window_feature(trace_b, config, kind)
        return score_features(fa, fb, config.K, config, trial_id, population)
    except HandkeyError as exc:
        return TrialRecord(trial_id, population, config.K, error=type(exc).__name__)


# -- populations and sweeps -----------------------------------------------

@dataclass(frozen=True)
class PairFeatures:
    trial_id: int
    population: Population
    a: Optional[FeatureSeries]
    b: Optional[FeatureSeries]
    coherence: float = 0.0
    error: Optional[str] = None


def synthetic_traces(
    n: int,
    params: synth.SynthParams = synth.SynthParams(),
    seed: int = 0,
) -> List[Tuple[MotionTrace, MotionTrace, MotionTrace]]:
    """``n`` seeded handshakes as (device A, device B, mimicking adversary)."""
    out = []
    for i in range(n):
        p = replace(params, rng_seed=seed * 1_000_003 + i)
        a, b, latent = synth.gen_handshake_pair(p)
        out.append((a, b, synth.gen_adversary_trace(latent, p)))
    return out


def extract_population(
    pairs: Sequence[Tuple[MotionTrace, MotionTrace]],
    population: Population,
    config: Config = Config(),
    kind: str = "pca",
) -> List[PairFeatures]:
    """Compute the K-independent part of each trial once."""
    out = []
    for i, (ta, tb) in enumerate(pairs):
        try:
            fa, fb = _trim(window_feature(ta, config, kind), window_feature(tb, config, kind))
            out.append(PairFeatures(i, population, fa, fb, feat.coherence(fa, fb)))
        except HandkeyError as exc:
            out.append(PairFeatures(i, population, None, None, error=type(exc).__name__))
    return out


def score_population(features: Sequence[PairFeatures], K: float, config: Config = Config()) -> List[TrialRecord]:
    records = []
    for pf in features:
        if pf.error is not None:
            records.append(TrialRecord(pf.trial_id, pf.population, K, error=pf.error))
            continue
        try:
            records.append(score_features(pf.a, pf.b, K, config, pf.trial_id, pf.population, pf.coherence))
        except HandkeyError as exc:
            records.append(TrialRecord(pf.trial_id, pf.population, K, error=type(exc).__name__))
    return records


def sweep(
    legit: Sequence[PairFeatures],
    adv: Sequence[PairFeatures],
    ks: Sequence[float],
    thresholds: Sequence[float],
    config: Config = Config(),
) -> Dict[float, ErrorCurve]:
    return {
        float(k): far_frr_sweep(score_population(legit, k, config), score_population(adv, k, config), thresholds)
        for k in ks
    }


def inclusive_range(start: float, stop: float, step: float) -> np.ndarray:
    """``start, start+step, ..., stop`` robust to float round-off."""
    if not step > 0 or stop < start:
        raise ValueError("need step > 0 and stop >= start")
    n = int(np.floor((stop - start) / step + 1e-9)) + 1
    return np.round(start + step * np.arange(n), 10)


# -- output formats ---------------------------------------------------------

TRIAL_FIELDS = ["trial_id", "population", "K", "bit_rate_a", "bit_rate_b", "bit_agreement",
                "key_success", "coherence", "shared_bits", "error"]


def trials_csv(records: Iterable[TrialRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRIAL_FIELDS)
    for r in records:
        d = asdict(r)
        d["population"] = r.population.value
        d["error"] = r.error or ""
        w.writerow([_fmt(d[f]) for f in TRIAL_FIELDS])
    return buf.getvalue()


def sweep_csv(curves: Dict[float, ErrorCurve]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["K", "threshold", "far", "frr"])
    for k, c in curves.items():
        for t, a, r in zip(c.thresholds, c.far, c.frr):
            w.writerow([_fmt(k), _fmt(t), _fmt(a), _fmt(r)])
    return buf.getvalue()


def sweep_summary(curves: Dict[float, ErrorCurve]) -> dict:
    """Per-K EER plus the best (lowest-EER) operating point."""
    per_k = [
        {"K": float(k), "eer": c.eer, "eer_threshold": c.eer_threshold, "crossed": c.crossed}
        for k, c in curves.items()
    ]
    best = min(per_k, key=lambda e: (e["eer"], e["K"]))
    return {"eer": best["eer"], "eer_threshold": best["eer_threshold"], "K": best["K"], "per_K": per_k}


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    return v


def summary_json(curves: Dict[float, ErrorCurve]) -> str:
    return json.dumps(sweep_summary(curves), indent=2, sort_keys=True)
