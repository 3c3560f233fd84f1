"""Command-line entry point: ``handkey <command> ...`` or ``python -m handkey``.

Exit status is 0 on success, 1 on a pipeline error or a rejected key (the
error class name is printed), and 2 on bad usage.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import List, Optional

from . import evaluation as ev
from . import keygen, protocol, synth, trace
from .config import Config
from .errors import HandkeyError

DEFAULT_THRESHOLDS = "20:90:5"


def _range(text: str):
    try:
        a, b, step = (float(x) for x in text.split(":"))
        return ev.inclusive_range(a, b, step)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected start:stop:step, got {text!r}") from exc


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file")
    common.add_argument("--seed", type=int, help="RNG seed for synthetic data and the channel")
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("--K", type=float, dest="K", help="quantization factor")
    common.add_argument("--segment-len", type=int)
    common.add_argument("--rate-threshold", type=float, help="acceptance threshold in bits/s")
    common.add_argument("--window-duration", type=float, help="seconds after the anchor")
    common.add_argument("--min-valid-bits", type=int)

    p = argparse.ArgumentParser(prog="handkey", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    d = sub.add_parser("detect", parents=[common], help="find the handshake anchor in a trace")
    d.add_argument("trace")

    k = sub.add_parser("keygen", parents=[common], help="derive keys from two traces")
    k.add_argument("trace_a")
    k.add_argument("trace_b")

    s = sub.add_parser("simulate", parents=[common], help="run the pairing protocol simulator")
    s.add_argument("--pairs", type=int, default=1)
    s.add_argument("--adversaries", type=int, default=0)
    s.add_argument("--drop-probability", type=float, default=0.0)

    e = sub.add_parser("evaluate", parents=[common], help="score synthetic populations")
    e.add_argument("--trials", type=int, default=100)
    e.add_argument("--thresholds", type=_range, default=_range(DEFAULT_THRESHOLDS))

    w = sub.add_parser("sweep", parents=[common], help="FAR/FRR over K and rate thresholds")
    w.add_argument("--k-range", type=_range, required=True)
    w.add_argument("--thresholds", type=_range, required=True)
    w.add_argument("--trials", type=int, default=100)

    g = sub.add_parser("generate", parents=[common], help="write a synthetic handshake as CSV")
    g.add_argument("--noise", type=float, default=synth.SynthParams.device_noise_sigma)
    g.add_argument("--duration", type=float, default=synth.SynthParams.duration_s)
    return p


def _config(args) -> Config:
    return Config.load(
        args.config,
        K=args.K,
        segment_len=args.segment_len,
        rate_threshold=args.rate_threshold,
        window_duration=args.window_duration,
        min_valid_bits=args.min_valid_bits,
        rng_seed=args.seed,
    )


def _read(path: str) -> trace.MotionTrace:
    with open(path, encoding="utf-8") as fh:
        return trace.load_trace(fh)


def _out(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_detect(args, cfg: Config) -> int:
    tr = _read(args.trace)
    anchor = trace.detect_anchor(trace.squared_magnitude(tr))
    if anchor is None:
        print("NoAnchor: no handshake peak found")
        return 1
    win = trace.align_window(tr, anchor, cfg.window_duration)
    stop = anchor + len(win.window)
    print(f"anchor={anchor} window=[{anchor},{stop}) complete={str(win.complete).lower()}")
    return 0


def cmd_keygen(args, cfg: Config) -> int:
    fa = ev.window_feature(_read(args.trace_a), cfg)
    fb = ev.window_feature(_read(args.trace_b), cfg)
    fa, fb = ev._trim(fa, fb)
    qa = keygen.quantize(fa, cfg.K, cfg.segment_len)
    qb = keygen.quantize(fb, cfg.K, cfg.segment_len)
    pa, pb = keygen.position_vector(qa), keygen.position_vector(qb)
    ra, rb = keygen.reconcile(qa, pa, pb), keygen.reconcile(qb, pb, pa)
    rate = len(ra) / qa.duration
    print(f"bit_rate_a={keygen.bit_rate(qa):.1f} bit_rate_b={keygen.bit_rate(qb):.1f} "
          f"reconciled_rate={rate:.1f} bits/s")
    print(f"bit_agreement={ev.bit_agreement_rate(qa, qb):.4f}")
    ka = keygen.assemble_key(ra, cfg.min_valid_bits, cfg.key_len)
    kb = keygen.assemble_key(rb, cfg.min_valid_bits, cfg.key_len)
    print(f"key_a={ka.hex()}")
    print(f"key_b={kb.hex()}")
    if ka != kb:
        print("REJECT KeyMismatch")
        return 1
    if rate < cfg.rate_threshold:
        print(f"REJECT LowBitRate ({rate:.1f} < {cfg.rate_threshold:g} bits/s)")
        return 1
    print("ACCEPT")
    return 0


def cmd_simulate(args, cfg: Config) -> int:
    out = _out(args)
    params = synth.SynthParams(rng_seed=cfg.rng_seed)
    handshakes = ev.synthetic_traces(args.pairs, params, cfg.rng_seed)
    channel = protocol.SimChannel(seed=cfg.rng_seed, drop_probability=args.drop_probability)
    devices = []
    taps = []
    for i, (ta, tb, tadv) in enumerate(handshakes):
        for name, tr in ((f"p{i}a", ta), (f"p{i}b", tb)):
            q = keygen.quantize(ev.window_feature(tr, cfg), cfg.K, cfg.segment_len)
            devices.append(protocol.DeviceSession(name, q, cfg.min_valid_bits, cfg.key_len))
    for j in range(args.adversaries):
        tadv = handshakes[j % len(handshakes)][2]
        q = keygen.quantize(ev.window_feature(tadv, cfg), cfg.K, cfg.segment_len)
        tap = protocol.Eavesdropper(f"eve{j}", q, cfg.min_valid_bits, cfg.key_len)
        channel.add_tap(tap)
        taps.append(tap)
    outcomes = protocol.run_session(devices, channel)
    status = 0
    for dev in devices:
        o = outcomes[dev.device_id]
        print(f"{o.device_id} {o.state.value} peer={o.peer or '-'}" + (f" error={o.error}" if o.error else ""))
        if not o.ok:
            status = 1
    for dev in devices:
        if dev.state is protocol.State.CONFIRMED and dev.device_id.endswith("a"):
            protocol.exchange_data(dev, f"hello from {dev.device_id}".encode(), channel)
    for tap in taps:
        print(f"{tap.device_id} captured={len(tap.captured)} opened={len(tap.attack())}")
    (out / "transcript.csv").write_text(channel.transcript(), encoding="utf-8")
    (out / "params.json").write_text(params.to_json() + "\n", encoding="utf-8")
    return status


def _populations(cfg: Config, trials: int):
    handshakes = ev.synthetic_traces(trials, synth.SynthParams(), cfg.rng_seed)
    legit = ev.extract_population([(a, b) for a, b, _ in handshakes], ev.Population.LEGITIMATE, cfg)
    adv = ev.extract_population([(a, e) for a, _, e in handshakes], ev.Population.ADVERSARIAL, cfg)
    return legit, adv


def cmd_evaluate(args, cfg: Config) -> int:
    out = _out(args)
    legit, adv = _populations(cfg, args.trials)
    records = ev.score_population(legit, cfg.K, cfg) + ev.score_population(adv, cfg.K, cfg)
    curves = ev.sweep(legit, adv, [cfg.K], args.thresholds, cfg)
    (out / "trials.csv").write_text(ev.trials_csv(records), encoding="utf-8")
    (out / "sweep.csv").write_text(ev.sweep_csv(curves), encoding="utf-8")
    (out / "summary.json").write_text(ev.summary_json(curves) + "\n", encoding="utf-8")
    legit_records = records[: len(legit)]
    print(f"key_success_rate={ev.key_success_rate(legit_records):.3f} "
          f"eer={curves[float(cfg.K)].eer:.4f}")
    return 0


def cmd_sweep(args, cfg: Config) -> int:
    out = _out(args)
    legit, adv = _populations(cfg, args.trials)
    curves = ev.sweep(legit, adv, args.k_range, args.thresholds, cfg)
    (out / "sweep.csv").write_text(ev.sweep_csv(curves), encoding="utf-8")
    (out / "summary.json").write_text(ev.summary_json(curves) + "\n", encoding="utf-8")
    summary = ev.sweep_summary(curves)
    print(f"eer={summary['eer']:.4f} at K={summary['K']:g} threshold={summary['eer_threshold']:g}")
    return 0


def cmd_generate(args, cfg: Config) -> int:
    params = synth.SynthParams(rng_seed=cfg.rng_seed, device_noise_sigma=args.noise,
                               duration_s=args.duration, sample_rate=cfg.sample_rate)
    for role, path in synth.write_synthetic(_out(args), params).items():
        print(f"{role}={path}")
    return 0


COMMANDS = {
    "detect": cmd_detect,
    "keygen": cmd_keygen,
    "simulate": cmd_simulate,
    "evaluate": cmd_evaluate,
    "sweep": cmd_sweep,
    "generate": cmd_generate,
}


def main(argv: Optional[List[str]] = None) -> int:
    parser = _parser()
    args = parser.parse_args(argv)
    try:
        cfg = _config(args)
    except (ValueError, OSError) as exc:
        parser.error(str(exc))
    try:
        return COMMANDS[args.command](args, cfg)
    except HandkeyError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        print(type(exc).__name__)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
