"""FAR / FRR against the bit-rate acceptance threshold, for a few K."""
# %%
import numpy as np

from handkey import evaluation as ev
from handkey import synth
from handkey.config import Config

cfg = Config()
handshakes = ev.synthetic_traces(100, synth.SynthParams(), seed=0)
legit = ev.extract_population([(a, b) for a, b, _ in handshakes], ev.Population.LEGITIMATE, cfg)
adv = ev.extract_population([(a, e) for a, _, e in handshakes], ev.Population.ADVERSARIAL, cfg)

# %% Coherence separates the populations before any bits are made.
cl = np.array([p.coherence for p in legit])
ca = np.array([p.coherence for p in adv])
print(f"legit coherence > 0.9: {np.mean(cl > 0.9):.2f}   mimic coherence < 0.8: {np.mean(ca < 0.8):.2f}")
for q in (0.05, 0.5, 0.95):
    print(f"  {q:.2f}-quantile: legit {np.quantile(cl, q):.3f}  mimic {np.quantile(ca, q):.3f}")

# %% Rates, agreement and key success across K.
for K in (0.3, 0.5, 0.7, 0.75, 0.9):
    rl = ev.score_population(legit, K, cfg)
    ra = ev.score_population(adv, K, cfg)
    print(f"K={K:<4} rate {np.mean([r.bit_rate_a for r in rl]):6.1f} bits/s  "
          f"agreement legit {np.mean([r.bit_agreement for r in rl]):.3f} mimic {np.mean([r.bit_agreement for r in ra]):.3f}  "
          f"key success {ev.key_success_rate(rl):.2f}")

# %% The threshold sweep. Mimics never reproduce a 128-bit key, so FAR stays at 0
# and the reported EER is the closest approach of the two curves.
thresholds = ev.inclusive_range(20, 90, 5)
curves = ev.sweep(legit, adv, [0.7, 0.75, 0.8, 0.85], thresholds, cfg)
for K, c in curves.items():
    print(f"K={K}: EER {c.eer:.3f} at {c.eer_threshold:g} bits/s (crossed={c.crossed})")
    print("   FRR:", " ".join(f"{x:.2f}" for x in c.frr))
