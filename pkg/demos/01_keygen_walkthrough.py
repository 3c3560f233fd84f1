"""From two wrist traces to one shared 128-bit key, step by step."""
# %%
import numpy as np

from handkey import synth
from handkey.feature import coherence, project_first_pc
from handkey.keygen import assemble_key, bit_rate, position_vector, quantize, reconcile
from handkey.trace import align_window, detect_anchor, squared_magnitude

params = synth.SynthParams(rng_seed=2024)
trace_a, trace_b, latent = synth.gen_handshake_pair(params)
print("samples per device:", len(trace_a), "at", trace_a.sample_rate, "Hz")

# %% Both devices look for the first big jolt in |a|^2 and cut 2 s from there.
windows = []
for name, tr in (("A", trace_a), ("B", trace_b)):
    mag = squared_magnitude(tr)
    anchor = detect_anchor(mag)
    print(f"device {name}: resting |a|^2 ~ {np.median(mag.values):.1f}, anchor at sample {anchor}")
    windows.append(align_window(tr, anchor, 2.0).window)

# %% The raw axes disagree (each watch is strapped on differently) ...
print("raw x-axis correlation:", np.corrcoef(windows[0].samples[:, 0], windows[1].samples[:, 0])[0, 1].round(3))

# ... but the first principal component does not care about mounting.
fa, fb = (project_first_pc(w) for w in windows)
print("first-PC correlation:  ", np.corrcoef(fa.values, fb.values)[0, 1].round(3))
print("coherence 0-10 Hz:     ", round(coherence(fa, fb), 3))

# %% Quantise: per 10-sample segment, above mean + K std is 1, below mean - K std is 0.
qa, qb = quantize(fa, K=0.75), quantize(fb, K=0.75)
print("A:", str(qa)[:60], "...")
print("B:", str(qb)[:60], "...")
print(f"bit rates: {bit_rate(qa):.0f} / {bit_rate(qb):.0f} bits/s")

# %% Exchange valid positions in the clear and keep only the common ones.
pa, pb = position_vector(qa), position_vector(qb)
ka = assemble_key(reconcile(qa, pa, pb))
kb = assemble_key(reconcile(qb, pb, pa))
print("key A:", ka.hex())
print("key B:", kb.hex())
print("identical:", ka == kb, "| reconciled bits:", ka.source_valid_count)

# %% A mimic watching the handshake gets a different signal and a different key.
eve = synth.gen_adversary_trace(latent, params)
fe = project_first_pc(align_window(eve, detect_anchor(squared_magnitude(eve)), 2.0).window)
qe = quantize(fe, K=0.75)
pe = position_vector(qe)
print("mimic coherence with A:", round(coherence(fa, fe), 3))
try:
    ke = assemble_key(reconcile(qe, pe, pa))
    print("mimic key matches A:", ke == ka)
except Exception as exc:
    print("mimic could not assemble a key:", type(exc).__name__)
