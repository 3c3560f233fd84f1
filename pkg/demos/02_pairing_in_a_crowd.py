"""Two couples shake hands next to each other while someone listens in."""
# %%
from handkey import evaluation as ev
from handkey import synth
from handkey.keygen import quantize
from handkey.protocol import DeviceSession, Eavesdropper, SimChannel, exchange_data, run_session

handshakes = ev.synthetic_traces(2, synth.SynthParams(), seed=31)
bits = {}
for (a, b, _), (n1, n2) in zip(handshakes, (("alice", "bob"), ("carol", "dave"))):
    bits[n1] = quantize(ev.window_feature(a))
    bits[n2] = quantize(ev.window_feature(b))

# %% The eavesdropper mimicked Alice and Bob's handshake and taps the air.
eve = Eavesdropper("eve", quantize(ev.window_feature(handshakes[0][2])))
channel = SimChannel(seed=31)
channel.add_tap(eve)
devices = [DeviceSession(name, q) for name, q in bits.items()]
outcomes = run_session(devices, channel)
for name, o in outcomes.items():
    print(f"{name:6s} {o.state.value:10s} peer={o.peer}")

# %% Everyone heard every broadcast, but only the real partner could open a probe.
print()
print(channel.transcript())

# %% Confirmed devices talk; the tap sees the frames and cannot read them.
alice = devices[0]
print("bob received:", exchange_data(alice, b"lunch at noon?", channel))
print("eve captured", len(eve.captured), "messages, opened", len(eve.attack()))
