"""Broadcast-medium simulator and the probe/acknowledge peer-selection session.

Every device broadcasts the positions of its valid bits. For each vector it
hears, a device reconciles its own bits against it, assembles a candidate key
and answers the sender with a probe (a public constant sealed under that
candidate). Only the true handshake partner can open the probe; it keeps the
matching key, drops the others and acknowledges. Passive taps receive a copy
of everything that goes over the air.

The channel delivers messages in rounds: everything queued at the start of a
round is delivered (in a seeded shuffled order) before anything produced in
response, which keeps causality without modelling latency.
"""
from __future__ import annotations

import enum
import io
import itertools
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence

import numpy as np

from . import crypto
from .errors import AmbiguousPeer, AuthError, InsufficientBits, NotConfirmed, ParseError, Timeout
from .keygen import (
    INVALID,
    KEY_BITS,
    MIN_VALID_BITS,
    PositionVector,
    QuantizedBits,
    SymmetricKey,
    agreed_positions,
    assemble_key,
    position_vector,
    reconcile,
)

PROBE_PLAINTEXT = b"HANDSHAKE-KEY-PROBE-V1"
ACK_PLAINTEXT = b"HANDSHAKE-KEY-ACK-V1"
DEFAULT_MESSAGE_BUDGET = 16


class Kind(enum.Enum):
    POSITION_BROADCAST = "POSITION_BROADCAST"
    PROBE = "PROBE"
    ACK = "ACK"
    DATA = "DATA"


class State(enum.Enum):
    IDLE = "IDLE"
    BROADCAST_SENT = "BROADCAST_SENT"
    PROBING = "PROBING"
    CONFIRMED = "CONFIRMED"
    FAILED = "FAILED"


@dataclass(frozen=True)
class SessionMessage:
    kind: Kind
    sender_id: str
    recipient_id: Optional[str]
    body: bytes

    def __post_init__(self):
        if (self.kind is Kind.POSITION_BROADCAST) != (self.recipient_id is None):
            raise ValueError("broadcasts have no recipient; every other message is addressed")


@dataclass
class DeviceSession:
    """Protocol state of one device; owned and driven by :class:`SimChannel`."""

    device_id: str
    bits: QuantizedBits
    min_valid_bits: int = MIN_VALID_BITS
    key_len: int = KEY_BITS
    message_budget: int = DEFAULT_MESSAGE_BUDGET
    pv: PositionVector = field(init=False)
    candidate_keys: Dict[str, SymmetricKey] = field(default_factory=dict)
    state: State = State.IDLE
    confirmed_peer: Optional[str] = None
    key: Optional[SymmetricKey] = None
    error: Optional[str] = None
    sent: int = 0
    inbox: List[bytes] = field(default_factory=list)
    auth_failures: List[SessionMessage] = field(default_factory=list)
    failure: Optional[Exception] = field(default=None, repr=False)
    _selected: Optional[str] = field(default=None, repr=False)

    def __post_init__(self):
        self.pv = position_vector(self.bits)

    # -- outgoing -----------------------------------------------------------

    def _send(self, kind: Kind, recipient: Optional[str], body: bytes) -> List[SessionMessage]:
        if self.sent >= self.message_budget:
            self._fail(Timeout(f"{self.device_id} exhausted its budget of {self.message_budget} messages"))
            return []
        self.sent += 1
        return [SessionMessage(kind, self.device_id, recipient, body)]

    def _fail(self, exc: Exception) -> None:
        if self.state is not State.CONFIRMED:
            self.state = State.FAILED
        self.error = type(exc).__name__
        self.failure = exc

    def start(self) -> List[SessionMessage]:
        self.state = State.BROADCAST_SENT
        return self._send(Kind.POSITION_BROADCAST, None, self.pv.to_bytes())

    # -- incoming -----------------------------------------------------------

    def receive(self, msg: SessionMessage) -> List[SessionMessage]:
        if self.state is State.FAILED or msg.sender_id == self.device_id:
            return []
        handler = {
            Kind.POSITION_BROADCAST: self._on_broadcast,
            Kind.PROBE: self._on_probe,
            Kind.ACK: self._on_ack,
            Kind.DATA: self._on_data,
        }[msg.kind]
        return handler(msg)

    def _on_broadcast(self, msg: SessionMessage) -> List[SessionMessage]:
        if self._selected is not None:
            return []
        try:
            remote = PositionVector.from_bytes(msg.body)
        except ParseError:
            return []
        try:
            key = assemble_key(reconcile(self.bits, self.pv, remote), self.min_valid_bits, self.key_len)
        except InsufficientBits:
            return []
        self.candidate_keys[msg.sender_id] = key
        self.state = State.PROBING
        probe = crypto.seal(key, PROBE_PLAINTEXT)
        return self._send(Kind.PROBE, msg.sender_id, probe.to_bytes())

    def _openers(self, sealed: crypto.SealedMessage, expected: bytes) -> List[str]:
        out = []
        for sender, key in self.candidate_keys.items():
            try:
                if crypto.open_sealed(key, sealed) == expected:
                    out.append(sender)
            except AuthError:
                pass
        return out

    def _select(self, peer: str) -> None:
        self._selected = peer
        self.key = self.candidate_keys[peer]
        self.candidate_keys = {peer: self.key}

    def _on_probe(self, msg: SessionMessage) -> List[SessionMessage]:
        try:
            sealed = crypto.SealedMessage.from_bytes(msg.body)
        except ParseError:
            return []
        openers = self._openers(sealed, PROBE_PLAINTEXT)
        if not openers:
            return []
        if openers != [msg.sender_id] or (self._selected not in (None, msg.sender_id)):
            self._fail(AmbiguousPeer(
                f"{self.device_id}: probe from {msg.sender_id} opens with keys for {openers}, "
                f"already selected {self._selected}"))
            return []
        if self._selected == msg.sender_id:
            return []
        self._select(msg.sender_id)
        ack = crypto.seal(self.key, ACK_PLAINTEXT)
        return self._send(Kind.ACK, msg.sender_id, ack.to_bytes())

    def _on_ack(self, msg: SessionMessage) -> List[SessionMessage]:
        key = self.candidate_keys.get(msg.sender_id)
        if key is None:
            return []
        try:
            if crypto.open_sealed(key, crypto.SealedMessage.from_bytes(msg.body)) != ACK_PLAINTEXT:
                return []
        except (AuthError, ParseError):
            return []
        out: List[SessionMessage] = []
        if self._selected is None:
            # Partner opened our probe before we heard theirs; acknowledge back.
            self._select(msg.sender_id)
            out = self._send(Kind.ACK, msg.sender_id, crypto.seal(self.key, ACK_PLAINTEXT).to_bytes())
        elif self._selected != msg.sender_id:
            self._fail(AmbiguousPeer(f"{self.device_id}: ACK from {msg.sender_id}, selected {self._selected}"))
            return []
        self.state = State.CONFIRMED
        self.confirmed_peer = msg.sender_id
        return out

    def _on_data(self, msg: SessionMessage) -> List[SessionMessage]:
        # Any holder of the retained key speaks for the peer (see share_key).
        if self.state is not State.CONFIRMED:
            return []
        try:
            self.inbox.append(crypto.open_sealed(self.key, crypto.SealedMessage.from_bytes(msg.body)))
        except (AuthError, ParseError) as exc:
            self.auth_failures.append(msg)
            self.error = type(exc).__name__
        return []


@dataclass
class Eavesdropper:
    """Passive tap that tries to decrypt everything it overhears.

    It may hold quantised bits from a mimicked handshake. For every pair of
    overheard position vectors it forms the key the pair would agree on,
    substituting its own bits (invalid positions guessed as 0), and also the
    keys it would derive by reconciling against each vector as a device would.
    """

    device_id: str
    bits: Optional[QuantizedBits] = None
    min_valid_bits: int = MIN_VALID_BITS
    key_len: int = KEY_BITS
    captured: List[SessionMessage] = field(default_factory=list)
    opened: List[bytes] = field(default_factory=list)

    def observe(self, msg: SessionMessage) -> None:
        self.captured.append(msg)

    def _guess_keys(self) -> List[SymmetricKey]:
        if self.bits is None:
            return []
        vectors = []
        for m in self.captured:
            if m.kind is Kind.POSITION_BROADCAST:
                try:
                    vectors.append(PositionVector.from_bytes(m.body))
                except ParseError:
                    pass
        own = np.where(self.bits.states == INVALID, 0, self.bits.states).astype(np.uint8)
        own_pv = position_vector(self.bits)
        guesses = []
        for p, q in itertools.combinations(vectors, 2):
            pos = agreed_positions(p, q)
            pos = pos[pos <= len(own)]
            if pos.size >= self.min_valid_bits:
                guesses.append(SymmetricKey(own[pos - 1][: self.key_len], int(pos.size)))
        for p in vectors:
            try:
                guesses.append(assemble_key(reconcile(self.bits, own_pv, p), self.min_valid_bits, self.key_len))
            except InsufficientBits:
                pass
        return guesses

    def attack(self, kinds: Sequence[Kind] = (Kind.DATA,)) -> List[bytes]:
        """Try every guessed key on every captured message of ``kinds``."""
        keys = self._guess_keys()
        self.opened = []
        for m in self.captured:
            if m.kind not in kinds:
                continue
            sealed = crypto.SealedMessage.from_bytes(m.body)
            for key in keys:
                try:
                    self.opened.append(crypto.open_sealed(key, sealed))
                    break
                except AuthError:
                    pass
        return self.opened


class SimChannel:
    """Lossless (optionally lossy) shared broadcast medium."""

    def __init__(self, seed: int = 0, drop_probability: float = 0.0):
        if not 0.0 <= drop_probability < 1.0:
            raise ValueError("drop_probability must lie in [0, 1)")
        self.rng = np.random.default_rng(seed)
        self.drop_probability = drop_probability
        self.devices: Dict[str, DeviceSession] = {}
        self.taps: Dict[str, Eavesdropper] = {}
        self.in_flight: List[SessionMessage] = []
        self.delivered: List[SessionMessage] = []

    def register(self, device: DeviceSession) -> None:
        if device.device_id in self.devices or device.device_id in self.taps:
            raise ValueError(f"duplicate device id {device.device_id!r}")
        self.devices[device.device_id] = device

    def add_tap(self, tap: Eavesdropper) -> None:
        if tap.device_id in self.devices or tap.device_id in self.taps:
            raise ValueError(f"duplicate device id {tap.device_id!r}")
        self.taps[tap.device_id] = tap

    def send(self, messages: Iterable[SessionMessage]) -> None:
        self.in_flight.extend(messages)

    def step(self) -> int:
        """Deliver one round; returns how many messages went over the air."""
        batch, self.in_flight = self.in_flight, []
        order = self.rng.permutation(len(batch))
        count = 0
        for i in order:
            msg = batch[i]
            if self.drop_probability and self.rng.random() < self.drop_probability:
                continue
            self.delivered.append(msg)
            count += 1
            for tap in self.taps.values():
                tap.observe(msg)
            if msg.recipient_id is None:
                targets = [d for d in self.devices.values() if d.device_id != msg.sender_id]
            else:
                target = self.devices.get(msg.recipient_id)
                targets = [target] if target is not None else []
            for dev in targets:
                self.send(dev.receive(msg))
        return count

    def run(self, max_rounds: int = 64) -> None:
        for _ in range(max_rounds):
            if not self.in_flight:
                return
            self.step()

    def transcript(self) -> str:
        """CSV log ``seq,kind,sender,recipient,bytes``; broadcasts have an empty recipient."""
        buf = io.StringIO()
        buf.write("seq,kind,sender,recipient,bytes\n")
        for seq, m in enumerate(self.delivered):
            buf.write(f"{seq},{m.kind.value},{m.sender_id},{m.recipient_id or ''},{len(m.body)}\n")
        return buf.getvalue()


@dataclass(frozen=True)
class SessionOutcome:
    device_id: str
    state: State
    peer: Optional[str]
    key: Optional[SymmetricKey]
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.state is State.CONFIRMED


def run_session(
    devices: Sequence[DeviceSession],
    channel: SimChannel,
    max_rounds: int = 64,
) -> Dict[str, SessionOutcome]:
    """Run position broadcast, probing and acknowledgement to quiescence.

    Devices that end unconfirmed are marked FAILED with ``Timeout``;
    conflicting probes mark a device FAILED with ``AmbiguousPeer``.
    """
    for dev in devices:
        if dev.device_id not in channel.devices:
            channel.register(dev)
    for dev in devices:
        channel.send(dev.start())
    channel.run(max_rounds)
    outcomes = {}
    for dev in devices:
        if dev.state is not State.CONFIRMED and dev.state is not State.FAILED:
            dev._fail(Timeout(f"{dev.device_id} did not confirm a peer"))
        outcomes[dev.device_id] = SessionOutcome(
            dev.device_id,
            dev.state,
            dev.confirmed_peer,
            dev.key if dev.state is State.CONFIRMED else None,
            dev.error if dev.state is not State.CONFIRMED else None,
        )
    return outcomes


def exchange_data(session: DeviceSession, payload: bytes, channel: SimChannel) -> bytes:
    """Seal ``payload`` for the confirmed peer, deliver it and return what the peer received."""
    if session.state is not State.CONFIRMED:
        raise NotConfirmed(f"{session.device_id} has no confirmed peer")
    peer = channel.devices[session.confirmed_peer]
    before, rejected = len(peer.inbox), len(peer.auth_failures)
    sealed = crypto.seal(session.key, payload)
    channel.send(session._send(Kind.DATA, session.confirmed_peer, sealed.to_bytes()))
    channel.run()
    if len(peer.auth_failures) > rejected:
        raise AuthError(f"{peer.device_id} could not authenticate DATA from {session.device_id}")
    if len(peer.inbox) == before:
        raise Timeout(f"DATA from {session.device_id} was not delivered")
    return peer.inbox[-1]


def share_key(session: DeviceSession, device_id: str, bits: Optional[QuantizedBits] = None) -> DeviceSession:
    """Hand a confirmed key to another device of the same user (phone, laptop...).

    The clone is CONFIRMED with the same peer and key; register it on the
    channel to let it exchange data with the peer directly.
    """
    if session.state is not State.CONFIRMED:
        raise NotConfirmed(f"{session.device_id} has no confirmed peer")
    clone = DeviceSession(device_id, bits if bits is not None else session.bits,
                          session.min_valid_bits, session.key_len, session.message_budget)
    clone.candidate_keys = {session.confirmed_peer: session.key}
    clone._selected = session.confirmed_peer
    clone.key = session.key
    clone.confirmed_peer = session.confirmed_peer
    clone.state = State.CONFIRMED
    return clone
