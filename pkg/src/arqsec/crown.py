"""ARQ-CROWN overlay: V-word chaining state machines and security metrics.

The overlay turns the per-frame security parameter (IV/TSC/PN analog,
called V here) into a shared secret. An initialization handshake derives
V0 from random values exchanged in both directions; afterwards each
unicast frame carries a cleartext header word V_h while the value actually
used for encapsulation, V_e, is the XOR of V0 with every header that was
transmitted and acknowledged so far. The receiver mirrors the chain with
V_d and tolerates exactly one lost ACK via a second decapsulation attempt;
a second failure is treated as an active attack.

Encryption itself is idealized: a decapsulation check succeeds iff the
receiver's candidate V equals the sender's V_e, which models the standards'
ICV test with perfect error detection. Real ciphers are out of scope.

State machines are advanced functionally (each step returns a new state);
a session's event loop owns its states exclusively.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .errors import ConfigurationError, DomainError, NotReadyError

# Metric experiments use the standard widths (24 for WEP, 48 otherwise);
# protocol logic is width-generic and exhaustive tests run 4-bit words.
STANDARD_WIDTHS = (24, 48)

_REDRAW_CAP = 64


@dataclass(frozen=True)
class VWord:
    """Fixed-width random word; prints as fixed-width hex."""

    bits: int
    width: int

    def __post_init__(self):
        if self.width < 1:
            raise ConfigurationError("width must be positive")
        if not 0 <= self.bits < (1 << self.width):
            raise ConfigurationError("bits out of range for width")

    def __xor__(self, other: "VWord") -> "VWord":
        if other.width != self.width:
            raise ValueError("cannot XOR words of different widths")
        return VWord(self.bits ^ other.bits, self.width)

    def __str__(self) -> str:
        return format(self.bits, f"0{(self.width + 3) // 4}x")


def zero_word(width: int) -> VWord:
    return VWord(0, width)


def random_word(width: int, rng: np.random.Generator) -> VWord:
    return VWord(int(rng.integers(0, 1 << width)), width)


def random_word_excluding(width: int, exclude: VWord,
                          rng: np.random.Generator) -> VWord:
    """Uniform word != exclude, by redraw (capped for degenerate widths)."""
    for _ in range(_REDRAW_CAP):
        w = random_word(width, rng)
        if w != exclude:
            return w
    raise RuntimeError("could not draw a distinct header word")


# ---------------------------------------------------------------------------
# Initialization handshake
# ---------------------------------------------------------------------------

INITIATOR = "initiator"
RESPONDER = "responder"


@dataclass(frozen=True)
class FrameReceived:
    seq: int
    word: VWord


class Timeout:
    """Logical timeout event (also kicks off the initiator's first frame)."""


@dataclass(frozen=True)
class SendFrame:
    seq: int
    word: VWord


@dataclass(frozen=True)
class Done:
    v0: VWord


class Continue:
    """No action required."""


@dataclass(frozen=True)
class InitState:
    """Initialization bookkeeping for either role.

    ``stored_pairs`` holds (sequence number, word) entries; V0 is their
    XOR once the initiator has ``n_target`` of them. The responder keeps
    only the latest pair per sequence number.
    """

    role: str
    width: int
    n_target: int
    stored_pairs: tuple[tuple[int, VWord], ...] = ()
    next_seq: int = 1
    pending: Optional[VWord] = None
    done: bool = False
    violations: int = 0

    def __post_init__(self):
        if self.role not in (INITIATOR, RESPONDER):
            raise ConfigurationError("role must be initiator or responder")
        if self.n_target < 2 or self.n_target % 2:
            raise ConfigurationError("n_target must be an even count >= 2")


def init_v0(state: InitState) -> VWord:
    """XOR of all stored initialization values."""
    acc = zero_word(state.width)
    for _, word in state.stored_pairs:
        acc ^= word
    return acc


def init_step(state: InitState, event, rng: np.random.Generator):
    """Advance the handshake on a received frame or a timeout.

    Initiator: a timeout (re)sends the current sequence number with a
    fresh random value, discarding the pending one; the expected reply
    (sequence + 1) stores the pair and moves on, finishing with Done(V0)
    once n_target values are stored. Responder: replies to every received
    frame with sequence + 1 and a fresh value, keeping only the latest
    pair per sequence number. Malformed sequence numbers are recorded as
    protocol violations and the frame is ignored.
    """
    if state.role == INITIATOR:
        return _initiator_step(state, event, rng)
    return _responder_step(state, event, rng)


def _initiator_step(state: InitState, event, rng):
    if state.done:
        return state, Continue()
    if isinstance(event, Timeout):
        word = random_word(state.width, rng)
        return replace(state, pending=word), SendFrame(state.next_seq, word)
    if not isinstance(event, FrameReceived):
        raise TypeError(f"unsupported event {event!r}")
    if state.pending is None or event.seq != state.next_seq + 1:
        return replace(state, violations=state.violations + 1), Continue()
    stored = state.stored_pairs + (
        (state.next_seq, state.pending),
        (event.seq, event.word),
    )
    if len(stored) >= state.n_target:
        new = replace(state, stored_pairs=stored, pending=None, done=True)
        return new, Done(init_v0(new))
    new = replace(
        state, stored_pairs=stored, pending=None, next_seq=state.next_seq + 2
    )
    word = random_word(state.width, rng)
    return replace(new, pending=word), SendFrame(new.next_seq, word)


def _responder_step(state: InitState, event, rng):
    if isinstance(event, Timeout):
        return state, Continue()
    if not isinstance(event, FrameReceived):
        raise TypeError(f"unsupported event {event!r}")
    if event.seq % 2 == 0 or not 1 <= event.seq < 2 * state.n_target:
        return replace(state, violations=state.violations + 1), Continue()
    reply = random_word(state.width, rng)
    kept = tuple(
        (seq, word)
        for seq, word in state.stored_pairs
        if seq not in (event.seq, event.seq + 1)
    )
    stored = kept + ((event.seq, event.word), (event.seq + 1, reply))
    return replace(state, stored_pairs=stored), SendFrame(event.seq + 1, reply)


def p0_closed_form(gamma_ae: Sequence[float], gamma_be: Sequence[float]) -> float:
    """Probability Eve captures every stored initialization frame.

    Product of (1 - gamma) over the frames stored by each side; any
    certain loss zeroes it.
    """
    prod = 1.0
    for g in list(gamma_ae) + list(gamma_be):
        if not 0.0 <= g <= 1.0:
            raise ConfigurationError("loss probabilities must lie in [0, 1]")
        prod *= 1.0 - g
    return prod


# ---------------------------------------------------------------------------
# Unicast data phase
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SenderVState:
    """Sender-side chain: current V_e, last header, last frame status."""

    v_e: VWord
    last_v_h: VWord
    last_q: Optional[int] = 1  # None while the previous frame's ACK is pending

    @property
    def width(self) -> int:
        return self.v_e.width


def make_sender(v0: VWord) -> SenderVState:
    # V_h(0) = 0 by convention, so the first frame's branch is immaterial.
    return SenderVState(v_e=v0, last_v_h=zero_word(v0.width), last_q=1)


def record_ack_status(state: SenderVState, q: int) -> SenderVState:
    """Record the ACK/timeout verdict for the frame just sent."""
    if state.last_q is not None:
        raise NotReadyError("no frame is awaiting a status")
    return replace(state, last_q=int(q))


def sender_step(state: SenderVState, v_h: VWord) -> tuple[VWord, SenderVState]:
    """Advance the chain with a caller-supplied header word.

    V_e(i) = V_h(i) xor V_e(i-1), with the unacknowledged previous header
    backed out when Q(i-1) = 0. The new state awaits an ACK status.
    """
    if state.last_q is None:
        raise NotReadyError("previous frame's ACK status not recorded")
    if v_h == state.last_v_h:
        raise ConfigurationError("consecutive header words must differ")
    v_e = v_h ^ state.v_e
    if not state.last_q:
        v_e ^= state.last_v_h
    return v_e, SenderVState(v_e=v_e, last_v_h=v_h, last_q=None)


def sender_next(state: SenderVState, rng: np.random.Generator
                ) -> tuple[VWord, VWord, SenderVState]:
    """Draw the next header (never equal to the last) and advance."""
    v_h = random_word_excluding(state.width, state.last_v_h, rng)
    v_e, new = sender_step(state, v_h)
    return v_h, v_e, new


class DecapOutcome(Enum):
    ACCEPTED = "accepted"
    REPLAY_DISCARD = "replay_discard"
    ATTACK_ALARM = "attack_alarm"


@dataclass(frozen=True)
class ReceiverVState:
    """Receiver-side chain: committed V_d and the last accepted header."""

    v_d: VWord
    last_v_h: VWord
    alarmed: bool = False

    @property
    def width(self) -> int:
        return self.v_d.width


def make_receiver(v0: VWord) -> ReceiverVState:
    return ReceiverVState(v_d=v0, last_v_h=zero_word(v0.width))


def receiver_decap(state: ReceiverVState, v_h: VWord,
                   decrypt_check: Callable[[VWord], bool]
                   ) -> tuple[DecapOutcome, ReceiverVState]:
    """Attempt decapsulation of a frame carrying header ``v_h``.

    A header equal to the last accepted one is discarded as a replay.
    Otherwise the first candidate assumes the previous ACK arrived; on an
    ICV failure the previous header is backed out (the ACK was lost); a
    second failure freezes the state pending countermeasures.
    """
    if state.alarmed:
        return DecapOutcome.ATTACK_ALARM, state
    if v_h == state.last_v_h:
        return DecapOutcome.REPLAY_DISCARD, state
    candidate = v_h ^ state.v_d
    if decrypt_check(candidate):
        return DecapOutcome.ACCEPTED, ReceiverVState(v_d=candidate, last_v_h=v_h)
    candidate = candidate ^ state.last_v_h
    if decrypt_check(candidate):
        return DecapOutcome.ACCEPTED, ReceiverVState(v_d=candidate, last_v_h=v_h)
    return DecapOutcome.ATTACK_ALARM, replace(state, alarmed=True)


# ---------------------------------------------------------------------------
# Multicast
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GroupVState:
    """AP-side group secret V_g plus membership and header bookkeeping."""

    v_g: VWord
    vg_id: int
    members: frozenset[str]
    members_acked: frozenset[str] = frozenset()
    used_headers: frozenset[int] = frozenset()

    @property
    def width(self) -> int:
        return self.v_g.width


def make_group(v_g: VWord, vg_id: int, members: Iterable[str]) -> GroupVState:
    return GroupVState(v_g=v_g, vg_id=vg_id, members=frozenset(members))


def record_member_ack(group: GroupVState, member: str) -> GroupVState:
    if member not in group.members:
        raise ConfigurationError(f"unknown group member {member!r}")
    return replace(group, members_acked=group.members_acked | {member})


def multicast_encap(group: GroupVState, rng: np.random.Generator
                    ) -> tuple[VWord, VWord, GroupVState]:
    """Encapsulation value for the next multicast frame.

    V_eg(i) = V_h(i) xor V_g with a header that never repeats within this
    V_g's lifetime; requires every member to have ACKed V_g.
    """
    if group.members_acked != group.members:
        raise NotReadyError("not all group members have acknowledged V_g")
    for _ in range(_REDRAW_CAP):
        v_h = random_word(group.width, rng)
        if v_h.bits not in group.used_headers:
            break
    else:
        raise RuntimeError("header space exhausted for this V_g lifetime")
    new = replace(group, used_headers=group.used_headers | {v_h.bits})
    return v_h, v_h ^ group.v_g, new


@dataclass(frozen=True)
class MulticastMember:
    """Client-side view of one multicast group."""

    v_g: VWord
    vg_id: int
    seen_headers: frozenset[int] = frozenset()


def multicast_decap(member: MulticastMember, v_h: VWord, vg_id: int,
                    decrypt_check: Callable[[VWord], bool]
                    ) -> tuple[DecapOutcome, MulticastMember]:
    """Member-side decapsulation; repeated headers signal an attack."""
    if vg_id != member.vg_id:
        raise NotReadyError(f"no V_g stored under id {vg_id}")
    if v_h.bits in member.seen_headers:
        return DecapOutcome.ATTACK_ALARM, member
    candidate = v_h ^ member.v_g
    if not decrypt_check(candidate):
        return DecapOutcome.ATTACK_ALARM, member
    return DecapOutcome.ACCEPTED, replace(
        member, seen_headers=member.seen_headers | {v_h.bits}
    )


# ---------------------------------------------------------------------------
# Trace records and Eve's tracking
# ---------------------------------------------------------------------------

INIT = "INIT"
DATA = "DATA"
ACK = "ACK"
MCAST = "MCAST"


@dataclass(frozen=True)
class FrameRecord:
    """Wire-format record of one transmitted frame."""

    kind: str
    seq: int
    v_h: VWord
    vg_id: Optional[int] = None
    payload_len: int = 0

    def to_line(self) -> str:
        vg = "-" if self.vg_id is None else str(self.vg_id)
        return f"{self.kind} {self.seq} {self.v_h} {vg} {self.payload_len}"

    @classmethod
    def from_line(cls, line: str, width: int) -> "FrameRecord":
        kind, seq, v_h, vg, payload = line.split()
        return cls(
            kind=kind,
            seq=int(seq),
            v_h=VWord(int(v_h, 16), width),
            vg_id=None if vg == "-" else int(vg),
            payload_len=int(payload),
        )


@dataclass(frozen=True)
class EveObservations:
    """Eve's per-event capture bits over a session trace.

    ``init`` and ``data`` align with the trace's INIT and DATA events (in
    order); ``ack_status_known`` aligns with DATA events and says whether
    Eve knows the true sender-side status of that frame. Perfect ACK
    tracking (the paper's worst case, our default) is all-ones.
    """

    init: Sequence[int]
    data: Sequence[int]
    ack_status_known: Sequence[int]


def eve_track(events: Sequence, eve_obs: EveObservations) -> tuple[int, int]:
    """Count Eve's useful frames over a completed unicast session trace.

    ``events`` are the session's trace events (INIT and DATA entries carry
    the attributes documented on netsim.TraceEvent). Eve reconstructs V0
    only if she captured every initialization frame whose value survived
    into it; afterwards her header accumulator tracks the sender chain
    while she captures every acknowledged data frame and knows its status.
    A frame is useful when her reconstructed V_e equals the sender's.
    Missing one acknowledged frame (or one status) blinds her for the rest
    of the session. Returns (useful count, blind flag at session end).
    """
    init_events = [ev for ev in events if ev.record.kind == INIT]
    data_events = [ev for ev in events if ev.record.kind == DATA]
    init_caps = list(eve_obs.init)
    data_caps = list(eve_obs.data)
    status_known = list(eve_obs.ack_status_known)
    if len(init_caps) != len(init_events):
        raise ValueError("init capture bits misaligned with trace")
    if len(data_caps) != len(data_events) or len(status_known) != len(data_events):
        raise ValueError("data capture bits misaligned with trace")

    has_v0 = all(
        cap for ev, cap in zip(init_events, init_caps) if ev.stored
    )

    useful = 0
    tracking = bool(has_v0)  # accumulator still mirrors the sender chain
    acc = 0
    for ev in init_events:
        if ev.stored:
            acc ^= ev.record.v_h.bits
    for ev, cap, known in zip(data_events, data_caps, status_known):
        v_h = ev.record.v_h.bits
        if tracking and cap and (acc ^ v_h) == ev.sender_ve.bits:
            useful += 1
        if not known:
            tracking = False
        elif ev.status:
            if cap:
                acc ^= v_h
            else:
                tracking = False
    blind = 0 if (has_v0 and tracking) else 1
    return useful, blind


def expected_useful_bound(gamma_e_mean: float, n_init: int,
                          session_size: int) -> float:
    """Analytical estimate of Eve's expected useful-frame count.

    ((1-g)^(n+1) - (1-g)^(N+1)) / g for homogeneous per-frame loss g over
    n initialization frames and an N-frame data session. Raising n
    suppresses the count geometrically.
    """
    if not 0.0 < gamma_e_mean < 1.0:
        raise DomainError(
            "bound needs 0 < gamma < 1; at gamma = 0 it degenerates to the "
            f"trivial cap N - n = {session_size - n_init}"
        )
    if n_init < 1 or session_size < n_init:
        raise ConfigurationError("need n_init >= 1 and session >= n_init")
    keep = 1.0 - gamma_e_mean
    return (keep ** (n_init + 1) - keep ** (session_size + 1)) / gamma_e_mean
