"""Deterministic discrete-event simulation of ARQ-CROWN sessions.

One session = initialization handshake + n_data unicast frames (+ optional
multicast), between Alice (client) and Bob (AP) with a passive or active
Eve listening on every link. Time is a bare event index; a data frame and
its ACK occupy consecutive indices, and timeouts are logical (no timer
events appear in the trace).

Randomness discipline: the session generator is split into one child
stream per purpose (header words, each link's delivery bits, attacker
draws) in a fixed order, so adding Eve to a topology or turning tracing
on or off never changes the Alice-Bob outcome. The data phase pre-draws
its arrays and hands them to the session kernel (compiled or pure); the
object-machine path consumes the same arrays and produces identical
metrics, which is what lets attacker and tracing runs interoperate with
fast metric-only sweeps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import crown
from ._kernels import unicast_data_phase
from .errors import ConfigurationError
from .fading import FadingModel, sample_gains

BERNOULLI = "bernoulli"
FROM_CHANNEL = "from_channel"

DATA_PAYLOAD = 1500

# Fixed stream order for Generator.spawn; append only.
_S_ALICE_INIT, _S_BOB_INIT, _S_VH, _S_AB, _S_BA, _S_AE, _S_BE, _S_ATTACK, \
    _S_MCAST, _S_SPARE = range(10)


@dataclass(frozen=True)
class LinkModel:
    """Per-directed-pair loss model.

    ``loss_prob_data`` applies to data/initialization frames sent on the
    pair, ``loss_prob_ack`` to ACKs riding the same direction. The
    from-channel mode replaces the data Bernoulli with a capacity
    threshold r0 <= log2(1 + h P) over gains drawn from a fading model.
    """

    loss_prob_data: float = 0.0
    loss_prob_ack: float = 0.0
    mode: str = BERNOULLI
    fading: Optional[FadingModel] = None
    r0: float = 0.0
    p: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.loss_prob_data <= 1.0 or not 0.0 <= self.loss_prob_ack <= 1.0:
            raise ConfigurationError("loss probabilities must lie in [0, 1]")
        if self.mode not in (BERNOULLI, FROM_CHANNEL):
            raise ConfigurationError(f"unknown link mode {self.mode!r}")
        if self.mode == FROM_CHANNEL and self.fading is None:
            raise ConfigurationError("from-channel links need a fading model")

    def draw_data_drops(self, rng: np.random.Generator, n: int) -> np.ndarray:
        if self.mode == BERNOULLI:
            return (rng.random(n) < self.loss_prob_data).astype(np.uint8)
        h, _ = sample_gains(self.fading, rng, n)
        return (self.r0 > np.log2(1.0 + h * self.p)).astype(np.uint8)

    def draw_ack_drops(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return (rng.random(n) < self.loss_prob_ack).astype(np.uint8)


def lossless_link() -> LinkModel:
    return LinkModel()


def bernoulli_links(gamma_ab: float, gamma_ba: float, gamma_ae: float,
                    gamma_be: float) -> dict[str, LinkModel]:
    """Convenience link map; gamma_ba applies to both Bob's frames and ACKs."""
    return {
        "alice->bob": LinkModel(loss_prob_data=gamma_ab),
        "bob->alice": LinkModel(loss_prob_data=gamma_ba, loss_prob_ack=gamma_ba),
        "alice->eve": LinkModel(loss_prob_data=gamma_ae),
        "bob->eve": LinkModel(loss_prob_data=gamma_be, loss_prob_ack=gamma_be),
    }


@dataclass(frozen=True)
class Topology:
    """Alice and Bob (the AP) are implicit; Eve and multicast clients opt in."""

    eve: bool = True
    clients: tuple[str, ...] = ()


# Attacker actions; ``at`` indexes the unicast data frame before which the
# action fires. Replays reference a previously captured trace event.


@dataclass(frozen=True)
class InjectData:
    at: int
    v_h_bits: Optional[int] = None  # None draws from the attacker stream


@dataclass(frozen=True)
class ReplayFrame:
    at: int
    event_index: int


@dataclass(frozen=True)
class InjectAck:
    at: int


@dataclass(frozen=True)
class AttackerScript:
    actions: tuple = ()

    @classmethod
    def passive(cls) -> "AttackerScript":
        return cls(())


@dataclass
class TraceEvent:
    """One frame transmission plus its per-listener delivery bits.

    DATA events additionally carry the sender's V_e and the eventual
    ACK status; INIT events are flagged when their value survived into V0.
    These annotations feed the offline eavesdropper oracle.
    """

    t: int
    actor: str
    record: crown.FrameRecord
    delivered: dict[str, bool]
    sender_ve: Optional[crown.VWord] = None
    status: Optional[int] = None
    stored: bool = False

    def to_line(self) -> str:
        flags = ",".join(
            f"{name}={int(bit)}" for name, bit in sorted(self.delivered.items())
        )
        return f"{self.t} {self.actor} {self.record.to_line()} {flags or '-'}"


@dataclass
class SessionTrace:
    width: int
    events: list[TraceEvent] = field(default_factory=list)

    def add(self, actor: str, record: crown.FrameRecord,
            delivered: dict[str, bool], **kw) -> TraceEvent:
        ev = TraceEvent(t=len(self.events), actor=actor, record=record,
                        delivered=delivered, **kw)
        self.events.append(ev)
        return ev

    def to_lines(self) -> list[str]:
        return [ev.to_line() for ev in self.events]

    def write(self, path) -> None:
        with open(path, "w", encoding="ascii") as fh:
            fh.write(f"# arqsec-trace width={self.width}\n")
            for line in self.to_lines():
                fh.write(line + "\n")


@dataclass(frozen=True)
class SessionMetrics:
    n_init_events: int
    v0_agree: int
    accepted: int
    acked: int
    replay_discards: int
    alarms: int
    alarm_at: int  # trace event index, -1 without an alarm (or untraced)
    violations: int
    eve_v0: int
    eve_useful: int
    eve_blind: int
    attacker_frames: int = 0
    attacker_detected: int = 0
    mcast_sent: int = 0
    mcast_alarms: int = 0


@dataclass(frozen=True)
class SessionResult:
    metrics: SessionMetrics
    trace: Optional[SessionTrace]
    v0: crown.VWord


def _link(links: dict[str, LinkModel], key: str) -> LinkModel:
    return links.get(key, lossless_link())


_INIT_CAP = 10_000


def _run_init_phase(n_init: int, width: int, links, streams, trace, eve_present):
    """Drive the handshake over lossy links; returns both final states."""
    alice = crown.InitState(role=crown.INITIATOR, width=width, n_target=n_init)
    bob = crown.InitState(role=crown.RESPONDER, width=width, n_target=n_init)
    ab, ba = _link(links, "alice->bob"), _link(links, "bob->alice")
    ae, be = _link(links, "alice->eve"), _link(links, "bob->eve")

    alice, action = crown.init_step(alice, crown.Timeout(), streams[_S_ALICE_INIT])
    rounds = 0
    while not isinstance(action, crown.Done):
        rounds += 1
        if rounds > _INIT_CAP:
            raise RuntimeError("initialization did not converge; check losses")
        frame = crown.FrameRecord(kind=crown.INIT, seq=action.seq, v_h=action.word)
        to_bob = not ab.draw_data_drops(streams[_S_AB], 1)[0]
        to_eve = bool(eve_present and not ae.draw_data_drops(streams[_S_AE], 1)[0])
        ev_a = trace.add("alice", frame, {"bob": to_bob, "eve": to_eve})

        if not to_bob:
            alice, action = crown.init_step(alice, crown.Timeout(),
                                            streams[_S_ALICE_INIT])
            continue
        bob, reply = crown.init_step(
            bob, crown.FrameReceived(frame.seq, frame.v_h), streams[_S_BOB_INIT]
        )
        reply_frame = crown.FrameRecord(kind=crown.INIT, seq=reply.seq, v_h=reply.word)
        to_alice = not ba.draw_data_drops(streams[_S_BA], 1)[0]
        to_eve = bool(eve_present and not be.draw_data_drops(streams[_S_BE], 1)[0])
        ev_b = trace.add("bob", reply_frame, {"alice": to_alice, "eve": to_eve})

        if to_alice:
            alice, action = crown.init_step(
                alice, crown.FrameReceived(reply.seq, reply.word),
                streams[_S_ALICE_INIT],
            )
            if isinstance(action, (crown.SendFrame, crown.Done)):
                # The exchange just completed; both carrying events survive
                # into V0.
                ev_a.stored = True
                ev_b.stored = True
        else:
            alice, action = crown.init_step(alice, crown.Timeout(),
                                            streams[_S_ALICE_INIT])
    return alice, bob


def run_session(topology: Topology, links: dict[str, LinkModel],
                attacker: AttackerScript, n_init: int, n_data: int,
                rng: np.random.Generator, *, width: int = 24,
                record_trace: bool = True, eve_perfect_acks: bool = True,
                n_mcast: int = 0) -> SessionResult:
    """Simulate one full session and return its metrics (and trace).

    The passive, untraced, unicast-only case runs through the session
    kernel; anything needing per-event bookkeeping walks the protocol
    state machines. Both paths consume identical pre-drawn randomness and
    yield identical metrics for the same generator state.
    """
    if n_init < 2:
        raise ConfigurationError("initialization needs n_init >= 2")
    streams = rng.spawn(10)
    trace = SessionTrace(width=width)

    alice_init, bob_init = _run_init_phase(
        n_init, width, links, streams, trace, topology.eve
    )
    v0_a = crown.init_v0(alice_init)
    v0_b = crown.init_v0(bob_init)
    eve_v0 = int(
        topology.eve
        and all(
            bool(ev.delivered.get("eve"))
            for ev in trace.events
            if ev.record.kind == crown.INIT and ev.stored
        )
    )

    ab, ba = _link(links, "alice->bob"), _link(links, "bob->alice")
    ae, be = _link(links, "alice->eve"), _link(links, "bob->eve")
    vh_raw = streams[_S_VH].integers(0, (1 << width) - 1, size=n_data,
                                     dtype=np.uint64)
    bob_drop = ab.draw_data_drops(streams[_S_AB], n_data)
    ack_drop = ba.draw_ack_drops(streams[_S_BA], n_data)
    eve_drop = ae.draw_data_drops(streams[_S_AE], n_data)
    eve_ack_drop = be.draw_ack_drops(streams[_S_BE], n_data)
    if not topology.eve:
        eve_drop = np.ones(n_data, dtype=np.uint8)
        eve_v0 = 0

    use_kernel = (
        not record_trace and not attacker.actions and n_mcast == 0
        and eve_perfect_acks
    )
    if use_kernel:
        status_ok = np.ones(n_data, dtype=np.uint8)
        accepted, acked, replays, alarms, useful, blind, _, _ = unicast_data_phase(
            v0_a.bits, width, vh_raw, bob_drop, ack_drop, eve_drop,
            status_ok, bool(eve_v0),
        )
        metrics = SessionMetrics(
            n_init_events=sum(
                1 for ev in trace.events if ev.record.kind == crown.INIT
            ),
            v0_agree=int(v0_a == v0_b),
            accepted=accepted, acked=acked, replay_discards=replays,
            alarms=alarms, alarm_at=-1,
            violations=alice_init.violations + bob_init.violations,
            eve_v0=eve_v0, eve_useful=useful, eve_blind=blind,
        )
        return SessionResult(metrics=metrics, trace=None, v0=v0_a)

    return _run_object_path(
        topology, attacker, n_init, n_data, width, record_trace,
        eve_perfect_acks, n_mcast, streams, trace, alice_init, bob_init,
        v0_a, v0_b, eve_v0, vh_raw, bob_drop, ack_drop, eve_drop,
        eve_ack_drop,
    )


def _run_object_path(topology, attacker, n_init, n_data, width, record_trace,
                     eve_perfect_acks, n_mcast, streams, trace, alice_init,
                     bob_init, v0_a, v0_b, eve_v0, vh_raw, bob_drop,
                     ack_drop, eve_drop, eve_ack_drop) -> SessionResult:
    sender = crown.make_sender(v0_a)
    receiver = crown.make_receiver(v0_b)
    actions_at: dict[int, list] = {}
    for act in attacker.actions:
        actions_at.setdefault(act.at, []).append(act)

    accepted = acked = replays = alarms = 0
    alarm_at = -1
    attacker_frames = attacker_detected = 0
    halted = False

    eve_tracking = bool(eve_v0)
    eve_acc = v0_a.bits
    eve_useful = 0

    attack_rng = streams[_S_ATTACK]

    def bob_handle(v_h: crown.VWord, true_ve: crown.VWord, from_attacker: bool):
        nonlocal receiver, accepted, replays, alarms, alarm_at, halted
        nonlocal attacker_frames, attacker_detected
        outcome, receiver = crown.receiver_decap(
            receiver, v_h, lambda cand: cand == true_ve
        )
        if from_attacker:
            attacker_frames += 1
            if outcome != crown.DecapOutcome.ACCEPTED:
                attacker_detected += 1
        if outcome == crown.DecapOutcome.ACCEPTED:
            if not from_attacker:
                accepted += 1
        elif outcome == crown.DecapOutcome.REPLAY_DISCARD:
            replays += 1
        else:
            alarms += 1
            alarm_at = len(trace.events) - 1
            halted = True
        return outcome

    force_ack: set[int] = set()
    for i in range(n_data):
        if halted:
            break
        for act in actions_at.get(i, ()):
            if isinstance(act, InjectAck):
                force_ack.add(i)
                continue
            if isinstance(act, InjectData):
                bits = act.v_h_bits
                if bits is None:
                    bits = int(attack_rng.integers(0, 1 << width))
                v_h = crown.VWord(bits, width)
                fake_ve = crown.random_word(width, attack_rng)
                rec = crown.FrameRecord(kind=crown.DATA, seq=i, v_h=v_h,
                                        payload_len=DATA_PAYLOAD)
                trace.add("eve", rec, {"bob": True, "eve": True})
                bob_handle(v_h, fake_ve, from_attacker=True)
            elif isinstance(act, ReplayFrame):
                # Negative indices address captured DATA/INIT frames from
                # the end (-1 = the most recently transmitted frame).
                if act.event_index < 0:
                    frames = [ev for ev in trace.events
                              if ev.record.kind in (crown.DATA, crown.INIT)]
                    if len(frames) < -act.event_index:
                        raise ConfigurationError(
                            f"replay references missing frame {act.event_index}"
                        )
                    src = frames[act.event_index]
                else:
                    if act.event_index >= len(trace.events):
                        raise ConfigurationError(
                            f"replay references future event {act.event_index}"
                        )
                    src = trace.events[act.event_index]
                    if src.record.kind not in (crown.DATA, crown.INIT):
                        raise ConfigurationError("replay source must be a frame")
                old_ve = src.sender_ve if src.sender_ve is not None else \
                    crown.random_word(width, attack_rng)
                trace.add("eve", src.record, {"bob": True, "eve": True})
                bob_handle(src.record.v_h, old_ve, from_attacker=True)
            if halted:
                break
        if halted:
            break

        raw = int(vh_raw[i])
        bits = raw + 1 if raw >= sender.last_v_h.bits else raw
        v_h = crown.VWord(bits, width)
        ve, sender = crown.sender_step(sender, v_h)
        rec = crown.FrameRecord(kind=crown.DATA, seq=i, v_h=v_h,
                                payload_len=DATA_PAYLOAD)
        to_bob = not bob_drop[i]
        to_eve = bool(topology.eve and not eve_drop[i])
        ev = trace.add("alice", rec, {"bob": to_bob, "eve": to_eve},
                       sender_ve=ve)

        frame_accepted = False
        if to_bob:
            outcome = bob_handle(v_h, ve, from_attacker=False)
            frame_accepted = outcome == crown.DecapOutcome.ACCEPTED

        ack_to_eve = False
        if frame_accepted:
            ack_rec = crown.FrameRecord(kind=crown.ACK, seq=i,
                                        v_h=crown.zero_word(width))
            ack_to_alice = not ack_drop[i]
            ack_to_eve = bool(topology.eve and not eve_ack_drop[i])
            trace.add("bob", ack_rec, {"alice": ack_to_alice, "eve": ack_to_eve})
            q = 1 if ack_to_alice else 0
        else:
            q = 0
        if i in force_ack:
            q = 1
        sender = crown.record_ack_status(sender, q)
        acked += q
        ev.status = q

        if topology.eve:
            captured = not eve_drop[i]
            if eve_tracking and captured and (eve_acc ^ bits) == ve.bits:
                eve_useful += 1
            if eve_perfect_acks:
                status_ok = True
            else:
                believed = 1 if (frame_accepted and ack_to_eve) else 0
                status_ok = believed == q
            if not status_ok:
                eve_tracking = False
            elif q:
                if captured:
                    eve_acc ^= bits
                else:
                    eve_tracking = False

    mcast_sent = mcast_alarms = 0
    if n_mcast > 0 and not halted:
        mcast_sent, mcast_alarms = _run_mcast_phase(
            topology, n_mcast, width, streams, trace
        )

    metrics = SessionMetrics(
        n_init_events=sum(1 for e in trace.events if e.record.kind == crown.INIT),
        v0_agree=int(v0_a == v0_b),
        accepted=accepted, acked=acked, replay_discards=replays,
        alarms=alarms, alarm_at=alarm_at,
        violations=alice_init.violations + bob_init.violations,
        eve_v0=eve_v0,
        eve_useful=eve_useful,
        eve_blind=0 if (eve_v0 and eve_tracking) else 1,
        attacker_frames=attacker_frames, attacker_detected=attacker_detected,
        mcast_sent=mcast_sent, mcast_alarms=mcast_alarms,
    )
    return SessionResult(
        metrics=metrics, trace=trace if record_trace else None, v0=v0_a
    )


def _run_mcast_phase(topology, n_mcast, width, streams, trace):
    """Multicast segment: V_g distributed over the secure pairwise links
    (modeled reliable), then n_mcast group frames."""
    rng = streams[_S_MCAST]
    group = crown.make_group(crown.random_word(width, rng), vg_id=1,
                             members=topology.clients or ("alice",))
    for member in group.members:
        group = crown.record_member_ack(group, member)
    members = {
        name: crown.MulticastMember(v_g=group.v_g, vg_id=group.vg_id)
        for name in group.members
    }
    alarms = 0
    for j in range(n_mcast):
        v_h, veg, group = crown.multicast_encap(group, rng)
        rec = crown.FrameRecord(kind=crown.MCAST, seq=j, v_h=v_h,
                                vg_id=group.vg_id, payload_len=DATA_PAYLOAD)
        delivered = {name: True for name in members}
        if topology.eve:
            delivered["eve"] = True
        trace.add("bob", rec, delivered)
        for name in members:
            outcome, members[name] = crown.multicast_decap(
                members[name], v_h, group.vg_id, lambda cand: cand == veg
            )
            if outcome == crown.DecapOutcome.ATTACK_ALARM:
                alarms += 1
    return n_mcast, alarms


def eve_observations_from_trace(trace: SessionTrace,
                                perfect_acks: bool = True
                                ) -> crown.EveObservations:
    """Build the offline oracle's capture bits from a recorded trace."""
    init_caps = [
        int(bool(ev.delivered.get("eve")))
        for ev in trace.events if ev.record.kind == crown.INIT
    ]
    data_events = [ev for ev in trace.events if ev.record.kind == crown.DATA
                   and ev.actor == "alice"]
    data_caps = [int(bool(ev.delivered.get("eve"))) for ev in data_events]
    if perfect_acks:
        status = [1] * len(data_events)
    else:
        ack_caps = {
            ev.record.seq: int(bool(ev.delivered.get("eve")))
            for ev in trace.events if ev.record.kind == crown.ACK
        }
        status = [
            int((ack_caps.get(ev.record.seq, 0) == 1) == bool(ev.status))
            for ev in data_events
        ]
    return crown.EveObservations(init=init_caps, data=data_caps,
                                 ack_status_known=status)


@dataclass(frozen=True)
class SessionConfig:
    """Bundle of everything run_session needs except the generator."""

    links: dict[str, LinkModel]
    n_init: int
    n_data: int
    width: int = 24
    topology: Topology = Topology()
    attacker: AttackerScript = AttackerScript()
    eve_perfect_acks: bool = True
    record_trace: bool = False
    n_mcast: int = 0


def replay_experiment(cfg: SessionConfig, n_seeds: int,
                      master_seed: int) -> dict[str, float]:
    """Run the session across seeds and aggregate the security metrics.

    Returns means and standard errors for the useful-frame count plus the
    empirical V0-recovery, alarm, and detection frequencies. Deterministic
    in (cfg, n_seeds, master_seed).
    """
    if n_seeds < 1:
        raise ConfigurationError("need at least one seed")
    children = np.random.SeedSequence(master_seed).spawn(n_seeds)
    useful = np.zeros(n_seeds)
    v0_hits = np.zeros(n_seeds)
    blind = np.zeros(n_seeds)
    alarms = np.zeros(n_seeds)
    detected = np.zeros(n_seeds)
    accepted = np.zeros(n_seeds)
    for k, child in enumerate(children):
        result = run_session(
            cfg.topology, cfg.links, cfg.attacker, cfg.n_init, cfg.n_data,
            np.random.default_rng(child), width=cfg.width,
            record_trace=cfg.record_trace,
            eve_perfect_acks=cfg.eve_perfect_acks, n_mcast=cfg.n_mcast,
        )
        m = result.metrics
        useful[k] = m.eve_useful
        v0_hits[k] = m.eve_v0
        blind[k] = m.eve_blind
        alarms[k] = m.alarms
        detected[k] = int(m.attacker_frames > 0 and
                          m.attacker_detected == m.attacker_frames)
        accepted[k] = m.accepted
    root = math.sqrt(n_seeds)
    return {
        "mean_useful": float(useful.mean()),
        "se_useful": float(useful.std(ddof=1) / root) if n_seeds > 1 else 0.0,
        "v0_recovery_rate": float(v0_hits.mean()),
        "se_v0_recovery": float(v0_hits.std(ddof=1) / root) if n_seeds > 1 else 0.0,
        "blind_rate": float(blind.mean()),
        "alarm_rate": float(alarms.mean()),
        "detection_rate": float(detected.mean()),
        "mean_accepted": float(accepted.mean()),
    }
