"""Pure-Python session kernel; semantic twin of the compiled one.

The unicast data phase is the simulator's hot loop: per frame it advances
the sender's XOR chain, plays Bob's two-attempt decapsulation, and updates
the eavesdropper's tracking state. All randomness is pre-drawn by the
caller into flat arrays, so this function is a deterministic map and the
compiled and pure implementations are interchangeable bit for bit.

Headers are drawn by exclusion mapping: raw values lie in [0, 2^w - 2]
and shift up by one when they reach the previous header, which realizes
a uniform draw over all words except the last one in a single draw.
"""

from __future__ import annotations


def unicast_data_phase(v0: int, width: int, vh_raw, bob_drop, ack_drop,
                       eve_drop, eve_status_ok, eve_has_v0: bool):
    """Run the data phase over pre-drawn randomness; returns metric tuple.

    Arrays (equal length n): vh_raw holds uints in [0, 2^width - 2];
    bob_drop / ack_drop / eve_drop are per-frame loss bits; eve_status_ok
    says whether Eve correctly learns the frame's sender-side ACK status.

    Returns (accepted, acked, replay_discards, alarms, eve_useful,
    eve_blind, final_ve, final_vd).
    """
    n = len(vh_raw)
    a_ve = v0
    a_last_vh = 0
    a_last_q = 1
    b_vd = v0
    b_last_vh = 0
    b_alarmed = False

    tracking = bool(eve_has_v0)
    acc = v0
    useful = 0

    accepted = 0
    acked = 0
    replays = 0
    alarms = 0

    for i in range(n):
        raw = int(vh_raw[i])
        vh = raw + 1 if raw >= a_last_vh else raw
        ve = vh ^ a_ve
        if not a_last_q:
            ve ^= a_last_vh

        frame_accepted = False
        if not bob_drop[i] and not b_alarmed:
            if vh == b_last_vh:
                replays += 1
            else:
                cand = vh ^ b_vd
                if cand != ve:
                    cand ^= b_last_vh
                if cand == ve:
                    frame_accepted = True
                    accepted += 1
                    b_vd = cand
                    b_last_vh = vh
                else:
                    alarms += 1
                    b_alarmed = True

        q = 1 if (frame_accepted and not ack_drop[i]) else 0
        acked += q
        a_ve = ve
        a_last_vh = vh
        a_last_q = q

        captured = not eve_drop[i]
        if tracking and captured and (acc ^ vh) == ve:
            useful += 1
        if not eve_status_ok[i]:
            tracking = False
        elif q:
            if captured:
                acc ^= vh
            else:
                tracking = False

    blind = 0 if (eve_has_v0 and tracking) else 1
    return accepted, acked, replays, alarms, useful, blind, a_ve, b_vd
