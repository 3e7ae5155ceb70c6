# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled session kernel; semantic twin of reference.py.

Same contract as the pure implementation: all randomness is pre-drawn by
the caller, the loop is a deterministic map, and outputs are identical
bit for bit across the two backends.
"""

from libc.stdint cimport uint64_t, uint8_t


def unicast_data_phase(object v0_obj, int width, const uint64_t[::1] vh_raw,
                       const uint8_t[::1] bob_drop, const uint8_t[::1] ack_drop,
                       const uint8_t[::1] eve_drop,
                       const uint8_t[::1] eve_status_ok, bint eve_has_v0):
    """See reference.unicast_data_phase; identical semantics and returns."""
    cdef Py_ssize_t n = vh_raw.shape[0]
    cdef uint64_t v0 = <uint64_t> v0_obj
    cdef uint64_t a_ve = v0
    cdef uint64_t a_last_vh = 0
    cdef int a_last_q = 1
    cdef uint64_t b_vd = v0
    cdef uint64_t b_last_vh = 0
    cdef bint b_alarmed = False

    cdef bint tracking = eve_has_v0
    cdef uint64_t acc = v0
    cdef long useful = 0

    cdef long accepted = 0
    cdef long acked = 0
    cdef long replays = 0
    cdef long alarms = 0

    cdef Py_ssize_t i
    cdef uint64_t raw, vh, ve, cand
    cdef bint frame_accepted, captured
    cdef int q

    with nogil:
        for i in range(n):
            raw = vh_raw[i]
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
    return accepted, acked, replays, alarms, useful, blind, int(a_ve), int(b_vd)
