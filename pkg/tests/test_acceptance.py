"""Acceptance gate: every criterion at its stated tolerance.

Each test prints one PASS/FAIL line (run with -s to see them inline).
Tolerances are pinned here, not tuned: Monte Carlo agreement within the
stated standard-error multiples, trend checks over the stated sweeps, and
exact checks where the math is exact.
"""

import math
import time

import numpy as np
import pytest

from arqsec import adapt, cli, coding, config, crown, netsim, rates
from arqsec._kernels import unicast_data_phase
from arqsec.fading import FadingModel

R0_GRID = (0.5, 1.0, 2.0, 4.0, 8.0)
SNR_DB_GRID = (0.0, 5.0, 10.0, 15.0, 20.0)


def report(criterion: str, ok: bool, detail: str):
    print(f"ACCEPTANCE {criterion}: {'PASS' if ok else 'FAIL'} - {detail}")
    assert ok, f"{criterion}: {detail}"


def db(snr_db):
    return 10.0 ** (snr_db / 10.0)


def test_criterion_01_closed_form_matches_monte_carlo():
    """Rayleigh closed form vs 1e6-sample product estimator on a 5x5 grid."""
    t0 = time.time()
    fb = rates.exponential_marginal()
    fe = rates.exponential_marginal()
    worst = 0.0
    rng = np.random.default_rng(101)
    for r0 in R0_GRID:
        for snr_db in SNR_DB_GRID:
            p = db(snr_db)
            closed = rates.key_rate_rayleigh_closed_form(r0, p)
            mc = rates.key_rate_independent(
                fb, fe, rates.RateParams(r0=r0, p=p), 1_000_000, rng
            )
            z = abs(mc.value - closed) / mc.std_err if mc.std_err else 0.0
            worst = max(worst, z)
    elapsed = time.time() - t0
    report(
        "01 closed-form vs Monte Carlo",
        worst <= 3.0 and elapsed < 60.0,
        f"worst |z| = {worst:.2f} (<= 3), runtime {elapsed:.1f}s (< 60s)",
    )


def test_criterion_02_fully_correlated_key_rate_is_zero():
    """Fully correlated channels kill the key rate at every grid point."""
    rng = np.random.default_rng(102)
    model = FadingModel.fully_correlated()
    worst = 0.0
    for r0 in R0_GRID:
        for snr_db in SNR_DB_GRID:
            sol = rates.key_rate_general(
                model, rates.RateParams(r0=r0, p=db(snr_db)), 100_000, rng
            )
            assert sol.value <= 2.0 * sol.std_err + 1e-15
            worst = max(worst, sol.value)
    report("02 fully correlated collapse", worst == 0.0,
           f"max estimate over grid = {worst} (exact zero)")


def test_criterion_03_erasure_capacity_sanity_and_ordering():
    """C_e = 0 exactly when rc >= r0; C_e beats C_s at low-to-moderate SNR."""
    rng = np.random.default_rng(103)
    model = FadingModel.rayleigh_independent()
    for r0, rc in ((1.0, 1.0), (1.0, 2.0), (4.0, 4.0)):
        sol = rates.erasure_capacity(
            model, rates.RateParams(r0=r0, p=10.0, rc=rc), 10_000, rng
        )
        assert sol.value == 0.0

    margins = []
    for snr_db in (0.0, 5.0, 10.0, 15.0, 20.0):
        p_bar = db(snr_db)
        grid = rates.GridSpec.default(p_bar, r0_max=10.0, r0_step=0.2,
                                      n_power=12)
        cs = rates.optimize(rates.KEY_RATE_INDEPENDENT, model, p_bar, 0.0,
                            grid, 100_000, np.random.default_rng(1030))
        ce = rates.optimize(rates.ERASURE_CAPACITY, model, p_bar, 0.0,
                            grid, 100_000, np.random.default_rng(1031))
        se = math.hypot(cs.std_err, ce.std_err)
        margins.append((snr_db, (ce.value - cs.value) / (3 * se)))
    low_moderate = [m for snr, m in margins if snr <= 10.0]
    report(
        "03 erasure-capacity ordering",
        all(m > 1.0 for m in low_moderate),
        "C_e(rc=0) > C_s by >3se at SNR in {0,5,10} dB; margins/3se = "
        + ", ".join(f"{snr:g}dB:{m:.1f}" for snr, m in margins),
    )


def test_criterion_04_dumb_antenna_decorrelation_and_convergence():
    """var(rho) within 10%; key rate nondecreasing in N, near the bound."""
    t0 = time.time()
    for n in (4, 10):
        _, var = fading_decorrelation(n)
        assert var == pytest.approx(1.0 / (n * (n - 1)), rel=0.10), n

    p_bar = 10.0
    grid = rates.GridSpec.default(p_bar, r0_max=10.0, r0_step=0.2, n_power=20)
    ind = rates.optimize(
        rates.KEY_RATE_INDEPENDENT, FadingModel.rayleigh_independent(),
        p_bar, 0.0, grid, 200_000, np.random.default_rng(1040),
    )
    values = []
    for i, n in enumerate((1, 2, 4, 8, 16)):
        sol = rates.optimize(
            rates.KEY_RATE_GENERAL, FadingModel.dumb_antenna_faded(n),
            p_bar, 0.0, grid, 200_000, np.random.default_rng(1041 + i),
        )
        values.append((n, sol.value, sol.std_err))
    monotone = all(
        hi >= lo - 3 * math.hypot(lo_se, hi_se)
        for (_, lo, lo_se), (_, hi, hi_se) in zip(values, values[1:])
    )
    n16 = values[-1]
    gap = abs(n16[1] - ind.value)
    within = gap <= 0.05 * ind.value + 3 * math.hypot(n16[2], ind.std_err)
    elapsed = time.time() - t0
    report(
        "04 dumb-antenna decorrelation",
        monotone and within and elapsed < 120.0,
        f"rates {['%.3f' % v for _, v, _ in values]} nondecreasing, "
        f"N=16 gap {gap / ind.value:.1%} (<= 5% + MC), "
        f"runtime {elapsed:.1f}s (< 120s)",
    )


def fading_decorrelation(n):
    from arqsec.fading import decorrelation_stats

    return decorrelation_stats(n, 100_000, np.random.default_rng(104 + n))


def test_criterion_05_temporal_adaptation_bracket():
    """Greedy episode rates sit between the stationary optimum and the
    ergodic ceiling, nonincreasing in alpha."""
    t0 = time.time()
    p = db(10.0)
    rate_grid = np.arange(0.1, 10.01, 0.1)
    stationary = max(rates.key_rate_rayleigh_closed_form(r, p) for r in rate_grid)
    ergodic = rates.ergodic_upper_bound(
        FadingModel.rayleigh_independent(), p, 2_000_000,
        np.random.default_rng(105),
    )
    results = {}
    for i, alpha in enumerate((0.1, 0.5, 0.9)):
        seeds = np.random.default_rng(1050 + i).spawn(50)
        vals = np.array([
            adapt.run_adaptive_episode(alpha, p, 10_000, rate_grid, s)
            for s in seeds
        ])
        results[alpha] = (float(vals.mean()),
                          float(vals.std(ddof=1) / math.sqrt(len(vals))))
    ok = True
    for alpha, (mean, se) in results.items():
        ok &= mean >= stationary - 3 * se
        ok &= mean <= ergodic.value + 3 * math.hypot(se, ergodic.std_err)
    pairs = sorted(results.items())
    for (a_lo, (m_lo, se_lo)), (a_hi, (m_hi, se_hi)) in zip(pairs, pairs[1:]):
        ok &= m_hi <= m_lo + 3 * math.hypot(se_lo, se_hi)
    elapsed = time.time() - t0
    report(
        "05 temporal adaptation bracket",
        ok and elapsed < 300.0,
        f"stationary {stationary:.4f} <= "
        + ", ".join(f"a={a}:{m:.4f}+/-{se:.4f}" for a, (m, se) in pairs)
        + f" <= ergodic {ergodic.value:.4f}, nonincreasing in alpha, "
        f"runtime {elapsed:.1f}s (< 300s)",
    )


def test_criterion_06_delay_limited_closed_forms():
    """Simulated outage and key rate match the closed forms at 3se."""
    t0 = time.time()
    rng = np.random.default_rng(106)
    worst_out = worst_rate = 0.0
    for k in (4, 8):
        for r0 in (1.0, 2.0):
            for p in (1.0, 10.0):
                for rc in (0.0, 1.0):
                    cfg = coding.DistillConfig(k=k, r0=r0, p=p, rc=rc)
                    res = coding.simulate_distillation(
                        cfg, coding.FrameErrorModel(), 100_000, rng
                    )
                    z_out = (abs(res.outage - coding.outage_prob_closed_form(cfg))
                             / res.outage_se) if res.outage_se else 0.0
                    z_rate = abs(
                        res.key_rate - coding.key_rate_delay_limited(cfg)
                    ) / res.key_rate_se
                    worst_out = max(worst_out, z_out)
                    worst_rate = max(worst_rate, z_rate)
    elapsed = time.time() - t0
    report(
        "06 delay-limited distillation",
        worst_out <= 3.0 and worst_rate <= 3.0 and elapsed < 120.0,
        f"worst |z| outage {worst_out:.2f}, key rate {worst_rate:.2f} (<= 3), "
        f"runtime {elapsed:.1f}s (< 120s)",
    )


def test_criterion_07_crown_synchronization():
    """Exhaustive loss patterns and mass random fuzzing never desync."""
    t0 = time.time()
    # Exhaustive: all 2^10 loss patterns of 5 frames x 5 ACKs, 4-bit words.
    for pattern in range(1024):
        frame_lost = [(pattern >> i) & 1 for i in range(5)]
        ack_lost = [(pattern >> (5 + i)) & 1 for i in range(5)]
        gen = np.random.default_rng(70_000 + pattern)
        v0 = crown.random_word(4, gen)
        sender, receiver = crown.make_sender(v0), crown.make_receiver(v0)
        for i in range(5):
            v_h, v_e, sender = crown.sender_next(sender, gen)
            accepted = False
            if not frame_lost[i]:
                outcome, receiver = crown.receiver_decap(
                    receiver, v_h, lambda c, v=v_e: c == v
                )
                assert outcome != crown.DecapOutcome.ATTACK_ALARM
                if outcome == crown.DecapOutcome.ACCEPTED:
                    assert receiver.v_d == v_e
                    accepted = True
            sender = crown.record_ack_status(
                sender, 1 if (accepted and not ack_lost[i]) else 0
            )

    # Fuzz: one million random traces at the metric widths via the kernel.
    total_alarms = 0
    traces_per_width = 500_000
    frames_per_trace = 6
    for width in (24, 48):
        r = np.random.default_rng(7000 + width)
        raw = r.integers(0, (1 << width) - 1,
                         (traces_per_width, frames_per_trace), dtype=np.uint64)
        bob_drop = (r.random(raw.shape) < 0.3).astype(np.uint8)
        ack_drop = (r.random(raw.shape) < 0.3).astype(np.uint8)
        eve_drop = np.zeros(frames_per_trace, dtype=np.uint8)
        ones = np.ones(frames_per_trace, dtype=np.uint8)
        v0s = r.integers(0, 1 << width, traces_per_width, dtype=np.uint64)
        for t in range(traces_per_width):
            out = unicast_data_phase(
                int(v0s[t]), width, raw[t], bob_drop[t], ack_drop[t],
                eve_drop, ones, True,
            )
            total_alarms += out[3]
    elapsed = time.time() - t0
    report(
        "07 CROWN synchronization",
        total_alarms == 0,
        f"1024 exhaustive patterns + {2 * traces_per_width} fuzz traces, "
        f"alarms = {total_alarms}, runtime {elapsed:.1f}s",
    )


def test_criterion_08_crown_attack_detection():
    """Every injected or replayed frame is detected at width 24."""
    t0 = time.time()
    n_sessions = 10_000
    links = netsim.bernoulli_links(0.0, 0.0, 0.0, 0.0)
    children = np.random.SeedSequence(108).spawn(n_sessions)
    undetected = 0
    for s, child in enumerate(children):
        if s % 2 == 0:
            script = netsim.AttackerScript((netsim.InjectData(at=20),))
        else:
            script = netsim.AttackerScript(
                (netsim.ReplayFrame(at=20, event_index=-(1 + s % 5)),)
            )
        res = netsim.run_session(
            netsim.Topology(), links, script, 4, 40,
            np.random.default_rng(child), width=24, record_trace=True,
        )
        m = res.metrics
        if m.attacker_frames == 0 or m.attacker_detected < m.attacker_frames:
            undetected += 1
    budget = 10.0 * 2.0 ** -24
    elapsed = time.time() - t0
    report(
        "08 CROWN attack detection",
        undetected / n_sessions <= budget,
        f"{undetected}/{n_sessions} undetected "
        f"(allowed fraction {budget:.1e}), runtime {elapsed:.1f}s",
    )


def test_criterion_09_crown_secrecy_metrics():
    """V0 recovery matches the closed-form product; E[u] obeys the bound
    and decreases in the initialization count."""
    t0 = time.time()
    details = []
    ok = True

    # V0 recovery vs the product form, homogeneous Eve losses.
    for gamma in (0.02, 0.1):
        for n_init in (10, 100):
            links = netsim.bernoulli_links(0.0, 0.0, gamma, gamma)
            cfg = netsim.SessionConfig(links=links, n_init=n_init, n_data=0)
            agg = netsim.replay_experiment(cfg, 10_000, master_seed=1090)
            expected = (1.0 - gamma) ** n_init
            se = max(agg["se_v0_recovery"],
                     math.sqrt(expected * (1 - expected) / 10_000), 1e-9)
            z = abs(agg["v0_recovery_rate"] - expected) / se
            ok &= z <= 3.0
            details.append(f"P0(g={gamma},n={n_init}) z={z:.2f}")

    # Useful frames vs the analytical estimate at the reported loss
    # regimes, 1e4-frame sessions, 100 seeds each.
    for regime, (g_ab, g_ba, g_ae) in enumerate(
        [(0.005, 0.009, 0.004), (0.01, 0.01, 0.02)]
    ):
        means = []
        for n_init in (10, 100, 1000):
            links = netsim.bernoulli_links(g_ab, g_ba, g_ae, g_ae)
            cfg = netsim.SessionConfig(links=links, n_init=n_init, n_data=10_000)
            agg = netsim.replay_experiment(cfg, 100,
                                           master_seed=1091 + regime)
            bound = crown.expected_useful_bound(g_ae, n_init,
                                                n_init + 10_000)
            ok &= agg["mean_useful"] <= bound + 3 * max(agg["se_useful"], 1e-9)
            means.append((n_init, agg["mean_useful"], agg["se_useful"]))
        for (_, lo_m, lo_se), (_, hi_m, hi_se) in zip(means, means[1:]):
            ok &= hi_m <= lo_m + 3 * math.hypot(lo_se, hi_se)
        details.append(
            f"E[u](gAE={g_ae}) = "
            + " >= ".join(f"{m:.2f}" for _, m, _ in means)
        )
    elapsed = time.time() - t0
    report(
        "09 CROWN secrecy metrics",
        ok and elapsed < 300.0,
        "; ".join(details) + f", runtime {elapsed:.1f}s (< 300s)",
    )


def test_criterion_10_determinism(tmp_path):
    """Same spec + master seed reproduces CSV and trace files exactly."""
    trace_path = tmp_path / "session.trace"
    specs = {
        "rates.csv": f"""
[experiment]
kind = RateCurves
master_seed = 110
output_path = {tmp_path}/rates.csv
[params]
snr_db = 0, 10
rc = 0, 7
n_samples = 20000
r0_step = 0.5
r0_max = 6.0
n_power = 5
""",
        "crown.csv": f"""
[experiment]
kind = CrownSecrecy
master_seed = 111
output_path = {tmp_path}/crown.csv
[params]
gamma_ab = 0.005
gamma_ba = 0.009
gamma_ae = 0.004
gamma_be = 0.004
n_init = 10, 100
n_data = 1000
n_seeds = 10
trace_path = {trace_path}
""",
    }
    identical = True
    for name, text in specs.items():
        spec = config.validate(text)
        cli.run_spec(spec)
        first = (tmp_path / name).read_bytes()
        first_trace = trace_path.read_bytes() if trace_path.exists() else b""
        cli.run_spec(spec)
        identical &= (tmp_path / name).read_bytes() == first
        if trace_path.exists():
            identical &= trace_path.read_bytes() == first_trace
    report("10 determinism", identical,
           "CSV and trace files byte-identical across reruns")
