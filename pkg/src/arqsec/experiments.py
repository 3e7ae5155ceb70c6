"""Experiment runners: one function per kind, emitting ordered CSV rows.

Every runner derives one child seed per parameter point from the master
seed (by point index, not execution order), so rows are reproducible and
points can run in parallel without reordering the output.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from typing import Any, Callable

import numpy as np

from . import adapt, coding, config, crown, netsim, rates
from .fading import FadingModel


def _point_rng(master_seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(
        np.random.SeedSequence(entropy=master_seed, spawn_key=(index,))
    )


def _point_seed(master_seed: int, index: int) -> int:
    # Stable per-point integer seed for APIs that take one.
    return int(
        np.random.SeedSequence(entropy=master_seed, spawn_key=(index,))
        .generate_state(1, dtype=np.uint64)[0]
    )


def _db_to_linear(snr_db: float) -> float:
    return 10.0 ** (snr_db / 10.0)


COLUMNS: dict[str, list[str]] = {
    config.RATE_CURVES: ["snr_db", "rc", "cs", "ce", "std_err_cs", "std_err_ce"],
    config.DUMB_ANTENNA: ["n_antennas", "snr_db", "key_rate", "std_err",
                          "r0_opt", "p_opt"],
    config.TEMPORAL_ADAPTATION: ["alpha", "snr_db", "frames", "burn_in",
                                 "achieved_rate", "std_err"],
    config.DELAY_LIMITED: ["k", "r0", "snr_db", "rc", "pout_closed",
                           "pout_emp", "pout_se", "rk_closed", "rk_emp",
                           "rk_se"],
    config.CROWN_SECRECY: ["n_init", "gamma_ab", "gamma_ba", "gamma_ae",
                           "gamma_be", "n_data", "n_seeds", "mean_useful",
                           "se_useful", "bound_useful", "v0_recovery_rate",
                           "se_v0_recovery", "p0_closed"],
    config.CROWN_ATTACK: ["attack", "width", "n_sessions", "n_data",
                          "at_frame", "detection_rate", "alarm_rate"],
}


def _rate_curves_point(args) -> dict[str, Any]:
    params, master_seed, index, snr_db, rc = args
    p_bar = _db_to_linear(snr_db)
    grid = rates.GridSpec.default(p_bar, r0_max=params["r0_max"],
                                  r0_step=params["r0_step"],
                                  n_power=params["n_power"])
    model = FadingModel.rayleigh_independent()
    cs = rates.optimize(rates.KEY_RATE_INDEPENDENT, model, p_bar, 0.0, grid,
                        params["n_samples"], _point_rng(master_seed, index))
    ce = rates.optimize(rates.ERASURE_CAPACITY, model, p_bar, rc, grid,
                        params["n_samples"], _point_rng(master_seed, index))
    return {"snr_db": snr_db, "rc": rc, "cs": cs.value, "ce": ce.value,
            "std_err_cs": cs.std_err, "std_err_ce": ce.std_err}


def run_rate_curves(spec: config.ExperimentSpec, jobs: int = 1) -> list[dict]:
    points = [
        (spec.params, spec.master_seed, i, snr_db, rc)
        for i, (snr_db, rc) in enumerate(
            (s, r) for s in spec.params["snr_db"] for r in spec.params["rc"]
        )
    ]
    return _map_points(_rate_curves_point, points, jobs)


def _dumb_antenna_point(args) -> dict[str, Any]:
    params, master_seed, index, n_antennas = args
    p_bar = _db_to_linear(params["snr_db"])
    grid = rates.GridSpec.default(p_bar, r0_max=params["r0_max"],
                                  r0_step=params["r0_step"],
                                  n_power=params["n_power"])
    if params["gains"] == "los":
        model = FadingModel.dumb_antenna(n_antennas)
    else:
        model = FadingModel.dumb_antenna_faded(n_antennas)
    sol = rates.optimize(rates.KEY_RATE_GENERAL, model, p_bar, 0.0, grid,
                         params["n_samples"], _point_rng(master_seed, index))
    return {"n_antennas": n_antennas, "snr_db": params["snr_db"],
            "key_rate": sol.value, "std_err": sol.std_err,
            "r0_opt": sol.params.r0, "p_opt": sol.params.p}


def run_dumb_antenna(spec: config.ExperimentSpec, jobs: int = 1) -> list[dict]:
    points = [
        (spec.params, spec.master_seed, i, n)
        for i, n in enumerate(spec.params["n_antennas"])
    ]
    return _map_points(_dumb_antenna_point, points, jobs)


def _temporal_point(args) -> dict[str, Any]:
    params, master_seed, index, alpha = args
    p = _db_to_linear(params["snr_db"])
    rate_grid = np.arange(params["r0_step"],
                          params["r0_max"] + params["r0_step"] / 2,
                          params["r0_step"])
    rng = _point_rng(master_seed, index)
    episode_rngs = rng.spawn(params["n_seeds"])
    values = np.array([
        adapt.run_adaptive_episode(alpha, p, params["frames"], rate_grid,
                                   episode_rng, burn_in=params["burn_in"])
        for episode_rng in episode_rngs
    ])
    return {
        "alpha": alpha, "snr_db": params["snr_db"],
        "frames": params["frames"], "burn_in": params["burn_in"],
        "achieved_rate": float(values.mean()),
        "std_err": float(values.std(ddof=1) / math.sqrt(len(values))),
    }


def run_temporal_adaptation(spec: config.ExperimentSpec, jobs: int = 1) -> list[dict]:
    points = [
        (spec.params, spec.master_seed, i, alpha)
        for i, alpha in enumerate(spec.params["alpha"])
    ]
    return _map_points(_temporal_point, points, jobs)


def _delay_limited_point(args) -> dict[str, Any]:
    params, master_seed, index, k, r0, snr_db, rc = args
    cfg = coding.DistillConfig(k=k, r0=r0, p=_db_to_linear(snr_db), rc=rc)
    result = coding.simulate_distillation(
        cfg, coding.FrameErrorModel(), params["episodes"],
        _point_rng(master_seed, index),
    )
    return {
        "k": k, "r0": r0, "snr_db": snr_db, "rc": rc,
        "pout_closed": coding.outage_prob_closed_form(cfg),
        "pout_emp": result.outage, "pout_se": result.outage_se,
        "rk_closed": coding.key_rate_delay_limited(cfg),
        "rk_emp": result.key_rate, "rk_se": result.key_rate_se,
    }


def run_delay_limited(spec: config.ExperimentSpec, jobs: int = 1) -> list[dict]:
    sweep = [
        (k, r0, snr_db, rc)
        for k in spec.params["k"]
        for r0 in spec.params["r0"]
        for snr_db in spec.params["snr_db"]
        for rc in spec.params["rc"]
    ]
    points = [
        (spec.params, spec.master_seed, i, *combo) for i, combo in enumerate(sweep)
    ]
    return _map_points(_delay_limited_point, points, jobs)


def _crown_secrecy_point(args) -> dict[str, Any]:
    params, master_seed, index, n_init = args
    links = netsim.bernoulli_links(params["gamma_ab"], params["gamma_ba"],
                                   params["gamma_ae"], params["gamma_be"])
    cfg = netsim.SessionConfig(links=links, n_init=n_init,
                               n_data=params["n_data"], width=params["width"])
    agg = netsim.replay_experiment(cfg, params["n_seeds"],
                                   _point_seed(master_seed, index))
    if params["trace_path"] and index == 0:
        traced = netsim.run_session(
            cfg.topology, cfg.links, cfg.attacker, cfg.n_init, cfg.n_data,
            np.random.default_rng(
                np.random.SeedSequence(_point_seed(master_seed, index)).spawn(1)[0]
            ),
            width=cfg.width, record_trace=True,
        )
        traced.trace.write(params["trace_path"])
    # Homogeneous-loss bound evaluated at Eve's data-capture loss; at zero
    # loss it degenerates to the trivial cap N - n.
    if params["gamma_ae"] > 0.0:
        bound = crown.expected_useful_bound(
            params["gamma_ae"], n_init, n_init + params["n_data"]
        )
    else:
        bound = float(params["n_data"])
    p0 = ((1.0 - params["gamma_ae"]) ** (n_init // 2)
          * (1.0 - params["gamma_be"]) ** (n_init // 2))
    return {
        "n_init": n_init, "gamma_ab": params["gamma_ab"],
        "gamma_ba": params["gamma_ba"], "gamma_ae": params["gamma_ae"],
        "gamma_be": params["gamma_be"], "n_data": params["n_data"],
        "n_seeds": params["n_seeds"], "mean_useful": agg["mean_useful"],
        "se_useful": agg["se_useful"], "bound_useful": bound,
        "v0_recovery_rate": agg["v0_recovery_rate"],
        "se_v0_recovery": agg["se_v0_recovery"], "p0_closed": p0,
    }


def run_crown_secrecy(spec: config.ExperimentSpec, jobs: int = 1) -> list[dict]:
    points = [
        (spec.params, spec.master_seed, i, n_init)
        for i, n_init in enumerate(spec.params["n_init"])
    ]
    return _map_points(_crown_secrecy_point, points, jobs)


def _crown_attack_point(args) -> dict[str, Any]:
    params, master_seed, index = args
    if params["attack"] == "inject":
        script = netsim.AttackerScript((netsim.InjectData(at=params["at_frame"]),))
    else:
        script = netsim.AttackerScript(
            (netsim.ReplayFrame(at=params["at_frame"], event_index=-1),)
        )
    links = netsim.bernoulli_links(params["gamma_ab"], params["gamma_ba"],
                                   params["gamma_ae"], params["gamma_be"])
    cfg = netsim.SessionConfig(links=links, n_init=params["n_init"],
                               n_data=params["n_data"], width=params["width"],
                               attacker=script)
    agg = netsim.replay_experiment(cfg, params["n_sessions"],
                                   _point_seed(master_seed, index))
    return {
        "attack": params["attack"], "width": params["width"],
        "n_sessions": params["n_sessions"], "n_data": params["n_data"],
        "at_frame": params["at_frame"],
        "detection_rate": agg["detection_rate"],
        "alarm_rate": agg["alarm_rate"],
    }


def run_crown_attack(spec: config.ExperimentSpec, jobs: int = 1) -> list[dict]:
    return [_crown_attack_point((spec.params, spec.master_seed, 0))]


def _map_points(fn: Callable, points: list, jobs: int) -> list[dict]:
    if jobs <= 1 or len(points) <= 1:
        return [fn(p) for p in points]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, points))


RUNNERS: dict[str, Callable[[config.ExperimentSpec, int], list[dict]]] = {
    config.RATE_CURVES: run_rate_curves,
    config.DUMB_ANTENNA: run_dumb_antenna,
    config.TEMPORAL_ADAPTATION: run_temporal_adaptation,
    config.DELAY_LIMITED: run_delay_limited,
    config.CROWN_SECRECY: run_crown_secrecy,
    config.CROWN_ATTACK: run_crown_attack,
}
