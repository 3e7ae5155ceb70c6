"""Key-rate and secrecy-capacity expressions, Monte Carlo and closed form.

Every stochastic estimate reports a standard error alongside the value;
tolerances downstream are stated in standard-error multiples. The grid
optimizer reuses one batch of channel draws for every grid point (common
random numbers), which makes the argmax stable under reseeding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ConfigurationError, DomainError
from .fading import FadingModel, RAYLEIGH_INDEPENDENT, sample_gains
from .special import exp_integral_e1_scaled

LN2 = math.log(2.0)

# Success probabilities below this clamp to zero and set the underflow flag.
UNDERFLOW_FLOOR = 1e-300

KEY_RATE_GENERAL = "key_rate_general"
KEY_RATE_INDEPENDENT = "key_rate_independent"
ERASURE_CAPACITY = "erasure_capacity"

MarginalSampler = Callable[[np.random.Generator, int], np.ndarray]


@dataclass(frozen=True)
class RateParams:
    """Transmission rate R0 (bits/use), SNR P (linear), power cap, genie rate."""

    r0: float
    p: float
    p_bar: float | None = None
    rc: float = 0.0

    def __post_init__(self):
        if self.r0 < 0.0 or self.rc < 0.0:
            raise ConfigurationError("rates must be nonnegative")
        if self.p < 0.0:
            raise ConfigurationError("SNR must be nonnegative")
        if self.p_bar is not None and self.p > self.p_bar:
            raise ConfigurationError("P exceeds the power cap")


@dataclass(frozen=True)
class RateSolution:
    params: RateParams
    value: float
    std_err: float

    def __post_init__(self):
        object.__setattr__(self, "value", float(self.value))
        object.__setattr__(self, "std_err", float(self.std_err))
        if self.value < 0.0:
            raise ConfigurationError("rate values are nonnegative")


@dataclass(frozen=True)
class GridSpec:
    """Search grid for the (R0, P) maximization."""

    r0_values: np.ndarray
    p_values: np.ndarray

    def __post_init__(self):
        if len(self.r0_values) == 0 or len(self.p_values) == 0:
            raise ConfigurationError("optimization grid is empty")
        if np.any(np.asarray(self.p_values) <= 0.0):
            raise ConfigurationError("grid powers must be positive")
        if np.any(np.asarray(self.r0_values) < 0.0):
            raise ConfigurationError("grid rates must be nonnegative")

    @classmethod
    def default(cls, p_bar: float, r0_max: float = 10.0, r0_step: float = 0.1,
                n_power: int = 20) -> "GridSpec":
        r0 = np.arange(r0_step, r0_max + r0_step / 2, r0_step)
        # 20 log-spaced powers in (p_bar/100, p_bar]; the left endpoint is open.
        p = np.geomspace(p_bar / 100.0, p_bar, n_power + 1)[1:]
        return cls(r0_values=r0, p_values=p)


def exponential_marginal(mean: float = 1.0) -> MarginalSampler:
    """Marginal sampler for an exponential power gain (Rayleigh amplitude)."""
    if mean <= 0.0:
        raise ConfigurationError("mean gain must be positive")

    def draw(rng: np.random.Generator, size: int) -> np.ndarray:
        return -mean * np.log1p(-rng.random(size))

    return draw


def constant_marginal(value: float) -> MarginalSampler:
    """Degenerate point-mass marginal, mostly useful in tests."""
    if value < 0.0:
        raise ConfigurationError("gain must be nonnegative")

    def draw(rng: np.random.Generator, size: int) -> np.ndarray:
        return np.full(size, value)

    return draw


def _check_samples(n_samples: int):
    if n_samples < 1000:
        raise ConfigurationError("Monte Carlo estimates need n_samples >= 1000")


def _mean_se(values: np.ndarray) -> tuple[float, float]:
    n = len(values)
    return float(values.mean()), float(values.std(ddof=1) / math.sqrt(n))


def key_rate_general(model: FadingModel, params: RateParams, n_samples: int,
                     rng: np.random.Generator) -> RateSolution:
    """Key rate under the joint gain law at fixed (R0, P).

    Monte Carlo estimate of
    E{ [R0 - log2(1 + h_e P)]^+ * 1(R0 <= log2(1 + h_b P)) }.
    """
    _check_samples(n_samples)
    h_b, h_e = sample_gains(model, rng, n_samples)
    term = np.maximum(params.r0 - np.log2(1.0 + h_e * params.p), 0.0)
    term *= params.r0 <= np.log2(1.0 + h_b * params.p)
    value, se = _mean_se(term)
    return RateSolution(params=params, value=max(value, 0.0), std_err=se)


def key_rate_independent(fb: MarginalSampler, fe: MarginalSampler,
                         params: RateParams, n_samples: int,
                         rng: np.random.Generator) -> RateSolution:
    """Product-form key rate for spatially independent fading.

    Pr(R0 <= log2(1 + h_b P)) * E[R0 - log2(1 + h_e P)]^+, with the two
    factors estimated from independent draws. The standard error combines
    the factor errors exactly for a product of independent estimators.
    """
    _check_samples(n_samples)
    h_b = fb(rng, n_samples)
    h_e = fe(rng, n_samples)
    succ = (params.r0 <= np.log2(1.0 + h_b * params.p)).astype(float)
    margin = np.maximum(params.r0 - np.log2(1.0 + h_e * params.p), 0.0)
    p_hat, p_se = _mean_se(succ)
    e_hat, e_se = _mean_se(margin)
    value = p_hat * e_hat
    se = math.sqrt((p_hat * e_se) ** 2 + (e_hat * p_se) ** 2 + (p_se * e_se) ** 2)
    return RateSolution(params=params, value=max(value, 0.0), std_err=se)


def rayleigh_success_prob(r0: float, p: float) -> tuple[float, bool]:
    """Pr(R0 <= log2(1 + h P)) for h ~ Exp(1), with an underflow clamp.

    Returns (probability, clamped); probabilities below 1e-300 clamp to
    exactly 0.0 with the flag set instead of degrading into NaN downstream.
    """
    if p <= 0.0:
        raise DomainError("SNR must be positive")
    exponent = -(2.0 ** r0 - 1.0) / p
    if exponent <= -750.0:
        return 0.0, True
    prob = math.exp(exponent)
    if prob < UNDERFLOW_FLOOR:
        return 0.0, True
    return prob, False


def rayleigh_positive_margin(r0: float, p: float) -> float:
    """E[R0 - log2(1 + h P)]^+ for h ~ Exp(1), in closed form.

    Equals R0 - (e^(1/P)/ln 2) [E1(1/P) - E1(2^R0/P)], evaluated through
    the scaled exponential integral so small P cannot overflow.
    """
    if p <= 0.0:
        raise DomainError("SNR must be positive")
    if r0 <= 0.0:
        return 0.0
    a = 1.0 / p
    b = (2.0 ** r0) / p
    shift = math.exp(a - b) if a - b > -750.0 else 0.0
    bracket = r0 - (exp_integral_e1_scaled(a) - exp_integral_e1_scaled(b) * shift) / LN2
    return max(bracket, 0.0)


def key_rate_rayleigh_closed_form(r0: float, p: float) -> float:
    """Symmetric Rayleigh(1)/Rayleigh(1) key rate at fixed (R0, P)."""
    if p <= 0.0:
        raise DomainError("SNR must be positive")
    if r0 < 0.0:
        raise DomainError("R0 must be nonnegative")
    if r0 == 0.0:
        return 0.0
    prob, _ = rayleigh_success_prob(r0, p)
    return prob * rayleigh_positive_margin(r0, p)


def erasure_capacity(model: FadingModel, params: RateParams, n_samples: int,
                     rng: np.random.Generator) -> RateSolution:
    """Erasure-wiretap rate R0 * Pr(Bob decodes, Eve erases) at fixed params.

    Eve erases when R0 - Rc > log2(1 + h_e P). For spatially independent
    models the two probabilities are estimated separately and multiplied
    (the product form of the independent-fading expression).
    """
    _check_samples(n_samples)
    h_b, h_e = sample_gains(model, rng, n_samples)
    succ = params.r0 <= np.log2(1.0 + h_b * params.p)
    erase = params.r0 - params.rc > np.log2(1.0 + h_e * params.p)
    if model.kind == RAYLEIGH_INDEPENDENT:
        p_hat, p_se = _mean_se(succ.astype(float))
        e_hat, e_se = _mean_se(erase.astype(float))
        value = params.r0 * p_hat * e_hat
        se = params.r0 * math.sqrt(
            (p_hat * e_se) ** 2 + (e_hat * p_se) ** 2 + (p_se * e_se) ** 2
        )
        return RateSolution(params=params, value=max(value, 0.0), std_err=se)
    both, se = _mean_se((succ & erase).astype(float))
    return RateSolution(params=params, value=params.r0 * both,
                        std_err=params.r0 * se)


def eve_erasure_prob(params: RateParams, he_marginal: MarginalSampler,
                     n_samples: int, rng: np.random.Generator) -> tuple[float, float]:
    """Estimate Pr(R0 - Rc > log2(1 + h_e P)); returns (estimate, std err).

    Setting rc = 0 recovers the maximum-likelihood-only eavesdropper.
    """
    _check_samples(n_samples)
    h_e = he_marginal(rng, n_samples)
    erase = (params.r0 - params.rc > np.log2(1.0 + h_e * params.p)).astype(float)
    return _mean_se(erase)


def ergodic_upper_bound(model: FadingModel, p: float, n_samples: int,
                        rng: np.random.Generator) -> RateSolution:
    """E[log2(1 + h_b P) - log2(1 + h_e P)]^+, the transmitter-CSI ceiling.

    Upper-bounds the rate of any feedback-driven allocation policy at the
    same short-term power.
    """
    _check_samples(n_samples)
    h_b, h_e = sample_gains(model, rng, n_samples)
    diff = np.maximum(np.log2(1.0 + h_b * p) - np.log2(1.0 + h_e * p), 0.0)
    value, se = _mean_se(diff)
    return RateSolution(params=RateParams(r0=0.0, p=p), value=value, std_err=se)


def _objective_values(objective: str, h_b: np.ndarray, h_e: np.ndarray,
                      r0: float, p: float, rc: float) -> np.ndarray:
    lb = np.log2(1.0 + h_b * p)
    le = np.log2(1.0 + h_e * p)
    if objective == KEY_RATE_GENERAL:
        return np.maximum(r0 - le, 0.0) * (r0 <= lb)
    if objective == ERASURE_CAPACITY:
        return r0 * ((r0 <= lb) & (r0 - rc > le)).astype(float)
    raise ConfigurationError(f"unknown objective {objective!r}")


def optimize(objective: str, model: FadingModel, p_bar: float, rc: float,
             grid: GridSpec | None, n_samples: int,
             rng: np.random.Generator) -> RateSolution:
    """Grid-search the objective over (R0, P <= p_bar) with shared draws.

    One batch of channel draws is reused at every grid point, so the argmax
    is a deterministic function of the seed. Ties keep the first grid point
    in (R0 ascending, P ascending) order.
    """
    _check_samples(n_samples)
    if grid is None:
        grid = GridSpec.default(p_bar)
    if np.any(grid.p_values > p_bar * (1 + 1e-12)):
        raise ConfigurationError("grid exceeds the power cap")
    h_b, h_e = sample_gains(model, rng, n_samples)

    # Product-form evaluation applies when independence is asserted by the
    # objective or guaranteed by the model.
    product_form = objective == KEY_RATE_INDEPENDENT or (
        model.kind == RAYLEIGH_INDEPENDENT
        and objective in (KEY_RATE_GENERAL, ERASURE_CAPACITY)
    )
    best_value = -1.0
    best_r0 = float(grid.r0_values[0])
    best_p = float(grid.p_values[0])
    for p in grid.p_values:
        lb = np.log2(1.0 + h_b * p)
        le = np.log2(1.0 + h_e * p)
        for r0 in grid.r0_values:
            if objective == ERASURE_CAPACITY:
                if product_form:
                    value = r0 * float((r0 <= lb).mean()) * float((r0 - rc > le).mean())
                else:
                    value = r0 * float(((r0 <= lb) & (r0 - rc > le)).mean())
            elif product_form:
                value = float((r0 <= lb).mean()) * float(np.maximum(r0 - le, 0.0).mean())
            else:
                value = float((np.maximum(r0 - le, 0.0) * (r0 <= lb)).mean())
            if value > best_value:
                best_value = value
                best_r0 = float(r0)
                best_p = float(p)

    params = RateParams(r0=best_r0, p=best_p, p_bar=p_bar, rc=rc)
    best_se = _std_err_at(objective, product_form, h_b, h_e, params)
    return RateSolution(params=params, value=max(best_value, 0.0), std_err=best_se)


def _std_err_at(objective: str, product_form: bool, h_b: np.ndarray,
                h_e: np.ndarray, params: RateParams) -> float:
    lb = np.log2(1.0 + h_b * params.p)
    le = np.log2(1.0 + h_e * params.p)
    if objective == ERASURE_CAPACITY:
        if product_form:
            p_hat, p_se = _mean_se((params.r0 <= lb).astype(float))
            e_hat, e_se = _mean_se((params.r0 - params.rc > le).astype(float))
            return params.r0 * math.sqrt(
                (p_hat * e_se) ** 2 + (e_hat * p_se) ** 2 + (p_se * e_se) ** 2
            )
        _, se = _mean_se(((params.r0 <= lb) & (params.r0 - params.rc > le)).astype(float))
        return params.r0 * se
    if product_form:
        p_hat, p_se = _mean_se((params.r0 <= lb).astype(float))
        e_hat, e_se = _mean_se(np.maximum(params.r0 - le, 0.0))
        return math.sqrt((p_hat * e_se) ** 2 + (e_hat * p_se) ** 2 + (p_se * e_se) ** 2)
    _, se = _mean_se(np.maximum(params.r0 - le, 0.0) * (params.r0 <= lb))
    return se
