"""Channel randomness: block-fading draws, dumb-antenna gains, Markov gains.

All operations take an explicit numpy Generator so that experiments are
reproducible bit-for-bit from a master seed. Exponential power gains are
drawn via the inverse CDF (-mean * log(U)) so they can be audited against
the Rayleigh power-gain law directly.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import ConfigurationError

JointSampler = Callable[[np.random.Generator, int], tuple[np.ndarray, np.ndarray]]

RAYLEIGH_INDEPENDENT = "rayleigh_independent"
FULLY_CORRELATED = "fully_correlated"
DUMB_ANTENNA = "dumb_antenna"
DUMB_ANTENNA_FADED = "dumb_antenna_faded"
CUSTOM = "custom"


@dataclass(frozen=True)
class ChannelDraw:
    """One coherence interval: linear power gains and phases for Bob and Eve."""

    h_b: float
    h_e: float
    theta_b: float
    theta_e: float

    def __post_init__(self):
        if self.h_b < 0.0 or self.h_e < 0.0:
            raise ConfigurationError("power gains must be nonnegative")
        if abs(self.theta_b) > math.pi or abs(self.theta_e) > math.pi:
            raise ConfigurationError("phases must lie in [-pi, pi]")


@dataclass(frozen=True)
class FadingModel:
    """Joint law of the legitimate and eavesdropper power gains.

    ``rayleigh_independent`` draws the two gains as independent exponentials
    with means ``mean_b`` / ``mean_e``; ``fully_correlated`` forces
    h_b == h_e on every draw; ``dumb_antenna`` forms the N-phasor equivalent
    gains of a phase-randomized line-of-sight transmit array;
    ``dumb_antenna_faded`` additionally draws per-antenna exponential power
    gains shared by Bob and Eve, so only the phases decorrelate the links
    (the simulated-figure construction, zero key rate at N = 1); ``custom``
    delegates to a user sampler returning (h_b, h_e) arrays.
    """

    kind: str = RAYLEIGH_INDEPENDENT
    mean_b: float = 1.0
    mean_e: float = 1.0
    n_antennas: int = 1
    sampler: Optional[JointSampler] = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind not in (
            RAYLEIGH_INDEPENDENT,
            FULLY_CORRELATED,
            DUMB_ANTENNA,
            DUMB_ANTENNA_FADED,
            CUSTOM,
        ):
            raise ConfigurationError(f"unknown fading model kind {self.kind!r}")
        if self.mean_b <= 0.0 or self.mean_e <= 0.0:
            raise ConfigurationError("mean gains must be positive")
        if self.kind in (DUMB_ANTENNA, DUMB_ANTENNA_FADED) and self.n_antennas < 1:
            raise ConfigurationError("dumb antenna model needs N >= 1")
        if self.kind == CUSTOM and self.sampler is None:
            raise ConfigurationError("custom model needs a joint sampler")

    @classmethod
    def rayleigh_independent(cls, mean_b: float = 1.0, mean_e: float = 1.0):
        return cls(RAYLEIGH_INDEPENDENT, mean_b, mean_e)

    @classmethod
    def fully_correlated(cls, mean: float = 1.0):
        return cls(FULLY_CORRELATED, mean, mean)

    @classmethod
    def dumb_antenna(cls, n_antennas: int):
        return cls(DUMB_ANTENNA, 1.0, 1.0, n_antennas=n_antennas)

    @classmethod
    def dumb_antenna_faded(cls, n_antennas: int, mean: float = 1.0):
        return cls(DUMB_ANTENNA_FADED, mean, mean, n_antennas=n_antennas)

    @classmethod
    def custom(cls, sampler: JointSampler):
        return cls(CUSTOM, sampler=sampler)


def _exponential(rng: np.random.Generator, mean: float, size: int) -> np.ndarray:
    # Inverse-CDF draw; random() is in [0, 1) so 1-U stays strictly positive.
    return -mean * np.log1p(-rng.random(size))


def sample_gains(
    model: FadingModel, rng: np.random.Generator, size: int
) -> tuple[np.ndarray, np.ndarray]:
    """Draw ``size`` i.i.d. (h_b, h_e) pairs from the model's joint law."""
    if model.kind == RAYLEIGH_INDEPENDENT:
        h_b = _exponential(rng, model.mean_b, size)
        h_e = _exponential(rng, model.mean_e, size)
        return h_b, h_e
    if model.kind == FULLY_CORRELATED:
        h = _exponential(rng, model.mean_b, size)
        return h, h.copy()
    if model.kind == DUMB_ANTENNA:
        g_b, g_e = dumb_antenna_gains_many(model.n_antennas, rng, size)
        return np.abs(g_b) ** 2, np.abs(g_e) ** 2
    if model.kind == DUMB_ANTENNA_FADED:
        g_b, g_e = dumb_antenna_faded_gains_many(
            model.n_antennas, rng, size, model.mean_b
        )
        return np.abs(g_b) ** 2, np.abs(g_e) ** 2
    h_b, h_e = model.sampler(rng, size)
    h_b = np.asarray(h_b, dtype=float)
    h_e = np.asarray(h_e, dtype=float)
    if h_b.shape != (size,) or h_e.shape != (size,):
        raise ConfigurationError("custom sampler returned wrong shapes")
    return h_b, h_e


def sample(model: FadingModel, rng: np.random.Generator) -> ChannelDraw:
    """One draw from the joint law. Phases are always independent uniforms."""
    if model.kind in (DUMB_ANTENNA, DUMB_ANTENNA_FADED):
        if model.kind == DUMB_ANTENNA:
            g_b, g_e = dumb_antenna_gains(model.n_antennas, rng)
        else:
            bs, es = dumb_antenna_faded_gains_many(
                model.n_antennas, rng, 1, model.mean_b
            )
            g_b, g_e = complex(bs[0]), complex(es[0])
        return ChannelDraw(
            h_b=abs(g_b) ** 2,
            h_e=abs(g_e) ** 2,
            theta_b=cmath.phase(g_b),
            theta_e=cmath.phase(g_e),
        )
    h_b, h_e = sample_gains(model, rng, 1)
    theta_b, theta_e = rng.uniform(-math.pi, math.pi, 2)
    return ChannelDraw(h_b=float(h_b[0]), h_e=float(h_e[0]), theta_b=theta_b, theta_e=theta_e)


def dumb_antenna_gains_many(
    n_antennas: int, rng: np.random.Generator, size: int
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized equivalent-gain draws; one row of phases per call index.

    g_b = (1/sqrt(N)) sum_i exp(j(theta_iR + theta_iB)) and likewise for Eve
    with theta_iE; all phases i.i.d. uniform on [-pi, pi], fresh per draw.
    """
    if n_antennas < 1:
        raise ConfigurationError("dumb antenna count must be >= 1")
    shape = (size, n_antennas)
    theta_r = rng.uniform(-math.pi, math.pi, shape)
    theta_b = rng.uniform(-math.pi, math.pi, shape)
    theta_e = rng.uniform(-math.pi, math.pi, shape)
    scale = 1.0 / math.sqrt(n_antennas)
    g_b = scale * np.exp(1j * (theta_r + theta_b)).sum(axis=1)
    g_e = scale * np.exp(1j * (theta_r + theta_e)).sum(axis=1)
    return g_b, g_e


def dumb_antenna_gains(
    n_antennas: int, rng: np.random.Generator
) -> tuple[complex, complex]:
    """Equivalent channel gains for one ARQ frame of the N-antenna array."""
    g_b, g_e = dumb_antenna_gains_many(n_antennas, rng, 1)
    return complex(g_b[0]), complex(g_e[0])


def dumb_antenna_faded_gains_many(
    n_antennas: int, rng: np.random.Generator, size: int, mean: float = 1.0
) -> tuple[np.ndarray, np.ndarray]:
    """Phase-randomized array over fully correlated faded antenna paths.

    Per-antenna power gains are exponential and identical toward Bob and
    Eve; the independent phase triplets are the only decorrelating
    mechanism. At N = 1 this reduces to the fully correlated exponential
    channel (zero key rate); large N approaches independent Rayleigh.
    """
    if n_antennas < 1:
        raise ConfigurationError("dumb antenna count must be >= 1")
    shape = (size, n_antennas)
    amp = np.sqrt(-mean * np.log1p(-rng.random(shape)) / n_antennas)
    theta_r = rng.uniform(-math.pi, math.pi, shape)
    theta_b = rng.uniform(-math.pi, math.pi, shape)
    theta_e = rng.uniform(-math.pi, math.pi, shape)
    g_b = (amp * np.exp(1j * (theta_r + theta_b))).sum(axis=1)
    g_e = (amp * np.exp(1j * (theta_r + theta_e))).sum(axis=1)
    return g_b, g_e


def decorrelation_stats(
    n_antennas: int, trials: int, rng: np.random.Generator
) -> tuple[float, float]:
    """Estimate mean and variance of the power-gain correlation coefficient.

    rho = (2 / (N(N-1))) * sum_{i<j} cos(Delta_i - Delta_j) with
    Delta_i = theta_iB - theta_iE over independent phase draws. Returns
    (mean, variance) over ``trials`` draws.
    """
    if n_antennas < 2:
        raise ConfigurationError("rho is undefined for N < 2")
    if trials < 1000:
        raise ConfigurationError("need at least 1000 trials")
    delta = rng.uniform(-math.pi, math.pi, (trials, n_antennas)) - rng.uniform(
        -math.pi, math.pi, (trials, n_antennas)
    )
    iu, ju = np.triu_indices(n_antennas, k=1)
    rho = np.cos(delta[:, iu] - delta[:, ju]).sum(axis=1)
    rho *= 2.0 / (n_antennas * (n_antennas - 1))
    return float(rho.mean()), float(rho.var())


class MarkovChannel:
    """First-order Markov complex gain: g(t) = (1-a) g(t-1) + sqrt(2a-a^2) w(t).

    With a standard complex Gaussian start the marginal variance stays 1 for
    all t, since (1-a)^2 + (2a - a^2) = 1. Single-owner mutable state.
    """

    def __init__(self, alpha: float, state: complex | None = None,
                 rng: np.random.Generator | None = None):
        if not 0.0 <= alpha <= 1.0:
            raise ConfigurationError("alpha must lie in [0, 1]")
        if state is None:
            if rng is None:
                raise ConfigurationError("need an initial state or an rng")
            state = standard_complex_gaussian(rng)
        self.alpha = alpha
        self.state = complex(state)

    @property
    def gain(self) -> float:
        """Current power gain |g(t)|^2."""
        return abs(self.state) ** 2


def standard_complex_gaussian(rng: np.random.Generator) -> complex:
    re, im = rng.normal(0.0, math.sqrt(0.5), 2)
    return complex(re, im)


def markov_step(chan: MarkovChannel, rng: np.random.Generator) -> complex:
    """Advance the Markov gain one frame and return the new state."""
    w = standard_complex_gaussian(rng)
    a = chan.alpha
    chan.state = (1.0 - a) * chan.state + math.sqrt(2.0 * a - a * a) * w
    return chan.state
