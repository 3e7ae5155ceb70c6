"""Rate adaptation for temporally correlated channels.

The legitimate gain is observed only through ACK/NACK feedback, so the
transmitter tracks a discretized posterior over the power gain, propagates
it through the one-step Markov kernel of the complex AR(1) gain model, and
picks each frame's rate greedily against that belief. The full lookahead
policy is a POMDP and intentionally out of scope; the greedy surrogate is
bracketed between the stationary ARQ optimum and the ergodic ceiling.

Episodes align the belief cells with the decodability thresholds of the
rate grid, so the Bayes truncation is exact at every threshold instead of
splitting probability cells; without that alignment the posterior picks up
a per-frame half-cell bias that is visible against the stationary bound.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import i0e

from . import fading
from .errors import ConfigurationError, DegeneratePosteriorError
from .rates import rayleigh_positive_margin

log = logging.getLogger(__name__)

MASS_TOL = 1e-12


@dataclass(frozen=True)
class Belief:
    """Discretized posterior over the legitimate power gain.

    ``grid`` is strictly increasing; ``mass`` is a probability vector
    aligned with it (sum within 1e-12 of one).
    """

    grid: np.ndarray
    mass: np.ndarray

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        mass = np.asarray(self.mass, dtype=float)
        if grid.ndim != 1 or grid.shape != mass.shape:
            raise ConfigurationError("grid and mass must be aligned vectors")
        if np.any(np.diff(grid) <= 0.0):
            raise ConfigurationError("belief grid must be strictly increasing")
        if np.any(mass < 0.0) or abs(mass.sum() - 1.0) > MASS_TOL:
            raise ConfigurationError("belief mass must be a probability vector")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "mass", mass)


def default_grid(n_points: int = 200, lo: float = 1e-3, hi: float = 1e2) -> np.ndarray:
    return np.geomspace(lo, hi, n_points)


def _midpoint_edges(grid: np.ndarray) -> np.ndarray:
    edges = np.empty(len(grid) + 1)
    edges[1:-1] = np.sqrt(grid[:-1] * grid[1:])
    edges[0] = grid[0] * grid[0] / edges[1]
    edges[-1] = grid[-1] * grid[-1] / edges[-2]
    return edges


def _prior_mass(edges: np.ndarray, mean: float) -> np.ndarray:
    # CDF differences per cell; both tails fold into the end cells so the
    # vector sums to one exactly.
    cdf = 1.0 - np.exp(-np.minimum(edges, 7e2) / mean)
    cdf[0] = 0.0
    cdf[-1] = 1.0
    mass = np.diff(cdf)
    return mass / mass.sum()


def make_prior(grid: np.ndarray | None = None, mean: float = 1.0) -> Belief:
    """Exponential(mean) prior discretized onto the gain grid."""
    if grid is None:
        grid = default_grid()
    return Belief(grid=grid, mass=_prior_mass(_midpoint_edges(grid), mean))


def ack_threshold(rate: float, p: float) -> float:
    """Smallest gain that can carry ``rate`` at SNR ``p``."""
    return (2.0 ** rate - 1.0) / p


def aligned_belief_grid(rate_grid: np.ndarray, p: float, n_base: int = 200,
                        lo: float = 1e-3, hi: float = 1e2
                        ) -> tuple[np.ndarray, np.ndarray]:
    """Gain grid whose cell edges include every rate's ACK threshold.

    Returns (grid, edges); grid points are the geometric means of adjacent
    edges, so a threshold comparison on grid points is exact at the cell
    level for every rate in the grid.
    """
    thresholds = np.array([ack_threshold(r, p) for r in np.asarray(rate_grid)])
    thresholds = thresholds[(thresholds > lo) & (thresholds < hi)]
    edges = np.unique(np.concatenate([np.geomspace(lo, hi, n_base + 1), thresholds]))
    grid = np.sqrt(edges[:-1] * edges[1:])
    return grid, edges


def _kernel(grid: np.ndarray, widths: np.ndarray, alpha: float) -> np.ndarray:
    if alpha == 0.0:
        return np.eye(len(grid))
    var = 2.0 * alpha - alpha * alpha
    s = (1.0 - alpha) * np.sqrt(grid)[:, None]  # noncentral amplitude per row
    y = np.sqrt(grid)[None, :]
    dens = i0e(2.0 * y * s / var) * np.exp(-((y - s) ** 2) / var) / var
    t = dens * widths[None, :]
    return t / t.sum(axis=1, keepdims=True)


def transition_matrix(grid: np.ndarray, alpha: float) -> np.ndarray:
    """One-step kernel on the power-gain grid induced by the AR(1) model.

    Conditional on the previous power h, the next power is a scaled
    noncentral chi-square with two degrees of freedom: complex mean power
    (1-a)^2 h and innovation variance 2a - a^2. Rows evaluate that density
    at the grid midpoints (times cell width) and are then normalized.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ConfigurationError("alpha must lie in [0, 1]")
    edges = _midpoint_edges(np.asarray(grid, dtype=float))
    return _kernel(grid, np.diff(edges), alpha)


class AdaptState:
    """Single-owner belief tracker for one adaptive episode."""

    def __init__(self, belief: Belief, alpha: float):
        if not 0.0 <= alpha <= 1.0:
            raise ConfigurationError("alpha must lie in [0, 1]")
        self.belief = belief
        self.alpha = alpha
        self.history_rates: list[float] = []
        self.history_acks: list[int] = []
        self._kernel = transition_matrix(belief.grid, alpha)

    def record(self, rate: float, ack: int):
        self.history_rates.append(rate)
        self.history_acks.append(int(ack))


def belief_update(state: AdaptState, r_prev: float, k_prev: int, p: float) -> Belief:
    """Bayes step on the ACK/NACK observation, then Markov propagation.

    An ACK zeroes mass below the decodability threshold, a NACK zeroes the
    complement; the renormalized posterior is pushed through the one-step
    gain kernel. Raises DegeneratePosteriorError when the observation
    eliminates all mass (callers fall back to the prior).
    """
    if r_prev < 0.0:
        raise ConfigurationError("rates are nonnegative")
    belief = state.belief
    thr = ack_threshold(r_prev, p)
    keep = belief.grid >= thr if k_prev else belief.grid < thr
    mass = belief.mass * keep
    total = mass.sum()
    if total <= 0.0:
        raise DegeneratePosteriorError(
            f"observation (R={r_prev}, K={k_prev}) wiped the posterior"
        )
    mass = (mass / total) @ state._kernel
    return Belief(grid=belief.grid, mass=mass / mass.sum())


def greedy_rate(belief: Belief, p: float, rate_grid: np.ndarray,
                eve_mean: float = 1.0) -> float:
    """One-step optimal rate against the current belief.

    Maximizes Pr_belief(R <= log2(1 + h P)) * E[R - log2(1 + h_e P)]^+ over
    the grid; the Eve expectation is the Rayleigh closed form (no spatial
    correlation). Ties break toward the smaller rate.
    """
    rate_grid = np.asarray(rate_grid, dtype=float)
    if rate_grid.size == 0:
        raise ConfigurationError("rate grid is empty")
    if np.any(np.diff(rate_grid) <= 0.0):
        raise ConfigurationError("rate grid must be strictly increasing")
    cap = np.log2(1.0 + belief.grid * p)
    obj = np.empty(len(rate_grid))
    for i, r in enumerate(rate_grid):
        succ = belief.mass[cap >= r].sum()
        obj[i] = succ * rayleigh_positive_margin(r, eve_mean * p)
    return float(rate_grid[int(np.argmax(obj))])


def run_adaptive_episode(alpha: float, p: float, frames: int,
                         rate_grid: np.ndarray, rng: np.random.Generator,
                         burn_in: int = 0, eve_mean: float = 1.0,
                         n_belief_cells: int = 200) -> float:
    """Simulate one greedy-rate episode over a Markov legitimate channel.

    Per frame: pick the greedy rate, observe ACK iff the realized channel
    carries it, accrue the secrecy margin against an i.i.d. Rayleigh
    eavesdropper on ACKed frames, and update the belief. Returns accrued
    margin divided by the number of counted frames (burn-in excluded).
    """
    if frames < 1000:
        raise ConfigurationError("episodes need at least 1000 frames")
    rate_grid = np.asarray(rate_grid, dtype=float)
    if rate_grid.size == 0 or np.any(np.diff(rate_grid) <= 0.0):
        raise ConfigurationError("rate grid must be nonempty and increasing")
    grid, edges = aligned_belief_grid(rate_grid, p, n_base=n_belief_cells)
    prior_mass = _prior_mass(edges, 1.0)
    kernel = _kernel(grid, np.diff(edges), alpha)

    # Per-rate structures: the ACK truncation mask doubles as the success
    # indicator used by the greedy objective.
    cap_grid = np.log2(1.0 + grid * p)
    succ_ind = cap_grid[None, :] >= rate_grid[:, None]
    eve_terms = np.array([rayleigh_positive_margin(r, eve_mean * p) for r in rate_grid])

    chan = fading.MarkovChannel(alpha, rng=rng)
    mass = prior_mass.copy()
    resets = 0
    total = 0.0
    for t in range(frames + burn_in):
        r_idx = int(np.argmax((succ_ind @ mass) * eve_terms))
        rate = rate_grid[r_idx]
        acked = rate <= math.log2(1.0 + chan.gain * p)
        if acked and t >= burn_in:
            h_e = -eve_mean * math.log1p(-rng.random())
            total += max(rate - math.log2(1.0 + h_e * p), 0.0)
        mask = succ_ind[r_idx] if acked else ~succ_ind[r_idx]
        masked = mass * mask
        weight = masked.sum()
        if weight <= 0.0:
            resets += 1
            masked = prior_mass
            weight = 1.0
        mass = (masked / weight) @ kernel
        mass /= mass.sum()
        fading.markov_step(chan, rng)
    if resets:
        log.info("episode alpha=%s reset to prior %d times", alpha, resets)
    return total / frames
