"""Delay-limited key distillation over k ARQ frames.

A key is spread over k frames; the distilled key is the XOR of the k parts
Bob acknowledged, so the eavesdropper stays completely blind unless she
decodes every one of them. Closed forms cover the Rayleigh case; the
simulator reproduces them frame by frame with a pluggable frame-error
model (capacity threshold by default, arbitrary callbacks for coded
modulation studies).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import ConfigurationError, DomainError

CAPACITY_THRESHOLD = "capacity_threshold"
CUSTOM = "custom"

# success_prob(rate, snr, gain) -> probability for one frame at Bob
SuccessProbFn = Callable[[float, float, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class DistillConfig:
    """k frames per key at rate r0 and SNR p, against an rc-genie Eve."""

    k: int
    r0: float
    p: float
    rc: float = 0.0
    frame_bits: int = 240

    def __post_init__(self):
        if self.k < 1:
            raise ConfigurationError("need at least one frame per key")
        if self.frame_bits < 1:
            raise ConfigurationError("frame payload must be nonempty")
        if self.r0 < 0.0 or self.rc < 0.0:
            raise ConfigurationError("rates must be nonnegative")


@dataclass(frozen=True)
class FrameErrorModel:
    """Per-frame decoding model for Bob.

    ``capacity_threshold`` succeeds iff r0 <= log2(1 + h P). ``custom``
    draws success from a probability callback taking (rate, snr, gains),
    which is the hook for coded-modulation error curves.
    """

    kind: str = CAPACITY_THRESHOLD
    success_prob: Optional[SuccessProbFn] = None

    def __post_init__(self):
        if self.kind not in (CAPACITY_THRESHOLD, CUSTOM):
            raise ConfigurationError(f"unknown frame error model {self.kind!r}")
        if self.kind == CUSTOM and self.success_prob is None:
            raise ConfigurationError("custom model needs a success_prob callback")


def outage_prob_closed_form(cfg: DistillConfig) -> float:
    """Probability Eve decodes all k parts (Rayleigh fading at Eve).

    exp(-(k/P)(2^(r0-rc) - 1)); equals 1 when rc >= r0 because Eve then
    needs no channel rate at all.
    """
    if cfg.p <= 0.0:
        raise DomainError("SNR must be positive")
    exponent = -(cfg.k / cfg.p) * (2.0 ** (cfg.r0 - cfg.rc) - 1.0)
    # rc > r0 makes the exponent positive; the erasure event is impossible
    # and the outage saturates at certainty.
    return math.exp(min(exponent, 0.0))


def outage_prob_mc(cfg: DistillConfig,
                   he_marginal: Callable[[np.random.Generator, int], np.ndarray],
                   trials: int, rng: np.random.Generator) -> tuple[float, float]:
    """Monte Carlo outage for an arbitrary eavesdropper gain marginal.

    Estimates Pr(min_j log2(1 + h_e(j) P) > r0 - rc) over k i.i.d. draws;
    returns (estimate, standard error).
    """
    if cfg.p <= 0.0:
        raise DomainError("SNR must be positive")
    if trials < 1000:
        raise ConfigurationError("need at least 1000 trials")
    gains = he_marginal(rng, trials * cfg.k).reshape(trials, cfg.k)
    worst = np.log2(1.0 + gains * cfg.p).min(axis=1)
    outage = (worst > cfg.r0 - cfg.rc).astype(float)
    return float(outage.mean()), float(outage.std(ddof=1) / math.sqrt(trials))


def expected_transmissions(cfg: DistillConfig) -> float:
    """Mean number of Bernoulli frame trials to land k parts at Bob."""
    if cfg.p <= 0.0:
        raise DomainError("SNR must be positive")
    return cfg.k * math.exp((2.0 ** cfg.r0 - 1.0) / cfg.p)


def key_rate_delay_limited(cfg: DistillConfig) -> float:
    """R0 / N0 = (r0/k) exp(-(2^r0 - 1)/P)."""
    if cfg.p <= 0.0:
        raise DomainError("SNR must be positive")
    return (cfg.r0 / cfg.k) * math.exp(-(2.0 ** cfg.r0 - 1.0) / cfg.p)


def distill_key(parts: Sequence[bytes]) -> bytes:
    """Bitwise XOR of the key parts; all parts must share one length."""
    if not parts:
        raise ValueError("need at least one key part")
    length = len(parts[0])
    out = bytearray(length)
    for part in parts:
        if len(part) != length:
            raise ValueError("key parts differ in length")
        for i, byte in enumerate(part):
            out[i] ^= byte
    return bytes(out)


def random_key_part(frame_bits: int, rng: np.random.Generator) -> bytes:
    """Uniform key part of frame_bits bits, padded into whole bytes."""
    n_bytes = (frame_bits + 7) // 8
    raw = rng.integers(0, 256, n_bytes, dtype=np.uint8)
    spare = 8 * n_bytes - frame_bits
    if spare:
        raw[-1] &= (1 << (8 - spare)) - 1
    return raw.tobytes()


@dataclass(frozen=True)
class DistillationResult:
    outage: float
    outage_se: float
    key_rate: float
    key_rate_se: float
    mean_frames: float


def simulate_distillation(cfg: DistillConfig, fem: FrameErrorModel,
                          episodes: int, rng: np.random.Generator,
                          eve_mean: float = 1.0) -> DistillationResult:
    """Run full distillation episodes and report empirical outage/key rate.

    Alice keeps sending fresh random parts until k are ACKed; Bob's frame
    outcomes follow the error model over i.i.d. Rayleigh gains; Eve sees
    every transmitted frame and erases per her capacity threshold. Outage
    is recorded when Eve erases none of the k ACKed parts (frames Bob
    rejected never enter the key, so her luck on those is irrelevant, but
    they still count toward the key-rate denominator). The distilled key
    is one part's worth of bits, so the key rate is r0 over the mean
    episode length: the expected-trials normalization of r0 / N0.
    """
    if episodes < 1000:
        raise ConfigurationError("need at least 1000 episodes")
    if cfg.p <= 0.0:
        raise DomainError("SNR must be positive")

    needed = episodes * cfg.k
    succ_chunks: list[np.ndarray] = []
    erase_chunks: list[np.ndarray] = []
    seen = 0
    drawn = 0
    while seen < needed:
        if drawn > 1_000_000_000:
            raise RuntimeError("frame success probability too small to simulate")
        chunk = int(1.1 * (needed - seen) / _success_hint(cfg, fem)) + 4096
        h_b = -np.log1p(-rng.random(chunk))
        if fem.kind == CAPACITY_THRESHOLD:
            succ = cfg.r0 <= np.log2(1.0 + h_b * cfg.p)
        else:
            prob = np.asarray(fem.success_prob(cfg.r0, cfg.p, h_b), dtype=float)
            succ = rng.random(chunk) < prob
        h_e = -eve_mean * np.log1p(-rng.random(chunk))
        erase = cfg.r0 - cfg.rc > np.log2(1.0 + h_e * cfg.p)
        succ_chunks.append(succ)
        erase_chunks.append(erase)
        seen += int(succ.sum())
        drawn += chunk

    succ_seq = np.concatenate(succ_chunks)
    erase_seq = np.concatenate(erase_chunks)
    ends = np.flatnonzero(succ_seq)[cfg.k - 1 :: cfg.k][:episodes]
    starts = np.concatenate([[0], ends[:-1] + 1])
    frames_per_ep = ends - starts + 1
    cum_erase = np.concatenate([[0], np.cumsum(erase_seq & succ_seq)])
    outage = (cum_erase[ends + 1] - cum_erase[starts]) == 0

    out_mean = float(outage.mean())
    out_se = float(outage.std(ddof=1) / math.sqrt(episodes))
    mean_frames = float(frames_per_ep.mean())
    frames_se = float(frames_per_ep.std(ddof=1) / math.sqrt(episodes))
    key_rate = cfg.r0 / mean_frames
    key_rate_se = key_rate * frames_se / mean_frames
    return DistillationResult(
        outage=out_mean,
        outage_se=out_se,
        key_rate=key_rate,
        key_rate_se=key_rate_se,
        mean_frames=mean_frames,
    )


def _success_hint(cfg: DistillConfig, fem: FrameErrorModel) -> float:
    # Rough per-frame success probability used only to size draw batches.
    if fem.kind == CAPACITY_THRESHOLD:
        return max(math.exp(-(2.0 ** cfg.r0 - 1.0) / cfg.p), 1e-6)
    return 0.05
