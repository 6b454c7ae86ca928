# Reproducible parallel Monte Carlo estimation of outage probabilities

import itertools
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, Field, ValidationError
from scipy.stats import norm

from simulator.batch import draw_batch, simulate_batch, two_rotation_batch, uses_schedule, words_per_trial
from simulator.channel import (
    ChannelRealization,
    channel_words,
    draw_realization,
    snr_db_to_linear,
)
from simulator.config import ConfigError, settings
from simulator.protocol import Combining, ProtocolConfig
from simulator.rotations import Ordering, RotationSchedule, build_schedule, rotation_period, schedule_words
from simulator.streams import CHANNEL_STREAM, SCHEDULE_STREAM, check_seed, trial_generator

logger = logging.getLogger(__name__)

# Upper bound on trials per batch so that long runs still spread over workers.
MAX_BATCH_TRIALS = 1 << 16


@dataclass(frozen=True)
class OutageEstimate:
    """Empirical outage probability with a 95% Wilson score interval."""
    trials: int
    failures: int
    p_hat: float
    ci_low: float
    ci_high: float

    @classmethod
    def from_counts(cls, failures: int, trials: int) -> "OutageEstimate":
        if trials < 1:
            raise ValueError(f"trials must be >= 1, got {trials}")
        if not 0 <= failures <= trials:
            raise ValueError(f"failures must be in [0, {trials}], got {failures}")
        p_hat = failures / trials
        low, high = wilson_interval(failures, trials)
        return cls(trials=trials, failures=failures, p_hat=p_hat, ci_low=min(low, p_hat), ci_high=max(high, p_hat))

    @property
    def std_error(self) -> float:
        return math.sqrt(self.p_hat * (1.0 - self.p_hat) / self.trials)


def wilson_interval(failures: int, trials: int, confidence: float = 0.95) -> Tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if trials <= 0:
        return (0.0, 1.0)
    z = float(norm.ppf(0.5 + confidence / 2.0))
    p = failures / trials
    z2 = z * z
    denom = 1.0 + z2 / trials
    center = (p + z2 / (2.0 * trials)) / denom
    margin = z * math.sqrt(p * (1.0 - p) / trials + z2 / (4.0 * trials * trials)) / denom
    return (max(0.0, center - margin), min(1.0, center + margin))


def trial_inputs(cfg: ProtocolConfig, seed: int, trial: int) -> Tuple[ChannelRealization, RotationSchedule]:
    """Realization and schedule of trial ``trial``, derived from (seed, trial) alone."""
    n = cfg.n_relays
    channel_rng = trial_generator(seed, trial, CHANNEL_STREAM, channel_words(n))
    real = draw_realization(n, cfg.isolated, channel_rng)
    if not uses_schedule(cfg):
        return real, RotationSchedule.empty(cfg.frame_len, cfg.n_rotations)
    words = schedule_words(n, cfg.n_rotations, cfg.frame_len, cfg.ordering)
    schedule_rng = trial_generator(seed, trial, SCHEDULE_STREAM, words) if words else None
    return real, build_schedule(n, cfg.n_rotations, cfg.frame_len, cfg.ordering, schedule_rng)


def batch_trials(cfg: ProtocolConfig) -> int:
    """Trials per batch; depends on the scenario only, never on the worker count."""
    return max(1, min(MAX_BATCH_TRIALS, settings.batch_uniform_budget // words_per_trial(cfg)))


def _batches(trials: int, size: int) -> List[Tuple[int, int]]:
    return [(first, min(size, trials - first)) for first in range(0, trials, size)]


def _check_request(cfg: ProtocolConfig, trials: int, seed: int) -> None:
    if trials < 1:
        raise ConfigError(f"trials must be >= 1, got {trials}")
    try:
        check_seed(seed)
    except ValueError as e:
        raise ConfigError(str(e)) from None
    if uses_schedule(cfg) and cfg.frame_len < rotation_period(cfg.n_relays, cfg.n_rotations):
        logger.warning(
            f"T={cfg.frame_len} < L^N={rotation_period(cfg.n_relays, cfg.n_rotations)}: "
            f"schedules cannot cover every rotation array"
        )


def _run_batches(cfg: ProtocolConfig, trials: int, threads: Optional[int], count_batch) -> np.ndarray:
    """Apply ``count_batch(first, count) -> int array`` to every batch and sum the counts."""
    workers = settings.resolve_threads(threads)
    batches = _batches(trials, batch_trials(cfg))
    logger.debug(f"{len(batches)} batches of up to {batch_trials(cfg)} trials on {workers} workers")
    if workers == 1 or len(batches) == 1:
        counts = [count_batch(first, count) for first, count in batches]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            counts = list(pool.map(lambda b: count_batch(*b), batches))
    return np.sum(counts, axis=0, dtype=np.int64)


def estimate_outage_crn(
    cfg_list: Sequence[ProtocolConfig], trials: int, seed: int, threads: Optional[int] = None
) -> List[OutageEstimate]:
    """
    Outage estimates over an SNR grid with common random numbers.

    Every configuration sees the same realization and schedule in trial i,
    so the estimates are exactly non-increasing in SNR.
    """
    if not cfg_list:
        raise ConfigError("at least one configuration is required")
    base = cfg_list[0]
    for cfg in cfg_list[1:]:
        if not base.same_except_snr(cfg):
            raise ConfigError("common-random-number configurations may differ only in snr_linear")
    _check_request(base, trials, seed)

    rhos = [cfg.snr_linear for cfg in cfg_list]
    start_time = time.time()

    def count_batch(first: int, count: int) -> np.ndarray:
        batch = draw_batch(base, seed, first, count)
        return np.array([simulate_batch(base, batch, rho).failures for rho in rhos], dtype=np.int64)

    failures = _run_batches(base, trials, threads, count_batch)
    processing_time = time.time() - start_time
    logger.info(
        f"Estimated outage for N={base.n_relays} L={base.n_rotations} B={base.block_len} "
        f"R={base.rate} at {len(rhos)} SNR point(s), {trials} trials in {processing_time:.2f}s"
    )
    return [OutageEstimate.from_counts(int(f), trials) for f in failures]


def estimate_outage(cfg: ProtocolConfig, trials: int, seed: int, threads: Optional[int] = None) -> OutageEstimate:
    """Monte Carlo outage probability of one scenario."""
    return estimate_outage_crn([cfg], trials, seed, threads)[0]


def compare_scenarios(
    cfg_list: Sequence[ProtocolConfig], trials: int, seed: int, threads: Optional[int] = None
) -> List[OutageEstimate]:
    """
    Estimates for scenarios sharing the channel stream.

    Scenarios may differ in rotations, connectivity, combining, ordering,
    block length, rate and SNR; with a common relay count they all see the
    same g0, h and g in trial i.
    """
    if not cfg_list:
        raise ConfigError("at least one configuration is required")
    relays = {cfg.n_relays for cfg in cfg_list}
    frames = {cfg.frame_len for cfg in cfg_list}
    if len(relays) > 1 or len(frames) > 1:
        raise ConfigError("compared scenarios must share the relay count and frame length")
    return [estimate_outage(cfg, trials, seed, threads) for cfg in cfg_list]


def estimate_bound_outage(
    cfg: ProtocolConfig, trials: int, seed: int, threads: Optional[int] = None
) -> Tuple[OutageEstimate, OutageEstimate]:
    """
    Single relay, two rotations: outage of the evenly paired rotations and of its lower bound.

    Returns:
        (paired, bound); the bound estimate is never below the paired one.
    """
    if cfg.n_relays != 1 or cfg.n_rotations != 2:
        raise ConfigError(f"bound evaluation needs N=1 and L=2, got N={cfg.n_relays}, L={cfg.n_rotations}")
    _check_request(cfg, trials, seed)
    miso = cfg.model_copy(update={"combining": Combining.MISO})

    def count_batch(first: int, count: int) -> np.ndarray:
        batch = draw_batch(miso, seed, first, count)
        paired, bound = two_rotation_batch(cfg, batch)
        return np.array([paired.failures, bound.failures], dtype=np.int64)

    failures = _run_batches(miso, trials, threads, count_batch)
    return OutageEstimate.from_counts(int(failures[0]), trials), OutageEstimate.from_counts(int(failures[1]), trials)


class SweepGrid(BaseModel):
    """Cartesian grid of scenarios; SNR varies fastest."""

    snr_db: List[float] = Field(min_length=1)
    rate: List[float] = Field(min_length=1)
    n_relays: List[int] = Field(min_length=1)
    n_rotations: List[int] = Field(min_length=1)
    block_len: List[int] = Field(default=[1], min_length=1)
    isolated: List[bool] = Field(default=[False], min_length=1)

    @classmethod
    def build(cls, **fields) -> "SweepGrid":
        try:
            return cls(**fields)
        except ValidationError as e:
            problems = "; ".join(f"{'.'.join(str(p) for p in err['loc'])}: {err['msg']}" for err in e.errors())
            raise ConfigError(problems) from None

    def groups(self) -> List[Tuple[float, int, int, int, bool]]:
        """(rate, N, L, B, isolated) combinations in output order."""
        return list(itertools.product(self.rate, self.n_relays, self.n_rotations, self.block_len, self.isolated))

    def size(self) -> int:
        return len(self.groups()) * len(self.snr_db)


@dataclass(frozen=True)
class SweepRow:
    """One grid point: its parameters, and either an estimate or the reason it failed."""
    snr_db: float
    rate: float
    n_relays: int
    n_rotations: int
    block_len: int
    isolated: bool
    estimate: Optional[OutageEstimate] = None
    error: Optional[str] = None


def run_sweep(
    grid: SweepGrid,
    trials: int,
    seed: int,
    frame_len: int = 64,
    ordering: Ordering = Ordering.RANDOM,
    combining: Combining = Combining.ROTATIONS,
    threads: Optional[int] = None,
) -> List[SweepRow]:
    """
    One outage estimate per grid point.

    Every point is driven by the same (seed, trial) streams, so adding points
    never changes existing results and the SNR points of one combination are
    common-random-number estimates. A combination that fails validation is
    reported in its rows and the sweep carries on.
    """
    rows: List[SweepRow] = []
    failed = 0
    for rate, n_relays, n_rotations, block_len, isolated in grid.groups():
        params = dict(rate=rate, n_relays=n_relays, n_rotations=n_rotations, block_len=block_len, isolated=isolated)
        try:
            cfgs = [
                ProtocolConfig.build(
                    frame_len=frame_len,
                    snr_linear=snr_db_to_linear(snr),
                    ordering=ordering,
                    combining=combining,
                    **params,
                )
                for snr in grid.snr_db
            ]
            estimates = estimate_outage_crn(cfgs, trials, seed, threads)
            rows.extend(SweepRow(snr_db=snr, estimate=est, **params) for snr, est in zip(grid.snr_db, estimates))
        except ConfigError as e:
            failed += 1
            logger.warning(f"Skipping grid combination {params}: {e}")
            rows.extend(SweepRow(snr_db=snr, error=str(e), **params) for snr in grid.snr_db)

    logger.info(f"Sweep finished: {len(rows)} points, {failed} failed combination(s)")
    return rows


@dataclass(frozen=True)
class BoundRow:
    snr_db: float
    rate: float
    paired: OutageEstimate
    bound: OutageEstimate


def run_bound_sweep(
    snr_db: Sequence[float],
    rates: Sequence[float],
    trials: int,
    seed: int,
    frame_len: int = 64,
    threads: Optional[int] = None,
) -> List[BoundRow]:
    """Paired-rotation outage next to its lower-bound outage for one relay and two rotations, SNR fastest."""
    if not snr_db or not rates:
        raise ConfigError("the SNR grid and the rate list must not be empty")
    rows: List[BoundRow] = []
    for rate in rates:
        for snr in snr_db:
            cfg = ProtocolConfig.build(
                n_relays=1, n_rotations=2, frame_len=frame_len, rate=rate, snr_linear=snr_db_to_linear(snr)
            )
            paired, bound = estimate_bound_outage(cfg, trials, seed, threads)
            rows.append(BoundRow(snr_db=snr, rate=rate, paired=paired, bound=bound))
    logger.info(f"Bound sweep finished: {len(rows)} points")
    return rows


def diversity_slope(points: Sequence[Tuple[float, float]]) -> float:
    """
    Finite-SNR diversity estimate -d log10(p) / d(snr_db / 10) from the two highest-SNR points.

    Args:
        points: (snr_db, p_hat) pairs
    """
    if len(points) < 2:
        raise ValueError("at least two (snr_db, p_hat) points are required")
    (s1, p1), (s2, p2) = sorted(points)[-2:]
    if p1 <= 0 or p2 <= 0:
        raise ValueError("outage estimate of zero gives an infinite slope; run more trials")
    if s2 == s1:
        raise ValueError("the two highest-SNR points share the same SNR")
    return -(math.log10(p2) - math.log10(p1)) / ((s2 - s1) / 10.0)
