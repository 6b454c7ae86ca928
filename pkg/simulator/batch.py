"""
Vectorised DDF engine.

Evaluates the protocol of ``simulator.protocol`` for a batch of trials at
once: every array carries the trial index on its first axis and the slot
loop runs over numpy arrays. Trial ``first_trial + i`` of a batch sees the
same channel and schedule as ``montecarlo.trial_inputs`` for that trial.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from simulator.channel import ChannelRealization, channel_words, draw_realizations
from simulator.protocol import Combining, ProtocolConfig
from simulator.rotations import RotationSchedule, build_schedules, rotation_set, schedule_words
from simulator.streams import CHANNEL_STREAM, SCHEDULE_STREAM, trial_generator

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class TrialBatch:
    """Channel gains and rotation indices for consecutive trials."""
    first_trial: int
    g0: np.ndarray
    h: np.ndarray
    g: np.ndarray
    f: np.ndarray
    rotation_index: Optional[np.ndarray] = None  # (count, N, T); None without rotations

    @property
    def count(self) -> int:
        return int(self.g0.shape[0])

    def realization(self, i: int) -> ChannelRealization:
        return ChannelRealization(g0=complex(self.g0[i]), h=self.h[i].copy(), g=self.g[i].copy(), f=self.f[i].copy())

    def schedule(self, i: int, n_rotations: int) -> RotationSchedule:
        if self.rotation_index is None:
            raise ValueError("this batch carries no rotation schedules")
        return RotationSchedule.from_indices(self.rotation_index[i].copy(), n_rotations)


@dataclass(frozen=True, eq=False)
class BatchOutcome:
    """Per-trial results of a batch: decode slots (count, N), bits and outage flags (count,)."""
    decode_slot: np.ndarray
    dest_info_bits: np.ndarray
    outage: np.ndarray

    @property
    def failures(self) -> int:
        return int(np.count_nonzero(self.outage))


def uses_schedule(cfg: ProtocolConfig) -> bool:
    return cfg.combining == Combining.ROTATIONS and cfg.n_relays > 0


def words_per_trial(cfg: ProtocolConfig) -> int:
    """Uniform draws one trial consumes across both streams."""
    words = channel_words(cfg.n_relays)
    if uses_schedule(cfg):
        words += schedule_words(cfg.n_relays, cfg.n_rotations, cfg.frame_len, cfg.ordering)
    return words


def draw_batch(cfg: ProtocolConfig, seed: int, first_trial: int, count: int) -> TrialBatch:
    """Draw channels and schedules for trials first_trial .. first_trial + count - 1."""
    n = cfg.n_relays
    channel_rng = trial_generator(seed, first_trial, CHANNEL_STREAM, channel_words(n))
    g0, h, g, f = draw_realizations(n, cfg.isolated, channel_rng, count)

    rotation_index = None
    if uses_schedule(cfg):
        words = schedule_words(n, cfg.n_rotations, cfg.frame_len, cfg.ordering)
        schedule_rng = trial_generator(seed, first_trial, SCHEDULE_STREAM, words) if words else None
        rotation_index = build_schedules(n, cfg.n_rotations, cfg.frame_len, cfg.ordering, schedule_rng, count)

    return TrialBatch(first_trial=first_trial, g0=g0, h=h, g=g, f=f, rotation_index=rotation_index)


def simulate_batch(cfg: ProtocolConfig, batch: TrialBatch, snr_linear: Optional[float] = None) -> BatchOutcome:
    """
    Run the slot loop for every trial of ``batch``.

    Args:
        cfg: scenario; ``cfg.combining`` selects rotations or the MISO baseline
        batch: trial inputs drawn for ``cfg``
        snr_linear: overrides ``cfg.snr_linear`` so one batch can serve a whole SNR grid

    Returns:
        BatchOutcome with the same semantics as ``protocol.TrialOutcome``
    """
    rho = cfg.snr_linear if snr_linear is None else snr_linear
    if rho <= 0:
        raise ValueError(f"rho must be > 0, got {rho}")
    count, n, frame_len = batch.count, cfg.n_relays, cfg.frame_len
    target = cfg.target_bits
    miso = cfg.combining == Combining.MISO
    if not miso and n and batch.rotation_index is None:
        raise ValueError("rotation engine needs schedules in the batch")

    active = np.zeros((count, n), dtype=bool)
    relay_bits = np.zeros((count, n))
    dest_bits = np.zeros(count)
    decode_slot = np.full((count, n), frame_len, dtype=np.int64)

    if miso:
        g0_power = np.abs(batch.g0) ** 2
        g_power = np.abs(batch.g) ** 2
        h_power = np.abs(batch.h) ** 2
        f_power = np.abs(batch.f) ** 2
    else:
        table = rotation_set(cfg.n_rotations)

    def decode_at(boundary: int) -> None:
        newly = ~active & (relay_bits >= target)
        decode_slot[newly] = boundary
        active[newly] = True

    decode_at(0)
    for t in range(1, frame_len + 1):
        share = rho / (1 + active.sum(axis=1))

        if miso:
            dest_power = g0_power + np.where(active, g_power, 0.0).sum(axis=1)
            relay_power = h_power + np.where(active[:, :, None], f_power, 0.0).sum(axis=1)
        elif n:
            weights = np.where(active, table[batch.rotation_index[:, :, t - 1]], 0)
            dest_power = np.abs(batch.g0 + (weights * batch.g).sum(axis=1)) ** 2
            relay_power = np.abs(batch.h + (weights[:, :, None] * batch.f).sum(axis=1)) ** 2
        else:
            dest_power = np.abs(batch.g0) ** 2
            relay_power = None

        dest_bits += np.log2(1.0 + share * dest_power)
        if n:
            # Transmitting relays no longer listen.
            relay_bits += np.where(active, 0.0, np.log2(1.0 + share[:, None] * relay_power))
            if t % cfg.block_len == 0 and t < frame_len:
                decode_at(t)

    return BatchOutcome(decode_slot=decode_slot, dest_info_bits=dest_bits, outage=dest_bits < target)


def single_relay_decode_slots(cfg: ProtocolConfig, h1: np.ndarray, snr_linear: Optional[float] = None) -> np.ndarray:
    """Vectorised ``protocol.single_relay_decode_slot``."""
    rho = cfg.snr_linear if snr_linear is None else snr_linear
    frame_len, block_len = cfg.frame_len, cfg.block_len
    if cfg.rate <= 0:
        return np.zeros(h1.shape, dtype=np.int64)
    capacity = np.log2(1.0 + rho * np.abs(h1) ** 2)
    with np.errstate(divide="ignore"):
        slots = np.where(capacity > 0, frame_len * cfg.rate / np.where(capacity > 0, capacity, 1.0), np.inf)
    listen = np.where(slots >= frame_len, frame_len, np.ceil(np.minimum(slots, frame_len)))
    blocked = np.minimum(frame_len, block_len * np.ceil(listen / block_len))
    return np.where(listen >= frame_len, frame_len, blocked).astype(np.int64)


def two_rotation_batch(
    cfg: ProtocolConfig, batch: TrialBatch, snr_linear: Optional[float] = None
) -> Tuple[BatchOutcome, BatchOutcome]:
    """
    Vectorised ``paired_rotation_trial`` and ``two_rotation_bound_trial``.

    Returns:
        (paired, bound) outcomes for N = 1, L = 2
    """
    rho = cfg.snr_linear if snr_linear is None else snr_linear
    frame_len, target = cfg.frame_len, cfg.target_bits
    t1 = single_relay_decode_slots(cfg, batch.h[:, 0], rho)
    g0, g1 = batch.g0, batch.g[:, 0]
    p0, p1 = np.abs(g0) ** 2, np.abs(g1) ** 2

    plus = (frame_len - t1) // 2
    minus = frame_len - t1 - plus
    direct = t1 * np.log2(1.0 + rho / 1 * p0)
    paired_bits = (
        direct
        + plus * np.log2(1.0 + rho / 2 * np.abs(g0 + g1) ** 2)
        + minus * np.log2(1.0 + rho / 2 * np.abs(g0 - g1) ** 2)
    )
    bound_bits = t1 * np.log2(1.0 + rho * p0) + plus * np.log2(
        1.0 + rho * (p0 + p1) + 0.25 * rho ** 2 * (p0 - p1) ** 2
    )
    slots = t1[:, None]
    return (
        BatchOutcome(decode_slot=slots, dest_info_bits=paired_bits, outage=paired_bits < target),
        BatchOutcome(decode_slot=slots, dest_info_bits=bound_bits, outage=bound_bits < target),
    )
