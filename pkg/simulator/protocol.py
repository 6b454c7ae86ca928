"""
Dynamic decode-and-forward with distributed rotations.

Reference (one trial at a time) implementation of the protocol: per-slot
equivalent channels, mutual-information accumulation at relays and at the
destination, block-gated decode times and the outage decision, together with
the coherent-combining (MISO) baseline and the single-relay two-rotation
evaluations. ``simulator.batch`` evaluates the same dynamics for many trials
at once.

Relays are indexed from 0. Slots are indexed from 1; decode slot ``v < T``
means the relay listened ``v`` slots and transmits from slot ``v + 1``,
``v == T`` means it never decoded within the frame.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import AbstractSet, Callable, Tuple

import numpy as np
from pydantic import BaseModel, Field, ValidationError, model_validator

from simulator.channel import ChannelRealization, ComplexGain, snr_linear_to_db
from simulator.config import ConfigError
from simulator.rotations import Ordering, RotationSchedule

logger = logging.getLogger(__name__)


class DimensionMismatchError(ValueError):
    """Realization or schedule dimensions disagree with the scenario."""


class Combining(str, Enum):
    """How active relays combine at a receiver."""
    ROTATIONS = "rotations"
    MISO = "miso"


class ProtocolConfig(BaseModel):
    """All parameters of one DDF scenario."""

    n_relays: int = Field(ge=0)
    n_rotations: int = Field(default=2, ge=1)
    frame_len: int = Field(default=64, ge=1)
    block_len: int = Field(default=1, ge=1)
    rate: float = Field(ge=0, allow_inf_nan=False, description="bits per channel use")
    snr_linear: float = Field(gt=0, allow_inf_nan=False)
    isolated: bool = False
    ordering: Ordering = Ordering.RANDOM
    combining: Combining = Combining.ROTATIONS

    model_config = {"frozen": True}

    @model_validator(mode="after")
    def _check_blocks(self) -> "ProtocolConfig":
        if self.block_len > self.frame_len:
            raise ValueError(f"block length B={self.block_len} exceeds frame length T={self.frame_len}")
        if self.frame_len % self.block_len:
            raise ValueError(f"block length B={self.block_len} does not divide frame length T={self.frame_len}")
        return self

    @classmethod
    def build(cls, **fields) -> "ProtocolConfig":
        """Validate ``fields``, reporting problems as a one-line ConfigError."""
        try:
            return cls(**fields)
        except ValidationError as e:
            problems = "; ".join(
                f"{'.'.join(str(p) for p in err['loc']) or 'config'}: {err['msg']}" for err in e.errors()
            )
            raise ConfigError(problems) from None

    @property
    def target_bits(self) -> float:
        """Information the frame must deliver, T*R."""
        return self.frame_len * self.rate

    @property
    def snr_db(self) -> float:
        return snr_linear_to_db(self.snr_linear)

    def with_snr(self, snr_linear: float) -> "ProtocolConfig":
        return ProtocolConfig.build(**{**self.model_dump(), "snr_linear": snr_linear})

    def same_except_snr(self, other: "ProtocolConfig") -> bool:
        mine = self.model_dump(exclude={"snr_linear"})
        return mine == other.model_dump(exclude={"snr_linear"})


@dataclass(frozen=True)
class TrialOutcome:
    """Result of one simulated frame."""
    decode_slot: Tuple[int, ...]
    dest_info_bits: float
    outage: bool


def _check_slot(t: int, frame_len: int) -> None:
    if not 1 <= t <= frame_len:
        raise ValueError(f"slot must be in 1..{frame_len}, got {t}")


def _check_active(active: AbstractSet[int], n_relays: int) -> None:
    for k in active:
        if not 0 <= k < n_relays:
            raise ValueError(f"active relay {k} is not in 0..{n_relays - 1}")


def equivalent_dest_channel(
    real: ChannelRealization, sched: RotationSchedule, active: AbstractSet[int], t: int
) -> ComplexGain:
    """G_t = g0 + sum over active relays of r_kt * g_k."""
    _check_slot(t, sched.frame_len)
    _check_active(active, real.n_relays)
    return real.g0 + sum(sched.entries[k, t - 1] * real.g[k] for k in sorted(active))


def equivalent_relay_channel(
    real: ChannelRealization, sched: RotationSchedule, active: AbstractSet[int], i: int, t: int
) -> ComplexGain:
    """H_it = h_i + sum over active relays of r_kt * f_ki, seen by listening relay i."""
    if i in active:
        raise ValueError(f"relay {i} is transmitting and cannot listen (half-duplex)")
    _check_slot(t, sched.frame_len)
    _check_active(active, real.n_relays)
    return real.h[i] + sum(sched.entries[k, t - 1] * real.f[k, i] for k in sorted(active))


def _slot_bits(power: float, rho: float, n_active: int) -> float:
    # Source plus n_active relays share a constant total power.
    return float(np.log2(1.0 + rho / (1 + n_active) * power))


def slot_mutual_info(coeff: ComplexGain, rho: float, n_active: int) -> float:
    """Bits delivered in one slot over equivalent channel ``coeff`` with ``n_active`` relays on air."""
    if rho <= 0:
        raise ValueError(f"rho must be > 0, got {rho}")
    if n_active < 0:
        raise ValueError(f"number of active relays must be >= 0, got {n_active}")
    return _slot_bits(abs(coeff) ** 2, rho, n_active)


def single_relay_listen_time(frame_len: int, rate: float, rho: float, h1: ComplexGain) -> int:
    """Slots a lone relay listens to the source before it can decode: min{T, ceil(TR / C)}."""
    if rate <= 0:
        return 0
    capacity = float(np.log2(1.0 + rho * abs(h1) ** 2))
    if capacity <= 0:
        return frame_len
    slots = frame_len * rate / capacity
    if slots >= frame_len:
        return frame_len
    return min(frame_len, math.ceil(slots))


def single_relay_decode_slot(cfg: ProtocolConfig, h1: ComplexGain) -> int:
    """Decode slot of a lone relay once decoding is only attempted at block boundaries."""
    listen = single_relay_listen_time(cfg.frame_len, cfg.rate, cfg.snr_linear, h1)
    if listen >= cfg.frame_len:
        return cfg.frame_len
    return min(cfg.frame_len, cfg.block_len * math.ceil(listen / cfg.block_len))


def _check_dimensions(cfg: ProtocolConfig, real: ChannelRealization, sched: RotationSchedule = None) -> None:
    if real.n_relays != cfg.n_relays:
        raise DimensionMismatchError(f"realization has {real.n_relays} relays, config expects {cfg.n_relays}")
    if sched is None:
        return
    if sched.n_relays != cfg.n_relays or sched.frame_len != cfg.frame_len:
        raise DimensionMismatchError(
            f"schedule is {sched.n_relays}x{sched.frame_len}, config expects {cfg.n_relays}x{cfg.frame_len}"
        )
    if cfg.n_relays and sched.n_rotations != cfg.n_rotations:
        raise DimensionMismatchError(f"schedule uses L={sched.n_rotations}, config expects L={cfg.n_rotations}")


def _run_dynamics(
    cfg: ProtocolConfig,
    dest_power: Callable[[AbstractSet[int], int], float],
    relay_power: Callable[[AbstractSet[int], int, int], float],
) -> TrialOutcome:
    """Slot loop shared by the rotation engine and the MISO baseline.

    ``dest_power(active, t)`` and ``relay_power(active, i, t)`` return the
    effective |channel|^2 before the 1/(1+j) power split.
    """
    n, frame_len, rho = cfg.n_relays, cfg.frame_len, cfg.snr_linear
    target = cfg.target_bits

    active: set = set()
    relay_bits = [0.0] * n
    decode_slot = [frame_len] * n
    dest_bits = 0.0

    def decode_at(boundary: int) -> None:
        # Decoding threshold is inclusive; relays decoding together activate together.
        newly = [i for i in range(n) if i not in active and relay_bits[i] >= target]
        for i in newly:
            decode_slot[i] = boundary
        active.update(newly)

    decode_at(0)
    for t in range(1, frame_len + 1):
        on_air = frozenset(active)
        dest_bits += _slot_bits(dest_power(on_air, t), rho, len(on_air))
        for i in range(n):
            if i not in on_air:
                relay_bits[i] += _slot_bits(relay_power(on_air, i, t), rho, len(on_air))
        if t % cfg.block_len == 0 and t < frame_len:
            decode_at(t)

    return TrialOutcome(
        decode_slot=tuple(decode_slot),
        dest_info_bits=dest_bits,
        outage=dest_bits < target,
    )


def run_trial(cfg: ProtocolConfig, real: ChannelRealization, sched: RotationSchedule) -> TrialOutcome:
    """Simulate one frame of DDF with distributed rotations."""
    _check_dimensions(cfg, real, sched)
    return _run_dynamics(
        cfg,
        lambda active, t: abs(equivalent_dest_channel(real, sched, active, t)) ** 2,
        lambda active, i, t: abs(equivalent_relay_channel(real, sched, active, i, t)) ** 2,
    )


def baseline_miso_trial(cfg: ProtocolConfig, real: ChannelRealization) -> TrialOutcome:
    """Same dynamics with ideal coherent combining of every active transmitter."""
    _check_dimensions(cfg, real)
    g_power = np.abs(real.g) ** 2
    f_power = np.abs(real.f) ** 2
    h_power = np.abs(real.h) ** 2
    g0_power = abs(real.g0) ** 2

    return _run_dynamics(
        cfg,
        lambda active, t: g0_power + sum(g_power[k] for k in sorted(active)),
        lambda active, i, t: h_power[i] + sum(f_power[k, i] for k in sorted(active)),
    )


def _require_single_relay_two_rotations(cfg: ProtocolConfig, real: ChannelRealization) -> None:
    if cfg.n_relays != 1 or cfg.n_rotations != 2:
        raise ConfigError(
            f"the two-rotation evaluation needs N=1 and L=2, got N={cfg.n_relays}, L={cfg.n_rotations}"
        )
    _check_dimensions(cfg, real)


def paired_rotation_trial(cfg: ProtocolConfig, real: ChannelRealization) -> TrialOutcome:
    """
    Single relay, two rotations, transmit phase split evenly between g0+g1 and g0-g1.

    With T - T1 odd the rotation -1 gets the extra slot.
    """
    _require_single_relay_two_rotations(cfg, real)
    rho, frame_len = cfg.snr_linear, cfg.frame_len
    t1 = single_relay_decode_slot(cfg, real.h[0])
    g0, g1 = real.g0, real.g[0]
    plus = (frame_len - t1) // 2
    minus = frame_len - t1 - plus

    bits = (
        t1 * _slot_bits(abs(g0) ** 2, rho, 0)
        + plus * _slot_bits(abs(g0 + g1) ** 2, rho, 1)
        + minus * _slot_bits(abs(g0 - g1) ** 2, rho, 1)
    )
    return TrialOutcome(decode_slot=(t1,), dest_info_bits=bits, outage=bits < cfg.target_bits)


def two_rotation_bound_bits(frame_len: int, t1: int, rho: float, g0: ComplexGain, g1: ComplexGain) -> float:
    """
    Lower bound on the two-rotation destination information:
    T1*log2(1 + rho|g0|^2) + A*log2(1 + rho(|g0|^2+|g1|^2) + rho^2/4 (|g0|^2-|g1|^2)^2).
    """
    a = (frame_len - t1) // 2
    p0, p1 = abs(g0) ** 2, abs(g1) ** 2
    paired = 1.0 + rho * (p0 + p1) + 0.25 * rho ** 2 * (p0 - p1) ** 2
    return t1 * float(np.log2(1.0 + rho * p0)) + a * float(np.log2(paired))


def two_rotation_bound_trial(cfg: ProtocolConfig, real: ChannelRealization) -> TrialOutcome:
    """Outage test against the lower-bounded information; flags a superset of paired-rotation outages."""
    _require_single_relay_two_rotations(cfg, real)
    t1 = single_relay_decode_slot(cfg, real.h[0])
    bits = two_rotation_bound_bits(cfg.frame_len, t1, cfg.snr_linear, real.g0, real.g[0])
    return TrialOutcome(decode_slot=(t1,), dest_info_bits=bits, outage=bits < cfg.target_bits)


def useful_rate(bits_per_symbol: int, block_len: int, n_relays: int) -> float:
    """
    Useful rate in bpcu once relays signal their decoding state each block.

    ceil(log2 N) busy bits per block for N >= 2, and at least one bit for N = 1.
    """
    for name, value in (("bits_per_symbol", bits_per_symbol), ("block_len", block_len), ("n_relays", n_relays)):
        if value < 1:
            raise ValueError(f"{name} must be >= 1, got {value}")
    signalling = max(1, (n_relays - 1).bit_length())
    payload = bits_per_symbol * block_len
    return payload / (payload + signalling)

