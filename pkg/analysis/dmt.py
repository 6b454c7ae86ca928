"""
Closed-form diversity-multiplexing tradeoff (DMT) curves.

Two families are provided:

* ``optimal(N)``: the DMT of the dynamic decode-and-forward protocol with N
  relays over an infinite frame.
* ``lower_bound(T)``: a lower bound on the DMT reached with a single relay,
  two distributed rotations and a frame of T slots. For each candidate relay
  decode time T1 it adds the exponent of the relay decoding at T1 to the
  exponent of the destination outage given T1, and minimises over T1.
"""

import logging
import math
from dataclasses import dataclass
from typing import List, Sequence

import numpy as np

logger = logging.getLogger(__name__)


def _check_gain(r: float) -> None:
    if not 0.0 <= r <= 1.0:
        raise ValueError(f"multiplexing gain must be in [0, 1], got {r}")


def _pos(x: float) -> float:
    return x if x > 0.0 else 0.0


@dataclass(frozen=True)
class DmtPoint:
    """One (multiplexing gain, diversity gain) pair."""
    r: float
    d: float

    def __post_init__(self):
        _check_gain(self.r)
        if self.d < 0:
            raise ValueError(f"diversity gain must be >= 0, got {self.d}")


@dataclass(frozen=True)
class DmtBoundParams:
    """Frame length T, candidate decode time T1 and A = floor((T - T1) / 2)."""
    frame_len: int
    decode_time: int

    def __post_init__(self):
        if not 1 <= self.decode_time <= self.frame_len:
            raise ValueError(f"decode time must be in 1..{self.frame_len}, got {self.decode_time}")

    @property
    def half_transmit(self) -> int:
        return (self.frame_len - self.decode_time) // 2


def dmt_ddf_optimal(n_relays: int, r: float) -> float:
    """DMT of the DDF protocol with ``n_relays`` relays."""
    if n_relays < 1:
        raise ValueError(f"n_relays must be >= 1, got {n_relays}")
    _check_gain(r)
    if r <= 1.0 / (n_relays + 1):
        return (n_relays + 1) * (1.0 - r)
    if r <= 0.5:
        return 1.0 + n_relays * (1.0 - 2.0 * r) / (1.0 - r)
    return (1.0 - r) / r


def d1_exponent(frame_len: int, decode_time: int, r: float) -> float:
    """
    SNR exponent of the relay needing exactly ``decode_time`` slots: (1 - T r / (T1 - 1))^+.

    A relay decoding in the first slot carries no SNR exponent, so T1 = 1 gives 0.
    """
    if not 1 <= decode_time <= frame_len:
        raise ValueError(f"decode time must be in 1..{frame_len}, got {decode_time}")
    if decode_time == 1:
        return 0.0
    return _pos(1.0 - frame_len * r / (decode_time - 1))


def d_dest_bound(params: DmtBoundParams, r: float) -> float:
    """Lower bound on the destination outage exponent given the relay decode time."""
    _check_gain(r)
    t, t1, a = params.frame_len, params.decode_time, params.half_transmit
    symmetric = 2.0 * _pos(1.0 - t * r / (t1 + 2 * a))
    if t1 <= 2 * a:
        return symmetric
    # Equality r == 2A/T takes this branch; with A = 0 it is always taken.
    if r >= 2.0 * a / t:
        return (t1 + 2 * a) / t1 * _pos(1.0 - t * r / (t1 + 2 * a))
    return _pos(2.0 - t * r / (2 * a))


def _exponents_over_decode_times(frame_len: int, r: float) -> np.ndarray:
    """d1_exponent + d_dest_bound for every T1 in 1..T, vectorised."""
    t = frame_len
    t1 = np.arange(1, t + 1, dtype=np.float64)
    a = np.floor((t - t1) / 2.0)

    with np.errstate(divide="ignore", invalid="ignore"):
        d1 = np.where(t1 > 1, np.maximum(0.0, 1.0 - t * r / np.maximum(t1 - 1, 1)), 0.0)
        ramp = np.maximum(0.0, 1.0 - t * r / (t1 + 2 * a))
        symmetric = 2.0 * ramp
        high_rate = (t1 + 2 * a) / t1 * ramp
        low_rate = np.maximum(0.0, 2.0 - t * r / np.where(a > 0, 2 * a, 1.0))
    d_dest = np.where(t1 <= 2 * a, symmetric, np.where(r >= 2.0 * a / t, high_rate, low_rate))
    return d1 + d_dest


def dmt_lower_bound_single_relay(frame_len: int, r: float) -> float:
    """Lower bound on the single-relay two-rotation DMT: min over T1 of d1 + d_dest."""
    if frame_len < 2:
        raise ValueError(f"frame length must be >= 2, got {frame_len}")
    _check_gain(r)
    return float(np.min(_exponents_over_decode_times(frame_len, r)))


@dataclass(frozen=True)
class DmtCurveKind:
    """Which curve to evaluate: ``optimal`` with N relays or ``lower_bound`` with frame length T."""
    family: str
    parameter: int

    @classmethod
    def optimal(cls, n_relays: int) -> "DmtCurveKind":
        return cls("optimal", n_relays)

    @classmethod
    def lower_bound(cls, frame_len: int) -> "DmtCurveKind":
        return cls("lower_bound", frame_len)

    def __call__(self, r: float) -> float:
        if self.family == "optimal":
            return dmt_ddf_optimal(self.parameter, r)
        if self.family == "lower_bound":
            return dmt_lower_bound_single_relay(self.parameter, r)
        raise ValueError(f"unknown DMT curve family: {self.family}")

    @property
    def label(self) -> str:
        return "d_optimal" if self.family == "optimal" else f"d_lower_bound_T{self.parameter}"


def dmt_curve(kind: DmtCurveKind, grid: Sequence[float]) -> List[DmtPoint]:
    """Evaluate ``kind`` at every multiplexing gain of ``grid``."""
    return [DmtPoint(r=float(r), d=kind(float(r))) for r in grid]


def grid_from_range(start: float, stop: float, step: float) -> List[float]:
    """
    Inclusive arithmetic grid start, start+step, ... up to stop.

    The endpoint is kept when it lies within half a step of the last point.
    """
    if step <= 0:
        raise ValueError(f"grid step must be > 0, got {step}")
    if stop < start:
        raise ValueError(f"grid stop {stop} is below start {start}")
    count = int(math.floor((stop - start) / step + 0.5)) + 1
    return [round(start + i * step, 12) for i in range(count)]
