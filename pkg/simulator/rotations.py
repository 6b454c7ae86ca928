# Distributed rotation alphabet and per-relay rotation schedules

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional

import numpy as np

from simulator.config import ConfigError, settings
from simulator.streams import padded_words

logger = logging.getLogger(__name__)

# Beyond this the lexicographic column index no longer fits an int64.
_MAX_LEXICOGRAPHIC_PERIOD = 1 << 62


class Ordering(str, Enum):
    """How rotation arrays are laid out along the frame."""
    LEXICOGRAPHIC = "lexicographic"
    RANDOM = "random"


@dataclass(frozen=True, eq=False)
class RotationSchedule:
    """The N x T matrix of unit-modulus rotations r_kt.

    Row k belongs to relay k. ``indices[k, t]`` is the angle index l of
    ``entries[k, t] = exp(2j*pi*l/L)``. ``complete_coverage`` is False when
    the frame is shorter than L^N and some rotation arrays never appear.
    """
    n_relays: int
    n_rotations: int
    frame_len: int
    indices: np.ndarray
    entries: np.ndarray
    complete_coverage: bool

    @classmethod
    def from_indices(cls, indices: np.ndarray, n_rotations: int) -> "RotationSchedule":
        indices = np.asarray(indices, dtype=np.int64)
        if indices.ndim != 2:
            raise ValueError(f"schedule indices must be 2-D, got shape {indices.shape}")
        if indices.size and (indices.min() < 0 or indices.max() >= n_rotations):
            raise ValueError(f"angle indices must lie in [0, {n_rotations})")
        n, t = indices.shape
        entries = rotation_set(n_rotations)[indices]
        indices.setflags(write=False)
        entries.setflags(write=False)
        return cls(
            n_relays=n,
            n_rotations=n_rotations,
            frame_len=t,
            indices=indices,
            entries=entries,
            complete_coverage=t >= rotation_period(n, n_rotations),
        )

    @classmethod
    def empty(cls, frame_len: int, n_rotations: int = 1) -> "RotationSchedule":
        """Schedule for a network without relays (direct transmission only)."""
        return cls.from_indices(np.zeros((0, frame_len), dtype=np.int64), n_rotations)

    def column(self, t: int) -> np.ndarray:
        """Rotation array used in slot t (1-based)."""
        return self.entries[:, t - 1]


def angle_set(n_rotations: int) -> List[float]:
    """The L evenly spaced angles 2*pi*l/L, l = 0..L-1, in increasing order."""
    if n_rotations < 1:
        raise ValueError(f"number of rotations must be >= 1, got {n_rotations}")
    return [2.0 * math.pi * ell / n_rotations for ell in range(n_rotations)]


def rotation_set(n_rotations: int) -> np.ndarray:
    """Unit-modulus rotations exp(i*theta) for every angle of ``angle_set``."""
    return np.exp(1j * np.asarray(angle_set(n_rotations)))


def rotation_period(n_relays: int, n_rotations: int) -> int:
    """Number of distinct rotation arrays, L^N."""
    return n_rotations ** n_relays


def column_tuple(column: int, n_relays: int, n_rotations: int) -> List[int]:
    """Angle indices of the ``column``-th array of Theta_L^N in lexicographic order.

    Relay 0 is the most significant digit.
    """
    digits = []
    for k in range(n_relays):
        digits.append((column // n_rotations ** (n_relays - 1 - k)) % n_rotations)
    return digits


def _validate_dimensions(n_relays: int, n_rotations: int, frame_len: int, ordering: Ordering) -> int:
    if n_relays < 1:
        raise ConfigError(f"a rotation schedule needs at least one relay, got N={n_relays}")
    if n_rotations < 1:
        raise ConfigError(f"number of rotations must be >= 1, got L={n_rotations}")
    if frame_len < 1:
        raise ConfigError(f"frame length must be >= 1, got T={frame_len}")
    period = rotation_period(n_relays, n_rotations)
    if ordering == Ordering.RANDOM and period > settings.max_rotation_period:
        raise ConfigError(
            f"random ordering permutes all L^N = {period} rotation arrays; "
            f"the limit is {settings.max_rotation_period}"
        )
    if period > _MAX_LEXICOGRAPHIC_PERIOD:
        raise ConfigError(f"L^N = {period} rotation arrays cannot be indexed")
    return period


def schedule_words(n_relays: int, n_rotations: int, frame_len: int, ordering: Ordering) -> int:
    """Uniform draws one random schedule consumes (zero for lexicographic)."""
    if ordering == Ordering.LEXICOGRAPHIC or n_relays == 0:
        return 0
    period = rotation_period(n_relays, n_rotations)
    periods = math.ceil(frame_len / period)
    return padded_words(periods * period)


def _digits(columns: np.ndarray, n_relays: int, n_rotations: int) -> np.ndarray:
    """Expand column indices (..., T) into angle indices (..., N, T)."""
    weights = np.array([n_rotations ** (n_relays - 1 - k) for k in range(n_relays)], dtype=np.int64)
    return (columns[..., None, :] // weights[:, None]) % n_rotations


def build_schedules(
    n_relays: int,
    n_rotations: int,
    frame_len: int,
    ordering: Ordering,
    rng: Optional[np.random.Generator],
    count: int,
) -> np.ndarray:
    """
    Angle indices for ``count`` consecutive schedules, shape (count, N, T).

    In random mode each full L^N period is an independent uniform permutation
    of the lexicographic cycle, obtained by ranking L^N uniforms.
    """
    ordering = Ordering(ordering)
    period = _validate_dimensions(n_relays, n_rotations, frame_len, ordering)

    if ordering == Ordering.LEXICOGRAPHIC:
        columns = np.arange(frame_len, dtype=np.int64) % period
        return np.broadcast_to(_digits(columns, n_relays, n_rotations), (count, n_relays, frame_len)).copy()

    if rng is None:
        raise ValueError("random ordering needs a generator")
    periods = math.ceil(frame_len / period)
    uniforms = rng.random((count, schedule_words(n_relays, n_rotations, frame_len, ordering)))
    keys = uniforms[:, :periods * period].reshape(count, periods, period)
    permutations = np.argsort(keys, axis=-1, kind="stable")
    columns = permutations.reshape(count, periods * period)[:, :frame_len]
    return _digits(columns, n_relays, n_rotations)


def build_schedule(
    n_relays: int,
    n_rotations: int,
    frame_len: int,
    ordering: Ordering = Ordering.RANDOM,
    rng: Optional[np.random.Generator] = None,
) -> RotationSchedule:
    """Build the rotation matrix R for one frame."""
    indices = build_schedules(n_relays, n_rotations, frame_len, ordering, rng, 1)[0]
    schedule = RotationSchedule.from_indices(indices, n_rotations)
    if not schedule.complete_coverage:
        logger.warning(
            f"frame length T={frame_len} is shorter than L^N={rotation_period(n_relays, n_rotations)}: "
            f"not every rotation array can appear"
        )
    return schedule
