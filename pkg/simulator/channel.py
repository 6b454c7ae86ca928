# Slow-fading channel realizations for the source/relay/destination network

import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from simulator.streams import padded_words

logger = logging.getLogger(__name__)

# A single link amplitude. Python/numpy complex carries (re, im).
ComplexGain = complex


@dataclass(frozen=True, eq=False)
class ChannelRealization:
    """One slow-fading draw of every link gain, constant over a frame.

    ``f[k, i]`` is the gain from relay k to relay i; the diagonal is zero.
    """
    g0: complex
    h: np.ndarray
    g: np.ndarray
    f: np.ndarray

    def __post_init__(self):
        n = self.h.shape[0]
        if self.g.shape != (n,) or self.f.shape != (n, n):
            raise ValueError(
                f"link arrays disagree on relay count: h={self.h.shape}, g={self.g.shape}, f={self.f.shape}"
            )
        for arr in (self.h, self.g, self.f):
            arr.setflags(write=False)

    @property
    def n_relays(self) -> int:
        return int(self.h.shape[0])

    @property
    def isolated(self) -> bool:
        return not np.any(self.f)

    @classmethod
    def from_gains(cls, g0: complex, h, g, f=None) -> "ChannelRealization":
        """Build a realization from explicit gains (used for hand-computed cases)."""
        h = np.asarray(h, dtype=np.complex128).reshape(-1)
        g = np.asarray(g, dtype=np.complex128).reshape(-1)
        n = h.shape[0]
        if f is None:
            f = np.zeros((n, n), dtype=np.complex128)
        else:
            f = np.array(f, dtype=np.complex128).reshape(n, n)
            np.fill_diagonal(f, 0)
        return cls(g0=complex(g0), h=h.copy(), g=g.copy(), f=f)


def links_per_trial(n_relays: int) -> int:
    """g0, N source-relay, N relay-destination and N*N relay-relay links."""
    return 1 + 2 * n_relays + n_relays * n_relays


def channel_words(n_relays: int) -> int:
    """Uniform draws one realization consumes (two per link, padded)."""
    return padded_words(2 * links_per_trial(n_relays))


def _gaussian_from_uniforms(u_mag: np.ndarray, u_phase: np.ndarray) -> np.ndarray:
    # |x|^2 ~ Exp(1) with a uniform phase is exactly CN(0, 1).
    return np.sqrt(-np.log1p(-u_mag)) * np.exp(2j * np.pi * u_phase)


def draw_realizations(
    n_relays: int, isolated: bool, rng: np.random.Generator, count: int
) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """
    Draw ``count`` consecutive realizations from ``rng``.

    Returns:
        (g0, h, g, f) with shapes (count,), (count, N), (count, N), (count, N, N)
    """
    if n_relays < 0:
        raise ValueError(f"n_relays must be >= 0, got {n_relays}")
    if count < 0:
        raise ValueError(f"count must be >= 0, got {count}")

    n = n_relays
    links = links_per_trial(n)
    uniforms = rng.random((count, channel_words(n)))
    gains = _gaussian_from_uniforms(uniforms[:, :links], uniforms[:, links:2 * links])

    g0 = gains[:, 0]
    h = gains[:, 1:1 + n]
    g = gains[:, 1 + n:1 + 2 * n]
    # The relay-relay block is always drawn so that isolated and connected
    # scenarios share g0, h and g for the same stream position.
    f = gains[:, 1 + 2 * n:].reshape(count, n, n).copy()
    if isolated:
        f[:] = 0
    else:
        idx = np.arange(n)
        f[:, idx, idx] = 0
    return g0, h, g, f


def draw_realization(n_relays: int, isolated: bool, rng: np.random.Generator) -> ChannelRealization:
    """Draw one frame's worth of independent CN(0, 1) link gains."""
    g0, h, g, f = draw_realizations(n_relays, isolated, rng, 1)
    return ChannelRealization(g0=complex(g0[0]), h=h[0].copy(), g=g[0].copy(), f=f[0].copy())


def snr_db_to_linear(snr_db: float) -> float:
    """Convert an SNR in decibels to a linear power ratio."""
    return float(10.0 ** (snr_db / 10.0))


def snr_linear_to_db(rho: float) -> float:
    if rho <= 0:
        raise ValueError(f"linear SNR must be > 0, got {rho}")
    return float(10.0 * np.log10(rho))
