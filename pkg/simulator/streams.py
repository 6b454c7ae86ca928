"""
Counter-addressable random streams for reproducible parallel Monte Carlo.

Every trial owns a fixed-size slice of a Philox-4x64 stream keyed by
``(seed, stream tag)``. The slice for trial ``i`` starts at block counter
``i * blocks_per_trial``, so any trial (or run of consecutive trials) can be
generated directly without touching the trials before it. Drawing
``count`` consecutive trials from one generator yields exactly the same
numbers as drawing them one trial at a time.
"""

import math

import numpy as np

# Stream tags: the second word of the Philox key.
CHANNEL_STREAM = 0
SCHEDULE_STREAM = 1

# Philox-4x64 emits four 64-bit words per counter block; one uniform double
# consumes one word.
WORDS_PER_BLOCK = 4

MAX_SEED = (1 << 64) - 1


def padded_words(n_uniforms: int) -> int:
    """Round a per-trial draw count up to whole Philox blocks."""
    if n_uniforms < 0:
        raise ValueError(f"n_uniforms must be >= 0, got {n_uniforms}")
    return WORDS_PER_BLOCK * math.ceil(n_uniforms / WORDS_PER_BLOCK)


def check_seed(seed: int) -> int:
    if not 0 <= int(seed) <= MAX_SEED:
        raise ValueError(f"seed must be in [0, 2**64), got {seed}")
    return int(seed)


def trial_generator(seed: int, trial: int, stream: int, words_per_trial: int) -> np.random.Generator:
    """
    Generator positioned at the start of ``trial``'s slice of ``stream``.

    Args:
        seed: run seed, used as the first Philox key word
        trial: trial index (>= 0); for a batch, the first trial of the batch
        stream: stream tag (CHANNEL_STREAM or SCHEDULE_STREAM)
        words_per_trial: per-trial slice size, a multiple of WORDS_PER_BLOCK

    Returns:
        A numpy Generator backed by Philox.
    """
    if words_per_trial % WORDS_PER_BLOCK:
        raise ValueError(f"words_per_trial must be a multiple of {WORDS_PER_BLOCK}, got {words_per_trial}")
    if trial < 0:
        raise ValueError(f"trial index must be >= 0, got {trial}")
    key = np.array([check_seed(seed), stream], dtype=np.uint64)
    counter = trial * (words_per_trial // WORDS_PER_BLOCK)
    return np.random.Generator(np.random.Philox(key=key, counter=counter))
