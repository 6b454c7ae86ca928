#!/usr/bin/env python3
"""
Tests that the vectorised engine reproduces the one-trial-at-a-time engine.
"""

import sys

import numpy as np
import pytest

from simulator.batch import (
    draw_batch,
    simulate_batch,
    single_relay_decode_slots,
    two_rotation_batch,
    uses_schedule,
    words_per_trial,
)
from simulator.montecarlo import trial_inputs
from simulator.protocol import (
    Combining,
    ProtocolConfig,
    baseline_miso_trial,
    paired_rotation_trial,
    run_trial,
    single_relay_decode_slot,
    two_rotation_bound_trial,
)
from simulator.rotations import Ordering

SCENARIOS = [
    dict(n_relays=0, rate=2.0, snr_linear=10.0),
    dict(n_relays=1, n_rotations=2, rate=2.0, snr_linear=100.0),
    dict(n_relays=1, n_rotations=32, rate=1.0, snr_linear=30.0, ordering=Ordering.LEXICOGRAPHIC),
    dict(n_relays=3, n_rotations=4, rate=2.0, snr_linear=100.0),
    dict(n_relays=3, n_rotations=4, rate=2.0, snr_linear=100.0, isolated=True),
    dict(n_relays=3, n_rotations=4, block_len=8, rate=2.0, snr_linear=100.0),
    dict(n_relays=3, n_rotations=4, rate=2.0, snr_linear=100.0, combining=Combining.MISO),
    dict(n_relays=2, n_rotations=2, frame_len=16, block_len=4, rate=1.5, snr_linear=20.0),
]


def _scenario(fields) -> ProtocolConfig:
    return ProtocolConfig.build(**{"frame_len": 64, **fields})


@pytest.mark.parametrize("fields", SCENARIOS)
def test_batch_matches_reference_engine(fields):
    """Test decode slots, information and outage for every trial of a batch."""
    cfg = _scenario(fields)
    first, count = 37, 40
    batch = draw_batch(cfg, seed=99, first_trial=first, count=count)
    outcome = simulate_batch(cfg, batch)

    for i in range(count):
        real, sched = trial_inputs(cfg, 99, first + i)
        if cfg.combining == Combining.MISO:
            ref = baseline_miso_trial(cfg, real)
        else:
            ref = run_trial(cfg, real, sched)
        assert tuple(outcome.decode_slot[i]) == ref.decode_slot
        assert outcome.dest_info_bits[i] == pytest.approx(ref.dest_info_bits, abs=1e-9)
        assert bool(outcome.outage[i]) == ref.outage


def test_batch_inputs_match_trial_inputs():
    """Test that batch trial i carries exactly the inputs of trial first + i."""
    cfg = _scenario(dict(n_relays=2, n_rotations=4, rate=1.0, snr_linear=10.0))
    batch = draw_batch(cfg, seed=5, first_trial=1000, count=8)
    for i in range(8):
        real, sched = trial_inputs(cfg, 5, 1000 + i)
        assert batch.realization(i).g0 == real.g0
        assert np.array_equal(batch.realization(i).f, real.f)
        assert np.array_equal(batch.schedule(i, 4).indices, sched.indices)


def test_batch_split_does_not_change_results():
    """Test that one batch of 30 equals batches of 10, 7 and 13."""
    cfg = _scenario(dict(n_relays=3, n_rotations=4, rate=2.0, snr_linear=50.0))
    whole = simulate_batch(cfg, draw_batch(cfg, 3, 0, 30))
    parts = [simulate_batch(cfg, draw_batch(cfg, 3, first, count)) for first, count in ((0, 10), (10, 7), (17, 13))]
    assert np.array_equal(whole.outage, np.concatenate([p.outage for p in parts]))
    assert np.array_equal(whole.decode_slot, np.concatenate([p.decode_slot for p in parts]))


def test_snr_override():
    cfg = _scenario(dict(n_relays=1, n_rotations=2, rate=2.0, snr_linear=1.0))
    batch = draw_batch(cfg, 1, 0, 20)
    override = simulate_batch(cfg, batch, snr_linear=100.0)
    direct = simulate_batch(cfg.with_snr(100.0), batch)
    assert np.array_equal(override.dest_info_bits, direct.dest_info_bits)
    with pytest.raises(ValueError):
        simulate_batch(cfg, batch, snr_linear=0.0)


def test_isolated_and_connected_share_direct_links():
    """Test common channel randomness across connectivity and combining."""
    fields = dict(n_relays=3, n_rotations=4, rate=2.0, snr_linear=10.0)
    connected = draw_batch(_scenario(fields), 8, 0, 16)
    isolated = draw_batch(_scenario({**fields, "isolated": True}), 8, 0, 16)
    miso = draw_batch(_scenario({**fields, "combining": Combining.MISO}), 8, 0, 16)
    for other in (isolated, miso):
        assert np.array_equal(connected.g0, other.g0)
        assert np.array_equal(connected.h, other.h)
        assert np.array_equal(connected.g, other.g)
    assert not np.any(isolated.f)
    assert miso.rotation_index is None


def test_words_per_trial():
    cfg = _scenario(dict(n_relays=1, n_rotations=2, rate=1.0, snr_linear=1.0))
    assert uses_schedule(cfg)
    assert words_per_trial(cfg) == 8 + 64
    lex = _scenario(dict(n_relays=1, n_rotations=2, rate=1.0, snr_linear=1.0, ordering=Ordering.LEXICOGRAPHIC))
    assert words_per_trial(lex) == 8
    assert not uses_schedule(_scenario(dict(n_relays=0, rate=1.0, snr_linear=1.0)))


def test_single_relay_decode_slots_vectorised():
    cfg = _scenario(dict(n_relays=1, n_rotations=2, block_len=8, rate=1.0, snr_linear=5.0))
    h1 = np.array([0.0, 0.1, 0.5, 1.0, 2.0, 10.0], dtype=complex)
    expected = [single_relay_decode_slot(cfg, h) for h in h1]
    assert single_relay_decode_slots(cfg, h1).tolist() == expected


def test_two_rotation_batch_matches_reference():
    """Test the vectorised paired-rotation and bound evaluations."""
    cfg = _scenario(dict(n_relays=1, n_rotations=2, rate=2.0, snr_linear=100.0))
    batch = draw_batch(cfg, 21, 0, 50)
    paired, bound = two_rotation_batch(cfg, batch)
    for i in range(50):
        real = batch.realization(i)
        ref_paired = paired_rotation_trial(cfg, real)
        ref_bound = two_rotation_bound_trial(cfg, real)
        assert paired.decode_slot[i, 0] == ref_paired.decode_slot[0]
        assert paired.dest_info_bits[i] == pytest.approx(ref_paired.dest_info_bits, abs=1e-9)
        assert bound.dest_info_bits[i] == pytest.approx(ref_bound.dest_info_bits, abs=1e-9)
    assert np.all(bound.outage >= paired.outage)


def test_rotation_engine_needs_schedules():
    cfg = _scenario(dict(n_relays=1, n_rotations=2, rate=1.0, snr_linear=1.0))
    miso_batch = draw_batch(cfg.model_copy(update={"combining": Combining.MISO}), 0, 0, 4)
    with pytest.raises(ValueError):
        simulate_batch(cfg, miso_batch)


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
