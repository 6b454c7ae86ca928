"""
Built-in oracle suite.

Each oracle compares the simulator against an independently computed
reference (closed form, hand-coded trace or exhaustive enumeration) and
reports expected value, computed value and tolerance.
"""

import itertools
import logging
import math
from dataclasses import dataclass
from typing import Callable, List, Optional

import numpy as np

from analysis.dmt import DmtBoundParams, d_dest_bound, dmt_ddf_optimal, dmt_lower_bound_single_relay
from analysis.region import d_dest_region_infimum
from simulator.channel import ChannelRealization
from simulator.montecarlo import estimate_outage
from simulator.protocol import ProtocolConfig, run_trial, single_relay_listen_time, useful_rate
from simulator.rotations import Ordering, build_schedule

logger = logging.getLogger(__name__)

DMT_FRAMES = (16, 64, 256, 1024)
LISTEN_TIME_DRAWS = 10_000


@dataclass(frozen=True)
class OracleResult:
    name: str
    passed: bool
    expected: float
    computed: float
    tolerance: float


def siso_closed_form(trials: int, seed: int, threads: Optional[int]) -> OracleResult:
    """Direct link only: p_out = 1 - exp(-(2^R - 1) / rho) at R = 2 bpcu, 10 dB."""
    rate, rho = 2.0, 10.0
    cfg = ProtocolConfig.build(n_relays=0, frame_len=64, rate=rate, snr_linear=rho)
    expected = 1.0 - math.exp(-(2.0 ** rate - 1.0) / rho)
    computed = estimate_outage(cfg, trials, seed, threads).p_hat
    tolerance = 0.002 * math.sqrt(1e6 / trials)
    return OracleResult("siso_closed_form", abs(computed - expected) <= tolerance, expected, computed, tolerance)


def deterministic_trace() -> OracleResult:
    """T=4, one relay, rotations +1/-1 in lexicographic order, fixed channels."""
    frame_len, rate, rho = 4, 0.5, 1.0
    g0, g1, h1 = 1.0, 1.0, 1.2
    cfg = ProtocolConfig.build(
        n_relays=1, n_rotations=2, frame_len=frame_len, rate=rate, snr_linear=rho,
        ordering=Ordering.LEXICOGRAPHIC,
    )
    real = ChannelRealization.from_gains(g0=g0, h=[h1], g=[g1])
    sched = build_schedule(1, 2, frame_len, Ordering.LEXICOGRAPHIC)
    outcome = run_trial(cfg, real, sched)

    # Independent evaluation of the same four slots.
    per_slot = math.log2(1.0 + rho * h1 * h1)
    decode = next((t for t in range(1, frame_len) if t * per_slot >= frame_len * rate), frame_len)
    expected = decode * math.log2(1.0 + rho * g0 * g0)
    for t in range(decode + 1, frame_len + 1):
        r_t = 1.0 if (t - 1) % 2 == 0 else -1.0
        expected += math.log2(1.0 + rho / 2.0 * (g0 + r_t * g1) ** 2)

    tolerance = 1e-12
    passed = outcome.decode_slot == (decode,) and abs(outcome.dest_info_bits - expected) <= tolerance
    return OracleResult("deterministic_trace", passed, expected, outcome.dest_info_bits, tolerance)


def schedule_coverage(seed: int) -> OracleResult:
    """Every array of Theta_L^N appears exactly once when T = L^N, in both orderings."""
    missing = 0
    cases = [(2, 2), (1, 4), (3, 4)]
    rng = np.random.default_rng(seed)
    for (n, ell), ordering in itertools.product(cases, list(Ordering)):
        sched = build_schedule(n, ell, ell ** n, ordering, rng)
        columns = {tuple(col) for col in sched.indices.T.tolist()}
        expected = set(itertools.product(range(ell), repeat=n))
        missing += len(expected.symmetric_difference(columns))
    return OracleResult("schedule_coverage", missing == 0, 0.0, float(missing), 0.0)


def dmt_endpoints() -> OracleResult:
    """Lower bound is exactly 2 at r = 0 and 0 at r = 1; same endpoints for the optimal N=1 curve."""
    worst = abs(dmt_ddf_optimal(1, 0.0) - 2.0) + abs(dmt_ddf_optimal(1, 1.0))
    for frame_len in DMT_FRAMES:
        worst = max(
            worst,
            abs(dmt_lower_bound_single_relay(frame_len, 0.0) - 2.0),
            abs(dmt_lower_bound_single_relay(frame_len, 1.0)),
        )
    return OracleResult("dmt_endpoints", worst == 0.0, 0.0, worst, 0.0)


def listen_time_equivalence(seed: int, draws: int = LISTEN_TIME_DRAWS) -> OracleResult:
    """One relay, B = 1: simulated decode slot equals min{T, ceil(TR / log2(1 + rho|h1|^2))}."""
    rng = np.random.default_rng(seed)
    mismatches = 0
    for _ in range(draws):
        frame_len = int(rng.integers(8, 129))
        rate = float(4.0 * (1.0 - rng.random()))
        rho = float(10.0 ** rng.uniform(-1.0, 4.0))
        h1 = complex(rng.normal(scale=math.sqrt(0.5)), rng.normal(scale=math.sqrt(0.5)))
        cfg = ProtocolConfig.build(
            n_relays=1, n_rotations=2, frame_len=frame_len, rate=rate, snr_linear=rho,
            ordering=Ordering.LEXICOGRAPHIC,
        )
        real = ChannelRealization.from_gains(g0=0.5, h=[h1], g=[0.5])
        sched = build_schedule(1, 2, frame_len, Ordering.LEXICOGRAPHIC)
        if run_trial(cfg, real, sched).decode_slot[0] != single_relay_listen_time(frame_len, rate, rho, h1):
            mismatches += 1
    return OracleResult("listen_time_equivalence", mismatches == 0, 0.0, float(mismatches), 0.0)


def useful_rate_values() -> OracleResult:
    """2-bit symbols, three relays, blocks of 1, 4 and 8 symbols: 1/2, 4/5 and 8/9 bpcu."""
    expected = [1 / 2, 4 / 5, 8 / 9]
    computed = [useful_rate(2, b, 3) for b in (1, 4, 8)]
    worst = max(abs(c - e) for c, e in zip(computed, expected))
    return OracleResult("useful_rate_values", worst == 0.0, 0.0, worst, 0.0)


def region_lp_agreement() -> OracleResult:
    """Closed-form destination exponent equals the linear-programming infimum over the outage region."""
    tolerance = 1e-7
    worst = 0.0
    for frame_len in (16, 64):
        for t1 in range(1, frame_len + 1):
            params = DmtBoundParams(frame_len, t1)
            for r in np.linspace(0.0, 1.0, 11):
                worst = max(worst, abs(d_dest_bound(params, float(r)) - d_dest_region_infimum(params, float(r))))
    return OracleResult("region_lp_agreement", worst <= tolerance, 0.0, worst, tolerance)


def run_oracles(trials: int, seed: int, threads: Optional[int] = None) -> List[OracleResult]:
    checks: List[Callable[[], OracleResult]] = [
        lambda: siso_closed_form(trials, seed, threads),
        deterministic_trace,
        lambda: schedule_coverage(seed),
        dmt_endpoints,
        lambda: listen_time_equivalence(seed),
        useful_rate_values,
        region_lp_agreement,
    ]
    results = []
    for check in checks:
        result = check()
        level = logging.INFO if result.passed else logging.ERROR
        logger.log(level, f"Oracle {result.name}: {'pass' if result.passed else 'FAIL'}")
        results.append(result)
    return results


def format_report(results: List[OracleResult]) -> str:
    lines = ["oracle\tstatus\texpected\tcomputed\ttolerance"]
    for r in results:
        status = "pass" if r.passed else "fail"
        lines.append(f"{r.name}\t{status}\t{r.expected:.12g}\t{r.computed:.12g}\t{r.tolerance:.3g}")
    return "\n".join(lines) + "\n"
