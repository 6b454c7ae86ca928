# Numerical infimum of v0 + v1 over the destination outage region

import logging

from scipy.optimize import linprog

from analysis.dmt import DmtBoundParams

logger = logging.getLogger(__name__)


def d_dest_region_infimum(params: DmtBoundParams, r: float) -> float:
    """
    inf {v0 + v1} over 0 <= v0, v1 <= 1 with
    T1 (1 - v0)^+ + A max(0, 2 - 2 v0, 2 - 2 v1) <= T r.

    Inside the unit square the constraint is linear once the smaller of
    v0, v1 is known, so the region splits into two linear programs.
    """
    if not 0.0 <= r <= 1.0:
        raise ValueError(f"multiplexing gain must be in [0, 1], got {r}")
    t, t1, a = params.frame_len, params.decode_time, params.half_transmit
    budget = t * r - t1 - 2 * a
    bounds = [(0.0, 1.0), (0.0, 1.0)]
    cost = [1.0, 1.0]

    candidates = []
    # v1 <= v0: T1 (1 - v0) + 2A (1 - v1) <= T r
    low_v1 = linprog(cost, A_ub=[[-t1, -2.0 * a], [-1.0, 1.0]], b_ub=[budget, 0.0], bounds=bounds, method="highs")
    # v0 <= v1: (T1 + 2A)(1 - v0) <= T r
    low_v0 = linprog(cost, A_ub=[[-(t1 + 2.0 * a), 0.0], [1.0, -1.0]], b_ub=[budget, 0.0], bounds=bounds, method="highs")
    for result in (low_v1, low_v0):
        if result.status == 0:
            candidates.append(float(result.fun))
        else:
            logger.debug(f"region B program infeasible for T={t}, T1={t1}, r={r}: {result.message}")
    if not candidates:
        raise RuntimeError(f"no feasible point in region B for T={t}, T1={t1}, r={r}")
    return min(candidates)
