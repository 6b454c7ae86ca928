# CSV tables for sweeps, DMT curves and useful rates

import logging
from typing import List, Sequence

import pandas as pd

from analysis.dmt import DmtCurveKind, dmt_curve
from experiments.manifest import ensure_parent
from simulator.montecarlo import BoundRow, SweepRow
from simulator.protocol import useful_rate

logger = logging.getLogger(__name__)

OUTAGE_COLUMNS = [
    "snr_db", "rate_bpcu", "n_relays", "n_rotations", "block_len", "isolated",
    "trials", "failures", "outage_prob", "ci_low", "ci_high",
]

FLOAT_FORMAT = "%.10g"


def outage_table(rows: Sequence[SweepRow]) -> pd.DataFrame:
    records = []
    for row in rows:
        if row.estimate is None:
            continue
        est = row.estimate
        records.append({
            "snr_db": row.snr_db,
            "rate_bpcu": row.rate,
            "n_relays": row.n_relays,
            "n_rotations": row.n_rotations,
            "block_len": row.block_len,
            "isolated": "true" if row.isolated else "false",
            "trials": est.trials,
            "failures": est.failures,
            "outage_prob": est.p_hat,
            "ci_low": est.ci_low,
            "ci_high": est.ci_high,
        })
    table = pd.DataFrame.from_records(records, columns=OUTAGE_COLUMNS)
    return table.astype({"snr_db": float, "rate_bpcu": float, "outage_prob": float, "ci_low": float, "ci_high": float})


BOUND_COLUMNS = [
    "snr_db", "rate_bpcu", "frame_len", "trials",
    "paired_failures", "paired_outage", "bound_failures", "bound_outage",
]


def bound_table(rows: Sequence[BoundRow], frame_len: int) -> pd.DataFrame:
    records = [
        {
            "snr_db": row.snr_db,
            "rate_bpcu": row.rate,
            "frame_len": frame_len,
            "trials": row.paired.trials,
            "paired_failures": row.paired.failures,
            "paired_outage": row.paired.p_hat,
            "bound_failures": row.bound.failures,
            "bound_outage": row.bound.p_hat,
        }
        for row in rows
    ]
    table = pd.DataFrame.from_records(records, columns=BOUND_COLUMNS)
    return table.astype({"snr_db": float, "rate_bpcu": float, "paired_outage": float, "bound_outage": float})


def dmt_table(kinds: Sequence[DmtCurveKind], grid: Sequence[float]) -> pd.DataFrame:
    columns = {"r": [float(r) for r in grid]}
    for kind in kinds:
        columns[kind.label] = [point.d for point in dmt_curve(kind, grid)]
    return pd.DataFrame(columns)


def rate_table(bits_per_symbol: int, n_relays: int, blocks: List[int]) -> pd.DataFrame:
    return pd.DataFrame({
        "block_len": blocks,
        "useful_rate_bpcu": [useful_rate(bits_per_symbol, b, n_relays) for b in blocks],
    })


def to_csv_text(table: pd.DataFrame) -> str:
    """Locale-independent CSV: '.' decimals, '\\n' rows, 10 significant digits."""
    return table.to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator="\n")


def write_csv(table: pd.DataFrame, path: str) -> str:
    ensure_parent(path)
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(to_csv_text(table))
    logger.info(f"Wrote {len(table)} rows to {path}")
    return path
