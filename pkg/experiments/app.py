"""
Command-line front end.

    python -m experiments.app outage --relays 1 --rotations 2 --rate 2 --snr-db 0:40:5 --trials 100000 --seed 7
    python -m experiments.app bound --rate 1,2 --snr-db 0:30:5 --trials 100000 --seed 7
    python -m experiments.app dmt --relays 1 --frames 16,64,256 --grid 0:1:0.01
    python -m experiments.app oracle
    python -m experiments.app rate --bits 2 --relays 3 --blocks 1,4,8

Option values are resolved as built-in defaults < ``--config`` file < flags.
Every written file gets a ``<output>.manifest`` beside it, which can be fed
back through ``--config`` to reproduce the run.
"""

import argparse
import logging
import os
import sys
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from analysis.dmt import DmtCurveKind, grid_from_range
from experiments.manifest import RunManifest, ensure_parent, read_key_values
from experiments.oracles import format_report, run_oracles
from experiments.output import bound_table, dmt_table, outage_table, rate_table, to_csv_text, write_csv
from simulator.batch import draw_batch
from simulator.channel import snr_db_to_linear
from simulator.config import ConfigError, configure_logging, settings
from simulator.montecarlo import SweepGrid, run_bound_sweep, run_sweep
from simulator.protocol import Combining, ProtocolConfig
from simulator.rotations import Ordering
from simulator.streams import check_seed

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2

ORACLE_SEED = "20240601"


# ---------------------------------------------------------------------------
# Value parsers; the same functions read flags and config-file values.
# ---------------------------------------------------------------------------

def parse_int(text: str) -> int:
    try:
        return int(text.strip())
    except ValueError:
        raise ConfigError(f"not an integer: '{text}'") from None


def parse_float(text: str) -> float:
    try:
        return float(text.strip())
    except ValueError:
        raise ConfigError(f"not a number: '{text}'") from None


def parse_bool(text: str) -> bool:
    value = text.strip().lower()
    if value in ("true", "yes", "1"):
        return True
    if value in ("false", "no", "0"):
        return False
    raise ConfigError(f"not a boolean: '{text}'")


def _split(text: str) -> List[str]:
    items = [item for item in text.split(",") if item.strip()]
    if not items:
        raise ConfigError(f"empty list: '{text}'")
    return items


def parse_int_list(text: str) -> List[int]:
    return [parse_int(item) for item in _split(text)]


def parse_float_list(text: str) -> List[float]:
    return [parse_float(item) for item in _split(text)]


def parse_bool_list(text: str) -> List[bool]:
    return [parse_bool(item) for item in _split(text)]


def parse_grid(text: str) -> List[float]:
    """``start:stop:step`` (inclusive) or a comma-separated list."""
    if ":" not in text:
        return parse_float_list(text)
    parts = text.split(":")
    if len(parts) != 3:
        raise ConfigError(f"range must be start:stop:step, got '{text}'")
    start, stop, step = (parse_float(p) for p in parts)
    try:
        return grid_from_range(start, stop, step)
    except ValueError as e:
        raise ConfigError(str(e)) from None


def parse_choice(enum_cls) -> Callable[[str], object]:
    def parse(text: str):
        try:
            return enum_cls(text.strip().lower())
        except ValueError:
            choices = ", ".join(member.value for member in enum_cls)
            raise ConfigError(f"'{text}' is not one of: {choices}") from None
    return parse


# ---------------------------------------------------------------------------
# Options
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Option:
    key: str
    parse: Callable[[str], object]
    default: Optional[str] = None
    required: bool = False
    help: str = ""

    @property
    def flag(self) -> str:
        return "--" + self.key.replace("_", "-")


OPTIONS: Dict[str, List[Option]] = {
    "outage": [
        Option("relays", parse_int_list, required=True, help="relay counts N, comma-separated"),
        Option("rotations", parse_int_list, "2", help="rotation counts L"),
        Option("frame", parse_int, "64", help="frame length T in slots"),
        Option("block", parse_int_list, "1", help="block lengths B (each must divide T)"),
        Option("rate", parse_float_list, required=True, help="target rates R in bpcu"),
        Option("snr_db", parse_grid, required=True, help="SNR grid in dB, start:stop:step or list"),
        Option("trials", parse_int, required=True, help="Monte Carlo trials per grid point"),
        Option("seed", parse_int, required=True, help="run seed in [0, 2**64)"),
        Option("isolated", parse_bool_list, "false", help="relay connectivity; 'false,true' sweeps both"),
        Option("ordering", parse_choice(Ordering), Ordering.RANDOM.value, help="rotation ordering"),
        Option("combining", parse_choice(Combining), Combining.ROTATIONS.value, help="rotations or miso baseline"),
        Option("threads", parse_int, help="worker cap; never changes results"),
        Option("output", str, os.path.join(settings.results_dir, "outage.csv"), help="CSV path"),
    ],
    "dmt": [
        Option("relays", parse_int, "1", help="relay count of the optimal curve"),
        Option("frames", parse_int_list, "16,64,256", help="frame lengths of the lower-bound curves"),
        Option("grid", parse_grid, "0:1:0.01", help="multiplexing gains, start:stop:step or list"),
        Option("output", str, os.path.join(settings.results_dir, "dmt.csv"), help="CSV path"),
    ],
    "oracle": [
        Option("trials", parse_int, "1000000", help="trials of the SISO oracle"),
        Option("seed", parse_int, ORACLE_SEED, help="seed of the randomized oracles"),
        Option("threads", parse_int, help="worker cap; never changes results"),
        Option("output", str, help="also write the report to this path"),
    ],
    "bound": [
        Option("frame", parse_int, "64", help="frame length T in slots"),
        Option("rate", parse_float_list, required=True, help="target rates R in bpcu"),
        Option("snr_db", parse_grid, required=True, help="SNR grid in dB, start:stop:step or list"),
        Option("trials", parse_int, required=True, help="Monte Carlo trials per grid point"),
        Option("seed", parse_int, required=True, help="run seed in [0, 2**64)"),
        Option("threads", parse_int, help="worker cap; never changes results"),
        Option("output", str, os.path.join(settings.results_dir, "bound.csv"), help="CSV path"),
    ],
    "rate": [
        Option("bits", parse_int, "2", help="bits per symbol"),
        Option("relays", parse_int, "3", help="relay count N"),
        Option("blocks", parse_int_list, "1,4,8", help="block lengths B"),
        Option("output", str, help="also write the table to this path"),
    ],
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="python -m experiments.app",
        description=f"{settings.app_name}: outage sweeps, DMT curves and checks.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {settings.app_version}")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    helps = {
        "outage": "Monte Carlo outage probability over an SNR grid",
        "dmt": "closed-form diversity-multiplexing tradeoff curves",
        "oracle": "run the built-in oracle checks",
        "bound": "one relay, two rotations: paired-rotation outage next to its lower bound",
        "rate": "useful rate of block-mode signalling",
    }
    for name, options in OPTIONS.items():
        cmd = sub.add_parser(name, help=helps[name])
        # Unset flags stay absent so the config file can fill them.
        cmd.add_argument("--config", default=argparse.SUPPRESS, help="key=value file or a previous run manifest")
        for opt in options:
            default = f" (default: {opt.default})" if opt.default is not None else ""
            if opt.key == "isolated":
                cmd.add_argument(opt.flag, dest=opt.key, nargs="?", const="true", default=argparse.SUPPRESS,
                                 help=opt.help + default)
                cmd.add_argument("--connected", dest=opt.key, action="store_const", const="false",
                                 default=argparse.SUPPRESS, help="same as --isolated false")
            else:
                cmd.add_argument(opt.flag, dest=opt.key, default=argparse.SUPPRESS, help=opt.help + default)
    return parser


def resolve_options(subcommand: str, flags: Dict[str, str]) -> Dict[str, str]:
    """Merge defaults, the optional config file and flags; return raw string values."""
    options = {opt.key: opt for opt in OPTIONS[subcommand]}
    resolved = {key: opt.default for key, opt in options.items() if opt.default is not None}

    config_path = flags.pop("config", None)
    if config_path:
        from_file = read_key_values(config_path, subcommand)
        unknown = sorted(set(from_file) - set(options))
        if unknown:
            raise ConfigError(f"config file {config_path}: unknown key(s) for '{subcommand}': {', '.join(unknown)}")
        resolved.update(from_file)
    resolved.update(flags)

    missing = [options[key].flag for key in options if options[key].required and key not in resolved]
    if missing:
        raise ConfigError(f"missing required option(s): {', '.join(missing)}")
    return resolved


def parse_options(subcommand: str, raw: Dict[str, str]) -> Dict[str, object]:
    options = {opt.key: opt for opt in OPTIONS[subcommand]}
    values = {}
    for key, text in raw.items():
        try:
            values[key] = options[key].parse(text)
        except ConfigError as e:
            raise ConfigError(f"{options[key].flag}: {e}") from None
    return values


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def _validate_sweep(grid: SweepGrid, values: Dict[str, object]) -> None:
    """Reject every invalid combination before any trial runs."""
    check_seed(values["seed"])
    if values["trials"] < 1:
        raise ConfigError(f"--trials must be >= 1, got {values['trials']}")
    settings.resolve_threads(values.get("threads"))
    for rate, n_relays, n_rotations, block_len, isolated in grid.groups():
        cfg = ProtocolConfig.build(
            n_relays=n_relays, n_rotations=n_rotations, frame_len=values["frame"], block_len=block_len,
            rate=rate, snr_linear=snr_db_to_linear(grid.snr_db[0]), isolated=isolated,
            ordering=values["ordering"], combining=values["combining"],
        )
        # Exercises schedule limits such as the random-permutation period cap.
        draw_batch(cfg, values["seed"], 0, 1)


def cmd_outage(values: Dict[str, object]) -> List[str]:
    grid = SweepGrid.build(
        snr_db=values["snr_db"],
        rate=values["rate"],
        n_relays=values["relays"],
        n_rotations=values["rotations"],
        block_len=values["block"],
        isolated=values["isolated"],
    )
    _validate_sweep(grid, values)
    logger.info(f"Outage sweep: {grid.size()} grid points, {values['trials']} trials each")

    rows = run_sweep(
        grid,
        trials=values["trials"],
        seed=values["seed"],
        frame_len=values["frame"],
        ordering=values["ordering"],
        combining=values["combining"],
        threads=values.get("threads"),
    )
    errors = [row.error for row in rows if row.error]
    if errors:
        raise ConfigError(errors[0])
    return [write_csv(outage_table(rows), values["output"])]


def cmd_dmt(values: Dict[str, object]) -> List[str]:
    if values["relays"] < 1:
        raise ConfigError(f"--relays must be >= 1, got {values['relays']}")
    grid = values["grid"]
    for r in grid:
        if not 0.0 <= r <= 1.0:
            raise ConfigError(f"--grid: multiplexing gain {r} is outside [0, 1]")
    for frame_len in values["frames"]:
        if frame_len < 2:
            raise ConfigError(f"--frames: frame length must be >= 2, got {frame_len}")
    kinds = [DmtCurveKind.optimal(values["relays"])]
    kinds.extend(DmtCurveKind.lower_bound(t) for t in values["frames"])
    return [write_csv(dmt_table(kinds, grid), values["output"])]


def cmd_bound(values: Dict[str, object]) -> List[str]:
    check_seed(values["seed"])
    if values["trials"] < 1:
        raise ConfigError(f"--trials must be >= 1, got {values['trials']}")
    settings.resolve_threads(values.get("threads"))
    for rate in values["rate"]:
        ProtocolConfig.build(
            n_relays=1, n_rotations=2, frame_len=values["frame"], rate=rate,
            snr_linear=snr_db_to_linear(values["snr_db"][0]),
        )
    rows = run_bound_sweep(
        values["snr_db"], values["rate"], values["trials"], values["seed"],
        frame_len=values["frame"], threads=values.get("threads"),
    )
    return [write_csv(bound_table(rows, values["frame"]), values["output"])]


def _emit(text: str, output: Optional[str]) -> List[str]:
    sys.stdout.write(text)
    if not output:
        return []
    ensure_parent(output)
    with open(output, "w", encoding="utf-8", newline="") as f:
        f.write(text)
    return [output]


def cmd_rate(values: Dict[str, object]) -> List[str]:
    try:
        table = rate_table(values["bits"], values["relays"], values["blocks"])
    except ValueError as e:
        raise ConfigError(str(e)) from None
    return _emit(to_csv_text(table), values.get("output"))


def cmd_oracle(values: Dict[str, object]) -> Tuple[List[str], bool]:
    if values["trials"] < 1:
        raise ConfigError(f"--trials must be >= 1, got {values['trials']}")
    check_seed(values["seed"])
    results = run_oracles(values["trials"], values["seed"], values.get("threads"))
    outputs = _emit(format_report(results), values.get("output"))
    return outputs, all(r.passed for r in results)


def main(argv: Optional[Sequence[str]] = None) -> int:
    configure_logging(settings)
    args = vars(build_parser().parse_args(argv))
    subcommand = args.pop("subcommand")

    try:
        raw = resolve_options(subcommand, args)
        values = parse_options(subcommand, raw)
        manifest = RunManifest(subcommand=subcommand, options=raw)

        passed = True
        if subcommand == "outage":
            outputs = cmd_outage(values)
        elif subcommand == "dmt":
            outputs = cmd_dmt(values)
        elif subcommand == "bound":
            outputs = cmd_bound(values)
        elif subcommand == "rate":
            outputs = cmd_rate(values)
        else:
            outputs, passed = cmd_oracle(values)
    except (ConfigError, ValueError) as e:
        logger.error(f"{subcommand}: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE

    manifest.outputs = outputs
    manifest.finish()
    for path in outputs:
        manifest.write(path)

    if not passed:
        logger.error("One or more oracles failed")
        return EXIT_FAILED
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
