"""Batch experiment runner.

Parses a strict JSON config (``.cfg``), dispatches to the simulation or
metric calculators, and emits CSV data files plus a JSON sidecar echoing the
fully resolved configuration.  Unknown keys anywhere in a config are
rejected before any computation starts, and CSV bodies are byte-identical
across reruns with equal seeds (timestamps live only in the sidecar).

Exit codes: 0 success, 2 configuration error, 3 runtime error.
"""

from __future__ import annotations

import argparse
import datetime
import json
import os
import sys
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from . import __version__
from .channel import ChannelConfig, kmh_to_mps
from .errors import ConfigError, DdmodlabError
from .grid import DdGridConfig, Rng
from .metrics import (
    energy_saving_pct,
    ml_complexity_rms,
    scheme_ergodic_capacity,
    throughput,
)
from .schemes import (
    Cim,
    Mbm,
    Otfs,
    Qsm,
    SchemeSpec,
    Sm,
    Ssk,
    bits_per_frame,
    scheme_label,
)
from .sim import SweepConfig, run_ber_sweep

EXPERIMENTS = (
    "ber",
    "se_table",
    "energy_table",
    "complexity",
    "capacity",
    "throughput",
)

_BER_HEADER = "snr_db,ber,bits_sent,bit_errors,frames"
_SE_HEADER = "scheme,case,N,M,M_Q,n_T,n_RF,n_C,se_bits"
_ENERGY_HEADER = "scheme,case,saving_pct"
_COMPLEXITY_HEADER = "scheme,case,rms"
_CAPACITY_HEADER = "scheme,snr_db,capacity_bits_s_hz,stderr,trials"
_THROUGHPUT_HEADER = "scheme,snr_db,ber,se_bits,tx_duration_s,throughput_bps"


# ---------------------------------------------------------------------------
# strict config parsing
# ---------------------------------------------------------------------------

def _check_keys(obj, where: str, required: set[str], optional: set[str] = frozenset()):
    if not isinstance(obj, dict):
        raise ConfigError(f"{where}: expected an object")
    unknown = set(obj) - required - set(optional)
    if unknown:
        raise ConfigError(f"{where}: unknown key(s) {sorted(unknown)}")
    missing = required - set(obj)
    if missing:
        raise ConfigError(f"{where}: missing key(s) {sorted(missing)}")


def _as_int(obj, where: str) -> int:
    if isinstance(obj, bool) or not isinstance(obj, int):
        raise ConfigError(f"{where}: expected an integer, got {obj!r}")
    return obj


def _as_number(obj, where: str) -> float:
    if isinstance(obj, bool) or not isinstance(obj, (int, float)):
        raise ConfigError(f"{where}: expected a number, got {obj!r}")
    return float(obj)


def _as_str(obj, where: str) -> str:
    if not isinstance(obj, str):
        raise ConfigError(f"{where}: expected a string, got {obj!r}")
    return obj


_SCHEME_FIELDS = {
    "otfs": (Otfs, {"mod_order"}),
    "ssk": (Ssk, {"n_antennas"}),
    "sm": (Sm, {"n_antennas", "mod_order"}),
    "qsm": (Qsm, {"n_antennas", "mod_order"}),
    "mbm": (Mbm, {"n_mirrors", "mod_order"}),
    "cim": (Cim, {"n_codes", "code_length", "mod_order"}),
}


def parse_scheme(obj, where: str = "scheme") -> SchemeSpec:
    if not isinstance(obj, dict) or "kind" not in obj:
        raise ConfigError(f"{where}: expected an object with a 'kind' key")
    kind = _as_str(obj["kind"], f"{where}.kind").lower()
    if kind not in _SCHEME_FIELDS:
        raise ConfigError(f"{where}.kind: unknown scheme {kind!r}")
    cls, fields = _SCHEME_FIELDS[kind]
    _check_keys(obj, where, {"kind"} | fields)
    params = {f: _as_int(obj[f], f"{where}.{f}") for f in fields}
    try:
        return cls(**params)
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def parse_grid(obj, where: str = "grid") -> DdGridConfig:
    _check_keys(
        obj,
        where,
        {"n_doppler", "m_delay"},
        {"subcarrier_spacing_hz", "carrier_frequency_hz"},
    )
    try:
        return DdGridConfig(
            n_doppler=_as_int(obj["n_doppler"], f"{where}.n_doppler"),
            m_delay=_as_int(obj["m_delay"], f"{where}.m_delay"),
            subcarrier_spacing_hz=_as_number(
                obj.get("subcarrier_spacing_hz", 15e3), f"{where}.subcarrier_spacing_hz"
            ),
            carrier_frequency_hz=_as_number(
                obj.get("carrier_frequency_hz", 4e9), f"{where}.carrier_frequency_hz"
            ),
        )
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def parse_channel(obj, where: str = "channel") -> ChannelConfig:
    _check_keys(
        obj,
        where,
        set(),
        {"num_paths", "max_speed_kmh", "doppler_mode", "max_doppler_tap"},
    )
    tap = obj.get("max_doppler_tap")
    if tap is not None:
        tap = _as_int(tap, f"{where}.max_doppler_tap")
    try:
        return ChannelConfig(
            num_paths=_as_int(obj.get("num_paths", 6), f"{where}.num_paths"),
            max_speed_mps=kmh_to_mps(
                _as_number(obj.get("max_speed_kmh", 506.2), f"{where}.max_speed_kmh")
            ),
            doppler_mode=_as_str(
                obj.get("doppler_mode", "jakes_rounded"), f"{where}.doppler_mode"
            ),
            max_doppler_tap=tap,
        )
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def parse_sweep(obj, where: str = "sweep") -> SweepConfig:
    _check_keys(
        obj,
        where,
        {"snr_points_db"},
        {"max_frames", "min_bit_errors", "seed", "detector", "sic_sweeps", "batch_frames"},
    )
    points = obj["snr_points_db"]
    if not isinstance(points, list) or not points:
        raise ConfigError(f"{where}.snr_points_db: expected a non-empty list")
    try:
        return SweepConfig(
            snr_points_db=tuple(
                _as_number(p, f"{where}.snr_points_db[{i}]") for i, p in enumerate(points)
            ),
            max_frames=_as_int(obj.get("max_frames", 100_000), f"{where}.max_frames"),
            min_bit_errors=_as_int(
                obj.get("min_bit_errors", 200), f"{where}.min_bit_errors"
            ),
            seed=_as_int(obj.get("seed", 0), f"{where}.seed"),
            detector=_as_str(obj.get("detector", "per_grid_ml"), f"{where}.detector"),
            sic_sweeps=_as_int(obj.get("sic_sweeps", 1), f"{where}.sic_sweeps"),
            batch_frames=_as_int(obj.get("batch_frames", 32), f"{where}.batch_frames"),
        )
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from exc


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated experiment: kind plus the fully parsed blocks."""

    kind: str
    output_stem: str
    payload: dict
    raw: dict


def parse_config(raw: dict, default_stem: str) -> ExperimentConfig:
    """Validate a parsed JSON document into an ExperimentConfig.

    Raises :class:`ConfigError` on any unknown key or out-of-range value;
    nothing is computed or written until validation has passed.
    """
    if not isinstance(raw, dict):
        raise ConfigError("top level: expected a JSON object")
    kind = raw.get("experiment")
    if kind not in EXPERIMENTS:
        raise ConfigError(
            f"experiment: expected one of {EXPERIMENTS}, got {kind!r}"
        )
    stem = raw.get("output_stem", default_stem)
    stem = _as_str(stem, "output_stem")

    if kind in ("ber", "throughput"):
        _check_keys(
            raw, "top level",
            {"experiment", "grid", "channel", "sweep", "runs"}, {"output_stem"},
        )
        grid = parse_grid(raw["grid"])
        channel = parse_channel(raw["channel"])
        sweep = parse_sweep(raw["sweep"])
        runs = raw["runs"]
        if not isinstance(runs, list) or not runs:
            raise ConfigError("runs: expected a non-empty list")
        parsed_runs = []
        labels = set()
        for i, run in enumerate(runs):
            where = f"runs[{i}]"
            _check_keys(run, where, {"label", "scheme", "n_rx"})
            label = _as_str(run["label"], f"{where}.label")
            if label in labels:
                raise ConfigError(f"{where}.label: duplicate label {label!r}")
            labels.add(label)
            n_rx = _as_int(run["n_rx"], f"{where}.n_rx")
            if n_rx < 1:
                raise ConfigError(f"{where}.n_rx: must be positive")
            parsed_runs.append(
                {"label": label, "scheme": parse_scheme(run["scheme"], f"{where}.scheme"),
                 "n_rx": n_rx}
            )
        payload = {"grid": grid, "channel": channel, "sweep": sweep, "runs": parsed_runs}

    elif kind in ("se_table", "energy_table", "complexity"):
        _check_keys(raw, "top level", {"experiment", "rows"}, {"output_stem"})
        rows = raw["rows"]
        if not isinstance(rows, list) or not rows:
            raise ConfigError("rows: expected a non-empty list")
        row_keys = {"scheme", "case", "grid"}
        if kind == "energy_table":
            row_keys = row_keys | {"baseline_mod_order"}
        if kind == "complexity":
            row_keys = row_keys | {"n_rx"}
        parsed_rows = []
        for i, row in enumerate(rows):
            where = f"rows[{i}]"
            _check_keys(row, where, row_keys)
            parsed = {
                "scheme": parse_scheme(row["scheme"], f"{where}.scheme"),
                "case": _as_str(row["case"], f"{where}.case"),
                "grid": parse_grid(row["grid"], f"{where}.grid"),
            }
            if kind == "energy_table":
                parsed["baseline_mod_order"] = _as_int(
                    row["baseline_mod_order"], f"{where}.baseline_mod_order"
                )
            if kind == "complexity":
                parsed["n_rx"] = _as_int(row["n_rx"], f"{where}.n_rx")
            parsed_rows.append(parsed)
        payload = {"rows": parsed_rows}

    else:  # capacity
        _check_keys(
            raw, "top level",
            {"experiment", "snr_points_db", "n_rx", "trials", "schemes"},
            {"output_stem", "seed"},
        )
        points = raw["snr_points_db"]
        if not isinstance(points, list) or not points:
            raise ConfigError("snr_points_db: expected a non-empty list")
        schemes = raw["schemes"]
        if not isinstance(schemes, list) or not schemes:
            raise ConfigError("schemes: expected a non-empty list")
        payload = {
            "snr_points_db": [
                _as_number(p, f"snr_points_db[{i}]") for i, p in enumerate(points)
            ],
            "n_rx": _as_int(raw["n_rx"], "n_rx"),
            "trials": _as_int(raw["trials"], "trials"),
            "seed": _as_int(raw.get("seed", 0), "seed"),
            "schemes": [
                parse_scheme(s, f"schemes[{i}]") for i, s in enumerate(schemes)
            ],
        }
        if payload["n_rx"] < 1 or payload["trials"] < 1:
            raise ConfigError("n_rx and trials must be positive")

    return ExperimentConfig(kind=kind, output_stem=stem, payload=payload, raw=raw)


def load_config(path: Path) -> ExperimentConfig:
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return parse_config(raw, default_stem=path.stem)


# ---------------------------------------------------------------------------
# table cell helpers
# ---------------------------------------------------------------------------

def _se_row_cells(spec: SchemeSpec, grid: DdGridConfig, case: str) -> list[str]:
    mod = "" if isinstance(spec, Ssk) else str(spec.mod_order)
    if isinstance(spec, (Ssk, Sm, Qsm)):
        n_t = str(spec.n_antennas)
    else:
        n_t = "1"
    n_rf = str(spec.n_mirrors) if isinstance(spec, Mbm) else ""
    n_c = str(spec.n_codes) if isinstance(spec, Cim) else ""
    return [
        scheme_label(spec), case,
        str(grid.n_doppler), str(grid.m_delay),
        mod, n_t, n_rf, n_c,
        str(bits_per_frame(spec, grid)),
    ]


def _fmt_snr(snr_db: float) -> str:
    return format(snr_db, "g")


# ---------------------------------------------------------------------------
# experiment execution
# ---------------------------------------------------------------------------

def run_experiment(
    config: ExperimentConfig,
    out_dir: Path,
    seed_override: int | None = None,
    n_workers: int = 1,
) -> list[Path]:
    """Execute a validated experiment and write its CSV/JSON outputs.

    Returns the list of written files (sidecar last).
    """
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = config.output_stem
    outputs: list[Path] = []
    sidecar: dict = {
        "experiment": config.kind,
        "version": __version__,
        "config": config.raw,
        "seed_override": seed_override,
        "threads": n_workers,
    }

    def write_csv(name: str, header: str, lines: list[str]) -> None:
        path = out_dir / name
        with open(path, "w", newline="\n") as fh:
            fh.write(header + "\n")
            for line in lines:
                fh.write(line + "\n")
        outputs.append(path)

    if config.kind == "ber":
        grid = config.payload["grid"]
        channel = config.payload["channel"]
        sweep = config.payload["sweep"]
        if seed_override is not None:
            sweep = SweepConfig(
                snr_points_db=sweep.snr_points_db,
                max_frames=sweep.max_frames,
                min_bit_errors=sweep.min_bit_errors,
                seed=seed_override,
                detector=sweep.detector,
                sic_sweeps=sweep.sic_sweeps,
                batch_frames=sweep.batch_frames,
            )
        curves = {}
        for run in config.payload["runs"]:
            curve = run_ber_sweep(
                run["scheme"], channel, grid, run["n_rx"], sweep, n_workers=n_workers
            )
            curves[run["label"]] = curve
            lines = [
                f"{_fmt_snr(p.snr_db)},{p.ber!r},{p.bits_sent},{p.bit_errors},{p.frames}"
                for p in curve.points
            ]
            write_csv(f"{stem}_{run['label']}.csv", _BER_HEADER, lines)
        sidecar["curves"] = {label: c.to_dict() for label, c in curves.items()}

    elif config.kind == "se_table":
        lines = [
            ",".join(_se_row_cells(row["scheme"], row["grid"], row["case"]))
            for row in config.payload["rows"]
        ]
        write_csv(f"{stem}.csv", _SE_HEADER, lines)

    elif config.kind == "energy_table":
        lines = []
        for row in config.payload["rows"]:
            baseline = Otfs(mod_order=row["baseline_mod_order"])
            pct = energy_saving_pct(row["scheme"], baseline, row["grid"])
            lines.append(f"{scheme_label(row['scheme'])},{row['case']},{pct:.2f}")
        write_csv(f"{stem}.csv", _ENERGY_HEADER, lines)

    elif config.kind == "complexity":
        lines = [
            f"{scheme_label(row['scheme'])},{row['case']},"
            f"{ml_complexity_rms(row['scheme'], row['n_rx'], row['grid'])}"
            for row in config.payload["rows"]
        ]
        write_csv(f"{stem}.csv", _COMPLEXITY_HEADER, lines)

    elif config.kind == "capacity":
        seed = seed_override if seed_override is not None else config.payload["seed"]
        rng = Rng(seed)
        lines = []
        for lane, spec in enumerate(config.payload["schemes"]):
            for point_idx, snr_db in enumerate(config.payload["snr_points_db"]):
                rho = 10.0 ** (snr_db / 10.0)
                est = scheme_ergodic_capacity(
                    spec,
                    config.payload["n_rx"],
                    rho,
                    config.payload["trials"],
                    rng.generator(counter=point_idx, lane=lane),
                )
                lines.append(
                    f"{scheme_label(spec)},{_fmt_snr(snr_db)},"
                    f"{est.bits_per_s_hz!r},{est.stderr!r},{est.trials}"
                )
        write_csv(f"{stem}.csv", _CAPACITY_HEADER, lines)
        sidecar["seed"] = seed

    else:  # throughput
        grid = config.payload["grid"]
        channel = config.payload["channel"]
        sweep = config.payload["sweep"]
        if seed_override is not None:
            sweep = SweepConfig(
                snr_points_db=sweep.snr_points_db,
                max_frames=sweep.max_frames,
                min_bit_errors=sweep.min_bit_errors,
                seed=seed_override,
                detector=sweep.detector,
                sic_sweeps=sweep.sic_sweeps,
                batch_frames=sweep.batch_frames,
            )
        lines = []
        curves = {}
        for run in config.payload["runs"]:
            spec = run["scheme"]
            curve = run_ber_sweep(
                spec, channel, grid, run["n_rx"], sweep, n_workers=n_workers
            )
            curves[run["label"]] = curve
            se = bits_per_frame(spec, grid)
            duration = grid.frame_duration_s
            for p in curve.points:
                tput = throughput(p.ber, se, duration)
                lines.append(
                    f"{scheme_label(spec)},{_fmt_snr(p.snr_db)},{p.ber!r},"
                    f"{se},{duration!r},{tput!r}"
                )
        write_csv(f"{stem}.csv", _THROUGHPUT_HEADER, lines)
        sidecar["curves"] = {label: c.to_dict() for label, c in curves.items()}

    sidecar["outputs"] = [p.name for p in outputs]
    sidecar["generated_at"] = datetime.datetime.now(datetime.timezone.utc).isoformat()
    sidecar_path = out_dir / f"{stem}.json"
    with open(sidecar_path, "w", newline="\n") as fh:
        json.dump(sidecar, fh, indent=2, sort_keys=True, default=repr)
        fh.write("\n")
    outputs.append(sidecar_path)
    return outputs


# ---------------------------------------------------------------------------
# presets and entry point
# ---------------------------------------------------------------------------

def preset_names() -> list[str]:
    root = resources.files("ddmodlab") / "presets"
    return sorted(p.name for p in root.iterdir() if p.name.endswith(".cfg"))


def resolve_config_path(arg: str) -> Path:
    """A filesystem path, or the name of a bundled preset."""
    path = Path(arg)
    if path.exists():
        return path
    name = arg if arg.endswith(".cfg") else f"{arg}.cfg"
    root = resources.files("ddmodlab") / "presets"
    candidate = root / name
    if candidate.is_file():
        return Path(str(candidate))
    raise ConfigError(f"no such config file or preset: {arg}")


def _thread_count(args_threads: int | None) -> int:
    if args_threads is not None:
        return max(1, args_threads)
    env = os.environ.get("DDMODLAB_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise ConfigError(f"DDMODLAB_THREADS is not an integer: {env!r}") from exc
    return 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ddmodlab",
        description="Delay-Doppler modulation experiment runner",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="execute an experiment config")
    run_p.add_argument("config", help="config file path or bundled preset name")
    run_p.add_argument("--seed", type=int, default=None, help="override the config seed")
    run_p.add_argument("--out", default=".", help="output directory")
    run_p.add_argument(
        "--threads", type=int, default=None,
        help="worker threads (DDMODLAB_THREADS as fallback; results are thread-count independent)",
    )

    sub.add_parser("list-presets", help="list bundled experiment presets")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)

    if args.command == "list-presets":
        for name in preset_names():
            print(name)
        return 0

    try:
        threads = _thread_count(args.threads)
        config = load_config(resolve_config_path(args.config))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    try:
        outputs = run_experiment(
            config, Path(args.out), seed_override=args.seed, n_workers=threads
        )
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (DdmodlabError, OSError, ValueError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 3

    for path in outputs:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
