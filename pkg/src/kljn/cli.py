"""Command-line front end: analytic reports, sessions, sweeps, offsets.

Subcommands: ``analytic | simulate | sweep | beta``.  Flags mirror the
config-file keys one to one (file syntax: one ``key=value`` per line, ``#``
comments); precedence is flag > file > built-in default.  JSON goes to
stdout, CSV to stdout or the file named by a flag.  All numeric output uses
full round-trip precision with a ``.`` decimal separator.

Exit codes: 0 success, 1 runtime or I/O failure, 2 usage or validation
failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from typing import Dict, List, Optional, Sequence

from . import analytic
from .core import (
    Attack,
    Cable,
    ConfigError,
    DefenseMode,
    NoiseSpec,
    ResistorPair,
    SessionConfig,
    Units,
    hash64,
    validate_config,
)
from .protocol import run_session, summary_json, write_rounds_csv

DEFAULTS = {
    "rl": 1000.0,
    "rh": 10000.0,
    "rc": 100.0,
    "cable-temperature": 0.0,
    "teff": 1e9,
    "beta": 1.0,
    "bandwidth": 5000.0,
    "oversample": 1,
    "units": "normalized",
    "bits": 2000,
    "samples-per-bit": 10000,
    "defense": "none",
    "seed": 1,
    "jobs": 1,
    "attacks": "second-law,bsy",
}

_KEY_PARSERS = {
    "rl": float,
    "rh": float,
    "rc": float,
    "cable-temperature": float,
    "teff": float,
    "beta": float,
    "bandwidth": float,
    "oversample": int,
    "units": str,
    "bits": int,
    "samples-per-bit": int,
    "defense": str,
    "seed": int,
    "jobs": int,
    "attacks": str,
    "parameter": str,
    "values": str,
    "rounds-csv": str,
}

SWEEP_CSV_COLUMNS = (
    "value",
    "delta_ks",
    "delta_p",
    "msv_diff",
    "power_stat",
    "second_law_p_hat",
    "second_law_ci_low",
    "second_law_ci_high",
    "bsy_p_hat",
    "bsy_ci_low",
    "bsy_ci_high",
)

_ATTACK_BY_FLAG = {"second-law": Attack.SECOND_LAW, "bsy": Attack.BSY}


class _Exit2Parser(argparse.ArgumentParser):
    pass


def _add_physics_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key=value config file; flags override")
    p.add_argument("--rl", type=float, help="low resistor, ohms")
    p.add_argument("--rh", type=float, help="high resistor, ohms")
    p.add_argument("--rc", type=float, help="cable resistance, ohms")
    p.add_argument(
        "--cable-temperature", type=float, help="cable temperature, kelvin"
    )
    p.add_argument("--teff", type=float, help="effective noise temperature, K")
    p.add_argument(
        "--beta", type=float, help="low-side temperature offset multiplier"
    )
    p.add_argument("--bandwidth", type=float, help="noise bandwidth, Hz")
    p.add_argument("--oversample", type=int, help="sampling multiple (>= 1)")
    units = p.add_mutually_exclusive_group()
    units.add_argument(
        "--normalized",
        dest="units",
        action="store_const",
        const="normalized",
        help="normalized units: 4 k T_eff df = 1 (default)",
    )
    units.add_argument(
        "--si", dest="units", action="store_const", const="si",
        help="SI units",
    )


def _add_session_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--bits", type=int, help="bit periods per session")
    p.add_argument("--samples-per-bit", type=int, help="samples per bit")
    p.add_argument(
        "--defense",
        choices=[m.value for m in DefenseMode],
        help="defense mode",
    )
    p.add_argument("--seed", type=int, help="session seed (64-bit)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Exit2Parser(prog="kljn")
    sub = parser.add_subparsers(dest="command", required=True)

    p_an = sub.add_parser("analytic", help="closed-form report as JSON")
    _add_physics_flags(p_an)

    p_sim = sub.add_parser("simulate", help="run one session, JSON summary")
    _add_physics_flags(p_sim)
    _add_session_flags(p_sim)
    p_sim.add_argument("--rounds-csv", help="write per-round CSV to PATH")

    p_sw = sub.add_parser("sweep", help="parameter sweep, CSV to stdout")
    _add_physics_flags(p_sw)
    _add_session_flags(p_sw)
    p_sw.add_argument(
        "--parameter",
        required=True,
        choices=["rc", "beta", "samples-per-bit", "bandwidth"],
        help="which parameter to sweep",
    )
    p_sw.add_argument(
        "--values", required=True, help="comma-separated increasing values"
    )
    p_sw.add_argument(
        "--attacks", help="comma subset of: second-law,bsy (default both)"
    )
    p_sw.add_argument("--jobs", type=int, help="concurrent sweep points")

    p_b = sub.add_parser("beta", help="print both temperature offsets")
    _add_physics_flags(p_b)
    return parser


def read_config_file(path: str) -> Dict[str, str]:
    values: Dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(
                    [f"{path}:{lineno}: expected key=value, got {line!r}"]
                )
            key, _, value = line.partition("=")
            key = key.strip()
            if key not in _KEY_PARSERS:
                raise ConfigError([f"{path}:{lineno}: unknown key {key!r}"])
            values[key] = value.strip()
    return values


def _resolve(args: argparse.Namespace, file_values: Dict[str, str], key: str):
    attr = key.replace("-", "_")
    flag = getattr(args, attr, None)
    if flag is not None:
        return flag
    if key in file_values:
        try:
            return _KEY_PARSERS[key](file_values[key])
        except ValueError as exc:
            raise ConfigError([f"config key {key}: {exc}"]) from exc
    return DEFAULTS.get(key)


def _build_parts(args, file_values):
    units = _resolve(args, file_values, "units")
    if units not in ("normalized", "si"):
        raise ConfigError([f"units must be normalized or si (got {units!r})"])
    pair = ResistorPair(
        r_low=_resolve(args, file_values, "rl"),
        r_high=_resolve(args, file_values, "rh"),
    )
    cable = Cable(
        r_c=_resolve(args, file_values, "rc"),
        temperature=_resolve(args, file_values, "cable-temperature"),
    )
    noise = NoiseSpec(
        t_eff=_resolve(args, file_values, "teff"),
        beta=_resolve(args, file_values, "beta"),
        bandwidth=_resolve(args, file_values, "bandwidth"),
        oversample=_resolve(args, file_values, "oversample"),
        units=Units.NORMALIZED if units == "normalized" else Units.SI,
    )
    return pair, cable, noise


def _build_session_config(args, file_values) -> SessionConfig:
    pair, cable, noise = _build_parts(args, file_values)
    cfg = SessionConfig(
        pair=pair,
        cable=cable,
        noise=noise,
        bits=_resolve(args, file_values, "bits"),
        samples_per_bit=_resolve(args, file_values, "samples-per-bit"),
        defense=DefenseMode(_resolve(args, file_values, "defense")),
        seed=_resolve(args, file_values, "seed"),
    )
    return validate_config(cfg)


def cmd_analytic(args, file_values) -> int:
    pair, cable, noise = _build_parts(args, file_values)
    problems = pair.violations() + cable.violations() + noise.violations()
    if problems:
        raise ConfigError(problems)
    report = analytic.build_report(pair, cable, noise)
    print(json.dumps(report.as_dict(), indent=2))
    for line in analytic.discrepancies(report):
        print(line, file=sys.stderr)
    return 0


def cmd_beta(args, file_values) -> int:
    pair, cable, noise = _build_parts(args, file_values)
    problems = pair.violations() + cable.violations()
    if problems:
        raise ConfigError(problems)
    print(f"beta_paper = {analytic.beta_paper(pair, cable.r_c)!r}")
    print(f"beta_null = {analytic.beta_null(pair, cable.r_c)!r}")
    return 0


def cmd_simulate(args, file_values) -> int:
    cfg = _build_session_config(args, file_values)
    result = run_session(cfg)
    print(summary_json(cfg, result))
    rounds_csv = _resolve(args, file_values, "rounds-csv")
    if rounds_csv:
        with open(rounds_csv, "w", encoding="utf-8") as fh:
            write_rounds_csv(fh, result)
    return 0


def _substitute(cfg: SessionConfig, parameter: str, value: float) -> SessionConfig:
    if parameter == "rc":
        return replace(cfg, cable=replace(cfg.cable, r_c=value))
    if parameter == "beta":
        return replace(cfg, noise=replace(cfg.noise, beta=value))
    if parameter == "samples-per-bit":
        return replace(cfg, samples_per_bit=int(value))
    if parameter == "bandwidth":
        return replace(cfg, noise=replace(cfg.noise, bandwidth=value))
    raise ConfigError([f"unknown sweep parameter {parameter!r}"])


def _sweep_point(payload) -> List[str]:
    cfg, attacks, value = payload
    result = run_session(cfg)

    # Orient per-round statistics so the expected sign is that of the H-at-
    # end-A arrangement, then average over secure rounds.
    oriented = {Attack.SECOND_LAW: [], Attack.BSY: []}
    by_index = {r.index: r for r in result.rounds}
    for attack, recs in result.attack_records.items():
        for rec in recs:
            rnd = by_index[rec.round_index]
            sign = 1.0 if rnd.alice_choice.value == "H" else -1.0
            oriented[attack].append(sign * rec.statistic)

    noise = cfg.noise
    t_h = noise.t_eff
    t_l = noise.beta * noise.t_eff
    row = [
        repr(value),
        repr(analytic.delta_ks(cfg.pair, cfg.cable.r_c, noise)),
        repr(analytic.delta_p(cfg.pair, cfg.cable.r_c, t_h, t_l, noise)),
        repr(_mean(oriented[Attack.BSY])),
        repr(_mean(oriented[Attack.SECOND_LAW])),
    ]
    for attack in (Attack.SECOND_LAW, Attack.BSY):
        est = result.attack_estimates.get(attack)
        if attack in attacks and est is not None:
            row.extend([repr(est.p_hat), repr(est.ci_low), repr(est.ci_high)])
        else:
            row.extend(["", "", ""])
    return row


def _mean(values) -> float:
    return sum(values) / len(values) if values else float("nan")


def cmd_sweep(args, file_values) -> int:
    base = _build_session_config(args, file_values)
    parameter = args.parameter
    raw_values = [v for v in (args.values or "").split(",") if v.strip()]
    if not raw_values:
        raise ConfigError(["sweep requires a non-empty --values list"])
    try:
        values = [float(v) for v in raw_values]
    except ValueError as exc:
        raise ConfigError([f"--values: {exc}"]) from exc
    if any(b <= a for a, b in zip(values, values[1:])):
        raise ConfigError(["--values must be strictly increasing"])

    attack_flags = _resolve(args, file_values, "attacks").split(",")
    try:
        attacks = {_ATTACK_BY_FLAG[a.strip()] for a in attack_flags if a.strip()}
    except KeyError as exc:
        raise ConfigError([f"unknown attack {exc.args[0]!r}"]) from exc
    if not attacks:
        raise ConfigError(["--attacks must name at least one attack"])

    jobs = _resolve(args, file_values, "jobs")
    if not isinstance(jobs, int) or jobs < 1:
        raise ConfigError([f"jobs >= 1 violated (got {jobs})"])

    points = []
    for k, value in enumerate(values):
        cfg = _substitute(base, parameter, value)
        cfg = replace(cfg, seed=hash64(base.seed, k))
        points.append((validate_config(cfg), attacks, value))

    if jobs == 1:
        rows = [_sweep_point(p) for p in points]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_sweep_point, points))

    print(",".join(SWEEP_CSV_COLUMNS))
    for row in rows:
        print(",".join(row))
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    try:
        file_values = read_config_file(args.config) if args.config else {}
        if args.command == "analytic":
            return cmd_analytic(args, file_values)
        if args.command == "simulate":
            return cmd_simulate(args, file_values)
        if args.command == "sweep":
            return cmd_sweep(args, file_values)
        if args.command == "beta":
            return cmd_beta(args, file_values)
        parser.error(f"unknown command {args.command!r}")
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
