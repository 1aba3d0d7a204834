"""Command line front end.

Subcommands:
  run       execute an experiment described by a JSON config
  figure    execute a named preset (fig3a, fig3b, fig4a-fig4d, fig5)
  validate  check a JSON config without running it

Exit codes: 0 success, 1 configuration problem, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from dataclasses import replace

import jsonschema

from . import __version__
from .channel import ClusterSpec, ScenarioConfig, validate_config
from .errors import ConfigError, NumericalError
from .montecarlo import (
    Baselines,
    ExperimentSpec,
    ResultTable,
    preset,
    run_experiment,
    validate_spec,
)

CSV_COLUMNS = (
    "scenario_id",
    "sweep_name",
    "sweep_value",
    "cluster",
    "user",
    "rate_exact",
    "rate_lb_thm1",
    "rate_lb_thm2",
    "rate_gap",
    "gap_ub_thm3",
    "rho_mean",
    "stderr",
    "trials",
)

FIG5_COLUMNS = ("snr_db", "system", "sum_rate_bps_hz")

_CLUSTER_SCHEMA = {
    "type": "object",
    "required": ["aod_deg", "gains_db"],
    "additionalProperties": False,
    "properties": {
        "aod_deg": {"type": "number"},
        "gains_db": {"type": "array", "items": {"type": "number"}, "minItems": 1},
    },
}

_SCENARIO_SCHEMA = {
    "type": "object",
    "required": ["clusters"],
    "additionalProperties": False,
    "properties": {
        "clusters": {"type": "array", "items": _CLUSTER_SCHEMA, "minItems": 1},
        "n_bs": {"type": "integer", "minimum": 1},
        "n_ue": {"type": "integer", "minimum": 1},
        "n_rf": {"type": ["integer", "null"], "minimum": 1},
        "spacing_over_wavelength": {"type": "number", "exclusiveMinimum": 0},
        "misalign_deg": {"type": "number", "minimum": 0},
        "snr_db": {"type": "number"},
        "noise_var": {"type": "number", "exclusiveMinimum": 0},
    },
}

CONFIG_SCHEMA = {
    "type": "object",
    "required": ["scenario"],
    "additionalProperties": False,
    "properties": {
        "scenario": _SCENARIO_SCHEMA,
        "scenario_id": {"type": "string", "minLength": 1},
        "sweep": {
            "type": "object",
            "required": ["name", "values"],
            "additionalProperties": False,
            "properties": {
                "name": {"enum": ["snr_db", "n_bs", "cluster_size"]},
                "values": {"type": "array", "items": {"type": "number"}, "minItems": 1},
            },
        },
        "trials": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer", "minimum": 0},
        "observe_cluster": {"type": ["integer", "null"], "minimum": 1},
        "misalign_grid": {
            "type": ["array", "null"],
            "items": {"type": "number", "minimum": 0},
            "minItems": 1,
        },
        "baselines": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "hb_exact": {"type": "boolean"},
                "hb_lb": {"type": "boolean"},
                "fd": {"type": "boolean"},
                "oma": {"type": "boolean"},
                "model_channels": {"type": "boolean"},
            },
        },
        "leak_weighted": {"type": "boolean"},
    },
}


def _schema_check(doc) -> None:
    validator = jsonschema.Draft202012Validator(CONFIG_SCHEMA)
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        loc = ".".join(str(p) for p in err.absolute_path) or "<root>"
        raise ConfigError(f"config field '{loc}': {err.message}")


def config_to_spec(doc: dict) -> ExperimentSpec:
    """Build a validated experiment spec from a parsed JSON config."""
    _schema_check(doc)
    sc = doc["scenario"]
    clusters = tuple(
        ClusterSpec(
            aod_deg=float(c["aod_deg"]),
            gains_db=tuple(float(g) for g in c["gains_db"]),
        )
        for c in sc["clusters"]
    )
    scen_kw = {
        k: sc[k]
        for k in (
            "n_bs",
            "n_ue",
            "n_rf",
            "spacing_over_wavelength",
            "misalign_deg",
            "snr_db",
            "noise_var",
        )
        if k in sc
    }
    scenario = ScenarioConfig(clusters=clusters, **scen_kw)
    validate_config(scenario)

    kw = {}
    if "sweep" in doc:
        kw["sweep_name"] = doc["sweep"]["name"]
        kw["sweep_values"] = tuple(doc["sweep"]["values"])
    for key in ("trials", "seed", "observe_cluster", "scenario_id", "leak_weighted"):
        if key in doc:
            kw[key] = doc[key]
    if doc.get("misalign_grid") is not None:
        kw["misalign_grid"] = tuple(doc["misalign_grid"])
    if "baselines" in doc:
        kw["baselines"] = Baselines(**doc["baselines"])
    spec = ExperimentSpec(scenario=scenario, **kw)
    validate_spec(spec)
    if spec.observe_cluster is not None and not (
        1 <= spec.observe_cluster <= len(scenario.clusters)
    ):
        raise ConfigError(
            f"observe_cluster={spec.observe_cluster} outside 1..{len(scenario.clusters)}"
        )
    return spec


def spec_to_config(spec: ExperimentSpec) -> dict:
    """Full JSON form of a spec; config_to_spec(spec_to_config(s)) == s."""
    sc = spec.scenario
    return {
        "scenario_id": spec.scenario_id,
        "scenario": {
            "clusters": [
                {"aod_deg": c.aod_deg, "gains_db": list(c.gains_db)} for c in sc.clusters
            ],
            "n_bs": sc.n_bs,
            "n_ue": sc.n_ue,
            "n_rf": sc.n_rf,
            "spacing_over_wavelength": sc.spacing_over_wavelength,
            "misalign_deg": sc.misalign_deg,
            "snr_db": sc.snr_db,
            "noise_var": sc.noise_var,
        },
        "sweep": {"name": spec.sweep_name, "values": list(spec.sweep_values)},
        "trials": spec.trials,
        "seed": spec.seed,
        "observe_cluster": spec.observe_cluster,
        "misalign_grid": list(spec.misalign_grid) if spec.misalign_grid is not None else None,
        "baselines": {
            "hb_exact": spec.baselines.hb_exact,
            "hb_lb": spec.baselines.hb_lb,
            "fd": spec.baselines.fd,
            "oma": spec.baselines.oma,
            "model_channels": spec.baselines.model_channels,
        },
        "leak_weighted": spec.leak_weighted,
    }


def load_config(path: str) -> ExperimentSpec:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"{path} is not valid JSON (line {exc.lineno}, column {exc.colno}): {exc.msg}"
        ) from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: top-level JSON value must be an object")
    return config_to_spec(doc)


def _fmt(value) -> str:
    return "" if value is None else repr(float(value))


def write_table_csv(table: ResultTable, path: str) -> None:
    sid = table.spec.scenario_id
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for row in table.rows:
            writer.writerow(
                (
                    sid if row.system == "hb" else f"{sid}:{row.system}",
                    table.spec.sweep_name,
                    _fmt(row.sweep_value),
                    str(row.cluster),
                    str(row.user),
                    _fmt(row.rate_exact),
                    _fmt(row.rate_lb_thm1),
                    _fmt(row.rate_lb_thm2),
                    _fmt(row.rate_gap),
                    _fmt(row.gap_ub_thm3),
                    _fmt(row.rho_mean),
                    _fmt(row.stderr),
                    str(row.trials),
                )
            )


def sum_rates(table: ResultTable) -> dict[tuple[str, float], float]:
    """Per (system, sweep value) sum rate; the OMA reference is frame averaged."""
    totals: dict[tuple[str, float], float] = {}
    counts: dict[tuple[str, float], int] = {}
    for row in table.rows:
        key = (row.system, row.sweep_value)
        totals[key] = totals.get(key, 0.0) + row.rate_exact
        counts[key] = counts.get(key, 0) + 1
    return {
        key: total / counts[key] if key[0] == "oma" else total
        for key, total in totals.items()
    }


def write_sum_rate_csv(table: ResultTable, path: str) -> None:
    totals = sum_rates(table)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(FIG5_COLUMNS)
        for system in table.systems:
            for value in table.spec.sweep_values:
                if (system, value) in totals:
                    writer.writerow((_fmt(value), system, _fmt(totals[(system, value)])))


def write_manifest(table: ResultTable, out_path: str, command: str, workers: int, elapsed: float) -> None:
    manifest = {
        "command": command,
        "version": __version__,
        "workers": workers,
        "elapsed_s": round(elapsed, 3),
        "systems": list(table.systems),
        "cells": [
            {
                "system": system,
                "sweep_value": value,
                "trials": trials,
                "excluded": table.excluded.get((system, value), 0),
            }
            for (system, value), trials in sorted(table.cell_trials.items())
        ],
        "config": spec_to_config(table.spec),
    }
    with open(out_path + ".manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")


def _apply_overrides(spec: ExperimentSpec, args) -> ExperimentSpec:
    if args.trials is not None:
        spec = replace(spec, trials=args.trials)
    if args.seed is not None:
        spec = replace(spec, seed=args.seed)
    return spec


def _cmd_run(args) -> int:
    spec = _apply_overrides(load_config(args.config), args)
    t0 = time.perf_counter()
    table = run_experiment(spec, workers=args.workers)
    write_table_csv(table, args.out)
    write_manifest(table, args.out, "run", args.workers, time.perf_counter() - t0)
    print(f"wrote {len(table.rows)} rows to {args.out}")
    return 0


def _cmd_figure(args) -> int:
    spec = _apply_overrides(preset(args.name), args)
    if args.dump_config is not None:
        with open(args.dump_config, "w", encoding="utf-8") as fh:
            json.dump(spec_to_config(spec), fh, indent=2)
            fh.write("\n")
        print(f"wrote config for {args.name} to {args.dump_config}")
        if args.out is None:
            return 0
    if args.out is None:
        raise ConfigError("figure needs --out (or --dump-config to only export the config)")
    t0 = time.perf_counter()
    table = run_experiment(spec, workers=args.workers)
    if args.name == "fig5":
        write_sum_rate_csv(table, args.out)
    else:
        write_table_csv(table, args.out)
    write_manifest(table, args.out, f"figure {args.name}", args.workers, time.perf_counter() - t0)
    print(f"wrote {args.out}")
    return 0


def _cmd_validate(args) -> int:
    spec = load_config(args.config)
    clusters = len(spec.scenario.clusters)
    users = sum(len(c.gains_db) for c in spec.scenario.clusters)
    print(
        f"{args.config}: ok ({spec.scenario_id}, {clusters} clusters, {users} users, "
        f"sweep {spec.sweep_name} x{len(spec.sweep_values)})"
    )
    return 0


class _Parser(argparse.ArgumentParser):
    # usage mistakes are config errors: exit 1, not argparse's default 2
    def error(self, message):
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hbnoma", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run an experiment from a JSON config")
    run_p.add_argument("--config", required=True, help="JSON experiment config")
    run_p.add_argument("--out", required=True, help="output CSV path")
    _common_run_args(run_p)
    run_p.set_defaults(func=_cmd_run)

    fig_p = sub.add_parser("figure", help="run a named preset")
    fig_p.add_argument(
        "name", help="preset name: fig3a, fig3b, fig4a, fig4b, fig4c, fig4d, fig5"
    )
    fig_p.add_argument("--out", help="output CSV path")
    fig_p.add_argument("--dump-config", help="write the preset's JSON config here")
    _common_run_args(fig_p)
    fig_p.set_defaults(func=_cmd_figure)

    val_p = sub.add_parser("validate", help="validate a JSON config without running")
    val_p.add_argument("--config", required=True, help="JSON experiment config")
    val_p.set_defaults(func=_cmd_validate)
    return parser


def _common_run_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--trials", type=int, default=None, help="override trial count")
    p.add_argument("--seed", type=int, default=None, help="override random seed")
    p.add_argument("--workers", type=int, default=1, help="worker threads (default 1)")


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
