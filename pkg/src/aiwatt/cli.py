"""Command-line front end.

Subcommands:

* ``simulate``  synthesize a scenario (file or preset) into a trace CSV
* ``analyze``   compute the metrics report for a trace CSV
* ``grid``      evaluate grid-impact quantities (power flow, RoCoF, SDF, ...)
* ``ups``       run the UPS smoothing model over a trace
* ``presets``   list or show the calibrated presets

Exit codes: 0 success, 1 validation failure, 2 file/parse problem,
3 numerical failure (for example power-flow non-convergence). The only
environment variable honored is ``AIWATT_LOG`` (a logging level name).
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import math
import os
import sys
from pathlib import Path

from . import figures
from .errors import AiwattError, PowerFlowError, TraceParseError, ValidationError
from .facility import facility_block
from .grid import (
    GridFrequencyParams,
    HarmonicSpectrum,
    LoadSite,
    VariabilityInputs,
    all_power_injections,
    estimate_correlation,
    estimate_variability,
    ldc_delta_energy,
    net_load_variability,
    network_from_json,
    rocof,
    solve_power_flow,
    spatial_distribution_factor,
    stability_index,
    thd,
    worst_step_delta_w,
)
from .metrics import DEFAULT_HISTOGRAM_BINS, IdleDefinition
from .presets import get_preset, preset_names
from .report import build_report, dumps_report, ups_block_from_result
from .scenario import (
    ScenarioConfig,
    facility_from_dict,
    load_scenario,
    simulate_scenario,
    stage_caps_from_list,
    ups_from_dict,
)
from .trace import read_csv, summary_stats, write_csv
from .ups import UpsConfig, apply_stage_caps, smooth

log = logging.getLogger("aiwatt")

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_IO = 2
EXIT_NUMERICAL = 3


def _emit(payload: dict, out_path) -> None:
    text = dumps_report(payload)
    if out_path:
        Path(out_path).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)


def _load_config_tree(path) -> dict:
    p = Path(path)
    raw = p.read_bytes()
    if p.suffix.lower() == ".json":
        return json.loads(raw.decode("utf-8"))
    try:
        import tomllib  # noqa: PLC0415 (py >= 3.11)
    except ModuleNotFoundError:
        import tomli as tomllib
    return tomllib.loads(raw.decode("utf-8"))


# ---------------------------------------------------------------------------
# simulate


def _resolve_scenario(args) -> ScenarioConfig:
    if args.preset:
        return get_preset(args.preset).scenario(args.seed)
    config = load_scenario(args.config)
    if args.seed is not None:
        config = dataclasses.replace(config, seed=args.seed)
    return config


def cmd_simulate(args) -> int:
    if args.preset:
        preset = get_preset(args.preset)
        if preset.oom:
            _emit(
                {
                    "scenario": preset.name,
                    "status": "refused_oom",
                    "reason": "configuration exceeded GPU memory; no trace is synthesized",
                    "reference": preset.reference,
                },
                args.report,
            )
            return EXIT_OK
    config = _resolve_scenario(args)
    trace = simulate_scenario(config)
    write_csv(trace, args.out)
    log.info("wrote %d samples (dt=%g s) to %s", len(trace), trace.dt, args.out)
    stats = summary_stats(trace)
    payload = {
        "scenario": config.name,
        "status": "ok",
        "trace": str(args.out),
        "samples": len(trace),
        "dt_s": trace.dt,
        "seed": config.seed,
        "summary": stats.as_dict(),
    }
    if config.facility is not None:
        payload["facility"] = facility_block(config.facility, config.cooling, stats.mean_w)
    if config.ups is not None:
        result = smooth(trace, config.ups)
        payload["ups"] = ups_block_from_result(trace, result, config.ups)
    _emit(payload, args.report)
    if args.figures:
        figures.plot_trace(trace, Path(args.figures) / f"{config.name}_power.png", title=config.name)
    return EXIT_OK


# ---------------------------------------------------------------------------
# analyze


def cmd_analyze(args) -> int:
    trace = read_csv(args.trace)
    log.info("analyzing %s: %d samples at dt=%g s", args.trace, len(trace), trace.dt)
    if args.idle_w is not None:
        idle = IdleDefinition.explicit(args.idle_w)
    else:
        idle = IdleDefinition.percentile(args.idle_percentile)

    facility = cooling = None
    if args.facility:
        tree = _load_config_tree(args.facility)
        facility, cooling = facility_from_dict(tree.get("facility", tree))

    report = build_report(
        trace,
        scenario=args.scenario,
        source=str(args.trace),
        idle=idle,
        thresholds_w=args.threshold or (),
        cdf_bins=args.bins,
        hist_bins=args.bins,
        facility=facility,
        cooling=cooling,
    )
    _emit(report, args.out)
    if args.figures:
        figures.render_analysis_figures(trace, report, args.figures, stem=Path(args.trace).stem)
    return EXIT_OK


# ---------------------------------------------------------------------------
# grid


def _grid_rocof_block(args) -> dict:
    params = GridFrequencyParams(
        inertia_h_s=args.inertia_h,
        p_nominal_w=args.p_nominal,
        rocof_threshold_pu_per_s=args.rocof_threshold if args.rocof_threshold else 1.0,
        f_nominal_hz=args.f_nominal,
    )
    if args.dp is not None:
        delta_p = args.dp
    elif args.dp_frac is not None:
        delta_p = args.dp_frac * params.p_nominal_w
    elif args.trace:
        delta_p = worst_step_delta_w(read_csv(args.trace))
    else:
        raise ValidationError("--rocof needs one of --dp, --dp-frac, or --trace")
    value = rocof(params, delta_p)
    block = {
        "rocof": {
            "delta_p_w": delta_p,
            "per_unit_per_s": value,
            "hz_per_s": value * args.f_nominal if args.f_nominal else None,
            "inertia_h_s": params.inertia_h_s,
            "p_nominal_w": params.p_nominal_w,
            "f_nominal_hz": args.f_nominal,
        }
    }
    if args.rocof_threshold:
        si = stability_index(value, params)
        block["stability_index"] = si
        block["stability_flag"] = "potentially-unstable" if si > 1.0 else "stable"
    return block


def cmd_grid(args) -> int:
    block: dict = {}
    if args.rocof:
        block.update(_grid_rocof_block(args))
    if args.network:
        net = solve_power_flow(network_from_json(args.network))
        block["power_flow"] = {
            "converged": True,
            "iterations_cap": 50,
            "tolerance_pu": 1e-8,
            "bus_types": list(net.bus_types),
            "v_mag_pu": [float(x) for x in net.v_mag],
            "v_angle_rad": [float(x) for x in net.v_angle],
            "p_injection_pu": [float(x) for x in all_power_injections(net)],
        }
    if args.sdf:
        with open(args.sdf, "r", encoding="utf-8") as fh:
            sites = [LoadSite(float(s["power_w"]), float(s["area_km2"])) for s in json.load(fh)]
        block["sdf_km2"] = spatial_distribution_factor(sites)
    if args.thd:
        with open(args.thd, "r", encoding="utf-8") as fh:
            data = json.load(fh)
        spectrum = HarmonicSpectrum(
            fundamental_a=float(data["fundamental_a"]),
            harmonics={int(k): float(v) for k, v in data.get("harmonics", {}).items()},
        )
        block["thd"] = thd(spectrum)
    if args.ldc_with and args.ldc_without:
        block["ldc_delta_energy_j"] = ldc_delta_energy(
            read_csv(args.ldc_with), read_csv(args.ldc_without)
        )
    if args.v_ai is not None or args.v_ai_trace:
        if args.v_ai_trace and args.v_re_trace:
            a, b = read_csv(args.v_ai_trace), read_csv(args.v_re_trace)
            inputs = VariabilityInputs(
                v_ai_w=estimate_variability(a),
                v_re_w=estimate_variability(b),
                rho=estimate_correlation(a, b),
            )
        elif args.v_ai is not None and args.v_re is not None and args.rho is not None:
            inputs = VariabilityInputs(v_ai_w=args.v_ai, v_re_w=args.v_re, rho=args.rho)
        else:
            raise ValidationError(
                "net-load variability needs --v-ai/--v-re/--rho or both variability traces"
            )
        block["net_load_variability_w"] = net_load_variability(inputs)
    if not block:
        raise ValidationError("grid: nothing to compute; pass at least one evaluation flag")
    _emit(block, args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# ups


def _ups_config_from_args(args) -> UpsConfig:
    if args.config:
        tree = _load_config_tree(args.config)
        return ups_from_dict(tree.get("ups", tree))
    missing = [
        flag
        for flag, value in (
            ("--capacity-j", args.capacity_j),
            ("--max-charge-w", args.max_charge_w),
            ("--max-discharge-w", args.max_discharge_w),
        )
        if value is None
    ]
    if missing:
        raise ValidationError(f"ups: missing {', '.join(missing)} (or pass --config)")
    return UpsConfig(
        capacity_j=args.capacity_j,
        max_charge_w=args.max_charge_w,
        max_discharge_w=args.max_discharge_w,
        round_trip_efficiency=args.efficiency,
        grid_ramp_limit_w_per_s=args.ramp_limit if args.ramp_limit else math.inf,
        initial_soc_fraction=args.initial_soc,
    )


def cmd_ups(args) -> int:
    load = read_csv(args.trace)
    if args.stage_caps:
        with open(args.stage_caps, "r", encoding="utf-8") as fh:
            schedule = stage_caps_from_list(json.load(fh))
        load = apply_stage_caps(load, schedule)
    config = _ups_config_from_args(args)
    result = smooth(load, config)
    block = ups_block_from_result(load, result, config)
    _emit(block, args.out)
    if args.grid_out:
        write_csv(result.grid_trace, args.grid_out)
    if args.figures:
        figures.plot_ups(load, result, Path(args.figures) / f"{Path(args.trace).stem}_ups.png")
    return EXIT_OK


# ---------------------------------------------------------------------------
# presets


def cmd_presets(args) -> int:
    if args.action == "list":
        for name in preset_names():
            print(name)
        return EXIT_OK
    preset = get_preset(args.name)
    payload = {
        "name": preset.name,
        "description": preset.description,
        "reference": preset.reference,
        "default_seed": preset.default_seed,
        "oom": preset.oom,
    }
    if not preset.oom:
        config = preset.scenario()
        payload["scenario"] = {
            "dt_s": config.dt_s,
            "duration_s": config.duration_s,
            "mix": {
                "train": config.mix.w_train,
                "finetune": config.mix.w_finetune,
                "inference": config.mix.w_inference,
            },
        }
        for label, setup in (("training", config.training), ("finetune", config.finetune)):
            if setup is not None:
                payload["scenario"][label] = {
                    "base_power_w": setup.profile.base_power_w,
                    "accelerators": dataclasses.asdict(setup.accelerators),
                }
        if config.finetune is not None:
            payload["scenario"]["finetune"]["beta"] = config.finetune.profile.beta
            payload["scenario"]["finetune"]["schedule_intervals"] = len(
                config.finetune.profile.schedule
            )
            payload["scenario"]["finetune"]["eval_interval_s"] = config.finetune.profile.eval_interval_s
            payload["scenario"]["finetune"]["eval_dip_duration_s"] = (
                config.finetune.profile.eval_dip_duration_s
            )
        if config.inference is not None:
            payload["scenario"]["inference"] = {
                "base_power_w": config.inference.base_power_w,
                "query_duration_s": config.inference.query_duration_s,
                "rate_breakpoints": list(config.inference.rate.breakpoints),
                "query_power_w": config.inference.queries.power_w,
            }
    print(dumps_report(payload))
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="aiwatt",
        description="Synthesize and analyze AI data-center power traces and their grid impact.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="synthesize a scenario into a trace CSV")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--config", help="scenario file (TOML, or JSON with .json suffix)")
    src.add_argument("--preset", help="calibrated preset name (see 'presets list')")
    p.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    p.add_argument("--out", default="trace.csv", help="trace CSV output path")
    p.add_argument("--report", default=None, help="write the run summary JSON here instead of stdout")
    p.add_argument("--figures", default=None, help="directory for rendered PNG figures")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("analyze", help="compute the metrics report for a trace CSV")
    p.add_argument("trace", help="input trace CSV")
    p.add_argument("--idle-w", type=float, default=None, help="explicit idle level in watts")
    p.add_argument(
        "--idle-percentile",
        type=float,
        default=0.05,
        help="idle level as a sample quantile (default 0.05)",
    )
    p.add_argument(
        "--threshold",
        type=float,
        action="append",
        help="report the exceedance fraction above this wattage (repeatable)",
    )
    p.add_argument("--bins", type=int, default=DEFAULT_HISTOGRAM_BINS, help="CDF/histogram bins")
    p.add_argument("--scenario", default=None, help="scenario name recorded in the report")
    p.add_argument("--facility", default=None, help="facility config file for the facility rollup")
    p.add_argument("--out", default=None, help="report JSON path (stdout when omitted)")
    p.add_argument("--figures", default=None, help="directory for rendered PNG figures")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("grid", help="evaluate grid-impact quantities")
    p.add_argument("--network", default=None, help="network JSON; solves the AC power flow")
    p.add_argument("--rocof", action="store_true", help="evaluate the frequency-response estimate")
    p.add_argument("--inertia-h", type=float, default=5.0, help="system inertia constant in seconds")
    p.add_argument("--p-nominal", type=float, default=1.0, help="nominal system power in watts")
    p.add_argument("--dp", type=float, default=None, help="power imbalance in watts")
    p.add_argument("--dp-frac", type=float, default=None, help="imbalance as a fraction of nominal")
    p.add_argument("--trace", default=None, help="trace CSV; the worst per-step change is the imbalance")
    p.add_argument("--f-nominal", type=float, default=None, help="nominal frequency for Hz/s output")
    p.add_argument(
        "--rocof-threshold",
        type=float,
        default=None,
        help="allowable RoCoF in per-unit/s; enables the stability index",
    )
    p.add_argument("--sdf", default=None, help="JSON list of {power_w, area_km2} load sites")
    p.add_argument("--thd", default=None, help="JSON harmonic spectrum {fundamental_a, harmonics}")
    p.add_argument("--ldc-with", default=None, help="trace CSV including the AI load")
    p.add_argument("--ldc-without", default=None, help="trace CSV excluding the AI load")
    p.add_argument("--v-ai", type=float, default=None, help="AI-load variability in watts")
    p.add_argument("--v-re", type=float, default=None, help="renewable variability in watts")
    p.add_argument("--rho", type=float, default=None, help="correlation between the two")
    p.add_argument("--v-ai-trace", default=None, help="estimate AI variability from this trace")
    p.add_argument("--v-re-trace", default=None, help="estimate renewable variability from this trace")
    p.add_argument("--out", default=None, help="grid block JSON path (stdout when omitted)")
    p.set_defaults(func=cmd_grid)

    p = sub.add_parser("ups", help="run the UPS smoothing model over a trace")
    p.add_argument("trace", help="load trace CSV")
    p.add_argument("--config", default=None, help="file with a [ups] table (TOML or JSON)")
    p.add_argument("--capacity-j", type=float, default=None)
    p.add_argument("--max-charge-w", type=float, default=None)
    p.add_argument("--max-discharge-w", type=float, default=None)
    p.add_argument("--efficiency", type=float, default=1.0, help="round-trip efficiency in (0, 1]")
    p.add_argument("--ramp-limit", type=float, default=None, help="grid ramp limit in W/s (default unlimited)")
    p.add_argument("--initial-soc", type=float, default=0.5, help="initial state of charge fraction")
    p.add_argument("--stage-caps", default=None, help="JSON [[start, end, stage, cap_w], ...] applied first")
    p.add_argument("--out", default=None, help="UPS block JSON path (stdout when omitted)")
    p.add_argument("--grid-out", default=None, help="write the smoothed grid trace CSV here")
    p.add_argument("--figures", default=None, help="directory for rendered PNG figures")
    p.set_defaults(func=cmd_ups)

    p = sub.add_parser("presets", help="list or show calibrated presets")
    p.add_argument("action", choices=["list", "show"])
    p.add_argument("name", nargs="?", default=None)
    p.set_defaults(func=cmd_presets)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("AIWATT_LOG", "WARNING").upper())
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "presets" and args.action == "show" and not args.name:
        parser.error("presets show requires a name")
    try:
        return args.func(args)
    except PowerFlowError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except TraceParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValidationError, AiwattError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
