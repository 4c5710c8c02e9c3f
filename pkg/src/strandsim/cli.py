"""Command-line front end.

Subcommands: sp-analyze, synth-market, workload-gen, simulate, tco, sweep,
project, storage-gap.  Every command writes its outputs plus a run manifest
under --out-dir.  Exit codes: 0 success, 2 validation/usage error, 1
internal error.
"""

import argparse
import csv
import json
import os
import sys

from . import availability, market, scenarios, simulator, stranded, tco, workload
from .errors import StrandsimError, ValidationError
from .manifest import RunManifest

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_VALIDATION = 2


def _add_common(parser):
    parser.add_argument("--seed", type=int, default=0, help="random seed")
    parser.add_argument("--out-dir", default=".", help="output directory")
    parser.add_argument("--params", default="mira-baseline",
                        help="cost params: profile name or JSON file")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="strandsim",
        description="Capacity planning for supercomputing on stranded renewable power")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sp-analyze", help="stranded-power statistics for a market file")
    p.add_argument("--market", help="market CSV (see synth-market for the format)")
    p.add_argument("--synth-config", help="synthetic market config JSON (alternative input)")
    p.add_argument("--family", choices=["lmp", "netprice"], default="netprice")
    p.add_argument("--threshold", type=float, default=5.0, help="price threshold C, $/MWh")
    p.add_argument("--top-k", type=int, default=0,
                   help="also report cumulative stats over the top-k sites")
    p.add_argument("--buckets", default="1,5,10,50,100",
                   help="interval histogram bucket edges in hours")
    _add_common(p)

    p = sub.add_parser("synth-market", help="generate (optionally calibrated) market data")
    p.add_argument("--config", help="SynthMarketConfig JSON; defaults per model family")
    p.add_argument("--calibrate-df", type=float,
                   help="calibrate episode coverage to this duty factor")
    p.add_argument("--family", choices=["lmp", "netprice"], default="netprice")
    p.add_argument("--threshold", type=float, default=5.0)
    p.add_argument("--horizon-days", type=int, default=365)
    _add_common(p)

    p = sub.add_parser("workload-gen", help="generate a statistics-matched job trace")
    p.add_argument("--horizon-days", type=int, default=365)
    p.add_argument("--utilization", type=float, default=workload.REFERENCE_UTILIZATION)
    p.add_argument("--correlation", type=float,
                   default=workload.REFERENCE_SIZE_RUNTIME_CORRELATION,
                   help="runtime/node-count rank correlation")
    _add_common(p)

    p = sub.add_parser("simulate", help="simulate a trace on a pool configuration")
    p.add_argument("--trace", required=True, help="job trace file")
    p.add_argument("--ctr", type=int, default=1, help="always-on units")
    p.add_argument("--z", type=int, default=0, help="intermittent units")
    p.add_argument("--schedule", help="availability schedule JSON for the Z side")
    p.add_argument("--duty-factor", type=float,
                   help="periodic availability instead of --schedule")
    p.add_argument("--period-h", type=float, default=24.0)
    p.add_argument("--phase-h", type=float, default=8.0)
    p.add_argument("--policy", choices=["easy", "fcfs"], default="easy")
    p.add_argument("--kill-at-shutdown", action="store_true",
                   help="non-oracle mode: kill running Z jobs at window close")
    p.add_argument("--event-log", help="write an NDJSON event log to this file")
    _add_common(p)

    p = sub.add_parser("tco", help="annual cost report for a configuration")
    p.add_argument("--ctr", type=int, default=1)
    p.add_argument("--z", type=int, default=0)
    p.add_argument("--power-price", type=float, help="override power price, $/MWh")
    p.add_argument("--compute-factor", type=float, help="compute price factor")
    p.add_argument("--density", type=float, help="power density factor")
    _add_common(p)

    p = sub.add_parser("sweep", help="run the cost-performance study space")
    p.add_argument("--space", required=True,
                   help="StudySpace JSON file, or 'default' for the built-in grid")
    p.add_argument("--trace", help="base trace file; synthesized when omitted")
    p.add_argument("--horizon-days", type=int, default=365,
                   help="horizon when synthesizing the base trace")
    _add_common(p)

    p = sub.add_parser("project", help="extreme-scale generation projections")
    p.add_argument("--year", type=int, default=2032)
    p.add_argument("--budget", type=float,
                   help="also report peak PFLOPS affordable at this $M/year")
    _add_common(p)

    p = sub.add_parser("storage-gap", help="longest SP-free gap and bridging cost")
    p.add_argument("--market", required=True, help="market CSV")
    p.add_argument("--site", help="site id (defaults to the first site)")
    p.add_argument("--family", choices=["lmp", "netprice"], default="netprice")
    p.add_argument("--threshold", type=float, default=5.0)
    p.add_argument("--load-mw", type=float, default=4.0)
    p.add_argument("--battery-price-kwh", type=float, default=350.0)
    _add_common(p)

    return parser


def _write_json(data, path, manifest):
    with open(path, "w") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
        fh.write("\n")
    manifest.add_output(path)


def _model(args):
    return stranded.SpModel(args.family, args.threshold)


def _load_series(args):
    if args.market:
        return market.ingest_csv(args.market)
    if args.synth_config:
        with open(args.synth_config) as fh:
            cfg = market.SynthMarketConfig.from_dict(json.load(fh))
        series = market.synthesize_market(cfg)
        return {series.site_id: series}
    raise ValidationError("one of --market / --synth-config is required")


def cmd_sp_analyze(args, out_dir, manifest):
    model = _model(args)
    buckets = tuple(float(x) for x in args.buckets.split(","))
    series_map = _load_series(args)
    reports = [stranded.build_report(s, model, buckets)
               for _, s in sorted(series_map.items())]

    for report in reports:
        path = os.path.join(out_dir, f"sp_report_{report.site_id}_{model.label}.json")
        stranded.report_to_json(report, path)
        manifest.add_output(path)

    hist_path = os.path.join(out_dir, f"sp_histogram_{model.label}.csv")
    with open(hist_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["site_id", "bucket_upper_h", "count_fraction",
                         "duty_contribution"])
        for report in reports:
            h = report.histogram
            uppers = list(h.bucket_edges_h) + ["inf"]
            for upper, frac, duty in zip(uppers, h.count_fractions, h.duty_contributions):
                writer.writerow([report.site_id, upper, repr(frac), repr(duty)])
    manifest.add_output(hist_path)

    if args.top_k:
        top = stranded.rank_sites(reports, min(args.top_k, len(reports)))
        cum_path = os.path.join(out_dir, f"sp_cumulative_{model.label}.csv")
        with open(cum_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["k", "site_ids", "cumulative_duty_factor",
                             "avg_stranded_mw"])
            for k in range(1, len(top) + 1):
                subset = [series_map[sid] for sid in top[:k]]
                cdf = stranded.cumulative_duty_factor(subset, model)
                try:
                    avg = stranded.avg_stranded_power(subset, model)
                except StrandsimError:
                    avg = 0.0
                writer.writerow([k, ";".join(top[:k]), repr(cdf), repr(avg)])
        manifest.add_output(cum_path)
    return EXIT_OK


def cmd_synth_market(args, out_dir, manifest):
    model = _model(args)
    horizon_s = args.horizon_days * 86400
    if args.config:
        with open(args.config) as fh:
            cfg = market.SynthMarketConfig.from_dict(json.load(fh))
    else:
        cfg = scenarios.reference_market_config(model, horizon_s, seed=args.seed)
    if args.calibrate_df is not None:
        cfg = market.calibrate_to_duty_factor(args.calibrate_df, model, cfg)
        _write_json(cfg.to_dict(),
                    os.path.join(out_dir, "calibrated_config.json"), manifest)
    series = market.synthesize_market(cfg)
    out_path = os.path.join(out_dir, f"market_{series.site_id}.csv")
    market.export_csv(series, out_path)
    manifest.add_output(out_path)
    return EXIT_OK


def cmd_workload_gen(args, out_dir, manifest):
    cfg = workload.reference_workload_config(
        horizon_s=args.horizon_days * 86400.0, seed=args.seed,
        utilization=args.utilization)
    cfg = workload.SynthWorkloadConfig(
        stats=cfg.stats, horizon_s=cfg.horizon_s, seed=cfg.seed,
        size_runtime_correlation=args.correlation)
    trace = workload.synthesize_workload(cfg)
    path = os.path.join(out_dir, "trace.txt")
    workload.save_trace(trace, path)
    manifest.add_output(path)
    _write_json(trace.stats.to_dict(), os.path.join(out_dir, "trace_stats.json"),
                manifest)
    return EXIT_OK


def _schedule_from_args(args, horizon_s):
    if args.schedule:
        return availability.AvailabilitySchedule.from_json(args.schedule)
    if args.duty_factor is not None:
        return availability.periodic_schedule(
            args.duty_factor, horizon_s,
            period_s=int(args.period_h * 3600), phase_s=int(args.phase_h * 3600))
    raise ValidationError("intermittent units need --schedule or --duty-factor")


def cmd_simulate(args, out_dir, manifest):
    trace = workload.load_trace(args.trace)
    schedule = _schedule_from_args(args, trace.horizon_s) if args.z > 0 else None
    config = simulator.SystemConfig(
        ctr_units=args.ctr, z_units=args.z, z_schedule=schedule,
        policy=args.policy, kill_at_shutdown=args.kill_at_shutdown)
    log_fh = open(args.event_log, "w") if args.event_log else None
    try:
        result = simulator.simulate(config, trace, seed=args.seed, event_log=log_fh)
    finally:
        if log_fh:
            log_fh.close()
            manifest.add_output(args.event_log)
    row = result.to_row()
    path = os.path.join(out_dir, "sim_result.csv")
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(row))
        writer.writeheader()
        writer.writerow({k: (repr(v) if isinstance(v, float) else v)
                         for k, v in row.items()})
    manifest.add_output(path)
    return EXIT_OK


def cmd_tco(args, out_dir, manifest):
    params = tco.load_params(args.params)
    if args.power_price is not None:
        params = params.with_power_price(args.power_price)
    if args.compute_factor is not None:
        params = params.with_compute_factor(args.compute_factor)
    if args.density is not None:
        params = params.with_density(args.density)
    report = tco.tco_mixed(args.ctr, args.z, params)
    _write_json(report.to_dict(), os.path.join(out_dir, "tco_report.json"), manifest)
    path = os.path.join(out_dir, "tco_breakdown.csv")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["component", "musd_per_year"])
        for name in tco.COMPONENTS:
            writer.writerow([name, repr(report.components.get(name, 0.0))])
        writer.writerow(["total", repr(report.total)])
    manifest.add_output(path)
    return EXIT_OK


def cmd_sweep(args, out_dir, manifest):
    if args.space == "default":
        space = scenarios.default_study_space(seed=args.seed)
    else:
        with open(args.space) as fh:
            text = fh.read().strip()
        if not text:
            raise ValidationError(f"{args.space}: empty study space")
        space = scenarios.StudySpace.from_dict(json.loads(text))
    space.validate()

    horizon_s = args.horizon_days * 86400
    if args.trace:
        trace = workload.load_trace(args.trace)
    else:
        trace = workload.synthesize_workload(
            workload.reference_workload_config(horizon_s=float(horizon_s),
                                               seed=space.seed))
    series_by_model = {}
    for label in space.sp_models:
        model = scenarios.parse_model_label(label)
        target = scenarios.REFERENCE_DUTY_FACTORS.get(str(label), 0.8)
        _, series = scenarios.calibrated_market_series(
            model, target, int(trace.horizon_s), seed=space.seed)
        series_by_model[label] = series

    rows = scenarios.run_sweep(space, trace, series_by_model,
                               params=tco.load_params(args.params))
    for path in scenarios.write_sweep_csvs(rows, out_dir):
        manifest.add_output(path)
    return EXIT_OK


def cmd_project(args, out_dir, manifest):
    points = scenarios.project_generations(args.year)
    params = tco.load_params(args.params)
    path = os.path.join(out_dir, "generations.csv")
    scenarios.write_generations_csv(points, path, budget=args.budget, params=params)
    manifest.add_output(path)
    return EXIT_OK


def cmd_storage_gap(args, out_dir, manifest):
    series_map = market.ingest_csv(args.market)
    site = args.site or sorted(series_map)[0]
    if site not in series_map:
        raise ValidationError(f"site {site!r} not present in {args.market}")
    result = stranded.storage_to_bridge(series_map[site], _model(args),
                                        args.load_mw, args.battery_price_kwh)
    result = {"site_id": site, **result}
    _write_json(result, os.path.join(out_dir, "storage_gap.json"), manifest)
    return EXIT_OK


COMMANDS = {
    "sp-analyze": cmd_sp_analyze,
    "synth-market": cmd_synth_market,
    "workload-gen": cmd_workload_gen,
    "simulate": cmd_simulate,
    "tco": cmd_tco,
    "sweep": cmd_sweep,
    "project": cmd_project,
    "storage-gap": cmd_storage_gap,
}


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors; normalize other codes.
        return int(exc.code) if exc.code else EXIT_OK

    out_dir = args.out_dir
    os.makedirs(out_dir, exist_ok=True)
    inputs = [getattr(args, name) for name in
              ("market", "synth_config", "config", "trace", "schedule", "space")
              if getattr(args, name, None)]
    manifest = RunManifest(args.command, argv, seed=getattr(args, "seed", None),
                           inputs=inputs)
    try:
        code = COMMANDS[args.command](args, out_dir, manifest)
    except (ValidationError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except StrandsimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    manifest.write(out_dir)
    return code


if __name__ == "__main__":
    sys.exit(main())
