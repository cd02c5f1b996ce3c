import argparse
import json
import logging
import os
import sys
from datetime import datetime
from typing import List, Optional

from components.analysis import bound_report
from components.experiments import ConfigError, ExperimentRunner
from utils.config_manager import ConfigManager
from utils.log_manager import LogManager
from utils.result_exporter import ResultExporter
from utils.template_engine import TemplateEngine


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="beamspace-sim",
        description="Beamspace channel estimation and beam selection simulator for lens-array mmWave massive MIMO")
    parser.add_argument("--verbose", "-v", action="store_true", help="debug-level logging")
    commands = parser.add_subparsers(dest="command", required=True)

    run = commands.add_parser("run", help="run a Monte Carlo experiment from a JSON config")
    run.add_argument("--config", required=True, help="experiment config (JSON)")
    run.add_argument("--out", required=True, help="result file path")
    run.add_argument("--format", choices=["csv", "json"], default="csv")
    run.add_argument("--threads", type=int, default=1)
    run.add_argument("--seed", type=int, default=None, help="overrides the config seed")
    run.add_argument("--log-dir", default=None, help="write a per-run log file here")
    run.add_argument("--progress", action="store_true", help="show a progress bar over trials")
    run.add_argument("--run-name", default=None, help="log file name; defaults to <experiment>_<timestamp>")

    bounds = commands.add_parser("bounds", help="evaluate the closed-form detection bounds")
    bounds.add_argument("--n", type=int, required=True, help="number of antennas / beams")
    bounds.add_argument("--v", type=int, required=True, help="support window width")
    bounds.add_argument("--alpha", type=float, required=True)
    bounds.add_argument("--mu", type=float, default=0.0, help="combiner mutual coherence")
    bounds.add_argument("--sigma2", type=float, default=None, help="uplink noise variance")
    bounds.add_argument("--format", choices=["json", "text"], default="json")

    report = commands.add_parser("report", help="summarize a result file as Markdown")
    report.add_argument("--results", required=True, help="result file (.json or .csv)")
    report.add_argument("--title", default="Simulation results")

    logs = commands.add_parser("logs", help="show the log of a finished run")
    logs.add_argument("--log-dir", required=True)
    logs.add_argument("--run", required=True, help="run name")
    logs.add_argument("--format", choices=["txt", "json", "summary"], default="txt")
    return parser


def run_command(args, config_manager: ConfigManager, exporter: ResultExporter) -> int:
    cfg = config_manager.load_config(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
        cfg.validate()

    run_name = args.run_name or f"{cfg.experiment}_{datetime.now().strftime('%Y%m%d_%H%M%S')}"
    log_manager = LogManager(args.log_dir) if args.log_dir else None
    if log_manager is not None:
        log_manager.log_info(run_name, f"config {args.config} hash {cfg.config_hash()} seed {cfg.seed}")

    runner = ExperimentRunner(cfg, threads=args.threads, progress=args.progress,
                              log_manager=log_manager, run_name=run_name)
    table = runner.run()

    result = exporter.emit_results(table, args.out, args.format)
    if not result['success']:
        if log_manager is not None:
            log_manager.log_error(run_name, result['error'])
        print(f"beamspace-sim: cannot write results: {result['error']}", file=sys.stderr)
        return 1

    # resolved config (defaults filled, seed applied) next to the results
    stem = os.path.splitext(os.path.basename(args.out))[0]
    saved = config_manager.save_config(cfg, name=stem)
    if not saved['success']:
        logging.warning(f"{run_name}: could not save resolved config: {saved['error']}")

    failures = sum(row.failures for row in table)
    logging.info(f"{run_name}: wrote {result['row_count']} rows to {result['file_path']} ({failures} failed trials)")
    if log_manager is not None:
        log_manager.log_info(run_name, f"wrote {result['row_count']} rows to {result['file_path']}")
        summary = log_manager.get_run_summary(run_name)
        if summary['status'] != 'healthy':
            print(f"beamspace-sim: run {run_name} finished with {summary['failure_count']} failure entries, "
                  f"see {log_manager.get_log_file_path(run_name)}", file=sys.stderr)
    return 0


def logs_command(args) -> int:
    if not os.path.isdir(args.log_dir):
        print(f"beamspace-sim: no such log directory: {args.log_dir}", file=sys.stderr)
        return 1
    log_manager = LogManager(args.log_dir)
    if args.format == "summary":
        summary = log_manager.get_run_summary(args.run)
        if not summary['total_logs']:
            print(f"beamspace-sim: no log entries for run {args.run}", file=sys.stderr)
            return 1
        print(json.dumps(summary, indent=2))
        return 0
    exported = log_manager.export_run_logs(args.run, format=args.format)
    if not exported['log_count']:
        print(f"beamspace-sim: no log entries for run {args.run}", file=sys.stderr)
        return 1
    print(exported['content'], end="")
    return 0


def bounds_command(args, template_engine: TemplateEngine) -> int:
    try:
        report = bound_report(args.n, args.v, args.alpha, mu=args.mu, sigma2_ul=args.sigma2)
    except ValueError as e:
        print(f"beamspace-sim: {e}", file=sys.stderr)
        return 1
    if args.format == "text":
        print(template_engine.render_bounds(report.to_dict()), end="")
    else:
        print(json.dumps(report.to_dict(), indent=2))
    return 0


def report_command(args, exporter: ResultExporter, template_engine: TemplateEngine) -> int:
    if not os.path.exists(args.results):
        print(f"beamspace-sim: no such result file: {args.results}", file=sys.stderr)
        return 1
    loaded = exporter.load_results(args.results)
    if not loaded['success']:
        print(f"beamspace-sim: cannot read results: {loaded['error']}", file=sys.stderr)
        return 1
    print(template_engine.render_summary(loaded['table'].to_records(), title=args.title), end="")
    return 0


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")

    # Initialize managers
    exporter = ResultExporter()
    template_engine = TemplateEngine()

    if args.command == "bounds":
        return bounds_command(args, template_engine)
    if args.command == "report":
        return report_command(args, exporter, template_engine)
    if args.command == "logs":
        return logs_command(args)

    try:
        return run_command(args, ConfigManager(config_dir=os.path.dirname(os.path.abspath(args.out))), exporter)
    except ConfigError as e:
        print(f"beamspace-sim: invalid configuration: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
