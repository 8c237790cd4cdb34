"""Command-line interface tying the simulator and the cost model together.

    gpuplan simulate|cost|sweep|pipeline --scenario FILE [--months N]
            [--mode strict|skip] [--seed S] [--out DIR] [--fractions LIST]

Exit codes: 0 success, 1 domain/validation error, 2 usage error.
Outputs are pure functions of (scenario file, flags): re-running a command
produces byte-identical files.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

from .cluster import ClusterValidationError
from .costs import (
    CostSeries,
    FixedElectricity,
    PricingMode,
    SweepResult,
    UsageProfile,
    break_even,
    cumulative_series,
    usage_sweep,
)
from .scenario import (
    USAGE_FIXED,
    USAGE_SIMULATED,
    Scenario,
    ScenarioError,
    load_scenario,
)
from .scheduler import ScheduleMode, SchedulerError
from .simulation import SimulationTrace, UtilizationReport, run, utilization, write_trace_csv
from .workload import generate_workload

DEFAULT_MONTHS = 16
DEFAULT_FRACTIONS = tuple(round(0.10 + 0.05 * i, 2) for i in range(13))  # 0.10 .. 0.70


class CommandError(Exception):
    def __init__(self, message: str, exit_code: int = 1):
        self.exit_code = exit_code
        super().__init__(message)


@dataclass
class RunReport:
    files: list[Path] = field(default_factory=list)
    trace: SimulationTrace | None = None
    utilization: UtilizationReport | None = None
    cost_series: CostSeries | None = None
    sweep: SweepResult | None = None
    breakeven: dict[str, int | None] | None = None


def _require_section(scenario: Scenario, name: str, value):
    if value is None:
        raise CommandError(f"scenario is missing the {name!r} section required by this command",
                           exit_code=2)
    return value


def _simulate(scenario: Scenario, mode: ScheduleMode | None, seed: int | None):
    cluster = _require_section(scenario, "cluster", scenario.cluster)
    if scenario.jobs is None and scenario.workload_params is None:
        _require_section(scenario, "workload", None)
    if scenario.jobs is not None:
        jobs = list(scenario.jobs)
        horizon = None
    else:
        params = scenario.workload_params
        if seed is not None:
            params = dataclasses.replace(params, seed=seed)
        jobs = generate_workload(params)
        horizon = params.horizon_min
    trace = run(cluster, jobs, mode=mode or scenario.mode, horizon_min=horizon)
    return trace, utilization(trace)


def _write_utilization_csv(report: UtilizationReport, trace: SimulationTrace, path: Path):
    node_ids = [n.node_id for n in trace.cluster.nodes]
    header = ["gpu_hours", "total_gpu_capacity_hours", "grade_of_operation",
              "mean_monthly_usage_hours", "wait_min_min", "wait_mean_min", "wait_max_min"]
    header += [f"busy_fraction_{nid}" for nid in node_ids]
    row = [f"{report.gpu_hours:.6f}", f"{report.total_gpu_capacity_hours:.6f}",
           f"{report.grade_of_operation:.6f}", f"{report.mean_monthly_usage_hours:.6f}",
           f"{report.wait_time.min_min:.6f}", f"{report.wait_time.mean_min:.6f}",
           f"{report.wait_time.max_min:.6f}"]
    row += [f"{report.per_node_busy_fraction[nid]:.6f}" for nid in node_ids]
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        writer.writerow(row)


def _write_cost_csv(series: CostSeries, path: Path):
    header = ["month", "onprem_monthly", "onprem_cumulative"]
    for name in series.clouds:
        header += [f"{name}_monthly", f"{name}_cumulative"]
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for index, month in enumerate(series.months):
            row = [month, f"{series.onprem.monthly[index]:.2f}",
                   f"{series.onprem.cumulative[index]:.2f}"]
            for name in series.clouds:
                column = series.clouds[name]
                row += [f"{column.monthly[index]:.2f}", f"{column.cumulative[index]:.2f}"]
            writer.writerow(row)


def _write_sweep_csv(result: SweepResult, cloud_name: str, path: Path):
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["usage_fraction", "month", "onprem_cumulative", "cloud_cumulative"])
        for fraction in result.fractions:
            series = result.series[fraction]
            for index, month in enumerate(series.months):
                writer.writerow([
                    f"{fraction:.4f}", month,
                    f"{series.onprem.cumulative[index]:.2f}",
                    f"{series.clouds[cloud_name].cumulative[index]:.2f}",
                ])


def _write_breakeven_json(breakeven: dict[str, int | None], path: Path):
    with open(path, "w") as handle:
        json.dump(breakeven, handle, indent=2, sort_keys=True)
        handle.write("\n")


def _cost_usage(scenario: Scenario) -> UsageProfile:
    cost = scenario.cost
    if cost.usage_source == USAGE_SIMULATED:
        raise CommandError(
            "usage source is SIMULATED; run the pipeline command instead", exit_code=2)
    total_gpus = scenario.cluster.total_gpus if scenario.cluster is not None else None
    return UsageProfile(gpu_hours_per_month=cost.fixed_gpu_hours_per_month,
                        total_gpus=total_gpus)


def _cost_outputs(scenario: Scenario, usage: UsageProfile, months: int,
                  out_dir: Path, report: RunReport):
    cost = scenario.cost
    series = cumulative_series(cost.onprem, list(cost.offerings), usage, months)
    report.cost_series = series
    if "csv" in scenario.formats:
        path = out_dir / "cost_table.csv"
        _write_cost_csv(series, path)
        report.files.append(path)
    if cost.offerings:
        report.breakeven = {o.name: break_even(series, o.name) for o in cost.offerings}
        if "json" in scenario.formats:
            path = out_dir / "breakeven.json"
            _write_breakeven_json(report.breakeven, path)
            report.files.append(path)


def cmd_simulate(scenario: Scenario, out_dir: Path, mode: ScheduleMode | None = None,
                 seed: int | None = None) -> RunReport:
    """Run the workload, write trace.csv and utilization.csv."""
    trace, report_util = _simulate(scenario, mode, seed)
    report = RunReport(trace=trace, utilization=report_util)
    if "csv" in scenario.formats:
        trace_path = out_dir / "trace.csv"
        write_trace_csv(trace, trace_path)
        util_path = out_dir / "utilization.csv"
        _write_utilization_csv(report_util, trace, util_path)
        report.files += [trace_path, util_path]
    return report


def cmd_cost(scenario: Scenario, out_dir: Path, months: int = DEFAULT_MONTHS) -> RunReport:
    """Cumulative cost table and break-even summary at fixed usage."""
    _require_section(scenario, "cost", scenario.cost)
    usage = _cost_usage(scenario)
    report = RunReport()
    _cost_outputs(scenario, usage, months, out_dir, report)
    return report


def cmd_sweep(scenario: Scenario, out_dir: Path, months: int = DEFAULT_MONTHS,
              fractions: tuple[float, ...] = DEFAULT_FRACTIONS) -> RunReport:
    """Cost-versus-usage sweep over a band of utilization fractions."""
    cost = _require_section(scenario, "cost", scenario.cost)
    cluster = _require_section(scenario, "cluster", scenario.cluster)
    if not fractions:
        raise CommandError("the sweep needs at least one usage fraction", exit_code=2)
    offering = next((o for o in cost.offerings if o.pricing_mode is PricingMode.PER_GPU_HOUR),
                    None)
    if offering is None and isinstance(cost.onprem.electricity, FixedElectricity):
        raise CommandError("nothing varies with usage: only FLAT cloud offerings and "
                           "FIXED electricity in this scenario")
    if offering is None:
        if not cost.offerings:
            raise CommandError("the sweep needs at least one cloud offering")
        offering = cost.offerings[0]
    result = usage_sweep(cost.onprem, offering, list(fractions), months, cluster.total_gpus)
    report = RunReport(sweep=result)
    if "csv" in scenario.formats:
        path = out_dir / "sweep.csv"
        _write_sweep_csv(result, offering.name, path)
        report.files.append(path)
    return report


def cmd_pipeline(scenario: Scenario, out_dir: Path, months: int = DEFAULT_MONTHS,
                 mode: ScheduleMode | None = None, seed: int | None = None) -> RunReport:
    """Simulate, measure usage, then feed it into the cost comparison."""
    cost = _require_section(scenario, "cost", scenario.cost)
    if cost.usage_source != USAGE_SIMULATED:
        raise CommandError("pipeline requires cost usage source SIMULATED", exit_code=2)
    report = cmd_simulate(scenario, out_dir, mode=mode, seed=seed)
    usage = UsageProfile(gpu_hours_per_month=report.utilization.mean_monthly_usage_hours,
                         total_gpus=scenario.cluster.total_gpus)
    _cost_outputs(scenario, usage, months, out_dir, report)
    return report


def _parse_fractions(text: str) -> tuple[float, ...]:
    values = []
    for chunk in text.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        try:
            values.append(float(chunk))
        except ValueError:
            raise CommandError(f"invalid fraction {chunk!r}", exit_code=2)
    return tuple(values)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gpuplan",
        description="GPU cluster scheduling simulator and on-premises vs. cloud cost planner")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--scenario", required=True, help="path to the scenario JSON file")
        p.add_argument("--out", default=None, help="output directory (default: scenario setting)")

    p = sub.add_parser("simulate", help="run the workload and report utilization")
    common(p)
    p.add_argument("--mode", choices=["strict", "skip"], default=None)
    p.add_argument("--seed", type=int, default=None)

    p = sub.add_parser("cost", help="cumulative cost table and break-even months")
    common(p)
    p.add_argument("--months", type=int, default=DEFAULT_MONTHS)

    p = sub.add_parser("sweep", help="cost trajectories over a band of usage fractions")
    common(p)
    p.add_argument("--months", type=int, default=DEFAULT_MONTHS)
    p.add_argument("--fractions", default=None,
                   help="comma-separated usage fractions (default 0.10..0.70 step 0.05)")

    p = sub.add_parser("pipeline", help="simulate, then cost the measured usage")
    common(p)
    p.add_argument("--months", type=int, default=DEFAULT_MONTHS)
    p.add_argument("--mode", choices=["strict", "skip"], default=None)
    p.add_argument("--seed", type=int, default=None)

    return parser


def _print_summary(command: str, report: RunReport):
    if report.utilization is not None:
        util = report.utilization
        print(f"grade of operation: {util.grade_of_operation:.4f} "
              f"({util.gpu_hours:.1f} of {util.total_gpu_capacity_hours:.1f} GPU-hours)")
        print(f"mean monthly usage: {util.mean_monthly_usage_hours:.1f} GPU-hours")
    if report.breakeven is not None:
        for name in sorted(report.breakeven):
            month = report.breakeven[name]
            print(f"break-even vs {name}: " + (f"month {month}" if month else "never in horizon"))
    for path in report.files:
        print(f"wrote {path}")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    try:
        scenario = load_scenario(args.scenario)
    except FileNotFoundError:
        print(f"error: scenario file not found: {args.scenario}", file=sys.stderr)
        return 1
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    out_dir = Path(args.out if args.out is not None else scenario.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    mode = None
    if getattr(args, "mode", None):
        mode = ScheduleMode.STRICT if args.mode == "strict" else ScheduleMode.SKIP

    try:
        if args.command == "simulate":
            report = cmd_simulate(scenario, out_dir, mode=mode, seed=args.seed)
        elif args.command == "cost":
            report = cmd_cost(scenario, out_dir, months=args.months)
        elif args.command == "sweep":
            fractions = (DEFAULT_FRACTIONS if args.fractions is None
                         else _parse_fractions(args.fractions))
            report = cmd_sweep(scenario, out_dir, months=args.months, fractions=fractions)
        else:
            report = cmd_pipeline(scenario, out_dir, months=args.months, mode=mode,
                                  seed=args.seed)
    except CommandError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (ScenarioError, SchedulerError, ClusterValidationError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    _print_summary(args.command, report)
    return 0


if __name__ == "__main__":
    sys.exit(main())
