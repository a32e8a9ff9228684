"""Command-line runner: generate workloads, solve single cases, sweep grids, report CSV.

Exit codes: 0 on success, 1 when a solve leaves applications rejected (the
solution file is still written), 2 on invalid input.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional, Sequence

from .solver import (
    SCENARIOS,
    Instance,
    ProblemTooLarge,
    Solution,
    brute_force,
    scenario_weights,
    solution_to_dict,
    solve_exact,
    solve_greedy,
)
from .topology import RackConfigError, RackTopology, load_rack, rack_from_config
from .workload import Application, WorkloadError, dumps, generate_apps, load_apps

MODES = ("exact", "greedy", "brute")
DEFAULT_NODES = 9
DEFAULT_BUDGET = 600.0
TIMINGS_FILE = "timings.json"
REPORT_FILE = "report.csv"
CSV_COLUMNS = (
    "wavelengths", "rate_gbps", "scenario", "mode", "rejected", "tcpc_w", "tnpc_w",
    "nch_w", "tor_w", "onboard_w", "taw", "inactive_components", "objective",
    "optimal", "runtime_s",
)


class InputError(ValueError):
    """Invalid command input; ``field`` names the offending flag or key."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


@dataclass(frozen=True)
class SweepConfig:
    """One grid study over channel counts, channel rates and weight scenarios."""

    rack: Optional[Path] = None
    workload: Optional[Path] = None
    seed: int = 42
    num_apps: int = 15
    wavelengths: tuple[int, ...] = (2, 4, 6, 8, 10)
    rates: tuple[float, ...] = (50, 100)
    scenarios: tuple[str, ...] = ("I", "II")
    mode: str = "exact"
    budget_seconds: float = DEFAULT_BUDGET
    node_limit: Optional[int] = None

    def cases(self) -> list[tuple[int, float, str]]:
        return [(w, r, s) for w in self.wavelengths for r in self.rates for s in self.scenarios]


@dataclass(frozen=True)
class RunSpec:
    """Everything needed to solve one grid cell in a worker process."""

    rack: RackTopology
    apps: tuple[Application, ...]
    scenario: str
    mode: str
    budget_seconds: float
    node_limit: Optional[int] = None
    meta: dict[str, Any] = field(default_factory=dict)


# -- parsing helpers -------------------------------------------------------------

def _positive_int(value: Any, field_name: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int) or value <= 0:
        raise InputError(field_name, f"expected a positive integer, got {value!r}")
    return value


def _positive_number(value: Any, field_name: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not value > 0:
        raise InputError(field_name, f"expected a positive number, got {value!r}")
    return value


def _nonempty_list(value: Any, field_name: str) -> list:
    if not isinstance(value, list) or not value:
        raise InputError(field_name, "expected a non-empty list")
    return value


def _check_mode(mode: Any, field_name: str = "mode") -> str:
    if mode not in MODES:
        raise InputError(field_name, f"expected one of {list(MODES)}, got {mode!r}")
    return mode


def _check_scenario(name: Any, field_name: str = "scenario") -> str:
    if not isinstance(name, str) or name.upper() not in SCENARIOS:
        raise InputError(field_name, f"expected one of {sorted(SCENARIOS)}, got {name!r}")
    return name.upper()


def parse_sweep_config(data: Any, base_dir: Path = Path(".")) -> SweepConfig:
    """Validate a parsed sweep configuration; relative paths resolve against ``base_dir``."""
    if not isinstance(data, dict):
        raise InputError("<root>", "sweep configuration must be a JSON object")
    known = {"rack", "workload", "wavelengths", "rates", "scenarios", "mode", "budget_seconds", "node_limit"}
    unknown = sorted(set(data) - known)
    if unknown:
        raise InputError(unknown[0], "unknown key")

    kwargs: dict[str, Any] = {}
    if data.get("rack") is not None:
        if not isinstance(data["rack"], str):
            raise InputError("rack", "expected a file path")
        kwargs["rack"] = base_dir / data["rack"]
    workload = data.get("workload", {"seed": 42, "apps": 15})
    if isinstance(workload, str):
        kwargs["workload"] = base_dir / workload
    elif isinstance(workload, dict):
        extra = sorted(set(workload) - {"seed", "apps"})
        if extra:
            raise InputError(f"workload.{extra[0]}", "unknown key")
        seed = workload.get("seed", 42)
        if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
            raise InputError("workload.seed", f"expected a non-negative integer, got {seed!r}")
        kwargs["seed"] = seed
        kwargs["num_apps"] = _positive_int(workload.get("apps", 15), "workload.apps")
    else:
        raise InputError("workload", "expected a file path or {seed, apps}")

    if "wavelengths" in data:
        values = _nonempty_list(data["wavelengths"], "wavelengths")
        kwargs["wavelengths"] = tuple(_positive_int(v, "wavelengths") for v in values)
    if "rates" in data:
        values = _nonempty_list(data["rates"], "rates")
        kwargs["rates"] = tuple(_positive_number(v, "rates") for v in values)
    if "scenarios" in data:
        values = _nonempty_list(data["scenarios"], "scenarios")
        kwargs["scenarios"] = tuple(_check_scenario(v, "scenarios") for v in values)
    if "mode" in data:
        kwargs["mode"] = _check_mode(data["mode"])
    if "budget_seconds" in data:
        kwargs["budget_seconds"] = float(_positive_number(data["budget_seconds"], "budget_seconds"))
    if data.get("node_limit") is not None:
        kwargs["node_limit"] = _positive_int(data["node_limit"], "node_limit")
    return SweepConfig(**kwargs)


def load_sweep_config(path: str | Path) -> SweepConfig:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise InputError("config", f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise InputError("config", f"invalid JSON: {exc}") from None
    return parse_sweep_config(data, path.parent)


def _rack_for(path: Optional[Path], wavelengths: int, rate: float) -> RackTopology:
    try:
        if path is None:
            return rack_from_config({"nodes": DEFAULT_NODES}, num_channels=wavelengths, rate_gbps=rate)
        return load_rack(path, num_channels=wavelengths, rate_gbps=rate)
    except OSError as exc:
        raise InputError("rack", f"cannot read {path}: {exc.strerror}") from None
    except RackConfigError as exc:
        raise InputError(f"rack.{exc.field}", str(exc).split(": ", 1)[-1]) from None


def _apps_from_file(path: Path) -> list[Application]:
    try:
        return load_apps(path)
    except OSError as exc:
        raise InputError("workload", f"cannot read {path}: {exc.strerror}") from None
    except WorkloadError as exc:
        raise InputError(f"workload.{exc.field}", str(exc).split(": ", 1)[-1]) from None


# -- running ---------------------------------------------------------------------

def run_solver(spec: RunSpec) -> tuple[Solution, float]:
    """Solve one case; returns the solution and its wall time in seconds."""
    instance = Instance(spec.rack, spec.apps, scenario_weights(spec.scenario))
    start = time.perf_counter()
    if spec.mode == "exact":
        solution = solve_exact(instance, spec.budget_seconds, node_limit=spec.node_limit)
    elif spec.mode == "greedy":
        solution = solve_greedy(instance)
    else:
        try:
            solution = brute_force(instance)
        except ProblemTooLarge as exc:
            raise InputError("mode", str(exc)) from None
    return solution, time.perf_counter() - start


def solution_document(solution: Solution, meta: dict[str, Any]) -> str:
    """Solution JSON text. Floats keep full precision so identities re-verify."""
    doc = solution_to_dict(solution)
    doc["run"] = meta
    return json.dumps(doc, indent=2) + "\n"


def case_name(wavelengths: int, rate: float, scenario: str) -> str:
    return f"run_w{wavelengths}_r{rate:g}_{scenario}"


def _run_case(spec: RunSpec) -> tuple[str, str, float]:
    solution, seconds = run_solver(spec)
    name = case_name(spec.meta["wavelengths"], spec.meta["rate_gbps"], spec.scenario)
    return name, solution_document(solution, spec.meta), seconds


def _format_number(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


def report_rows(in_dir: Path) -> list[dict[str, str]]:
    """One CSV row per solution file in ``in_dir``, in grid order."""
    timings: dict[str, float] = {}
    timing_path = in_dir / TIMINGS_FILE
    if timing_path.exists():
        timings = json.loads(timing_path.read_text(encoding="utf-8"))
    records = []
    for path in sorted(in_dir.glob("run_*.json")):
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
            run, b = doc["run"], doc["breakdown"]
            key = (run["wavelengths"], run["rate_gbps"], run["scenario"])
            values = {
                "wavelengths": run["wavelengths"],
                "rate_gbps": run["rate_gbps"],
                "scenario": run["scenario"],
                "mode": run["mode"],
                "rejected": b["tra"],
                "tcpc_w": b["tcpc_w"],
                "tnpc_w": b["tnpc_w"],
                "nch_w": b["nch_w"],
                "tor_w": b["tor_w"],
                "onboard_w": b["onboard_w"],
                "taw": b["taw"],
                "inactive_components": doc["inactive_components"],
                "objective": b["objective"],
                "optimal": doc["optimal"],
            }
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise InputError(path.name, f"not a solution file ({exc})") from None
        row = {k: _format_number(v) for k, v in values.items()}
        seconds = timings.get(path.stem)
        row["runtime_s"] = "" if seconds is None else _format_number(float(seconds))
        records.append((key, row))
    records.sort(key=lambda item: (item[0][0], item[0][1], item[0][2]))
    return [row for _, row in records]


def render_csv(rows: Sequence[dict[str, str]]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


# -- subcommands -----------------------------------------------------------------

def cmd_generate(args: argparse.Namespace) -> int:
    if args.seed < 0:
        raise InputError("--seed", "must be >= 0")
    if args.apps <= 0:
        raise InputError("--apps", "must be > 0")
    Path(args.out).write_text(dumps(generate_apps(args.seed, args.apps)), encoding="utf-8")
    return 0


def cmd_solve(args: argparse.Namespace) -> int:
    if not args.budget > 0:
        raise InputError("--budget", "must be > 0")
    if args.node_limit is not None and args.node_limit <= 0:
        raise InputError("--node-limit", "must be > 0")
    rack_path = Path(args.rack) if args.rack else None
    rack = _rack_for(rack_path, args.wavelengths, args.rate)
    apps = _apps_from_file(Path(args.workload))
    scenario = _check_scenario(args.scenario, "--scenario")
    meta = {
        "wavelengths": args.wavelengths,
        "rate_gbps": args.rate,
        "scenario": scenario,
        "mode": args.mode,
        "budget_seconds": args.budget,
        "node_limit": args.node_limit,
    }
    spec = RunSpec(rack, tuple(apps), scenario, args.mode, args.budget, args.node_limit, meta)
    solution, _ = run_solver(spec)
    Path(args.out).write_text(solution_document(solution, meta), encoding="utf-8")
    return 1 if solution.breakdown.tra > 0 else 0


def build_specs(config: SweepConfig) -> list[RunSpec]:
    if config.workload is not None:
        apps = tuple(_apps_from_file(config.workload))
    else:
        apps = tuple(generate_apps(config.seed, config.num_apps))
    specs = []
    for w, r, s in config.cases():
        meta = {
            "wavelengths": w,
            "rate_gbps": r,
            "scenario": s,
            "mode": config.mode,
            "budget_seconds": config.budget_seconds,
            "node_limit": config.node_limit,
        }
        rack = _rack_for(config.rack, w, r)
        specs.append(RunSpec(rack, apps, s, config.mode, config.budget_seconds, config.node_limit, meta))
    return specs


def cmd_sweep(args: argparse.Namespace) -> int:
    if args.jobs < 1:
        raise InputError("--jobs", "must be >= 1")
    config = load_sweep_config(args.config)
    specs = build_specs(config)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if args.jobs == 1:
        results = [_run_case(spec) for spec in specs]
    else:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_run_case, specs))
    timings = {}
    for name, text, seconds in results:
        (out_dir / f"{name}.json").write_text(text, encoding="utf-8")
        timings[name] = seconds
    timing_path = out_dir / TIMINGS_FILE
    if args.no_timing:
        timing_path.unlink(missing_ok=True)
    else:
        timing_path.write_text(json.dumps(timings, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    (out_dir / REPORT_FILE).write_text(render_csv(report_rows(out_dir)), encoding="utf-8")
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    in_dir = Path(args.in_dir)
    if not in_dir.is_dir():
        raise InputError("--in-dir", f"{in_dir} is not a directory")
    rows = report_rows(in_dir)
    if not rows:
        raise InputError("--in-dir", f"no solution files in {in_dir}")
    Path(args.out).write_text(render_csv(rows), encoding="utf-8")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rackfabric", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="write a seeded random workload")
    gen.add_argument("--seed", type=int, required=True)
    gen.add_argument("--apps", type=int, required=True)
    gen.add_argument("--out", required=True)
    gen.set_defaults(handler=cmd_generate)

    solve = sub.add_parser("solve", help="solve one rack/workload case")
    solve.add_argument("--rack", help="rack JSON (default: 9 standard nodes)")
    solve.add_argument("--workload", required=True)
    solve.add_argument("--wavelengths", type=int, required=True)
    solve.add_argument("--rate", type=float, required=True, help="channel rate in Gb/s")
    solve.add_argument("--scenario", required=True, choices=sorted(SCENARIOS))
    solve.add_argument("--mode", required=True, choices=MODES)
    solve.add_argument("--budget", type=float, default=DEFAULT_BUDGET, help="exact-mode wall budget in seconds")
    solve.add_argument("--node-limit", type=int, help="exact-mode search node cap (deterministic)")
    solve.add_argument("--out", required=True)
    solve.set_defaults(handler=cmd_solve)

    sweep = sub.add_parser("sweep", help="solve every cell of a grid")
    sweep.add_argument("--config", required=True)
    sweep.add_argument("--out-dir", required=True)
    sweep.add_argument("--jobs", type=int, default=1)
    sweep.add_argument("--no-timing", action="store_true", help="omit wall times so reruns are byte-identical")
    sweep.set_defaults(handler=cmd_sweep)

    report = sub.add_parser("report", help="merge solution files into one CSV")
    report.add_argument("--in-dir", required=True)
    report.add_argument("--out", required=True)
    report.set_defaults(handler=cmd_report)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.handler(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc.filename}: {exc.strerror}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
