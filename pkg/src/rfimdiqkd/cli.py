"""Command-line front end.

Subcommands: ``simulate`` writes a statistics table, ``estimate`` runs one
pipeline on a table file, ``scan`` sweeps one axis and writes result rows,
``optimize`` tunes a plan at one operating point, ``figures`` renders the
bundled presets (CSV plus PNG side by side).

Config files are flat ``key = value`` text with ``#`` comments and
comma-separated lists. Angles are degrees at this interface and radians
inside. All output is deterministic for a fixed config and seed.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Any, Sequence

from .channel import ChannelConfig, expected_statistics, single_photon_truth
from .core import (
    DeviceParams,
    EstimationInfeasibleError,
    IntensityPlan,
    OriginalPlan,
    ParameterValidationError,
    SIGNAL_LABEL,
    StatTable,
)
from .improved import improved_pipeline
from .keyrate import (
    asymptotic_report,
    finite_report,
    ideal_asymptotic_report,
    key_rate_improved,
    key_rate_original,
)
from .optimizer import PsoConfig, optimize_plan
from .original import original_pipeline
from .sampling import allocate, observe

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3

_DEVICE_KEYS = ("eta_d", "p_d", "e_d", "f_e", "epsilon", "alpha_db_per_km")
_IMPROVED_KEYS = ("mu", "nu", "omega", "pr_mu", "pr_nu", "pr_omega")
_ORIGINAL_KEYS = (
    "original_nu",
    "original_omega",
    "original_pr_z",
    "original_pr_nu",
    "original_pr_omega",
)
_AXIS_KEYS = ("distance_km_list", "n_tot_list", "beta_deg_list")
_SCALAR_KEYS = (
    "protocol",
    "plan",
    "mode",
    "seed",
    "out",
    "clock_hz",
    "distance_km",
    "n_tot",
    "beta_deg",
    "table_path",
    "pso_swarm",
    "pso_iterations",
)
_KNOWN_KEYS = frozenset(_DEVICE_KEYS + _IMPROVED_KEYS + _ORIGINAL_KEYS + _AXIS_KEYS + _SCALAR_KEYS)

_PROTOCOLS = ("improved", "original", "both", "asymptotic")

_BASE_COLUMNS = (
    "L_km",
    "N_tot",
    "beta_deg",
    "protocol",
    "mu",
    "nu",
    "omega",
    "pr_mu",
    "pr_nu",
    "pr_omega",
    "y11_lower",
    "c_lower",
    "e11s_upper",
    "i_ae",
    "key_rate",
)


class ConfigError(Exception):
    """Config file or flag combination the run cannot proceed from."""


def _fmt(value: float | int | None) -> str:
    if value is None:
        return ""
    if isinstance(value, int):
        return str(value)
    return format(value, ".10g")


def parse_config_text(text: str) -> dict[str, str]:
    """Flat key = value lines; later duplicates win; unknown keys rejected."""
    raw: dict[str, str] = {}
    unknown: list[str] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected key = value, got {stripped!r}")
        key, value = (part.strip() for part in stripped.split("=", 1))
        if key not in _KNOWN_KEYS:
            unknown.append(key)
            continue
        raw[key] = value
    if unknown:
        raise ConfigError("unknown config keys: " + ", ".join(sorted(unknown)))
    return raw


def _parse_float(raw: dict[str, str], key: str) -> float | None:
    if key not in raw:
        return None
    try:
        return float(raw[key])
    except ValueError as exc:
        raise ConfigError(f"{key}: not a number: {raw[key]!r}") from exc


def _parse_list(raw: dict[str, str], key: str) -> list[float] | None:
    if key not in raw:
        return None
    items = [part.strip() for part in raw[key].split(",") if part.strip()]
    if not items:
        raise ConfigError(f"{key}: empty scan list")
    try:
        return [float(item) for item in items]
    except ValueError as exc:
        raise ConfigError(f"{key}: not a number list: {raw[key]!r}") from exc


@dataclass(frozen=True, slots=True)
class RunConfig:
    """Everything a subcommand needs, resolved from file plus flags."""

    device: DeviceParams
    protocol: str
    plan_directive: str
    improved_plan: IntensityPlan | None
    original_plan: OriginalPlan | None
    axis_name: str | None
    axis_values: tuple[float, ...]
    distance_km: float
    n_tot: int | None
    beta_deg: float
    mode: str
    seed: int
    out: str | None
    clock_hz: float | None
    table_path: str | None
    pso_swarm: int
    pso_iterations: int

    def device_at(self, beta_deg: float) -> DeviceParams:
        return replace(self.device, beta_a=0.0, beta_b=math.radians(beta_deg))

    def resolved(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "protocol": self.protocol,
            "plan": self.plan_directive,
            "mode": self.mode,
            "seed": self.seed,
            "distance_km": self.distance_km,
            "n_tot": self.n_tot,
            "beta_deg": self.beta_deg,
            "device": self.device.to_dict(),
        }
        if self.improved_plan is not None:
            out["improved_plan"] = self.improved_plan.to_dict()
        if self.original_plan is not None:
            out["original_plan"] = self.original_plan.to_dict()
        if self.axis_name is not None:
            out["axis"] = {self.axis_name: list(self.axis_values)}
        if self.clock_hz is not None:
            out["clock_hz"] = self.clock_hz
        return out


def build_run_config(raw: dict[str, str], args: argparse.Namespace) -> RunConfig:
    device_kwargs = {}
    for key in _DEVICE_KEYS:
        value = _parse_float(raw, key)
        if value is not None:
            device_kwargs[key] = value
    beta_deg = _parse_float(raw, "beta_deg") or 0.0
    try:
        device = DeviceParams.default(**device_kwargs)
        device = replace(device, beta_a=0.0, beta_b=math.radians(beta_deg))
    except ParameterValidationError as exc:
        raise ConfigError(str(exc)) from exc

    protocol = raw.get("protocol", "improved")
    if protocol not in _PROTOCOLS:
        raise ConfigError(f"protocol must be one of {_PROTOCOLS}, got {protocol!r}")
    plan_directive = raw.get("plan", "fixed")
    if plan_directive not in ("fixed", "optimize"):
        raise ConfigError(f"plan must be fixed or optimize, got {plan_directive!r}")

    improved_plan = None
    if all(key in raw for key in _IMPROVED_KEYS):
        try:
            improved_plan = IntensityPlan(**{k: float(raw[k]) for k in _IMPROVED_KEYS})
        except (ValueError, ParameterValidationError) as exc:
            raise ConfigError(f"improved plan: {exc}") from exc
    original_plan = None
    if all(key in raw for key in _ORIGINAL_KEYS):
        try:
            original_plan = OriginalPlan(
                nu=float(raw["original_nu"]),
                omega=float(raw["original_omega"]),
                pr_z=float(raw["original_pr_z"]),
                pr_nu=float(raw["original_pr_nu"]),
                pr_omega=float(raw["original_pr_omega"]),
            )
        except (ValueError, ParameterValidationError) as exc:
            raise ConfigError(f"original plan: {exc}") from exc

    axes = [(key, _parse_list(raw, key)) for key in _AXIS_KEYS]
    present = [(key, values) for key, values in axes if values is not None]
    if len(present) > 1:
        raise ConfigError("exactly one scan axis allowed, got " + ", ".join(k for k, _ in present))
    axis_name, axis_values = (present[0] if present else (None, []))

    n_tot_value = _parse_float(raw, "n_tot")
    mode = getattr(args, "mode", None) or raw.get("mode", "expected")
    if mode not in ("expected", "sampled"):
        raise ConfigError(f"mode must be expected or sampled, got {mode!r}")
    seed_flag = getattr(args, "seed", None)
    seed = seed_flag if seed_flag is not None else int(_parse_float(raw, "seed") or 0)
    clock_flag = getattr(args, "clock_hz", None)
    clock_hz = clock_flag if clock_flag is not None else _parse_float(raw, "clock_hz")

    return RunConfig(
        device=device,
        protocol=protocol,
        plan_directive=plan_directive,
        improved_plan=improved_plan,
        original_plan=original_plan,
        axis_name=axis_name.removesuffix("_list") if axis_name else None,
        axis_values=tuple(axis_values),
        distance_km=_parse_float(raw, "distance_km") or 0.0,
        n_tot=int(n_tot_value) if n_tot_value is not None else None,
        beta_deg=beta_deg,
        mode=mode,
        seed=seed,
        out=getattr(args, "out", None) or raw.get("out"),
        clock_hz=clock_hz,
        table_path=getattr(args, "table", None) or raw.get("table_path"),
        pso_swarm=int(_parse_float(raw, "pso_swarm") or 16),
        pso_iterations=int(_parse_float(raw, "pso_iterations") or 40),
    )


def load_run_config(args: argparse.Namespace) -> RunConfig:
    if not getattr(args, "config", None):
        raise ConfigError("--config is required")
    try:
        with open(args.config, "r", encoding="utf-8") as handle:
            text = handle.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    return build_run_config(parse_config_text(text), args)


# ---------------------------------------------------------------- scan ----


@dataclass(frozen=True, slots=True)
class _ScanPoint:
    index: int
    distance_km: float
    n_tot: int | None
    beta_deg: float


def _scan_points(cfg: RunConfig) -> list[_ScanPoint]:
    if cfg.axis_name is None:
        raise ConfigError("scan needs one of distance_km_list, n_tot_list, beta_deg_list")
    points = []
    for index, value in enumerate(cfg.axis_values):
        distance = value if cfg.axis_name == "distance_km" else cfg.distance_km
        beta = value if cfg.axis_name == "beta_deg" else cfg.beta_deg
        if cfg.axis_name == "n_tot":
            n_tot: int | None = int(value)
        else:
            n_tot = cfg.n_tot
        points.append(_ScanPoint(index=index, distance_km=distance, n_tot=n_tot, beta_deg=beta))
    return points


def _protocol_rows(cfg: RunConfig) -> list[str]:
    if cfg.protocol == "both":
        return ["improved", "original"]
    return [cfg.protocol]


def _plan_for(cfg: RunConfig, protocol: str) -> IntensityPlan | OriginalPlan:
    if protocol == "original":
        if cfg.original_plan is None:
            raise ConfigError("original protocol needs the original_* plan keys")
        return cfg.original_plan
    if cfg.improved_plan is None:
        if protocol == "asymptotic" and cfg.original_plan is not None:
            return cfg.original_plan
        raise ConfigError(f"{protocol} protocol needs the mu/nu/omega plan keys")
    return cfg.improved_plan


def _optimized_plan(
    cfg: RunConfig, protocol: str, point: _ScanPoint
) -> IntensityPlan | OriginalPlan:
    initial = []
    try:
        initial.append(_plan_for(cfg, protocol))
    except ConfigError:
        pass

    def rate_of(plan: IntensityPlan | OriginalPlan) -> float:
        chan = ChannelConfig(
            device=cfg.device_at(point.beta_deg), distance_km=point.distance_km, plan=plan
        )
        if point.n_tot is None:
            return asymptotic_report(chan).rate
        return finite_report(chan, point.n_tot, mode="expected").rate

    pso = PsoConfig(
        swarm_size=cfg.pso_swarm, iterations=cfg.pso_iterations, seed=cfg.seed + point.index
    )
    best, _result = optimize_plan(rate_of, protocol, pso, initial_plans=initial or None)
    return best


def _row_for(cfg: RunConfig, point: _ScanPoint, protocol: str) -> dict[str, Any]:
    plan = (
        _optimized_plan(cfg, protocol, point)
        if cfg.plan_directive == "optimize" and protocol in ("improved", "original")
        else _plan_for(cfg, protocol)
    )
    chan = ChannelConfig(
        device=cfg.device_at(point.beta_deg), distance_km=point.distance_km, plan=plan
    )
    row: dict[str, Any] = {
        "L_km": point.distance_km,
        "N_tot": point.n_tot if protocol != "asymptotic" else None,
        "beta_deg": point.beta_deg,
        "protocol": protocol,
        "diagnostic": "",
    }
    if isinstance(plan, IntensityPlan):
        row.update(
            mu=plan.mu, nu=plan.nu, omega=plan.omega,
            pr_mu=plan.pr_mu, pr_nu=plan.pr_nu, pr_omega=plan.pr_omega,
        )
    else:
        row.update(
            mu=None, nu=plan.nu, omega=plan.omega,
            pr_mu=None, pr_nu=plan.pr_nu, pr_omega=plan.pr_omega,
        )
    try:
        if protocol == "asymptotic":
            report = ideal_asymptotic_report(chan)
        elif point.n_tot is None:
            report = asymptotic_report(chan)
        else:
            report = finite_report(
                chan, point.n_tot, mode=cfg.mode, seed=cfg.seed + point.index
            )
    except EstimationInfeasibleError as exc:
        row.update(y11_lower=0.0, c_lower=0.0, e11s_upper=1.0, i_ae=1.0, key_rate=0.0)
        row["diagnostic"] = f"infeasible: {exc}"
        return row
    row.update(
        y11_lower=report.y11_lower,
        c_lower=report.c_lower,
        e11s_upper=report.e11s_upper,
        i_ae=report.i_ae,
        key_rate=report.rate,
    )
    return row


def _scan_worker(payload: tuple[RunConfig, _ScanPoint, str]) -> dict[str, Any]:
    cfg, point, protocol = payload
    return _row_for(cfg, point, protocol)


def scan_rows(cfg: RunConfig, jobs: int = 1) -> list[dict[str, Any]]:
    tasks = [
        (cfg, point, protocol)
        for point in _scan_points(cfg)
        for protocol in _protocol_rows(cfg)
    ]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_scan_worker, tasks))
    return [_scan_worker(task) for task in tasks]


def write_rows(rows: Sequence[dict[str, Any]], out_path: str, clock_hz: float | None) -> None:
    columns = list(_BASE_COLUMNS)
    if clock_hz is not None:
        columns.append("bits_per_second")
    columns.append("diagnostic")
    with open(out_path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(columns)
        for row in rows:
            record = dict(row)
            if clock_hz is not None:
                record["bits_per_second"] = record["key_rate"] * clock_hz
            writer.writerow(
                [
                    record[col] if col in ("protocol", "diagnostic") else _fmt(record[col])
                    for col in columns
                ]
            )


def write_summary(cfg: RunConfig, out_path: str, extra: dict[str, Any]) -> str:
    summary_path = out_path.rsplit(".", 1)[0] + ".summary.json" if "." in out_path else out_path + ".summary.json"
    payload = {"configuration": cfg.resolved(), **extra}
    with open(summary_path, "w", encoding="utf-8") as handle:
        json.dump(payload, handle, indent=2, sort_keys=True)
        handle.write("\n")
    return summary_path


# ---------------------------------------------------------- subcommands ----


def cmd_scan(args: argparse.Namespace) -> int:
    cfg = load_run_config(args)
    if cfg.out is None:
        raise ConfigError("scan needs --out (or an out key in the config)")
    rows = scan_rows(cfg, jobs=args.jobs)
    write_rows(rows, cfg.out, cfg.clock_hz)
    write_summary(cfg, cfg.out, {"rows": len(rows), "subcommand": "scan"})
    infeasible = sum(1 for row in rows if row["diagnostic"])
    if infeasible:
        print(f"scan: {infeasible} of {len(rows)} rows infeasible (diagnostic column)", file=sys.stderr)
    print(f"wrote {len(rows)} rows to {cfg.out}")
    return EXIT_OK


def cmd_simulate(args: argparse.Namespace) -> int:
    cfg = load_run_config(args)
    if cfg.out is None:
        raise ConfigError("simulate needs --out (or an out key in the config)")
    protocol = cfg.protocol if cfg.protocol in ("improved", "original") else "improved"
    plan = _plan_for(cfg, protocol)
    chan = ChannelConfig(device=cfg.device_at(cfg.beta_deg), distance_km=cfg.distance_km, plan=plan)
    table = expected_statistics(chan)
    if cfg.n_tot is not None:
        table = observe(table, allocate(plan, cfg.n_tot), mode=cfg.mode, seed=cfg.seed)
    table.to_csv(cfg.out)
    write_summary(cfg, cfg.out, {"cells": len(table.cells), "subcommand": "simulate"})
    print(f"wrote {len(table.cells)} cells to {cfg.out}")
    return EXIT_OK


def cmd_estimate(args: argparse.Namespace) -> int:
    cfg = load_run_config(args)
    if cfg.table_path is None:
        raise ConfigError("estimate needs --table (or a table_path key in the config)")
    protocol = cfg.protocol
    if protocol not in ("improved", "original"):
        raise ConfigError("estimate needs protocol = improved or original")
    plan = _plan_for(cfg, protocol)
    try:
        table = StatTable.from_csv(cfg.table_path, intensities=plan.intensities())
    except OSError as exc:
        raise ConfigError(f"cannot read table {cfg.table_path}: {exc}") from exc
    eps = cfg.device.epsilon
    payload: dict[str, Any]
    if protocol == "improved":
        assert isinstance(plan, IntensityPlan)
        estimates = improved_pipeline(table, eps)
        report = key_rate_improved(estimates, table, plan, cfg.device)
        payload = {
            "y11_lower": estimates.y11_lower,
            "c_lower": estimates.c_lower,
            "e11s_upper": estimates.e11s_upper,
        }
    else:
        assert isinstance(plan, OriginalPlan)
        estimates = original_pipeline(table, eps)
        report = key_rate_original(estimates, table, plan, cfg.device)
        payload = {
            "y11_lower": estimates.y11_lower["ZZ"],
            "y11_lower_per_basis": estimates.y11_lower,
            "c_lower": estimates.c_lower,
            "e11s_upper": estimates.e11_upper["ZZ"],
        }
    payload.update(i_ae=report.i_ae, key_rate=report.rate, protocol=protocol)
    if cfg.clock_hz is not None:
        payload["bits_per_second"] = report.rate * cfg.clock_hz
    text = json.dumps({"configuration": cfg.resolved(), "estimates": payload}, indent=2, sort_keys=True)
    if cfg.out:
        with open(cfg.out, "w", encoding="utf-8") as handle:
            handle.write(text + "\n")
        print(f"wrote estimates to {cfg.out}")
    else:
        print(text)
    return EXIT_OK


def cmd_optimize(args: argparse.Namespace) -> int:
    cfg = load_run_config(args)
    protocol = cfg.protocol
    if protocol not in ("improved", "original"):
        raise ConfigError("optimize needs protocol = improved or original")
    point = _ScanPoint(index=0, distance_km=cfg.distance_km, n_tot=cfg.n_tot, beta_deg=cfg.beta_deg)
    plan = _optimized_plan(cfg, protocol, point)
    chan = ChannelConfig(device=cfg.device_at(cfg.beta_deg), distance_km=cfg.distance_km, plan=plan)
    if cfg.n_tot is None:
        report = asymptotic_report(chan)
    else:
        report = finite_report(chan, cfg.n_tot, mode="expected")
    payload = {
        "configuration": cfg.resolved(),
        "best_plan": plan.to_dict(),
        "key_rate": report.rate,
        "y11_lower": report.y11_lower,
        "c_lower": report.c_lower,
    }
    text = json.dumps(payload, indent=2, sort_keys=True)
    if cfg.out:
        with open(cfg.out, "w", encoding="utf-8") as handle:
            handle.write(text + "\n")
        print(f"wrote optimum to {cfg.out}")
    else:
        print(text)
    return EXIT_OK


def cmd_figures(args: argparse.Namespace) -> int:
    from . import figures

    names = [args.preset] if args.preset else list(figures.PRESETS)
    device = None
    if getattr(args, "config", None):
        device_cfg = load_run_config(args)
        device = device_cfg.device
    written: list[str] = []
    for name in names:
        if name not in figures.PRESETS:
            raise ConfigError(
                f"unknown preset {name!r}; available: {', '.join(sorted(figures.PRESETS))}"
            )
        paths = figures.render_preset(name, args.out, device=device, optimize=args.optimize)
        written.extend(paths)
    for path in written:
        print(f"wrote {path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rfimdi", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, config_required: bool = True) -> None:
        p.add_argument("--config", required=config_required, help="flat key = value config file")
        p.add_argument("--out", help="output path")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--mode", choices=("expected", "sampled"), help="observation mode")
        p.add_argument("--clock-hz", dest="clock_hz", type=float, help="emit a bits_per_second column")

    p_scan = sub.add_parser("scan", help="sweep one axis, one CSV row per point and protocol")
    common(p_scan)
    p_scan.add_argument("--jobs", type=int, default=1, help="parallel scan workers")
    p_scan.set_defaults(func=cmd_scan)

    p_sim = sub.add_parser("simulate", help="write a statistics table CSV")
    common(p_sim)
    p_sim.set_defaults(func=cmd_simulate)

    p_est = sub.add_parser("estimate", help="run one pipeline on a statistics table CSV")
    common(p_est)
    p_est.add_argument("--table", help="statistics table CSV path")
    p_est.set_defaults(func=cmd_estimate)

    p_opt = sub.add_parser("optimize", help="swarm-search a plan at one operating point")
    common(p_opt)
    p_opt.set_defaults(func=cmd_optimize)

    p_fig = sub.add_parser("figures", help="render the bundled presets (CSV + PNG)")
    p_fig.add_argument("--config", help="optional config supplying device parameters")
    p_fig.add_argument("--out", default="figures-out", help="output directory")
    p_fig.add_argument("--seed", type=int, help="unused, accepted for symmetry")
    p_fig.add_argument("--mode", choices=("expected", "sampled"), help="unused, accepted for symmetry")
    p_fig.add_argument("--clock-hz", dest="clock_hz", type=float, help="unused, accepted for symmetry")
    p_fig.add_argument("--preset", help="render a single preset by name")
    p_fig.add_argument("--optimize", action="store_true", help="swarm-tune plans per anchor before rendering")
    p_fig.set_defaults(func=cmd_figures)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ParameterValidationError as exc:
        print(f"invalid parameters: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except EstimationInfeasibleError as exc:
        print(f"estimation infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE


if __name__ == "__main__":
    sys.exit(main())
