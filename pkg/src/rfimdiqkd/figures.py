"""Bundled figure presets: each renders a CSV and a PNG side by side.

Plans are fixed reference plans per distance anchor (hand-tuned during
development); pass ``optimize=True`` to swarm-polish them first. All presets
run in expected-value mode, so the CSV is deterministic.
"""

from __future__ import annotations

import csv
import math
import os
from typing import Iterable

from .channel import ChannelConfig, expected_statistics
from .core import DeviceParams, IntensityPlan, OriginalPlan
from .improved import improved_pipeline, per_basis_estimates
from .keyrate import asymptotic_report, finite_report, ideal_asymptotic_report
from .optimizer import PsoConfig, optimize_plan
from .sampling import allocate, observe

PARAMS = {
    "estimates_plan": IntensityPlan(mu=0.5, nu=0.2, omega=0.05, pr_mu=0.25, pr_nu=0.25, pr_omega=0.25),
    "estimates_distance_km": 10.0,
    "estimates_n_grid": [10.0 ** (k / 2.0) for k in range(18, 29)],
    "distance_grid_km": [float(L) for L in range(0, 151, 10)],
    "distance_n_grid": [1e10, 1e11, 1e12],
    "rate_n_grid": [10.0 ** k for k in range(9, 19)],
    "rate_n_distances_km": [20.0, 40.0],
    "misaligned_beta_deg": 25.0,
    "anchor_boundary_km": 15.0,
    "pso_budget": (10, 20),
}

# (improved, original) reference plans keyed by distance anchor
ANCHOR_PLANS = {
    10.0: (
        IntensityPlan(mu=0.6, nu=0.3, omega=0.1, pr_mu=0.5, pr_nu=0.15, pr_omega=0.25),
        OriginalPlan(nu=0.5, omega=0.1, pr_z=0.3, pr_nu=0.3, pr_omega=0.45),
    ),
    20.0: (
        IntensityPlan(mu=0.8, nu=0.3, omega=0.08, pr_mu=0.45, pr_nu=0.1, pr_omega=0.3),
        OriginalPlan(nu=0.45, omega=0.1, pr_z=0.25, pr_nu=0.3, pr_omega=0.45),
    ),
}


def _anchor_plans(distance_km: float) -> tuple[IntensityPlan, OriginalPlan]:
    anchor = 10.0 if distance_km <= PARAMS["anchor_boundary_km"] else 20.0
    return ANCHOR_PLANS[anchor]


def _maybe_optimize(
    plans: tuple[IntensityPlan, OriginalPlan],
    device: DeviceParams,
    distance_km: float,
    n_tot: int,
    optimize: bool,
) -> tuple[IntensityPlan, OriginalPlan]:
    if not optimize:
        return plans
    swarm, iters = PARAMS["pso_budget"]
    tuned = []
    for protocol, plan in zip(("improved", "original"), plans):
        def rate_of(candidate, _d=distance_km):
            chan = ChannelConfig(device=device, distance_km=_d, plan=candidate)
            return finite_report(chan, n_tot, mode="expected").rate

        best, _result = optimize_plan(
            rate_of,
            protocol,
            PsoConfig(swarm_size=swarm, iterations=iters, seed=7),
            initial_plans=[plan],
        )
        tuned.append(best)
    return tuned[0], tuned[1]


def _write_csv(path: str, header: list[str], rows: Iterable[list]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        for row in rows:
            writer.writerow([format(v, ".10g") if isinstance(v, float) else v for v in row])


def _new_axes(n_panels: int):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, axes = plt.subplots(1, n_panels, figsize=(6.0 * n_panels, 4.5))
    return plt, fig, (axes if n_panels > 1 else [axes])


def _masked(values: list[float]) -> list[float]:
    return [v if v > 0.0 else math.nan for v in values]


def render_estimates_vs_n(out_dir: str, device: DeviceParams, optimize: bool) -> list[str]:
    """Pooled vs per-basis certified values as the data size grows."""
    plan = PARAMS["estimates_plan"]
    chan = ChannelConfig(device=device, distance_km=PARAMS["estimates_distance_km"], plan=plan)
    expected = expected_statistics(chan)
    zero_width = improved_pipeline(expected, None)
    eps = device.epsilon
    rows = []
    for n_tot in PARAMS["estimates_n_grid"]:
        observed = observe(expected, allocate(plan, int(n_tot)), mode="expected")
        imp = improved_pipeline(observed, eps)
        base = per_basis_estimates(observed, eps)
        rows.append(
            [
                n_tot,
                imp.y11_lower,
                max(base.y11_lower.values()),
                imp.c_lower,
                base.c_lower,
                zero_width.y11_lower,
                zero_width.c_lower,
            ]
        )
    csv_path = os.path.join(out_dir, "estimates_vs_n.csv")
    _write_csv(
        csv_path,
        ["n_tot", "y11_improved", "y11_original", "c_improved", "c_original",
         "y11_asymptote", "c_asymptote"],
        rows,
    )
    plt, fig, axes = _new_axes(2)
    n = [row[0] for row in rows]
    axes[0].semilogx(n, [row[1] for row in rows], "o-", label="pooled")
    axes[0].semilogx(n, [row[2] for row in rows], "s--", label="per basis")
    axes[0].axhline(rows[0][5], color="k", ls="-.", lw=1, label="zero width")
    axes[0].set_xlabel("trials")
    axes[0].set_ylabel("certified single-photon yield")
    axes[0].legend()
    axes[1].semilogx(n, [row[3] for row in rows], "o-", label="pooled")
    axes[1].semilogx(n, [row[4] for row in rows], "s--", label="per basis")
    axes[1].axhline(rows[0][6], color="k", ls="-.", lw=1, label="zero width")
    axes[1].set_xlabel("trials")
    axes[1].set_ylabel("certified frame quality")
    axes[1].legend()
    fig.tight_layout()
    png_path = os.path.join(out_dir, "estimates_vs_n.png")
    fig.savefig(png_path, dpi=150)
    plt.close(fig)
    return [csv_path, png_path]


def _rate_vs_distance_rows(device: DeviceParams, optimize: bool) -> list[list[float]]:
    n_grid = PARAMS["distance_n_grid"]
    rows = []
    for distance in PARAMS["distance_grid_km"]:
        imp_plan, orig_plan = _anchor_plans(distance)
        imp_plan, orig_plan = _maybe_optimize(
            (imp_plan, orig_plan), device, distance, int(n_grid[0]), optimize
        )
        row = [distance]
        for n_tot in n_grid:
            for plan in (imp_plan, orig_plan):
                chan = ChannelConfig(device=device, distance_km=distance, plan=plan)
                row.append(finite_report(chan, int(n_tot), mode="expected").rate)
        chan = ChannelConfig(device=device, distance_km=distance, plan=imp_plan)
        row.append(ideal_asymptotic_report(chan).rate)
        rows.append(row)
    return rows


def _render_rate_vs_distance(out_dir: str, device: DeviceParams, optimize: bool, stem: str) -> list[str]:
    rows = _rate_vs_distance_rows(device, optimize)
    header = ["L_km"]
    for n_tot in PARAMS["distance_n_grid"]:
        label = format(n_tot, ".0e").replace("+", "")
        header.extend([f"rate_improved_{label}", f"rate_original_{label}"])
    header.append("rate_asymptote")
    csv_path = os.path.join(out_dir, f"{stem}.csv")
    _write_csv(csv_path, header, rows)
    plt, fig, axes = _new_axes(1)
    ax = axes[0]
    distances = [row[0] for row in rows]
    for j, n_tot in enumerate(PARAMS["distance_n_grid"]):
        label = format(n_tot, ".0e").replace("+", "")
        ax.semilogy(distances, _masked([row[1 + 2 * j] for row in rows]), "-", label=f"pooled {label}")
        ax.semilogy(distances, _masked([row[2 + 2 * j] for row in rows]), "--", label=f"per basis {label}")
    ax.semilogy(distances, _masked([row[-1] for row in rows]), "k-.", lw=1, label="asymptote")
    ax.set_xlabel("distance / km")
    ax.set_ylabel("key rate per pulse pair")
    ax.legend(fontsize=8)
    fig.tight_layout()
    png_path = os.path.join(out_dir, f"{stem}.png")
    fig.savefig(png_path, dpi=150)
    plt.close(fig)
    return [csv_path, png_path]


def render_rate_vs_distance(out_dir: str, device: DeviceParams, optimize: bool) -> list[str]:
    """Finite-data rates against distance with the shared ideal asymptote."""
    return _render_rate_vs_distance(out_dir, device, optimize, "rate_vs_distance")


def render_rate_vs_distance_misaligned(out_dir: str, device: DeviceParams, optimize: bool) -> list[str]:
    from dataclasses import replace

    tilted = replace(device, beta_a=0.0, beta_b=math.radians(PARAMS["misaligned_beta_deg"]))
    return _render_rate_vs_distance(out_dir, tilted, optimize, "rate_vs_distance_misaligned")


def render_rate_vs_n(out_dir: str, device: DeviceParams, optimize: bool) -> list[str]:
    """Rate against data size at two distances, with asymptote levels."""
    rows = []
    plans = {d: _anchor_plans(d) for d in PARAMS["rate_n_distances_km"]}
    asymptotes = {}
    for distance, (imp_plan, _orig) in plans.items():
        chan = ChannelConfig(device=device, distance_km=distance, plan=imp_plan)
        asymptotes[distance] = ideal_asymptotic_report(chan).rate
    for n_tot in PARAMS["rate_n_grid"]:
        row = [n_tot]
        for distance in PARAMS["rate_n_distances_km"]:
            imp_plan, orig_plan = plans[distance]
            for plan in (imp_plan, orig_plan):
                chan = ChannelConfig(device=device, distance_km=distance, plan=plan)
                row.append(finite_report(chan, int(n_tot), mode="expected").rate)
        rows.append(row)
    header = ["n_tot"]
    for distance in PARAMS["rate_n_distances_km"]:
        header.extend([f"rate_improved_{int(distance)}km", f"rate_original_{int(distance)}km"])
    csv_path = os.path.join(out_dir, "rate_vs_n.csv")
    _write_csv(csv_path, header, rows)
    plt, fig, axes = _new_axes(1)
    ax = axes[0]
    n = [row[0] for row in rows]
    for i, distance in enumerate(PARAMS["rate_n_distances_km"]):
        ax.loglog(n, _masked([row[1 + 2 * i] for row in rows]), "-", label=f"pooled {int(distance)} km")
        ax.loglog(n, _masked([row[2 + 2 * i] for row in rows]), "--", label=f"per basis {int(distance)} km")
        ax.axhline(asymptotes[distance], color="k", ls="-.", lw=0.8)
    ax.set_xlabel("trials")
    ax.set_ylabel("key rate per pulse pair")
    ax.legend(fontsize=8)
    fig.tight_layout()
    png_path = os.path.join(out_dir, "rate_vs_n.png")
    fig.savefig(png_path, dpi=150)
    plt.close(fig)
    return [csv_path, png_path]


PRESETS = {
    "estimates-vs-n": render_estimates_vs_n,
    "rate-vs-distance": render_rate_vs_distance,
    "rate-vs-distance-misaligned": render_rate_vs_distance_misaligned,
    "rate-vs-n": render_rate_vs_n,
}


def render_preset(
    name: str,
    out_dir: str,
    device: DeviceParams | None = None,
    optimize: bool = False,
) -> list[str]:
    os.makedirs(out_dir, exist_ok=True)
    return PRESETS[name](out_dir, device or DeviceParams.default(), optimize)


def render_all(out_dir: str, device: DeviceParams | None = None, optimize: bool = False) -> list[str]:
    paths: list[str] = []
    for name in PRESETS:
        paths.extend(render_preset(name, out_dir, device=device, optimize=optimize))
    return paths
