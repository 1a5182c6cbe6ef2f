"""Command-line scenario runner.

Commands: ``validate | solve | simulate | cost | effects | reproduce-figures``,
each taking a registered scenario name (S1-S7) or a YAML scenario file.
Outputs are CSV files plus one SVG per plot panel, written under ``--out``
(default: ``$LOBEXEC_OUT`` or ``./lobexec-out``), together with a
``seed_report.json`` provenance record.
"""

from __future__ import annotations

import json
import sys
from dataclasses import dataclass
from pathlib import Path

import click
import matplotlib
import numpy as np
import yaml

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from . import rng
from .cost import BASELINE_NAMES, baseline_trades, cost_report_csv, expected_cost
from .effects import PREMATURE_TOL, classify_effects
from .model import (
    InitialCondition,
    ParameterSchedule,
    ParameterSegment,
    RegimeChain,
    RhoFormula,
    build_schedule,
    make_grid,
    validate_assumptions,
)
from .regime import check_regime_bounds, solve_regime_Y
from .scenarios import SCENARIO_NAMES, Scenario, scenario
from .simulate import (
    bundle_to_csv,
    exponential_Q,
    optimal_strategy_path,
    sample_gamma,
)
from .value_ode import beta_from_Y, solve_Y_backward

_GRID_DEFAULT = 4000
_PATHS_DEFAULT = 10_000
_SEED_DEFAULT = 42


@dataclass(frozen=True)
class LoadedScenario:
    """A scenario resolved from a registered name or a YAML file."""

    name: str
    schedule: ParameterSchedule | None
    chain: RegimeChain | None
    ic: InitialCondition
    kappa: float | None = None
    run_defaults: dict | None = None
    out_dir: str | None = None


def _reject_unknown(block: dict, allowed: set[str], where: str) -> None:
    unknown = set(block) - allowed
    if unknown:
        raise click.ClickException(
            f"unknown keys in {where}: {', '.join(sorted(unknown))}"
        )


def _segment_from_dict(d: dict, horizon: float) -> ParameterSegment:
    _reject_unknown(d, {"start", "end", "rho", "rho_formula", "mu", "sigma"}, "segment")
    for key in ("start", "end", "mu", "sigma"):
        if key not in d:
            raise click.ClickException(f"segment missing required key {key!r}")
    formula = None
    rho = d.get("rho", 0.0)
    if "rho_formula" in d:
        if "rho" in d:
            raise click.ClickException("segment has both rho and rho_formula")
        f = d["rho_formula"]
        _reject_unknown(f, {"family", "kappa"}, "rho_formula")
        formula = RhoFormula(family=f["family"], kappa=float(f["kappa"]), horizon=horizon)
    elif "rho" not in d:
        raise click.ClickException("segment needs rho or rho_formula")
    return ParameterSegment(
        start=float(d["start"]),
        end=float(d["end"]),
        rho=float(rho),
        mu=float(d["mu"]),
        sigma=float(d["sigma"]),
        rho_formula=formula,
    )


def _load_yaml_scenario(path: Path) -> LoadedScenario:
    try:
        raw = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise click.ClickException(f"cannot parse {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise click.ClickException(f"{path}: top level must be a mapping")
    _reject_unknown(raw, {"scenario", "model", "initial", "run", "outputs"}, "scenario file")
    for key in ("scenario", "model", "initial"):
        if key not in raw:
            raise click.ClickException(f"{path}: missing required block {key!r}")

    model = raw["model"]
    _reject_unknown(model, {"horizon", "segments", "chain"}, "model block")
    schedule = None
    chain = None
    if "segments" in model:
        if "horizon" not in model:
            raise click.ClickException("model block with segments needs horizon")
        horizon = float(model["horizon"])
        segs = [_segment_from_dict(s, horizon) for s in model["segments"]]
        schedule = build_schedule(segs, horizon)
    if "chain" in model:
        if schedule is not None:
            raise click.ClickException("model block has both segments and chain")
        c = model["chain"]
        _reject_unknown(c, {"states", "generator", "initial_state"}, "chain block")
        chain = RegimeChain(
            states=tuple(tuple(float(v) for v in row) for row in c["states"]),
            generator=np.asarray(c["generator"], dtype=float),
            initial_state=int(c.get("initial_state", 0)),
        )
    if schedule is None and chain is None:
        raise click.ClickException("model block needs segments or chain")

    init = raw["initial"]
    _reject_unknown(init, {"x", "d", "gamma0"}, "initial block")
    ic = InitialCondition(
        x=float(init["x"]), d=float(init.get("d", 0.0)), gamma0=float(init.get("gamma0", 1.0))
    )

    run = raw.get("run", {})
    _reject_unknown(run, {"grid", "paths", "seed"}, "run block")
    outputs = raw.get("outputs", {})
    _reject_unknown(outputs, {"directory", "formats"}, "outputs block")
    return LoadedScenario(
        name=str(raw["scenario"]),
        schedule=schedule,
        chain=chain,
        ic=ic,
        run_defaults={k: int(v) for k, v in run.items()},
        out_dir=outputs.get("directory"),
    )


def _resolve(name_or_path: str) -> LoadedScenario:
    key = name_or_path.upper()
    if key in SCENARIO_NAMES:
        s: Scenario = scenario(key)
        return LoadedScenario(name=key, schedule=s.schedule, chain=None, ic=s.ic, kappa=s.kappa)
    path = Path(name_or_path)
    if not path.exists():
        raise click.ClickException(
            f"{name_or_path!r} is neither a registered scenario "
            f"({', '.join(SCENARIO_NAMES)}) nor an existing file"
        )
    return _load_yaml_scenario(path)


def _effective(loaded: LoadedScenario, grid: int | None, paths: int | None, seed: int | None):
    run = loaded.run_defaults or {}
    return (
        grid if grid is not None else run.get("grid", _GRID_DEFAULT),
        paths if paths is not None else run.get("paths", _PATHS_DEFAULT),
        seed if seed is not None else run.get("seed", _SEED_DEFAULT),
    )


def _out_dir(out: str | None, loaded: LoadedScenario, ctx_default: str) -> Path:
    base = out or loaded.out_dir or ctx_default
    directory = Path(base) / loaded.name
    directory.mkdir(parents=True, exist_ok=True)
    return directory


def _write_seed_report(directory: Path, seed: int, grid: int, paths: int) -> None:
    report = {
        "rng": rng.describe(seed),
        "steps_per_unit": grid,
        "n_paths": paths,
        "tolerances": {
            "value_bounds": 1e-10,
            "effect_product": PREMATURE_TOL,
            "boundary_match": 1e-12,
        },
    }
    (directory / "seed_report.json").write_text(json.dumps(report, indent=2))


def _panel(directory: Path, stem: str, x, series, ylabel: str, title: str) -> None:
    fig, ax = plt.subplots(figsize=(4.0, 3.0))
    for label, y in series:
        ax.plot(x, y, label=label, linewidth=1.2)
    ax.set_xlabel("t")
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    if len(series) > 1:
        ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(directory / f"{stem}.svg")
    plt.close(fig)


def _solve_deterministic(loaded: LoadedScenario, grid: int):
    Y = solve_Y_backward(loaded.schedule, grid)
    beta = beta_from_Y(loaded.schedule, Y)
    return Y, beta


def _one_path(loaded: LoadedScenario, beta, seed: int, path_index: int = 0):
    bundle = sample_gamma(loaded.schedule, beta.grid, seed, gamma0=loaded.ic.gamma0,
                          path_index=path_index)
    bundle = exponential_Q(beta, loaded.schedule, bundle)
    return (bundle, *optimal_strategy_path(loaded.ic, beta, bundle))


@click.group()
@click.option("--out", "out_default", envvar="LOBEXEC_OUT", default="lobexec-out",
              show_default=True, help="Base output directory (env: LOBEXEC_OUT).")
@click.pass_context
def main(ctx: click.Context, out_default: str) -> None:
    """Solve, simulate, and evaluate limit-order-book execution scenarios."""
    ctx.obj = {"out_default": out_default}


def _common_options(fn):
    fn = click.argument("scenario_ref", metavar="SCENARIO")(fn)
    fn = click.option("--grid", type=int, default=None, help=f"Grid steps per unit time [default: {_GRID_DEFAULT}].")(fn)
    fn = click.option("--paths", type=int, default=None, help=f"Monte Carlo path count [default: {_PATHS_DEFAULT}].")(fn)
    fn = click.option("--seed", type=int, default=None, help=f"Base RNG seed [default: {_SEED_DEFAULT}].")(fn)
    fn = click.option("--out", default=None, help="Output directory override.")(fn)
    return fn


@main.command()
@_common_options
@click.pass_context
def validate(ctx, scenario_ref, grid, paths, seed, out):
    """Check model assumptions for a scenario and print the margin report."""
    loaded = _resolve(scenario_ref)
    if loaded.chain is not None:
        click.echo(f"{loaded.name}: regime chain with {len(loaded.chain.states)} states, "
                   f"eps_bar={loaded.chain.eps_bar:.6g}, c_bar={loaded.chain.c_bar:.6g}")
        click.echo("ok")
        return
    report = validate_assumptions(loaded.schedule)
    click.echo(f"{loaded.name}: horizon={loaded.schedule.horizon}, "
               f"segments={len(loaded.schedule.segments)}")
    click.echo(f"eps_bar={report.eps_bar:.6g}  c_bar={report.c_bar:.6g}")
    if loaded.kappa is not None:
        click.echo(f"kappa={loaded.kappa:.6g}")
    if not report.ok:
        raise click.ClickException("assumption check failed: " + "; ".join(report.messages))
    click.echo("ok")


@main.command()
@_common_options
@click.pass_context
def solve(ctx, scenario_ref, grid, paths, seed, out):
    """Solve the value process Y and feedback coefficient beta; write CSVs and plots."""
    loaded = _resolve(scenario_ref)
    grid, paths, seed = _effective(loaded, grid, paths, seed)
    directory = _out_dir(out, loaded, ctx.obj["out_default"])
    if loaded.chain is not None:
        horizon = 1.0
        surface = solve_regime_Y(loaded.chain, grid, horizon=horizon)
        surface.to_csv(directory / "value_surface.csv")
        bounds = check_regime_bounds(surface)
        series = [(f"state {i}", surface.values[:, i]) for i in range(len(loaded.chain.states))]
        _panel(directory, "value", surface.grid, series, "Y", loaded.name)
        _write_seed_report(directory, seed, grid, paths)
        click.echo(f"wrote {directory}/value_surface.csv (bounds ok: {bounds.ok})")
        return
    Y, beta = _solve_deterministic(loaded, grid)
    Y.to_csv(directory / "value.csv")
    beta.to_csv(directory / "beta.csv")
    _panel(directory, "value", Y.grid, [("Y", Y.values)], "Y", loaded.name)
    _panel(directory, "beta", beta.grid, [("beta", beta.values)], "beta", loaded.name)
    _write_seed_report(directory, seed, grid, paths)
    click.echo(f"wrote {directory}/value.csv and {directory}/beta.csv  (Y0={Y.values[0]:.12g})")


@main.command()
@_common_options
@click.option("--sample-paths", "n_sample", type=int, default=3, show_default=True,
              help="Number of sample-path CSVs to write.")
@click.pass_context
def simulate(ctx, scenario_ref, grid, paths, seed, out, n_sample):
    """Simulate optimal-strategy paths; write per-path CSVs and plots."""
    loaded = _resolve(scenario_ref)
    if loaded.chain is not None:
        raise click.ClickException("simulate supports schedule scenarios; use solve for chains")
    grid, paths, seed = _effective(loaded, grid, paths, seed)
    directory = _out_dir(out, loaded, ctx.obj["out_default"])
    _, beta = _solve_deterministic(loaded, grid)
    n_sample = 1 if loaded.schedule.sigma_is_zero else n_sample
    for i in range(n_sample):
        bundle, X, D = _one_path(loaded, beta, seed, path_index=i)
        bundle_to_csv(directory / f"path_{i:03d}.csv", bundle, X, D)
        if i == 0:
            _panel(directory, "strategy", X.grid, [("X*", X.values)], "X*", loaded.name)
            _panel(directory, "deviation", D.grid, [("D*", D.values)], "D*", loaded.name)
    _write_seed_report(directory, seed, grid, paths)
    click.echo(f"wrote {n_sample} path CSV(s) to {directory}")


@main.command()
@_common_options
@click.pass_context
def cost(ctx, scenario_ref, grid, paths, seed, out):
    """Evaluate expected execution cost of the optimal strategy and baselines."""
    loaded = _resolve(scenario_ref)
    if loaded.chain is not None:
        raise click.ClickException("cost supports schedule scenarios only")
    grid, paths, seed = _effective(loaded, grid, paths, seed)
    directory = _out_dir(out, loaded, ctx.obj["out_default"])
    rows = []
    report = expected_cost("optimal", loaded.schedule, loaded.ic,
                           steps_per_unit=grid, n_paths=paths, seed=seed)
    rows.append(("optimal", report))
    g = make_grid(loaded.schedule, grid)
    for name in BASELINE_NAMES:
        trades = baseline_trades(name, loaded.schedule, loaded.ic, g)
        rows.append((name, expected_cost(trades, loaded.schedule, loaded.ic,
                                         steps_per_unit=grid, n_paths=paths, seed=seed)))
    cost_report_csv(directory / "cost_report.csv",
                    [(loaded.name, name, r) for name, r in rows])
    _write_seed_report(directory, seed, grid, paths)
    width = max(len(n) for n, _ in rows)
    click.echo(f"{loaded.name}  (grid {grid}/unit, {rows[0][1].n_paths} path(s), seed {seed})")
    for name, r in rows:
        click.echo(f"  {name:<{width}}  J = {r.mean_cost:.10f}  +/- {r.stderr:.2e}")
    best = min(rows, key=lambda nr: nr[1].mean_cost)[0]
    click.echo(f"minimum: {best}")


@main.command()
@_common_options
@click.pass_context
def effects(ctx, scenario_ref, grid, paths, seed, out):
    """Classify overjumping-zero and premature-closure effects."""
    loaded = _resolve(scenario_ref)
    if loaded.chain is not None:
        raise click.ClickException("effects supports schedule scenarios only")
    grid, paths, seed = _effective(loaded, grid, paths, seed)
    directory = _out_dir(out, loaded, ctx.obj["out_default"])
    _, beta = _solve_deterministic(loaded, grid)
    report = classify_effects(beta)
    report.to_json(directory / "effects.json")
    _write_seed_report(directory, seed, grid, paths)
    click.echo(f"{loaded.name}: overjump={report.overjump} premature={report.premature}")
    if report.guarantee:
        click.echo(f"guarantee: {report.guarantee}")
    for t, left, right in report.witnesses[:5]:
        click.echo(f"  witness t={t:.6g}: beta_left={left:.6g}, beta={right:.6g}")
    if len(report.witnesses) > 5:
        click.echo(f"  ... {len(report.witnesses) - 5} more witnesses (see effects.json)")


_FIGURES = {
    "fig1": ("S1", "S2", "S3"),
    "fig2": ("S4",),
    "fig3": ("S5", "S6"),
    "fig4": ("S7",),
}


@main.command("reproduce-figures")
@click.option("--grid", type=int, default=_GRID_DEFAULT, show_default=True)
@click.option("--seed", type=int, default=_SEED_DEFAULT, show_default=True)
@click.option("--out", default=None, help="Output directory override.")
@click.pass_context
def reproduce_figures(ctx, grid, seed, out):
    """Re-render all figure panels (rho, beta, X*, and D* where shown) for S1-S7."""
    base = Path(out or ctx.obj["out_default"])
    for fig_name, names in _FIGURES.items():
        directory = base / fig_name
        directory.mkdir(parents=True, exist_ok=True)
        rho_series, beta_series, x_series, d_series = [], [], [], []
        grid_times = None
        for name in names:
            loaded = _resolve(name)
            Y, beta = _solve_deterministic(loaded, grid)
            g = make_grid(loaded.schedule, grid)
            rho = loaded.schedule.arrays_on_grid(g).rho_right
            _, X, D = _one_path(loaded, beta, seed)
            grid_times = g
            rho_series.append((name, rho))
            beta_series.append((name, beta.values))
            x_series.append((name, X.values))
            d_series.append((name, D.values))
        _panel(directory, "rho", grid_times, rho_series, "rho", fig_name)
        _panel(directory, "beta", grid_times, beta_series, "beta", fig_name)
        _panel(directory, "strategy", grid_times, x_series, "X*", fig_name)
        if fig_name == "fig4":
            _panel(directory, "deviation", grid_times, d_series, "D*", fig_name)
        _write_seed_report(directory, seed, grid, _PATHS_DEFAULT)
        click.echo(f"wrote {fig_name} panels to {directory}")


if __name__ == "__main__":
    sys.exit(main())
