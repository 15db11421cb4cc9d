"""Command-line pipelines over the engine, one subcommand per stage.

Every run resolves its configuration (file, then --set overrides),
executes deterministically, writes CSV/binary outputs with a manifest
beside them, and exits 0.  Failures map to distinct codes: 2 for
configuration or grid problems, 3 for quadrature non-convergence, 4 for
numerical blow-up or degenerate data.  Outputs are byte-identical for
identical resolved configuration and seeds, independent of --threads.
"""
from __future__ import annotations

import copy
import os
import sys

import click
import numpy as np

from . import config as cfgmod
from .config import (
    RunManifest,
    Stopwatch,
    apply_overrides,
    initial_waveform,
    kernel_from,
    load_config,
    params_from,
    sim_from,
    solver_from,
    uniform_grid,
)
from .errors import (
    ConfigError,
    ConvergenceError,
    DegenerateDataError,
    GridError,
    LightqueueError,
    PoleError,
    SingularMatrixError,
    StabilityError,
)
from .fields import BoundaryConditions, GreenKernel, SampledFunction, SignalWaveform
from .laplace import default_contour_pair, green_kernel, respond
from .metrics import autocorrelation, cone_slice, kl_distance
from .model import clearing_curves, clearing_to_csv
from .takacs import fd_solve
from .workload_mc import simulate_workload

_EXIT_CODES = (
    (ConfigError, 2),
    (GridError, 2),
    (ConvergenceError, 3),
    (StabilityError, 4),
    (PoleError, 4),
    (SingularMatrixError, 4),
    (DegenerateDataError, 4),
)

_SLICE_OFFSETS = (-0.5, -0.25, 0.25)


def _fail(exc: LightqueueError) -> None:
    click.echo(f"error: {exc}", err=True)
    for etype, code in _EXIT_CODES:
        if isinstance(exc, etype):
            sys.exit(code)
    sys.exit(1)


def _common(fn):
    fn = click.option(
        "--config", "config_path", type=click.Path(), default=None,
        help="TOML config file merged over the shipped defaults.",
    )(fn)
    fn = click.option(
        "--set", "overrides", multiple=True, metavar="KEY=VALUE",
        help="Override one config key (repeatable), e.g. --set model.a=0.5",
    )(fn)
    fn = click.option(
        "--threads", type=int, default=1, show_default=True,
        help="Worker cap; results do not depend on it.",
    )(fn)
    return fn


# rerun injects a recorded config here so the normal resolution path is
# bypassed without threading an extra parameter through every command
_CONFIG_OVERRIDE = None


def _resolve(config_path, overrides):
    if _CONFIG_OVERRIDE is not None:
        return copy.deepcopy(_CONFIG_OVERRIDE)
    return apply_overrides(load_config(config_path), overrides)


def _write(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


@click.group()
@click.version_option(version=cfgmod.TOOL_VERSION, prog_name="lightqueue")
def main():
    """Signal propagation through a finite-velocity trading line."""


@main.command("green")
@_common
@click.option("--out", default="green_kernel", show_default=True,
              help="Output prefix for .csv/.rgk/.manifest.json files.")
def green_cmd(config_path, overrides, threads, out):
    """Tabulate the impulse-response kernel on the configured grid."""
    try:
        cfg = _resolve(config_path, overrides)
        params, spec = params_from(cfg), kernel_from(cfg)
        g = cfg["green"]
        x = uniform_grid(g["x_min"], g["x_max"], g["dx"])
        t = uniform_grid(0.0, g["t_max"], g["dt"])
        with Stopwatch() as sw:
            K = green_kernel(
                x, t, params, spec,
                *default_contour_pair(x, t, params), n_workers=threads,
            )
        _write(out + ".csv", K.to_csv())
        with open(out + ".rgk", "wb") as fh:
            fh.write(K.to_binary())
        man = RunManifest(
            subcommand="green",
            resolved_config=cfg,
            options={"out": out, "threads": threads},
            outputs=[out + ".csv", out + ".rgk"],
            wall_clock_s=sw.elapsed,
            convergence={
                "converged_fraction": float(K.converged.mean()),
                "n_flagged": int((~K.converged).sum()),
            },
        )
        man.write(out + ".manifest.json")
    except LightqueueError as exc:
        _fail(exc)


@main.command("respond")
@_common
@click.option("--kernel", "kernel_path", required=True, type=click.Path(),
              help="Binary kernel dump (.rgk) from the green subcommand.")
@click.option("--signal", "signal_path", required=True, type=click.Path(),
              help="Initial waveform CSV (x,phi1,phi2).")
@click.option("--t", "t_eval", type=float, required=True,
              help="Evolution time; must be on the kernel's time grid.")
@click.option("--out", default="response", show_default=True)
def respond_cmd(config_path, overrides, threads, kernel_path, signal_path,
                t_eval, out):
    """Convolve a stored kernel with an initial waveform."""
    try:
        cfg = _resolve(config_path, overrides)
        try:
            with open(kernel_path, "rb") as fh:
                K = GreenKernel.from_binary(fh.read())
            with open(signal_path, "r", encoding="utf-8") as fh:
                sig = SignalWaveform.from_csv(fh.read())
        except FileNotFoundError as exc:
            raise ConfigError(str(exc))
        with Stopwatch() as sw:
            wave = respond(sig, K, t_eval)
        _write(out + ".csv", wave.to_csv())
        man = RunManifest(
            subcommand="respond",
            resolved_config=cfg,
            options={"kernel": kernel_path, "signal": signal_path,
                     "t": t_eval, "out": out, "threads": threads},
            inputs=[kernel_path, signal_path],
            outputs=[out + ".csv"],
            wall_clock_s=sw.elapsed,
        )
        man.write(out + ".manifest.json")
    except LightqueueError as exc:
        _fail(exc)


@main.command("fd")
@_common
@click.option("--signal", "signal_path", default=None, type=click.Path(),
              help="Initial waveform CSV; defaults to the configured pulses.")
@click.option("--out", default="fd_solution", show_default=True)
def fd_cmd(config_path, overrides, threads, signal_path, out):
    """Integrate the coupled system directly and write snapshots."""
    try:
        cfg = _resolve(config_path, overrides)
        params, spec = params_from(cfg), kernel_from(cfg)
        solver = solver_from(cfg)
        if signal_path is not None:
            try:
                with open(signal_path, "r", encoding="utf-8") as fh:
                    sig = SignalWaveform.from_csv(fh.read())
            except FileNotFoundError as exc:
                raise ConfigError(str(exc))
        else:
            sig = initial_waveform(cfg, solver.x_grid())
        bc = BoundaryConditions(
            f1=SampledFunction(grid=sig.x, values=sig.phi1),
            f2=SampledFunction(grid=sig.x, values=sig.phi2),
        )
        with Stopwatch() as sw:
            field = fd_solve(params, spec, bc, solver)
        _write(out + ".csv", field.to_csv())
        man = RunManifest(
            subcommand="fd",
            resolved_config=cfg,
            options={"signal": signal_path, "out": out, "threads": threads},
            inputs=[signal_path] if signal_path else [],
            outputs=[out + ".csv"],
            wall_clock_s=sw.elapsed,
            convergence={"max_abs": float(np.max(np.abs(field.p1)))},
        )
        man.write(out + ".manifest.json")
    except LightqueueError as exc:
        _fail(exc)


@main.command("simulate")
@_common
@click.option("--seed", type=int, default=None,
              help="Override sim.seed from the config.")
@click.option("--out", default="workload_cdf", show_default=True)
def simulate_cmd(config_path, overrides, threads, seed, out):
    """Monte Carlo the scalar workload and write its weighted CDF."""
    try:
        cfg = _resolve(config_path, overrides)
        if seed is not None:
            cfg["sim"]["seed"] = seed
        sim = sim_from(cfg)
        with Stopwatch() as sw:
            emp = simulate_workload(sim, n_workers=threads)
        _write(out + ".csv", emp.to_csv())
        man = RunManifest(
            subcommand="simulate",
            resolved_config=cfg,
            options={"out": out, "threads": threads, "seed": cfg["sim"]["seed"]},
            outputs=[out + ".csv"],
            wall_clock_s=sw.elapsed,
            convergence={"total_weight": emp.total_weight},
        )
        man.write(out + ".manifest.json")
    except LightqueueError as exc:
        _fail(exc)


@main.command("metrics")
@_common
@click.option("--kernel", "kernel_path", required=True, type=click.Path(),
              help="Binary kernel dump (.rgk).")
@click.option("--metric", type=click.Choice(["autocorr", "kl"]), required=True)
@click.option("--out", default=None, help="Output prefix; defaults to the metric name.")
def metrics_cmd(config_path, overrides, threads, kernel_path, metric, out):
    """Delay-dependent fidelity series over a stored kernel."""
    try:
        cfg = _resolve(config_path, overrides)
        m = cfg["metrics"]
        try:
            with open(kernel_path, "rb") as fh:
                K = GreenKernel.from_binary(fh.read())
        except FileNotFoundError as exc:
            raise ConfigError(str(exc))
        taus = uniform_grid(0.0, m["tau_max"], m["dtau"])
        comp = (m["component"], m["component"])
        rng = (m["x_lo"], m["x_hi"])
        with Stopwatch() as sw:
            if metric == "autocorr":
                series = autocorrelation(K, taus, m["speed_autocorr"], rng, comp)
            else:
                series = kl_distance(K, taus, m["speed_kl"], rng, comp)
        out = out or metric
        _write(out + ".csv", series.to_csv())
        man = RunManifest(
            subcommand="metrics",
            resolved_config=cfg,
            options={"kernel": kernel_path, "metric": metric, "out": out,
                     "threads": threads},
            inputs=[kernel_path],
            outputs=[out + ".csv"],
            wall_clock_s=sw.elapsed,
        )
        man.write(out + ".manifest.json")
    except LightqueueError as exc:
        _fail(exc)


def _parse_s_range(text: str):
    parts = text.split(":")
    if len(parts) != 3:
        raise ConfigError("--s-range must look like lo:hi:n")
    try:
        lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise ConfigError(f"cannot parse --s-range: {text}")
    return lo, hi, n


@main.command("clearing")
@_common
@click.option("--s-range", "s_range", default=None, metavar="LO:HI:N",
              help="Sampling of the transform variable; defaults from config.")
@click.option("--out", default="clearing_curves", show_default=True)
def clearing_cmd(config_path, overrides, threads, s_range, out):
    """Sample both clearing-curve branches and write branch,s,tau rows."""
    try:
        cfg = _resolve(config_path, overrides)
        if s_range is not None:
            lo, hi, n = _parse_s_range(s_range)
        else:
            c = cfg["clearing"]
            lo, hi, n = c["s_lo"], c["s_hi"], c["n"]
        params, spec = params_from(cfg), kernel_from(cfg)
        with Stopwatch() as sw:
            curves = clearing_curves(lo, hi, n, params, spec)
        _write(out + ".csv", clearing_to_csv(*curves))
        man = RunManifest(
            subcommand="clearing",
            resolved_config=cfg,
            options={"s_range": f"{lo}:{hi}:{n}", "out": out, "threads": threads},
            outputs=[out + ".csv"],
            wall_clock_s=sw.elapsed,
        )
        man.write(out + ".manifest.json")
    except LightqueueError as exc:
        _fail(exc)


@main.command("figures")
@_common
@click.option("--outdir", default="figures", show_default=True,
              help="Directory for the full data bundle.")
def figures_cmd(config_path, overrides, threads, outdir):
    """Produce the full headline data bundle as CSV series.

    Emits the clearing curves, the kernel over the analysis window, the
    three cone slices, the autocorrelation series, the KL series, and
    the initial pulse pair, plus one manifest for the bundle.
    """
    try:
        cfg = _resolve(config_path, overrides)
        params, spec = params_from(cfg), kernel_from(cfg)
        os.makedirs(outdir, exist_ok=True)
        outputs = []
        with Stopwatch() as sw:
            c = cfg["clearing"]
            curves = clearing_curves(c["s_lo"], c["s_hi"], c["n"], params, spec)
            path = os.path.join(outdir, "clearing_curves.csv")
            _write(path, clearing_to_csv(*curves))
            outputs.append(path)

            g = cfg["green"]
            x = uniform_grid(g["x_min"], g["x_max"], g["dx"])
            t = uniform_grid(0.0, g["t_max"], g["dt"])
            K = green_kernel(
                x, t, params, spec,
                *default_contour_pair(x, t, params), n_workers=threads,
            )
            path = os.path.join(outdir, "green_kernel.csv")
            _write(path, K.to_csv())
            outputs.append(path)
            path = os.path.join(outdir, "green_kernel.rgk")
            with open(path, "wb") as fh:
                fh.write(K.to_binary())
            outputs.append(path)

            m = cfg["metrics"]
            comp = (m["component"], m["component"])
            for off in _SLICE_OFFSETS:
                wave = cone_slice(K, off, m["speed_kl"], comp)
                path = os.path.join(outdir, f"slice_offset_{off:+.2f}.csv")
                _write(path, wave.to_csv())
                outputs.append(path)

            taus = uniform_grid(0.0, m["tau_max"], m["dtau"])
            rng = (m["x_lo"], m["x_hi"])
            series = autocorrelation(K, taus, m["speed_autocorr"], rng, comp)
            path = os.path.join(outdir, "autocorrelation.csv")
            _write(path, series.to_csv())
            outputs.append(path)
            series = kl_distance(K, taus, m["speed_kl"], rng, comp)
            path = os.path.join(outdir, "kl_distance.csv")
            _write(path, series.to_csv())
            outputs.append(path)

            sig = initial_waveform(cfg, uniform_grid(
                cfg["solver"]["x_min"], cfg["solver"]["x_max"], cfg["solver"]["dx"]
            ))
            path = os.path.join(outdir, "initial_signal.csv")
            _write(path, sig.to_csv())
            outputs.append(path)
        man = RunManifest(
            subcommand="figures",
            resolved_config=cfg,
            options={"outdir": outdir, "threads": threads},
            outputs=outputs,
            wall_clock_s=sw.elapsed,
            convergence={"converged_fraction": float(K.converged.mean())},
        )
        man.write(os.path.join(outdir, "manifest.json"))
    except LightqueueError as exc:
        _fail(exc)


@main.command("rerun")
@click.argument("manifest_path", type=click.Path())
@click.option("--out", default=None, help="New output prefix (single-file runs).")
@click.option("--outdir", default=None, help="New output directory (figures runs).")
def rerun_cmd(manifest_path, out, outdir):
    """Replay a recorded run from its manifest, bit for bit.

    The stored resolved configuration is re-executed with the stored
    options; --out/--outdir relocate the outputs so originals survive
    for comparison.
    """
    try:
        try:
            man = RunManifest.read(manifest_path)
        except FileNotFoundError as exc:
            raise ConfigError(str(exc))
        opts = dict(man.options)
        if out is not None:
            opts["out"] = out
        if outdir is not None:
            opts["outdir"] = outdir
        _dispatch_rerun(man, opts)
    except LightqueueError as exc:
        _fail(exc)


def _dispatch_rerun(man: RunManifest, opts: dict) -> None:
    """Invoke the recorded subcommand in-process with the stored config."""
    global _CONFIG_OVERRIDE
    runner_map = {
        "green": green_cmd,
        "respond": respond_cmd,
        "fd": fd_cmd,
        "simulate": simulate_cmd,
        "metrics": metrics_cmd,
        "clearing": clearing_cmd,
        "figures": figures_cmd,
    }
    if man.subcommand not in runner_map:
        raise ConfigError(f"manifest names unknown subcommand: {man.subcommand}")
    command = runner_map[man.subcommand]
    kwargs = {"config_path": None, "overrides": (), "threads": opts.get("threads", 1)}
    rename = {"kernel": "kernel_path", "signal": "signal_path", "t": "t_eval"}
    for key, val in opts.items():
        if key == "threads":
            continue
        kwargs[rename.get(key, key)] = val
    _CONFIG_OVERRIDE = man.resolved_config
    try:
        command.callback(**kwargs)
    finally:
        _CONFIG_OVERRIDE = None


if __name__ == "__main__":
    main()
