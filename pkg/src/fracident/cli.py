"""Command-line front end.

Exit codes: 0 success, 1 usage or validation error, 2 numerical failure.
"""

from __future__ import annotations

import datetime as _dt
import logging
import math
import sys
from importlib.metadata import PackageNotFoundError, version

import click

from . import io
from .fracsim import PARAMETER_NAMES, FractionalModel, SimulationError, downsample, simulate
from .identify import (
    NoiseSpec,
    Scenario,
    corrupt,
    five_parameter_scenario,
    four_parameter_scenario,
    identify,
    make_fitness,
)
from .pso import FitnessError
from .refine import RefineError, concentrated_search
from .verify import SingularSystemError, rank_models, reconstruct_coefficients

log = logging.getLogger("fracident")

NUMERICAL_ERRORS = (SimulationError, SingularSystemError, FitnessError, RefineError, ArithmeticError)


class NumericalFailure(click.ClickException):
    exit_code = 2


def tool_version() -> str:
    try:
        return version("fracident")
    except PackageNotFoundError:  # pragma: no cover - source checkout without install
        return "0+unknown"


def manifest(command: str, config: dict, seeds: dict, inputs=(), outputs=()) -> dict:
    """Everything needed to rerun ``command``; only ``timestamp`` varies between runs."""
    return {
        "tool": "fracident",
        "version": tool_version(),
        "command": command,
        "config": config,
        "seeds": seeds,
        "inputs": {str(p): io.file_digest(p) for p in inputs},
        "outputs": {str(p): io.file_digest(p) for p in outputs},
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
    }


def _setup_logging(quiet: bool) -> None:
    logging.basicConfig(
        level=logging.WARNING if quiet else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
        force=True,
    )


def _emit(quiet: bool, message: str) -> None:
    if not quiet:
        click.echo(message)


def _load_signal(path):
    try:
        return io.read_signal_csv(path)
    except OSError as exc:
        raise click.BadParameter(f"cannot read {path}: {exc.strerror}", param_hint="DATA") from None
    except ValueError as exc:
        raise click.BadParameter(str(exc), param_hint="DATA") from None


def _parse_model(text: str, hint: str) -> FractionalModel:
    parts = [p for p in text.replace(" ", "").split(",") if p]
    if len(parts) != 5:
        raise click.BadParameter("expected five comma-separated values a1,alpha,a2,beta,a3", param_hint=hint)
    try:
        return FractionalModel(*(float(p) for p in parts))
    except ValueError as exc:
        raise click.BadParameter(str(exc), param_hint=hint) from None


def _load_scenario(scenario_path, preset):
    """Scenario and optional truth from a JSON file or a built-in preset."""
    if scenario_path and preset:
        raise click.UsageError("give either --scenario or --preset, not both")
    if preset == "four":
        return four_parameter_scenario(), None
    if preset == "five" or not scenario_path:
        return five_parameter_scenario(), None
    try:
        data = io.read_json(scenario_path)
    except OSError as exc:
        raise click.BadParameter(f"cannot read {scenario_path}: {exc.strerror}", param_hint="--scenario") from None
    except ValueError as exc:
        raise click.BadParameter(f"invalid JSON: {exc}", param_hint="--scenario") from None
    try:
        scenario = Scenario.from_dict(data)
        truth = FractionalModel.from_mapping(data["truth"]) if data.get("truth") else None
    except (ValueError, TypeError) as exc:
        raise click.BadParameter(str(exc), param_hint="--scenario") from None
    return scenario, truth


seed_option = click.option("--seed", type=click.IntRange(0, 2**64 - 1), default=0, show_default=True, help="Master seed (u64).")
quiet_option = click.option("--quiet", is_flag=True, help="Only print warnings and errors.")


@click.group()
@click.version_option(package_name="fracident")
def cli():
    """Identify 1/(a1 s^alpha + a2 s^beta + a3) from step-response data."""


@cli.command("simulate")
@click.option("--a1", type=float, default=0.8, show_default=True)
@click.option("--alpha", type=float, default=2.2, show_default=True)
@click.option("--a2", type=float, default=0.5, show_default=True)
@click.option("--beta", type=float, default=0.9, show_default=True)
@click.option("--a3", type=float, default=1.0, show_default=True)
@click.option("--input", "input_kind", type=click.Choice(["step", "ramp", "parabola"]), default="step", show_default=True)
@click.option("--step", type=float, default=0.05, show_default=True, help="Simulation step h in seconds.")
@click.option("--rate", type=float, default=None, help="Output sampling rate in Hz (downsamples the simulation).")
@click.option("--horizon", type=float, default=10.0, show_default=True, help="Simulated span in seconds.")
@click.option("--memory", type=float, default=None, help="Truncate history sums to this many seconds.")
@click.option("--out", type=click.Path(dir_okay=False), required=True, help="Output CSV path.")
@seed_option
@quiet_option
def cmd_simulate(a1, alpha, a2, beta, a3, input_kind, step, rate, horizon, memory, out, seed, quiet):
    """Simulate the model response and write a t,value CSV."""
    _setup_logging(quiet)
    try:
        model = FractionalModel(a1, alpha, a2, beta, a3)
    except ValueError as exc:
        raise click.BadParameter(str(exc), param_hint="--a1/--alpha/--a2/--beta/--a3") from None
    if not (math.isfinite(step) and step > 0):
        raise click.BadParameter("must be positive", param_hint="--step")
    if not horizon >= step:
        raise click.BadParameter("must be at least --step", param_hint="--horizon")
    if rate is not None:
        if not rate > 0:
            raise click.BadParameter("must be positive", param_hint="--rate")
        ratio = 1.0 / (rate * step)
        if abs(ratio - round(ratio)) > 1e-9 * ratio or round(ratio) < 1:
            raise click.BadParameter(f"1/rate must be an integer multiple of --step {step}", param_hint="--rate")
    if memory is not None and not memory >= step:
        raise click.BadParameter("must be at least --step", param_hint="--memory")
    try:
        signal = simulate(model, input_kind, step, horizon, memory)
    except SimulationError as exc:
        raise NumericalFailure(str(exc)) from None
    if rate is not None:
        signal = downsample(signal, 1.0 / rate)
    io.write_signal_csv(signal, out)
    config = {
        "model": model.as_dict(),
        "input": input_kind,
        "step": step,
        "rate": rate,
        "horizon": horizon,
        "memory": memory,
        "out": out,
    }
    io.write_json(manifest("simulate", config, {"seed": seed}, outputs=[out]), out + ".manifest.json")
    _emit(quiet, f"wrote {len(signal)} samples to {out}")


@cli.command("corrupt")
@click.argument("data", type=click.Path(dir_okay=False))
@click.option("--amplitude", type=float, default=0.05, show_default=True, help="Uniform noise half-width.")
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@seed_option
@quiet_option
def cmd_corrupt(data, amplitude, out, seed, quiet):
    """Add uniform noise in [-amplitude, amplitude] to every sample."""
    _setup_logging(quiet)
    if not amplitude >= 0:
        raise click.BadParameter("must be nonnegative", param_hint="--amplitude")
    signal = _load_signal(data)
    io.write_signal_csv(corrupt(signal, amplitude, seed), out)
    config = {"data": data, "amplitude": amplitude, "out": out}
    io.write_json(manifest("corrupt", config, {"seed": seed}, inputs=[data], outputs=[out]), out + ".manifest.json")
    _emit(quiet, f"wrote {out}")


@cli.command("identify")
@click.argument("data", type=click.Path(dir_okay=False))
@click.option("--scenario", "scenario_path", type=click.Path(dir_okay=False), help="Scenario JSON file.")
@click.option("--preset", type=click.Choice(["four", "five"]), help="Built-in scenario (beta known / all five free).")
@click.option("--runs", type=int, default=5, show_default=True)
@click.option("--particles", type=int, default=None, help="Defaults to 40 (<= 4 free) or 50 (5 free).")
@click.option("--iterations", type=int, default=None, help="Defaults to 150 (<= 4 free) or 200 (5 free).")
@click.option("--noise-amplitude", type=float, default=0.0, show_default=True, help="Corrupt a fresh copy of the data per run.")
@click.option("--noise-seed", type=click.IntRange(0, 2**64 - 1), default=None, help="Defaults to --seed.")
@click.option("--truth", default=None, help="a1,alpha,a2,beta,a3 used for percent errors.")
@click.option("--report-clean", is_flag=True, help="Also report fitness against the uncorrupted data.")
@click.option("--out", type=click.Path(dir_okay=False), required=True, help="Report JSON path.")
@seed_option
@quiet_option
def cmd_identify(data, scenario_path, preset, runs, particles, iterations, noise_amplitude, noise_seed, truth, report_clean, out, seed, quiet):
    """Identify the free parameters with repeated swarm runs."""
    _setup_logging(quiet)
    if runs < 1:
        raise click.BadParameter("must be >= 1", param_hint="--runs")
    if particles is not None and particles < 1:
        raise click.BadParameter("must be >= 1", param_hint="--particles")
    if iterations is not None and iterations < 1:
        raise click.BadParameter("must be >= 1", param_hint="--iterations")
    if not noise_amplitude >= 0:
        raise click.BadParameter("must be nonnegative", param_hint="--noise-amplitude")
    signal = _load_signal(data)
    scenario, scenario_truth = _load_scenario(scenario_path, preset)
    truth_model = _parse_model(truth, "--truth") if truth else scenario_truth
    try:
        make_fitness(signal, scenario)
    except ValueError as exc:
        raise click.BadParameter(str(exc), param_hint="DATA") from None
    swarm = scenario.swarm_config(particles, iterations, seed)
    noise = None
    if noise_amplitude > 0:
        noise = NoiseSpec(noise_amplitude, seed if noise_seed is None else noise_seed)
    report = identify(signal, scenario, swarm, runs, noise, truth_model, report_clean)
    doc = report.to_dict()
    doc["scenario"] = scenario.to_dict()
    config = {
        "data": data,
        "scenario": scenario.to_dict(),
        "scenario_path": scenario_path,
        "preset": preset,
        "runs": runs,
        "swarm": swarm.to_dict(),
        "noise": None if noise is None else {"amplitude": noise.amplitude, "seed": noise.seed},
        "truth": None if truth_model is None else truth_model.as_dict(),
        "report_clean": report_clean,
    }
    seeds = {"seed": seed, "pso": report.pso_seeds, "noise": report.noise_seeds}
    doc["manifest"] = manifest("identify", config, seeds, inputs=[data] + ([scenario_path] if scenario_path else []))
    io.write_json(doc, out)
    if report.best_run is None:
        raise NumericalFailure(f"all {runs} runs failed; see {out}")
    best = report.best_model
    _emit(quiet, f"best run {report.best_run}: F = {report.best_fitness:.6g}")
    _emit(quiet, "  " + "  ".join(f"{p}={getattr(best, p):.4f}" for p in PARAMETER_NAMES))


@cli.command("verify")
@click.argument("data", type=click.Path(dir_okay=False))
@click.option("--alpha", type=float, required=True)
@click.option("--beta", type=float, required=True)
@click.option("--memory", "memory", type=float, default=10.0, show_default=True, help="Memory length L in seconds.")
@click.option("--period", type=float, default=0.001, show_default=True, help="Sampling time T the data must have.")
@click.option("--eval-time", type=float, default=None, help="Instant of the equations (default: --memory).")
@click.option("--fitness-period", type=float, default=0.05, show_default=True, help="Grid on which fitness F is computed.")
@click.option("--candidates", type=click.Path(dir_okay=False), default=None, help="JSON list of models to rank alongside.")
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@seed_option
@quiet_option
def cmd_verify(data, alpha, beta, memory, period, eval_time, fitness_period, candidates, out, seed, quiet):
    """Reconstruct a1, a2, a3 for given orders and rank models by fitness."""
    _setup_logging(quiet)
    signal = _load_signal(data)
    if not math.isclose(signal.period, period, rel_tol=1e-9):
        raise click.BadParameter(f"data is sampled every {signal.period!r} s, not {period!r}", param_hint="--period")
    if not memory >= period:
        raise click.BadParameter("must be at least --period", param_hint="--memory")
    eval_time = memory if eval_time is None else eval_time
    candidate_models = []
    if candidates:
        try:
            candidate_models = [FractionalModel.from_mapping(m) for m in io.read_json(candidates)]
        except OSError as exc:
            raise click.BadParameter(f"cannot read {candidates}: {exc.strerror}", param_hint="--candidates") from None
        except (ValueError, TypeError) as exc:
            raise click.BadParameter(str(exc), param_hint="--candidates") from None
    try:
        observations = downsample(signal, fitness_period)
    except ValueError as exc:
        raise click.BadParameter(str(exc), param_hint="--fitness-period") from None
    try:
        (a1, a2, a3), rows, condition = reconstruct_coefficients(
            signal, alpha, beta, eval_time, memory, return_rows=True
        )
    except SingularSystemError as exc:
        raise NumericalFailure(str(exc)) from None
    except ValueError as exc:
        raise click.BadParameter(str(exc), param_hint="--eval-time/--alpha/--beta") from None
    try:
        reconstructed = FractionalModel(a1, alpha, a2, beta, a3)
    except ValueError as exc:
        raise NumericalFailure(f"reconstructed coefficients do not form a valid model: {exc}") from None
    ranking = rank_models([reconstructed] + candidate_models, observations, simulation_step=signal.period)
    fitness = next(r.fitness for r in ranking if r.index == 0)
    doc = {
        "orders": {"alpha": alpha, "beta": beta},
        "rows": [row.to_dict() for row in rows],
        "solution": {"a1": a1, "a2": a2, "a3": a3},
        "condition": condition,
        "fitness": fitness,
        "ranking": [r.to_dict() for r in ranking],
    }
    config = {
        "data": data,
        "alpha": alpha,
        "beta": beta,
        "memory": memory,
        "period": period,
        "eval_time": eval_time,
        "fitness_period": fitness_period,
        "candidates": candidates,
    }
    doc["manifest"] = manifest("verify", config, {"seed": seed}, inputs=[data] + ([candidates] if candidates else []))
    io.write_json(doc, out)
    _emit(quiet, f"a1={a1:.4f} a2={a2:.4f} a3={a3:.4f}  F={fitness}")


@cli.command("refine")
@click.argument("data", type=click.Path(dir_okay=False))
@click.option("--scenario", "scenario_path", type=click.Path(dir_okay=False), help="Scenario JSON file.")
@click.option("--preset", type=click.Choice(["four", "five"]), help="Built-in scenario.")
@click.option("--target", default="beta", show_default=True)
@click.option("--range", "bounds", type=(float, float), default=(0.7, 1.1), show_default=True)
@click.option("--branching", type=int, multiple=True, help="Subintervals per level; repeat for a per-level schedule. Default 5.")
@click.option("--tolerance", type=float, default=0.002, show_default=True, help="Stop at this interval width.")
@click.option("--particles", type=int, default=40, show_default=True)
@click.option("--iterations", type=int, default=150, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@seed_option
@quiet_option
def cmd_refine(data, scenario_path, preset, target, bounds, branching, tolerance, particles, iterations, out, seed, quiet):
    """Concentrated search on one parameter."""
    _setup_logging(quiet)
    signal = _load_signal(data)
    scenario, truth = _load_scenario(scenario_path, preset)
    if target not in scenario.free:
        raise click.BadParameter(f"{target!r} is not a free parameter of the scenario ({', '.join(scenario.free)})", param_hint="--target")
    if not bounds[0] < bounds[1]:
        raise click.BadParameter("needs lo < hi", param_hint="--range")
    if not tolerance > 0:
        raise click.BadParameter("must be positive", param_hint="--tolerance")
    schedule = list(branching) or [5]
    if any(b < 2 for b in schedule):
        raise click.BadParameter("must be >= 2", param_hint="--branching")
    if particles < 1 or iterations < 1:
        raise click.BadParameter("must be >= 1", param_hint="--particles/--iterations")
    try:
        make_fitness(signal, scenario)
    except ValueError as exc:
        raise click.BadParameter(str(exc), param_hint="DATA") from None
    inner = scenario.pin(target, 0.5 * (bounds[0] + bounds[1]))
    swarm = inner.swarm_config(particles, iterations)
    try:
        result = concentrated_search(
            signal,
            scenario,
            target,
            bounds,
            schedule[0] if len(schedule) == 1 else schedule,
            tolerance,
            swarm,
            seed,
        )
    except RefineError as exc:
        raise NumericalFailure(str(exc)) from None
    doc = result.to_dict()
    doc["target"] = target
    config = {
        "data": data,
        "scenario": scenario.to_dict(),
        "scenario_path": scenario_path,
        "preset": preset,
        "target": target,
        "range": list(bounds),
        "branching": schedule,
        "tolerance": tolerance,
        "particles": particles,
        "iterations": iterations,
    }
    seeds = {"seed": seed, "nominals": [[r.seed for r in level.results] for level in result.levels]}
    doc["manifest"] = manifest("refine", config, seeds, inputs=[data] + ([scenario_path] if scenario_path else []))
    io.write_json(doc, out)
    for k, level in enumerate(result.levels):
        for j, row in enumerate(level.results):
            mark = "*" if j == level.chosen else " "
            fit = "failed" if row.fitness is None else f"{row.fitness:.4e}"
            _emit(quiet, f"{mark} level {k}: {target} in [{row.interval[0]:.6g}, {row.interval[1]:.6g}] nominal {row.nominal:.6g}  F={fit}")
    _emit(quiet, "estimate: " + "  ".join(f"{p}={getattr(result.model, p):.4f}" for p in PARAMETER_NAMES))


def main(argv=None) -> int:
    """Entry point; maps usage errors to exit 1 and numerical failures to exit 2."""
    try:
        rv = cli.main(args=argv, prog_name="fracident", standalone_mode=False)
    except NumericalFailure as exc:
        exc.show()
        return 2
    except click.exceptions.Abort:
        click.echo("Aborted!", err=True)
        return 1
    except click.ClickException as exc:
        exc.show()
        return 1
    except NUMERICAL_ERRORS as exc:
        click.echo(f"Error: numerical failure: {exc}", err=True)
        return 2
    except (ValueError, OSError) as exc:
        click.echo(f"Error: {exc}", err=True)
        return 1
    return rv if isinstance(rv, int) else 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
