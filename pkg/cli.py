"""
Command-line surface of the urn chain default model.

    python cli.py simulate scenarios/three_groups.conf scenarios/three_groups_schedule.csv --out result.csv
    python cli.py calibrate scenarios/three_groups.conf --month 12
    python cli.py pmf --sizes 3,4 --prior 2,5 --prior 1,3 --mode exact

Exit codes: 0 success, 2 input parse failure, 3 model/invariant violation,
4 resource cap.
"""

import sys
from contextlib import contextmanager
from pathlib import Path
from typing import List, Optional, Tuple

import click
import numpy as np

from library.calibration import calibrate_table
from library.common_utils import CsvWriter
from library.errors import InputParseError, ModelViolation, ResourceCapExceeded
from library.oracle import OracleRunner
from library.polya_urn import BetaParams
from library.simulation import DefaultSchedule, ScenarioSimulator, state_at_month
from library.urn_chain import JointPmfCalculator, sample_chain_many
from utils.scenario_files import ScenarioFileParser
from utils.settings import Settings, configure_logging

EXIT_PARSE = 2
EXIT_MODEL = 3
EXIT_RESOURCE = 4


@contextmanager
def _exit_codes():
    try:
        yield
    except InputParseError as exc:
        click.echo(f"error: {exc}", err=True)
        raise click.exceptions.Exit(EXIT_PARSE)
    except ModelViolation as exc:
        click.echo(f"model violation: {exc}", err=True)
        raise click.exceptions.Exit(EXIT_MODEL)
    except ResourceCapExceeded as exc:
        click.echo(f"resource cap: {exc}", err=True)
        raise click.exceptions.Exit(EXIT_RESOURCE)


@contextmanager
def _output(path: str):
    if path == "-":
        yield sys.stdout
        sys.stdout.flush()
    else:
        with open(path, "w", newline="", encoding="utf-8") as stream:
            yield stream


def _parse_sizes(ctx, param, value: Optional[str]) -> Optional[List[int]]:
    if value is None:
        return None
    try:
        sizes = [int(part) for part in value.split(",")]
    except ValueError:
        raise click.BadParameter(f"expected comma-separated integers, got '{value}'")
    if any(n < 0 for n in sizes):
        raise click.BadParameter("group sizes must be nonnegative")
    return sizes


def _parse_priors(ctx, param, values: Tuple[str, ...]) -> List[BetaParams]:
    priors = []
    for value in values:
        try:
            alpha, beta = (float(part) for part in value.split(","))
            priors.append(BetaParams(alpha, beta))
        except ValueError:
            raise click.BadParameter(f"expected 'alpha,beta' with positive reals, got '{value}'")
    return priors


@click.group()
@click.option("--log-level", default=None, help="Logging level (defaults to URNCHAIN_LOG_LEVEL).")
def cli(log_level: Optional[str]):
    """Urn chain default model: simulation, calibration and default-count laws."""
    configure_logging(log_level.upper() if log_level else None)


@cli.command()
@click.argument("config_path", type=click.Path(dir_okay=False))
@click.argument("schedule_path", type=click.Path(dir_okay=False))
@click.option("--out", "out", default="-", show_default=True, help="Result CSV path ('-' for stdout).")
@click.option("--reinforcement", type=float, default=None, help="Use this s for every group.")
def simulate(config_path: str, schedule_path: str, out: str, reinforcement: Optional[float]):
    """Run the monthly urn chain over a default schedule."""
    parser = ScenarioFileParser()
    with _exit_codes():
        config = parser.load_config(config_path)
        schedule = parser.load_schedule(schedule_path)
        if reinforcement is not None:
            config = config.with_reinforcement(reinforcement)
        for g in config.groups:
            click.echo(
                f"group {g.name}: size={g.size} one_year_spread={g.one_year_spread} reinforcement={g.reinforcement}",
                err=True,
            )
        result, _ = ScenarioSimulator(config).run(schedule)
        with _output(out) as stream:
            result.to_csv(stream)


@cli.command()
@click.argument("config_path", type=click.Path(dir_okay=False))
@click.option("--month", type=int, default=0, show_default=True, help="Month 0..12 of the term structure.")
def calibrate(config_path: str, month: int):
    """Print spread, total PD and idiosyncratic PD per group."""
    with _exit_codes():
        config = ScenarioFileParser().load_config(config_path)
        rows = calibrate_table(config.curves(), month)
        fmt = CsvWriter(decimals=6)
        fmt.write(
            sys.stdout,
            ["group", "spread", "total_pd", "idio_pd"],
            ([g.name, fmt.fixed(r.spread), fmt.fixed(r.total_pd), fmt.fixed(r.idio_pd)]
             for g, r in zip(config.groups, rows)),
        )


def _scenario_priors(
    config_path: str, schedule_path: Optional[str], month: Optional[int]
) -> Tuple[List[int], List[BetaParams]]:
    parser = ScenarioFileParser()
    config = parser.load_config(config_path)
    if schedule_path:
        schedule = parser.load_schedule(schedule_path)
    else:
        schedule = DefaultSchedule(tuple(config.group_names()), [])
    month = schedule.months if month is None else month
    states = state_at_month(config, schedule, month)
    return [s.survivors for s in states], [s.current_prior() for s in states]


@cli.command()
@click.option("--sizes", callback=_parse_sizes, default=None, help="Group sizes, e.g. '3,4'.")
@click.option("--prior", "priors", multiple=True, callback=_parse_priors, help="'alpha,beta' per group, best first.")
@click.option("--config", "config_path", type=click.Path(dir_okay=False), default=None,
              help="Take priors (and default sizes) from a scenario state.")
@click.option("--schedule", "schedule_path", type=click.Path(dir_okay=False), default=None)
@click.option("--month", type=int, default=None, help="Scenario month (defaults to the schedule end).")
@click.option("--mode", type=click.Choice(["exact", "quadrature", "mc"]), default="exact", show_default=True)
@click.option("--seed", type=int, default=None, help="Seed for mode mc.")
@click.option("--replicates", type=int, default=1_000_000, show_default=True)
@click.option("--nodes", type=int, default=None, help="Quadrature nodes per axis.")
@click.option("--workers", type=int, default=1, show_default=True)
@click.option("--out", "out", default="-", show_default=True)
@click.option("--report", "report", default=None, help="OracleReport CSV path for mode mc.")
def pmf(sizes, priors, config_path, schedule_path, month, mode, seed, replicates, nodes, workers, out, report):
    """Joint default-count table (exact, quadrature or Monte Carlo)."""
    with _exit_codes():
        if config_path:
            if priors:
                raise InputParseError("--prior cannot be combined with --config, which supplies the priors")
            state_sizes, priors = _scenario_priors(config_path, schedule_path, month)
            sizes = sizes or state_sizes
        if not priors or sizes is None:
            raise InputParseError("give --sizes with one --prior per group, or --config")
        if len(sizes) != len(priors):
            raise InputParseError(f"{len(sizes)} sizes but {len(priors)} priors")

        if mode == "exact":
            table = JointPmfCalculator().joint_pmf_k(sizes, priors, workers=workers)
        elif mode == "quadrature":
            table = OracleRunner().quadrature_joint_pmf(sizes, priors, nodes=nodes)
        else:
            seed = Settings().default_seed if seed is None else seed
            result = OracleRunner().mc_joint_pmf(sizes, priors, replicates, seed, workers=workers)
            table = result.table
            if report is None and out != "-":
                report = str(Path(out).with_suffix(".report.csv"))
            if report:
                with _output(report) as stream:
                    result.report_csv(stream)
        with _output(out) as stream:
            table.to_csv(stream)


@cli.command()
@click.option("--prior", "priors", multiple=True, required=True, callback=_parse_priors)
@click.option("--draws", type=int, default=1000, show_default=True)
@click.option("--seed", type=int, default=None)
@click.option("--out", "out", default="-", show_default=True)
def sample(priors, draws, seed, out):
    """Draw (D, D*, E) vectors from the chain."""
    with _exit_codes():
        seed = Settings().default_seed if seed is None else seed
        idio, totals, incs = sample_chain_many(priors, draws, np.random.default_rng(seed))
        k = len(priors)
        header = (
            [f"D_{i + 1}" for i in range(k)] + [f"Dstar_{i + 1}" for i in range(k)] + [f"E_{i + 1}" for i in range(k)]
        )
        rows = ([CsvWriter.significant(v) for v in row] for row in np.hstack([idio, totals, incs]))
        with _output(out) as stream:
            CsvWriter().write(stream, header, rows)


@cli.command()
@click.option("--sizes", callback=_parse_sizes, required=True)
@click.option("--prior", "priors", multiple=True, required=True, callback=_parse_priors)
@click.option("--replicates", type=int, default=1_000_000, show_default=True)
@click.option("--seed", type=int, default=None)
@click.option("--nodes", type=int, default=None)
@click.option("--workers", type=int, default=1, show_default=True)
def crosscheck(sizes, priors, replicates, seed, nodes, workers):
    """Compare the exact table with the quadrature and Monte Carlo oracles."""
    with _exit_codes():
        if len(sizes) != len(priors):
            raise InputParseError(f"{len(sizes)} sizes but {len(priors)} priors")
        seed = Settings().default_seed if seed is None else seed
        oracle = OracleRunner()
        exact = JointPmfCalculator().joint_pmf_k(sizes, priors, workers=workers)
        metrics = [("exact_total", abs(exact.total() - 1.0))]
        if len(sizes) <= 3:
            quad = oracle.quadrature_joint_pmf(sizes, priors, nodes=nodes)
            metrics.append(("max_abs_exact_vs_quadrature", float(np.max(np.abs(exact.probs - quad.probs)))))
        mc = oracle.mc_joint_pmf(sizes, priors, replicates, seed, workers=workers)
        se = np.where(mc.standard_errors > 0, mc.standard_errors, np.inf)
        metrics.append(("max_z_exact_vs_mc", float(np.max(np.abs(exact.probs - mc.table.probs) / se))))
        CsvWriter().write(sys.stdout, ["metric", "value"], ([m, f"{v:.6e}"] for m, v in metrics))


if __name__ == "__main__":
    cli()
