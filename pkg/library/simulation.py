"""
Monthly urn chain engine.

Each month every group's idiosyncratic mean is reinforced with that month's
default count, m <- (m + s*d) / (1 + s*n) where n is the number of survivors
at the start of the month, and the total PDs are recombined through the chain.
"""

import logging
import math
from dataclasses import dataclass, replace
from typing import Dict, List, Optional, Sequence, TextIO, Tuple

import numpy as np
from pydantic import BaseModel, Field, model_validator
from scipy.optimize import minimize_scalar

from .calibration import MONTHS_PER_YEAR, SpreadCurve, init_chain_from_spreads, spread_at_month, total_pd_to_spread
from .common_utils import CsvWriter
from .errors import ModelViolation
from .polya_urn import BetaParams
from .urn_chain import IdioVector, compose_total

logger = logging.getLogger(__name__)


class GroupConfig(BaseModel):
    """One reliability group of a scenario."""

    name: str = Field(min_length=1)
    size: int = Field(ge=1)
    one_year_spread: float = Field(ge=0)
    reinforcement: float = Field(gt=0)


class ScenarioConfig(BaseModel):
    """
    A calibrated scenario: groups ordered best to worst, the spread slope
    and the horizon in months.
    """

    groups: List[GroupConfig] = Field(min_length=1)
    monthly_slope: float = Field(default=0.0005, ge=0)
    months: int = Field(default=12, ge=1)

    @model_validator(mode="after")
    def _unique_names(self):
        names = [g.name for g in self.groups]
        if len(set(names)) != len(names):
            raise ValueError(f"group names must be unique, got {names}")
        return self

    def curves(self) -> List[SpreadCurve]:
        return [SpreadCurve(g.one_year_spread, self.monthly_slope) for g in self.groups]

    def group_names(self) -> List[str]:
        return [g.name for g in self.groups]

    def with_reinforcement(self, s: float) -> "ScenarioConfig":
        """Copy with the same reinforcement for every group."""
        if not s > 0:
            raise ModelViolation(f"reinforcement must be positive, got {s}")
        groups = [g.model_copy(update={"reinforcement": s}) for g in self.groups]
        return self.model_copy(update={"groups": groups})


@dataclass(frozen=True)
class GroupState:
    """
    Running state of one group.

    Attributes:
        name (str): group label.
        initial_size (int): n_i at month 0.
        survivors (int): firms not yet defaulted.
        idio_mean (float): current posterior mean of D_i.
        reinforcement (float): s_i.
    """

    name: str
    initial_size: int
    survivors: int
    idio_mean: float
    reinforcement: float

    def __post_init__(self):
        if not 0 <= self.survivors <= self.initial_size:
            raise ModelViolation(
                f"group {self.name}: survivors {self.survivors} outside 0..{self.initial_size}"
            )
        if not 0 <= self.idio_mean <= 1:
            raise ModelViolation(f"group {self.name}: idiosyncratic mean {self.idio_mean} outside [0, 1]")

    def current_prior(self) -> BetaParams:
        """Beta(m/s, (1-m)/s): de Finetti law of a unit-mass urn with the current mean."""
        return BetaParams(self.idio_mean / self.reinforcement, (1.0 - self.idio_mean) / self.reinforcement)


def step_group(state: GroupState, defaults_this_month: int) -> GroupState:
    """
    Reinforce one group with a month of observed defaults.

    The exposure is the survivor count at the start of the month; survivors
    are decremented after the update.

    Raises:
        ModelViolation: more defaults than survivors.

    Example:
        (m=0.0257, survivors=20, s=0.05), d=0 -> m = 0.01285
    """
    if defaults_this_month < 0:
        raise ModelViolation(f"group {state.name}: negative default count {defaults_this_month}")
    if defaults_this_month > state.survivors:
        raise ModelViolation(
            f"group {state.name}: {defaults_this_month} defaults but only {state.survivors} survivors"
        )
    s = state.reinforcement
    mean = (state.idio_mean + s * defaults_this_month) / (1.0 + s * state.survivors)
    return replace(state, idio_mean=mean, survivors=state.survivors - defaults_this_month)


@dataclass(frozen=True)
class DefaultSchedule:
    """
    Observed defaults: counts[t, g] is the count of group g in month t + 1.
    """

    group_names: Tuple[str, ...]
    counts: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "group_names", tuple(self.group_names))
        counts = np.asarray(self.counts, dtype=np.int64).reshape(-1, len(self.group_names))
        if np.any(counts < 0):
            raise ModelViolation("default counts must be nonnegative")
        object.__setattr__(self, "counts", counts)

    @property
    def months(self) -> int:
        return int(self.counts.shape[0])

    def column(self, name: str) -> np.ndarray:
        if name not in self.group_names:
            raise ModelViolation(f"schedule has no column for group {name}")
        return self.counts[:, self.group_names.index(name)]


@dataclass(frozen=True)
class SimulationRow:
    month: int
    group: str
    spread: float
    defaults: int
    idio_mean: float
    total_pd: float


@dataclass
class SimulationResult:
    """Per-month, per-group output of a scenario run (month 0 included)."""

    group_names: Tuple[str, ...]
    rows: List[SimulationRow]

    HEADER = ("month", "group", "spread", "defaults", "idio_mean", "total_pd")

    def series(self, group: str, field: str = "total_pd") -> List[float]:
        """Values of `field` for one group, ordered by month."""
        return [getattr(r, field) for r in self.rows if r.group == group]

    def total_pd(self, group: str, month: int) -> float:
        for r in self.rows:
            if r.group == group and r.month == month:
                return r.total_pd
        raise KeyError(f"no result for group {group} at month {month}")

    @property
    def months(self) -> int:
        return max(r.month for r in self.rows)

    def to_csv(self, stream: TextIO) -> None:
        fmt = CsvWriter(decimals=6)
        rows = (
            [r.month, r.group, fmt.fixed(r.spread), r.defaults, fmt.fixed(r.idio_mean), fmt.fixed(r.total_pd)]
            for r in self.rows
        )
        fmt.write(stream, self.HEADER, rows)


class ScenarioSimulator:
    """
    Runs the monthly reinforcement of a calibrated scenario.

    Month 0 comes from the spreads; every later month applies step_group to
    each group and recombines the total PDs with compose_total.
    """

    def __init__(self, config: ScenarioConfig):
        self.config = config
        self.curves = config.curves()

    def initial_states(self) -> List[GroupState]:
        idio = init_chain_from_spreads(self.curves, 0)
        return [
            GroupState(g.name, g.size, g.size, m, g.reinforcement)
            for g, m in zip(self.config.groups, idio.values)
        ]

    def _aligned_counts(self, schedule: DefaultSchedule) -> np.ndarray:
        expected = set(self.config.group_names())
        if set(schedule.group_names) != expected:
            raise ModelViolation(
                f"schedule groups {list(schedule.group_names)} do not match config groups {self.config.group_names()}"
            )
        if schedule.months > self.config.months:
            raise ModelViolation(
                f"schedule covers {schedule.months} months, scenario horizon is {self.config.months}"
            )
        counts = np.column_stack([schedule.column(n) for n in self.config.group_names()])
        cumulative = counts.sum(axis=0)
        for g, total in zip(self.config.groups, cumulative):
            if total > g.size:
                raise ModelViolation(f"group {g.name}: schedule has {int(total)} defaults for {g.size} firms")
        return counts

    def _display_spread(self, curve: SpreadCurve, month: int) -> float:
        if month > MONTHS_PER_YEAR:
            logger.debug("month %d beyond the term structure; spread held at the one-year quote", month)
            return curve.one_year_spread
        return spread_at_month(curve, month)

    def _rows(self, month: int, states: Sequence[GroupState], counts: Sequence[int]) -> List[SimulationRow]:
        totals = compose_total(IdioVector(tuple(s.idio_mean for s in states)))
        return [
            SimulationRow(month, s.name, self._display_spread(c, month), int(d), s.idio_mean, t)
            for s, c, d, t in zip(states, self.curves, counts, totals.values)
        ]

    def run(self, schedule: DefaultSchedule, until: Optional[int] = None) -> Tuple[SimulationResult, List[GroupState]]:
        """
        Run the schedule month by month.

        Args:
            schedule (DefaultSchedule): observed counts, columns named after the groups.
            until (int, optional): stop after this month (defaults to the whole schedule).

        Returns:
            tuple: (SimulationResult, final group states)
        """
        counts = self._aligned_counts(schedule)
        last = counts.shape[0] if until is None else until
        if not 0 <= last <= counts.shape[0]:
            raise ModelViolation(f"month {last} outside the schedule's 0..{counts.shape[0]}")

        states = self.initial_states()
        rows = self._rows(0, states, [0] * len(states))
        for month in range(1, last + 1):
            month_counts = counts[month - 1]
            states = [step_group(s, int(d)) for s, d in zip(states, month_counts)]
            rows.extend(self._rows(month, states, month_counts))
            logger.debug("month %d means %s", month, [round(s.idio_mean, 6) for s in states])
        return SimulationResult(tuple(self.config.group_names()), rows), states


def run_scenario(config: ScenarioConfig, schedule: DefaultSchedule) -> SimulationResult:
    result, _ = ScenarioSimulator(config).run(schedule)
    return result


def state_at_month(config: ScenarioConfig, schedule: DefaultSchedule, month: int) -> List[GroupState]:
    """Group states after `month` months of the schedule (month 0 = calibration)."""
    _, states = ScenarioSimulator(config).run(schedule, until=month)
    return states


def implied_spreads(result: SimulationResult) -> Dict[str, List[float]]:
    """One-year spreads implied by each month's total PD, per group."""
    return {g: [total_pd_to_spread(p) for p in result.series(g)] for g in result.group_names}


def spread_volatility(result: SimulationResult) -> float:
    """Standard deviation of month-to-month implied spread changes, averaged over groups."""
    if result.months < 2:
        raise ModelViolation("spread volatility needs at least two simulated months")
    vols = [float(np.std(np.diff(series), ddof=1)) for series in implied_spreads(result).values()]
    return float(np.mean(vols))


def fit_reinforcement(
    config: ScenarioConfig,
    schedule: DefaultSchedule,
    target_volatility: float,
    bounds: Tuple[float, float] = (1e-4, 0.5),
) -> float:
    """
    Uniform reinforcement whose implied-spread volatility is closest to a target.

    Args:
        config (ScenarioConfig): scenario; its per-group reinforcements are overridden.
        schedule (DefaultSchedule): observed defaults.
        target_volatility (float): historical volatility of monthly spread changes.
        bounds (tuple): search interval for s.

    Returns:
        float: the fitted s.
    """
    if not target_volatility > 0:
        raise ModelViolation(f"target volatility must be positive, got {target_volatility}")
    low, high = bounds
    if not 0 < low < high:
        raise ModelViolation(f"invalid reinforcement bounds {bounds}")

    def gap(s: float) -> float:
        result = run_scenario(config.with_reinforcement(s), schedule)
        return (spread_volatility(result) - target_volatility) ** 2

    fit = minimize_scalar(gap, bounds=(low, high), method="bounded", options={"xatol": 1e-7})
    logger.info("fitted reinforcement %.6f (objective %.3e)", fit.x, fit.fun)
    if not math.isfinite(fit.x):
        raise ModelViolation("reinforcement fit did not converge")
    return float(fit.x)
