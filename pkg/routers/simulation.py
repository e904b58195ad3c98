import io
from dataclasses import asdict
from typing import List, Optional, Tuple

from fastapi import APIRouter, File, Form, UploadFile
from fastapi.responses import PlainTextResponse
from pydantic import BaseModel, Field

from library.simulation import (
    DefaultSchedule,
    ScenarioConfig,
    ScenarioSimulator,
    fit_reinforcement,
    spread_volatility,
)
from utils.scenario_files import ScenarioFileParser

router = APIRouter(prefix="/simulation", tags=["simulation"])


class ScheduleBody(BaseModel):
    """
    Attributes:
        group_names (List[str]): column order of `counts`.
        counts (List[List[int]]): one row per month, one count per group.
    """
    group_names: List[str] = Field(min_length=1)
    counts: List[List[int]] = Field(default_factory=list)

    def to_schedule(self) -> DefaultSchedule:
        return DefaultSchedule(tuple(self.group_names), self.counts)


class RunRequest(BaseModel):
    """
    Attributes:
        config (ScenarioConfig): groups, slope and horizon.
        schedule (ScheduleBody): observed defaults.
        reinforcement (float, optional): one s for every group.
    """
    config: ScenarioConfig
    schedule: ScheduleBody
    reinforcement: Optional[float] = Field(default=None, gt=0)


class FitRequest(BaseModel):
    config: ScenarioConfig
    schedule: ScheduleBody
    target_volatility: float = Field(gt=0)
    bounds: Tuple[float, float] = (1e-4, 0.5)


def _run(config: ScenarioConfig, schedule: DefaultSchedule, reinforcement: Optional[float]):
    if reinforcement is not None:
        config = config.with_reinforcement(reinforcement)
    result, _ = ScenarioSimulator(config).run(schedule)
    return result


@router.post("/run", summary="Run a scenario over a default schedule")
def run(body: RunRequest):
    """
    Monthly reinforcement of every group over the schedule.

    Args:
        body (RunRequest): scenario config, schedule and optional uniform reinforcement.

    Returns:
        dict:
            - rows: one entry per (month, group), month 0 included
            - spread_volatility: mean std of monthly implied-spread changes
              (null for schedules shorter than two months)

    Raises:
        HTTPException: 422 on mismatched groups or more defaults than firms

    Example:
        POST /simulation/run
        {"config": {"groups": [{"name": "A", "size": 20, "one_year_spread": 0.02,
                                "reinforcement": 0.05}]},
         "schedule": {"group_names": ["A"], "counts": [[0], [1]]}}
    """
    result = _run(body.config, body.schedule.to_schedule(), body.reinforcement)
    return {
        "rows": [asdict(r) for r in result.rows],
        "spread_volatility": spread_volatility(result) if result.months >= 2 else None,
    }


@router.post("/run-csv", summary="Run a scenario from uploaded files", response_class=PlainTextResponse)
async def run_csv(
    config: UploadFile = File(...),
    schedule: UploadFile = File(...),
    reinforcement: Optional[float] = Form(None),
):
    """
    Same as /simulation/run, with the scenario config file and schedule CSV
    uploaded as multipart parts; answers with the result CSV.

    Raises:
        HTTPException: 400 with file name and line on malformed input
    """
    parser = ScenarioFileParser()
    parsed_config = parser.parse_config((await config.read()).decode("utf-8"), config.filename or "<config>")
    parsed_schedule = parser.parse_schedule(
        (await schedule.read()).decode("utf-8"), schedule.filename or "<schedule>"
    )
    result = _run(parsed_config, parsed_schedule, reinforcement)
    buffer = io.StringIO()
    result.to_csv(buffer)
    return PlainTextResponse(buffer.getvalue(), media_type="text/csv")


@router.post("/fit-reinforcement", summary="Fit s to a target spread volatility")
def fit(body: FitRequest):
    """Uniform reinforcement whose implied-spread volatility best matches the target."""
    s = fit_reinforcement(body.config, body.schedule.to_schedule(), body.target_volatility, body.bounds)
    result = _run(body.config, body.schedule.to_schedule(), s)
    return {"reinforcement": s, "spread_volatility": spread_volatility(result)}
