from typing import List

from fastapi import APIRouter
from pydantic import BaseModel, Field

from library.calibration import DEFAULT_MONTHLY_SLOPE, SpreadCurve, calibrate_table, roundtrip_error

router = APIRouter(prefix="/calibration", tags=["calibration"])


class SpreadGroup(BaseModel):
    """
    Attributes:
        name (str): group label.
        one_year_spread (float): annualised one-year spread, >= 0.
    """
    name: str = Field(min_length=1)
    one_year_spread: float = Field(ge=0)


class CalibrationRequest(BaseModel):
    """
    Attributes:
        groups (List[SpreadGroup]): groups ordered best to worst.
        monthly_slope (float): spread change per month.
        month (int): month 0..12 of the term structure.
    """
    groups: List[SpreadGroup] = Field(min_length=1)
    monthly_slope: float = Field(default=DEFAULT_MONTHLY_SLOPE, ge=0)
    month: int = Field(default=0, ge=0, le=12)


@router.post("/", summary="Initialise the chain from spreads")
async def calibrate(body: CalibrationRequest):
    """
    Spread, total PD and idiosyncratic PD per group at the requested month.

    Args:
        body (CalibrationRequest): spreads, slope and month.

    Returns:
        dict:
            - rows: list of {group, spread, total_pd, idio_pd}
            - roundtrip_error: largest gap after composing the PDs back

    Raises:
        HTTPException: 422 if the spread-implied total PDs are not ordered best to worst

    Example:
        POST /calibration/
        {"groups": [{"name": "A", "one_year_spread": 0.02},
                    {"name": "B", "one_year_spread": 0.06}], "month": 12}
    """
    curves = [SpreadCurve(g.one_year_spread, body.monthly_slope) for g in body.groups]
    rows = calibrate_table(curves, body.month)
    return {
        "rows": [
            {"group": g.name, "spread": r.spread, "total_pd": r.total_pd, "idio_pd": r.idio_pd}
            for g, r in zip(body.groups, rows)
        ],
        "roundtrip_error": roundtrip_error(curves, body.month),
    }
