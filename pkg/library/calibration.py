"""
Chain initialisation from credit spreads under a linear term structure.

A one-year spread gamma(1) quoted today is read as gamma(m/12) = gamma(1) +
slope * (12 - m) for the spread seen at month m, and a spread maps to a total
PD through 1 - exp(-t * gamma).
"""

import logging
import math
from dataclasses import dataclass
from typing import List, Sequence

from .errors import ModelViolation
from .urn_chain import IdioVector, TotalVector, compose_total, invert_chain

logger = logging.getLogger(__name__)

MONTHS_PER_YEAR = 12
DEFAULT_MONTHLY_SLOPE = 0.0005


@dataclass(frozen=True)
class SpreadCurve:
    """
    Linear spread term structure of one group.

    Attributes:
        one_year_spread (float): annualised gamma(1).
        monthly_slope (float): spread change per month; the spread at month m is
            one_year_spread + monthly_slope * (12 - m).
    """

    one_year_spread: float
    monthly_slope: float = DEFAULT_MONTHLY_SLOPE

    def __post_init__(self):
        if self.one_year_spread < 0 or self.monthly_slope < 0:
            raise ModelViolation(
                f"spread and slope must be nonnegative, got {self.one_year_spread}, {self.monthly_slope}"
            )


@dataclass(frozen=True)
class CalibrationRow:
    spread: float
    total_pd: float
    idio_pd: float


def spread_at_month(curve: SpreadCurve, month: int) -> float:
    """
    Spread quoted at `month` (0..12).

    Example:
        SpreadCurve(0.02, 0.0005), month 6 -> 0.0230
    """
    if not 0 <= month <= MONTHS_PER_YEAR:
        raise ModelViolation(f"month must lie in 0..{MONTHS_PER_YEAR}, got {month}")
    return curve.one_year_spread + curve.monthly_slope * (MONTHS_PER_YEAR - month)


def spread_to_total_pd(gamma: float, horizon_years: float) -> float:
    """Expected total PD over `horizon_years`: 1 - exp(-horizon_years * gamma)."""
    if gamma < 0:
        raise ModelViolation(f"spread must be nonnegative, got {gamma}")
    if not horizon_years > 0:
        raise ModelViolation(f"horizon must be positive, got {horizon_years}")
    return -math.expm1(-horizon_years * gamma)


def total_pd_to_spread(pd: float, horizon_years: float = 1.0) -> float:
    """Spread implied by a total PD: -ln(1 - pd) / horizon_years."""
    if not 0 <= pd < 1:
        raise ModelViolation(f"total PD must lie in [0, 1), got {pd}")
    if not horizon_years > 0:
        raise ModelViolation(f"horizon must be positive, got {horizon_years}")
    return -math.log1p(-pd) / horizon_years


def totals_from_spreads(curves: Sequence[SpreadCurve], month: int) -> TotalVector:
    """
    Total PDs implied by the spreads at `month`, with horizon factor 1.

    Raises:
        ModelViolation: the totals are not ordered best to worst.
    """
    if not curves:
        raise ModelViolation("at least one spread curve is required")
    totals = [spread_to_total_pd(spread_at_month(c, month), 1.0) for c in curves]
    for i in range(1, len(totals)):
        if totals[i] < totals[i - 1]:
            raise ModelViolation(
                f"ordering violation at month {month}: group {i + 1} total PD {totals[i]:.6f} "
                f"is below group {i} total PD {totals[i - 1]:.6f}"
            )
    return TotalVector(tuple(totals))


def init_chain_from_spreads(curves: Sequence[SpreadCurve], month: int) -> IdioVector:
    """
    Idiosyncratic PDs that reproduce the spread-implied total PDs at `month`.

    Args:
        curves (Sequence[SpreadCurve]): one curve per group, best first.
        month (int): 0..12.

    Returns:
        IdioVector: invert_chain of the totals.
    """
    idio = invert_chain(totals_from_spreads(curves, month))
    logger.debug("month %d idiosyncratic PDs %s", month, idio.values)
    return idio


def calibrate_table(curves: Sequence[SpreadCurve], month: int) -> List[CalibrationRow]:
    """Per-group spread, total PD and idiosyncratic PD at `month`."""
    totals = totals_from_spreads(curves, month)
    idio = invert_chain(totals)
    return [
        CalibrationRow(spread_at_month(c, month), t, d)
        for c, t, d in zip(curves, totals.values, idio.values)
    ]


def roundtrip_error(curves: Sequence[SpreadCurve], month: int) -> float:
    """Largest gap between compose_total(init_chain_from_spreads(...)) and the spread-implied totals."""
    totals = totals_from_spreads(curves, month)
    rebuilt = compose_total(invert_chain(totals))
    return max(abs(a - b) for a, b in zip(totals.values, rebuilt.values))
