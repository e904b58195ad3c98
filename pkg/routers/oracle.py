from typing import List, Literal, Optional

from fastapi import APIRouter
from pydantic import BaseModel, Field

from library.oracle import OracleRunner, ks_distance
from library.urn_chain import beta_stacy_cdf
from routers.schemas import BetaBody, table_cells, to_priors
from utils.settings import Settings

router = APIRouter(prefix="/oracle", tags=["oracle"])


class McPmfRequest(BaseModel):
    """
    Attributes:
        sizes (List[int]): group sizes.
        priors (List[BetaBody]): Beta law of each D_i.
        replicates (int): Monte Carlo replicates, 10^4 .. 10^7.
        seed (int, optional): defaults to URNCHAIN_DEFAULT_SEED.
    """
    sizes: List[int] = Field(min_length=1)
    priors: List[BetaBody] = Field(min_length=1)
    replicates: int = Field(default=100_000, ge=10_000, le=10_000_000)
    seed: Optional[int] = None


class QuadratureRequest(BaseModel):
    sizes: List[int] = Field(min_length=1, max_length=3)
    priors: List[BetaBody] = Field(min_length=1, max_length=3)
    nodes: Optional[int] = Field(default=None, ge=2, le=2000)
    rule: Literal["jacobi", "legendre"] = "jacobi"


class KsRequest(BaseModel):
    """
    Attributes:
        samples (List[float]): observations.
        alpha, beta (float): beta-Stacy shapes of the reference law.
        c (float): upper end of the support; 1 gives Beta(alpha, beta).
    """
    samples: List[float] = Field(min_length=1)
    alpha: float = Field(gt=0)
    beta: float = Field(gt=0)
    c: float = Field(default=1.0, gt=0)


@router.post("/mc-pmf", summary="Monte Carlo joint default-count law")
def mc_pmf(body: McPmfRequest):
    """
    Empirical joint law with per-cell standard errors.

    Returns:
        dict:
            - cells: list of {counts, prob}
            - standard_errors: flattened in the same order as cells
            - replicates, seed

    Raises:
        HTTPException: 422 if sizes and priors disagree
    """
    seed = Settings().default_seed if body.seed is None else body.seed
    result = OracleRunner().mc_joint_pmf(body.sizes, to_priors(body.priors), body.replicates, seed)
    return {
        "cells": table_cells(result.table),
        "standard_errors": result.standard_errors.reshape(-1).tolist(),
        "replicates": result.replicates,
        "seed": result.seed,
    }


@router.post("/quadrature-pmf", summary="Quadrature joint default-count law")
def quadrature_pmf(body: QuadratureRequest):
    """Tensor Gauss quadrature table for up to three groups, with its node-doubling change."""
    runner = OracleRunner()
    priors = to_priors(body.priors)
    table = runner.quadrature_joint_pmf(body.sizes, priors, nodes=body.nodes, rule=body.rule)
    return {
        "cells": table_cells(table),
        "convergence": runner.quadrature_convergence(body.sizes, priors, nodes=body.nodes, rule=body.rule),
    }


@router.post("/ks", summary="Kolmogorov-Smirnov distance to a beta-Stacy law")
async def ks(body: KsRequest):
    """Sup distance between the samples' empirical CDF and BS(alpha, beta, c)."""
    distance = ks_distance(body.samples, lambda x: beta_stacy_cdf(x, body.alpha, body.beta, body.c))
    return {"distance": distance, "samples": len(body.samples)}
