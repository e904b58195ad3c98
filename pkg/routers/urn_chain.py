from typing import List, Literal, Optional

import numpy as np
from fastapi import APIRouter
from pydantic import BaseModel, Field

from library.oracle import OracleRunner
from library.urn_chain import (
    IdioVector,
    JointPmfCalculator,
    TotalVector,
    compose_total,
    increments,
    invert_chain,
    is_generalized_dirichlet,
    sample_chain_many,
)
from routers.schemas import BetaBody, table_cells, to_priors
from utils.settings import Settings

router = APIRouter(prefix="/chain", tags=["urn_chain"])


class VectorRequest(BaseModel):
    """
    A PD vector ordered best group first.

    Attributes:
        values (List[float]): one probability per group.
    """
    values: List[float] = Field(min_length=1)


class SampleRequest(BaseModel):
    """
    Attributes:
        priors (List[BetaBody]): Beta law of each D_i.
        draws (int): number of chain draws, at most 10 000.
        seed (int, optional): defaults to URNCHAIN_DEFAULT_SEED.
    """
    priors: List[BetaBody] = Field(min_length=1)
    draws: int = Field(default=100, ge=1, le=10_000)
    seed: Optional[int] = None


class PmfRequest(BaseModel):
    """
    Attributes:
        sizes (List[int]): group sizes n_i.
        priors (List[BetaBody]): one Beta law per group.
        mode (str): "exact" or "quadrature".
    """
    sizes: List[int] = Field(min_length=1)
    priors: List[BetaBody] = Field(min_length=1)
    mode: Literal["exact", "quadrature"] = "exact"


class GeneralizedDirichletRequest(BaseModel):
    priors: List[BetaBody] = Field(min_length=1)
    tol: float = Field(default=1e-9, ge=0)


@router.post("/compose", summary="Total PDs from idiosyncratic PDs")
async def compose(body: VectorRequest):
    """
    Combine idiosyncratic PDs into total PDs and increments.

    Args:
        body (VectorRequest): D_1..D_k, each in [0, 1].

    Returns:
        dict: totals D*_1..D*_k and increments E_1..E_k

    Raises:
        HTTPException: 422 if a PD lies outside [0, 1]

    Example:
        POST /chain/compose
        {"values": [0.02, 0.04, 0.03]}
    """
    totals = compose_total(IdioVector(tuple(body.values)))
    return {"totals": list(totals.values), "increments": list(increments(totals).values)}


@router.post("/invert", summary="Idiosyncratic PDs from total PDs")
async def invert(body: VectorRequest):
    """
    Recover D_1..D_k from nondecreasing total PDs.

    Raises:
        HTTPException: 422 if the totals decrease or an earlier total reaches 1
    """
    idio = invert_chain(TotalVector(tuple(body.values)))
    return {"idio": list(idio.values)}


@router.post("/sample", summary="Draw chain vectors")
def sample(body: SampleRequest):
    """
    Draw (D, D*, E) vectors with independent D_i ~ Beta(alpha_i, beta_i).

    Returns:
        dict: idio, totals and increments, each a list of per-draw vectors
    """
    seed = Settings().default_seed if body.seed is None else body.seed
    idio, totals, incs = sample_chain_many(to_priors(body.priors), body.draws, np.random.default_rng(seed))
    return {"seed": seed, "idio": idio.tolist(), "totals": totals.tolist(), "increments": incs.tolist()}


@router.post("/pmf", summary="Joint default-count law")
def pmf(body: PmfRequest):
    """
    Exact (or quadrature) joint law of the default counts F_1..F_k.

    Args:
        body (PmfRequest): sizes, priors and mode.

    Returns:
        dict:
            - sizes: group sizes
            - cells: list of {counts, prob} in lexicographic order
            - total: sum of all cells

    Raises:
        HTTPException: 413 if the table exceeds URNCHAIN_PMF_CELL_CAP,
            422 if sizes and priors disagree

    Example:
        POST /chain/pmf
        {"sizes": [3, 4], "priors": [{"alpha": 2, "beta": 5}, {"alpha": 1, "beta": 3}]}
    """
    priors = to_priors(body.priors)
    if body.mode == "exact":
        table = JointPmfCalculator().joint_pmf_k(body.sizes, priors)
    else:
        table = OracleRunner().quadrature_joint_pmf(body.sizes, priors)
    return {"sizes": list(table.dims), "cells": table_cells(table), "total": table.total()}


@router.post("/generalized-dirichlet", summary="Check the Generalized Dirichlet condition")
async def generalized_dirichlet(body: GeneralizedDirichletRequest):
    """True when beta_i equals the sum of the later alphas for every group but the last."""
    return {"generalized_dirichlet": is_generalized_dirichlet(to_priors(body.priors), body.tol)}
