from typing import List, Literal

import numpy as np
from fastapi import APIRouter
from pydantic import BaseModel, Field

from library.polya_urn import (
    Color,
    beta_binomial_pmf,
    de_finetti_params,
    draw,
    new_urn,
    posterior_mean,
    posterior_params,
    proportion_white,
    sequence_probability,
    sequence_probability_closed_form,
)
from routers.schemas import BetaBody

router = APIRouter(prefix="/urn", tags=["polya_urn"])


class UrnBody(BaseModel):
    """Urn composition.

    Attributes:
        white (float): white ball mass (defaults).
        black (float): black ball mass (survivals).
        reinforcement (float): mass added to the drawn colour.
    """
    white: float
    black: float
    reinforcement: float


class DrawRequest(UrnBody):
    draws: int = Field(ge=1, le=100_000)
    seed: int = 0


class PosteriorRequest(BaseModel):
    w0: float
    s: float
    defaults: int
    exposed: int


class BetaBinomialRequest(BetaBody):
    n: int = Field(ge=0, le=100_000)


class SequenceRequest(UrnBody):
    sequence: List[Literal["white", "black"]]


@router.post("/draws", summary="Run reinforced draws from an urn")
async def run_draws(body: DrawRequest):
    """Draw repeatedly from a Polya urn with a seeded random source.

    Args:
        body (DrawRequest): urn composition, number of draws and seed.

    Returns:
        dict:
            - colors: drawn colours in order ("white" = default)
            - final: urn composition after all draws
            - proportion_white: white proportion of the final urn

    Raises:
        HTTPException: 422 if the urn is invalid (negative or zero mass, s <= 0)

    Example:
        POST /urn/draws
        {"white": 1, "black": 1, "reinforcement": 1, "draws": 10, "seed": 7}
    """
    urn = new_urn(body.white, body.black, body.reinforcement)
    rng = np.random.default_rng(body.seed)
    colors = []
    for _ in range(body.draws):
        outcome = draw(urn, rng)
        colors.append(outcome.color.value)
        urn = outcome.updated_urn
    return {
        "colors": colors,
        "final": {"white": urn.white, "black": urn.black, "reinforcement": urn.reinforcement},
        "proportion_white": proportion_white(urn),
    }


@router.post("/de-finetti", summary="De Finetti measure of an urn")
async def de_finetti(body: UrnBody):
    """Beta(w/s, b/s) mixing law of the urn's draw sequence."""
    params = de_finetti_params(new_urn(body.white, body.black, body.reinforcement))
    return {"alpha": params.alpha, "beta": params.beta, "mean": params.mean()}


@router.post("/posterior", summary="Posterior Beta after observed defaults")
async def posterior(body: PosteriorRequest):
    """Update a group's idiosyncratic PD with observed defaults.

    Args:
        body (PosteriorRequest):
            - w0 (float): prior mean in (0, 1)
            - s (float): reinforcement
            - defaults (int): observed defaults
            - exposed (int): firms observed

    Returns:
        dict: alpha, beta and mean of the posterior Beta law

    Raises:
        HTTPException: 422 if defaults exceed exposed or w0 is outside (0, 1)

    Example:
        POST /urn/posterior
        {"w0": 0.0257, "s": 0.05, "defaults": 0, "exposed": 20}
    """
    params = posterior_params(body.w0, body.s, body.defaults, body.exposed)
    return {
        "alpha": params.alpha,
        "beta": params.beta,
        "mean": posterior_mean(body.w0, body.s, body.defaults, body.exposed),
    }


@router.post("/beta-binomial", summary="Default-count law within one group")
async def beta_binomial(body: BetaBinomialRequest):
    """Beta-binomial probabilities P[F = f] for f = 0..n."""
    prior = body.to_params()
    return {"pmf": [beta_binomial_pmf(body.n, f, prior) for f in range(body.n + 1)]}


@router.post("/sequence-probability", summary="Probability of an exact draw sequence")
async def sequence_prob(body: SequenceRequest):
    """Probability of a draw sequence, by chaining draws and by the closed form.

    Both values depend only on the number of whites in the sequence.
    """
    urn = new_urn(body.white, body.black, body.reinforcement)
    colors = [Color(c) for c in body.sequence]
    whites = sum(c is Color.WHITE for c in colors)
    return {
        "chained": sequence_probability(urn, colors),
        "closed_form": sequence_probability_closed_form(urn, whites, len(colors)),
    }
