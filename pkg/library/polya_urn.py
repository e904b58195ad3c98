"""
Two-colour Polya urn: reinforcement dynamics, Beta posterior updating and the
beta-binomial law of default counts within one group.

One default in a group is the extraction of a white ball. Ball masses are
reals (the initial composition is rescaled to w + b = 1).
"""

import enum
import logging
import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy.special import betaln, gammaln

from .errors import ModelViolation

logger = logging.getLogger(__name__)


class Color(enum.Enum):
    WHITE = "white"  # default
    BLACK = "black"  # survival


@dataclass(frozen=True)
class UrnState:
    """
    Composition of a Polya urn.

    Attributes:
        white (float): white ball mass w.
        black (float): black ball mass b.
        reinforcement (float): mass s added to the drawn colour.
    """

    white: float
    black: float
    reinforcement: float

    def __post_init__(self):
        if not (self.white >= 0 and self.black >= 0):
            raise ModelViolation(f"ball masses must be nonnegative, got white={self.white}, black={self.black}")
        if not self.white + self.black > 0:
            raise ModelViolation("urn must contain a positive total mass")
        if not self.reinforcement > 0:
            raise ModelViolation(f"reinforcement must be positive, got {self.reinforcement}")


@dataclass(frozen=True)
class BetaParams:
    """Shape pair of a Beta law (de Finetti measures and posteriors)."""

    alpha: float
    beta: float

    def __post_init__(self):
        if not (self.alpha > 0 and self.beta > 0):
            raise ModelViolation(f"Beta shapes must be positive, got ({self.alpha}, {self.beta})")

    def mean(self) -> float:
        return self.alpha / (self.alpha + self.beta)


@dataclass(frozen=True)
class DrawOutcome:
    color: Color
    updated_urn: UrnState


def new_urn(w0: float, b0: float, s: float) -> UrnState:
    """
    Build an urn with white mass w0, black mass b0 and reinforcement s.

    Raises:
        ModelViolation: negative masses, zero total mass or nonpositive reinforcement.

    Example:
        new_urn(0.0257, 0.9743, 0.05) -> urn with proportion_white 0.0257
    """
    return UrnState(white=float(w0), black=float(b0), reinforcement=float(s))


def proportion_white(urn: UrnState) -> float:
    return urn.white / (urn.white + urn.black)


def draw(urn: UrnState, rng: np.random.Generator) -> DrawOutcome:
    """
    Sample one ball, return it and add `reinforcement` mass of its colour.

    Args:
        urn (UrnState): current composition.
        rng (np.random.Generator): seeded random source, owned by the caller.

    Returns:
        DrawOutcome: the drawn colour and the reinforced urn.
    """
    if rng.random() < proportion_white(urn):
        return DrawOutcome(Color.WHITE, UrnState(urn.white + urn.reinforcement, urn.black, urn.reinforcement))
    return DrawOutcome(Color.BLACK, UrnState(urn.white, urn.black + urn.reinforcement, urn.reinforcement))


def de_finetti_params(urn: UrnState) -> BetaParams:
    """
    Mixing law of the exchangeable draw sequence: Beta(w/s, b/s).

    Raises:
        ModelViolation: one colour has zero mass, so the measure is a point mass.
    """
    if urn.white == 0 or urn.black == 0:
        raise ModelViolation(
            f"degenerate de Finetti measure: urn ({urn.white}, {urn.black}) is a point mass"
        )
    return BetaParams(urn.white / urn.reinforcement, urn.black / urn.reinforcement)


def _check_observation(w0: float, s: float, defaults: int, exposed: int) -> None:
    if not 0 < w0 < 1:
        raise ModelViolation(f"initial white proportion must lie in (0, 1), got {w0}")
    if not s > 0:
        raise ModelViolation(f"reinforcement must be positive, got {s}")
    if defaults < 0 or exposed < 0:
        raise ModelViolation(f"counts must be nonnegative, got defaults={defaults}, exposed={exposed}")
    if defaults > exposed:
        raise ModelViolation(f"inconsistent observation: {defaults} defaults among {exposed} exposed")


def posterior_params(w0: float, s: float, defaults: int, exposed: int) -> BetaParams:
    """
    Beta posterior of a group's idiosyncratic PD after observing `defaults`
    failures among `exposed` firms: s white per default, s black per survivor.

    Returns:
        BetaParams: (w0/s + defaults, (1 - w0)/s + exposed - defaults)
    """
    _check_observation(w0, s, defaults, exposed)
    return BetaParams(w0 / s + defaults, (1.0 - w0) / s + exposed - defaults)


def posterior_mean(w0: float, s: float, defaults: int, exposed: int) -> float:
    """Posterior expectation (w0 + s*defaults) / (1 + s*exposed)."""
    _check_observation(w0, s, defaults, exposed)
    return (w0 + s * defaults) / (1.0 + s * exposed)


def ln_beta(a: float, b: float) -> float:
    """
    Natural log of the Beta function, ln G(a) + ln G(b) - ln G(a + b).

    Raises:
        ModelViolation: a or b is not positive.
    """
    if not (a > 0 and b > 0):
        raise ModelViolation(f"ln_beta needs positive arguments, got ({a}, {b})")
    return float(betaln(a, b))


def ln_binomial(n: int, f: int) -> float:
    return float(gammaln(n + 1) - gammaln(f + 1) - gammaln(n - f + 1))


def beta_binomial_pmf(n: int, f: int, prior: BetaParams) -> float:
    """
    P[F = f] for F defaults among n firms whose common PD is Beta(prior).

    Computed as C(n, f) B(a + f, b + n - f) / B(a, b) in log space. Counts
    outside 0..n have probability zero.
    """
    if f < 0 or f > n:
        return 0.0
    log_p = ln_binomial(n, f) + ln_beta(prior.alpha + f, prior.beta + n - f) - ln_beta(prior.alpha, prior.beta)
    return math.exp(log_p)


def beta_binomial_table(n: int, prior: BetaParams) -> np.ndarray:
    """Whole beta-binomial law over f = 0..n as an array."""
    f = np.arange(n + 1)
    log_p = (
        gammaln(n + 1) - gammaln(f + 1) - gammaln(n - f + 1)
        + betaln(prior.alpha + f, prior.beta + n - f)
        - betaln(prior.alpha, prior.beta)
    )
    return np.exp(log_p)


def martingale_step_expectation(urn: UrnState) -> float:
    """E[Z(t+1) | urn] from the two reinforcement branches; equals proportion_white(urn)."""
    w, b, s = urn.white, urn.black, urn.reinforcement
    return (w + s) / (w + b + s) * w / (w + b) + w / (w + b + s) * b / (w + b)


def sequence_probability(urn: UrnState, sequence: Iterable[Color]) -> float:
    """Probability of an exact draw sequence, chaining the one-step rule."""
    prob = 1.0
    white, black, s = urn.white, urn.black, urn.reinforcement
    for color in sequence:
        if color is Color.WHITE:
            prob *= white / (white + black)
            white += s
        else:
            prob *= black / (white + black)
            black += s
    return prob


def sequence_probability_closed_form(urn: UrnState, whites: int, length: int) -> float:
    """
    Probability of any particular sequence with `whites` Whites among `length`
    draws: B(w/s + r, b/s + t - r) / B(w/s, b/s). An urn with one colour
    missing only ever draws the other one.
    """
    if not 0 <= whites <= length:
        raise ModelViolation(f"whites must lie in 0..{length}, got {whites}")
    if urn.white == 0:
        return 1.0 if whites == 0 else 0.0
    if urn.black == 0:
        return 1.0 if whites == length else 0.0
    prior = de_finetti_params(urn)
    return math.exp(
        ln_beta(prior.alpha + whites, prior.beta + length - whites) - ln_beta(prior.alpha, prior.beta)
    )


def proportion_after(urn: UrnState, whites: int, draws: int) -> float:
    """White proportion after `draws` reinforced draws of which `whites` were white."""
    return (urn.white + urn.reinforcement * whites) / (urn.white + urn.black + draws * urn.reinforcement)


def simulate_proportions(
    urn: UrnState,
    draws: int,
    replicates: int,
    rng: np.random.Generator,
    checkpoints: Optional[Sequence[int]] = None,
) -> np.ndarray:
    """
    Run independent replicate urns side by side and record the white
    proportion at the requested draw counts.

    Args:
        urn (UrnState): common starting composition.
        draws (int): number of reinforced draws per replicate.
        replicates (int): number of independent urns.
        rng (np.random.Generator): seeded random source.
        checkpoints (Sequence[int], optional): draw counts to record, each in 1..draws.
            Defaults to [draws].

    Returns:
        np.ndarray: shape (len(checkpoints), replicates), rows in ascending checkpoint order.
    """
    marks = sorted(set(checkpoints or [draws]))
    if marks[0] < 1 or marks[-1] > draws:
        raise ModelViolation(f"checkpoints must lie in 1..{draws}, got {marks}")
    row_of = {t: i for i, t in enumerate(marks)}

    white = np.full(replicates, urn.white, dtype=float)
    total = urn.white + urn.black
    out = np.empty((len(marks), replicates))
    for t in range(1, draws + 1):
        white += urn.reinforcement * (rng.random(replicates) * total < white)
        total += urn.reinforcement
        if t in row_of:
            out[row_of[t]] = white / total
    logger.debug("simulated %d urns for %d draws", replicates, draws)
    return out
