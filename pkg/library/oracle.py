"""
Brute-force verifiers for the closed forms: Monte Carlo samplers, tensor
Gauss quadrature and the Kolmogorov-Smirnov distance.

Only data containers are imported from the modules under test; none of
their formulas are called here.
"""

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterator, Optional, Sequence, TextIO, Tuple

import numpy as np
from scipy.special import betaln, gammaln, roots_jacobi, roots_legendre

from utils.settings import Settings

from .common_utils import CsvWriter
from .errors import ModelViolation
from .polya_urn import BetaParams, UrnState
from .urn_chain import PmfTable

logger = logging.getLogger(__name__)

MIN_REPLICATES = 10_000
MAX_QUADRATURE_GROUPS = 3


@dataclass(frozen=True)
class OracleReport:
    """A Monte Carlo estimate with its standard error and seed contract."""

    estimate: float
    standard_error: float
    replicates: int
    seed: int


@dataclass
class McPmfResult:
    table: PmfTable
    standard_errors: np.ndarray
    replicates: int
    seed: int

    def reports(self) -> Iterator[Tuple[Tuple[int, ...], OracleReport]]:
        for index, p in self.table.cells():
            yield index, OracleReport(p, float(self.standard_errors[index]), self.replicates, self.seed)

    def report_csv(self, stream: TextIO) -> None:
        header = [f"f_{i + 1}" for i in range(len(self.table.dims))] + [
            "estimate", "standard_error", "replicates", "seed",
        ]
        rows = (
            [*index, CsvWriter.significant(r.estimate), CsvWriter.significant(r.standard_error), r.replicates, r.seed]
            for index, r in self.reports()
        )
        CsvWriter().write(stream, header, rows)


def _beta_variates(rng: np.random.Generator, alpha: float, beta: float, size: int) -> np.ndarray:
    # X / (X + Y) with X ~ Gamma(alpha), Y ~ Gamma(beta)
    x = rng.standard_gamma(alpha, size)
    y = rng.standard_gamma(beta, size)
    s = x + y
    return np.divide(x, s, out=np.full(size, alpha / (alpha + beta)), where=s > 0)


def _mc_block(args) -> np.ndarray:
    sizes, shapes, count, seed_seq = args
    rng = np.random.default_rng(seed_seq)
    survival = np.ones(count)
    index = np.zeros(count, dtype=np.int64)
    for n, (alpha, beta) in zip(sizes, shapes):
        survival = survival * (1.0 - _beta_variates(rng, alpha, beta, count))
        failures = rng.binomial(n, np.clip(1.0 - survival, 0.0, 1.0))
        index = index * (n + 1) + failures
    return np.bincount(index, minlength=math.prod(n + 1 for n in sizes))


def _standard_errors(freq: np.ndarray, replicates: int) -> np.ndarray:
    # sample standard deviation of the cell indicator over sqrt(replicates)
    return np.sqrt(freq * (1.0 - freq) / (replicates - 1))


def _check_replicates(replicates: int) -> None:
    if replicates < MIN_REPLICATES:
        raise ModelViolation(f"Monte Carlo oracles need at least {MIN_REPLICATES} replicates, got {replicates}")


def _check_sizes(sizes: Sequence[int]) -> Tuple[int, ...]:
    sizes = tuple(int(n) for n in sizes)
    if any(n < 0 for n in sizes):
        raise ModelViolation(f"group sizes must be nonnegative, got {list(sizes)}")
    return sizes


class OracleRunner:
    """
    Independent evidence for the exact default-count laws.

    Monte Carlo work is split into blocks of URNCHAIN_MC_BLOCK_SIZE
    replicates; block b draws from SeedSequence(seed).spawn(...)[b], so serial
    and parallel runs produce the same table.
    """

    def __init__(self, settings: Optional[Settings] = None):
        self.settings = settings or Settings()
        self.block_size = self.settings.mc_block_size
        self.nodes = self.settings.quadrature_nodes

    def _plan(self, replicates: int, seed: int):
        blocks = math.ceil(replicates / self.block_size)
        children = np.random.SeedSequence(seed).spawn(blocks)
        return [
            (min(self.block_size, replicates - b * self.block_size), children[b])
            for b in range(blocks)
        ]

    def mc_joint_pmf(
        self,
        sizes: Sequence[int],
        priors: Sequence[BetaParams],
        replicates: int,
        seed: int,
        workers: int = 1,
    ) -> McPmfResult:
        """
        Empirical joint law of (F_1, ..., F_k): sample every D_i, form the
        totals as 1 - prod(1 - D_j), then draw binomial counts.

        Args:
            sizes (Sequence[int]): group sizes.
            priors (Sequence[BetaParams]): Beta law of each D_i.
            replicates (int): at least 10^4.
            seed (int): root of the block seed plan.
            workers (int): process count; does not change the result.

        Returns:
            McPmfResult: frequencies and per-cell standard errors.
        """
        _check_replicates(replicates)
        if not sizes or len(sizes) != len(priors):
            raise ModelViolation("need one prior per group")
        sizes = _check_sizes(sizes)
        shapes = tuple((p.alpha, p.beta) for p in priors)
        jobs = [(sizes, shapes, count, child) for count, child in self._plan(replicates, seed)]

        if workers > 1 and len(jobs) > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                counts = list(pool.map(_mc_block, jobs))
        else:
            counts = [_mc_block(job) for job in jobs]

        total = np.zeros(math.prod(n + 1 for n in sizes), dtype=np.int64)
        for c in counts:
            total += c
        freq = (total / replicates).reshape(tuple(n + 1 for n in sizes))
        logger.debug("mc joint pmf: %d replicates in %d blocks", replicates, len(jobs))
        return McPmfResult(PmfTable(sizes, freq), _standard_errors(freq, replicates), replicates, seed)

    def mc_polya_counts(self, urn: UrnState, n: int, replicates: int, seed: int) -> Tuple[np.ndarray, np.ndarray]:
        """
        Default-count law of an n-firm group by n sequential reinforced draws
        from the urn, repeated `replicates` times.

        Returns:
            tuple: (frequencies over 0..n, standard errors)
        """
        _check_replicates(replicates)
        _check_sizes((n,))
        rng = np.random.default_rng(seed)
        white = np.full(replicates, urn.white)
        total = urn.white + urn.black
        whites = np.zeros(replicates, dtype=np.int64)
        for _ in range(n):
            hit = rng.random(replicates) * total < white
            whites += hit
            white = white + urn.reinforcement * hit
            total += urn.reinforcement
        freq = np.bincount(whites, minlength=n + 1) / replicates
        return freq, _standard_errors(freq, replicates)

    def _axis_rule(self, prior: BetaParams, nodes: int, rule: str) -> Tuple[np.ndarray, np.ndarray]:
        """Nodes on (0, 1) and weights summing to one for expectations under Beta(prior)."""
        a, b = prior.alpha, prior.beta
        if rule == "jacobi":
            x, w = roots_jacobi(nodes, b - 1.0, a - 1.0)
            return (1.0 + x) / 2.0, w / w.sum()
        if rule == "legendre":
            x, w = roots_legendre(nodes)
            d = (1.0 + x) / 2.0
            density = np.exp((a - 1) * np.log(d) + (b - 1) * np.log1p(-d) - betaln(a, b))
            return d, w / 2.0 * density
        raise ModelViolation(f"unknown quadrature rule '{rule}', expected 'jacobi' or 'legendre'")

    def quadrature_joint_pmf(
        self,
        sizes: Sequence[int],
        priors: Sequence[BetaParams],
        nodes: Optional[int] = None,
        rule: str = "jacobi",
    ) -> PmfTable:
        """
        Joint law of up to three groups by tensor-product Gauss integration of
        E[prod_j C(n_j,f_j) (D*_j)^f_j (1 - D*_j)^(n_j - f_j)].

        The default rule integrates against the Beta weight itself
        (Gauss-Jacobi), which is exact once nodes exceed half the total size.
        "legendre" uses plain Gauss-Legendre nodes times the Beta density and
        only converges fast for shapes >= 1.

        Raises:
            ModelViolation: more than three groups or a negative group size.
        """
        k = len(sizes)
        if not 1 <= k <= MAX_QUADRATURE_GROUPS:
            raise ModelViolation(f"quadrature oracle handles 1..{MAX_QUADRATURE_GROUPS} groups, got {k}")
        if len(priors) != k:
            raise ModelViolation("need one prior per group")
        nodes = nodes or self.nodes
        sizes = _check_sizes(sizes)

        survival = None
        weight = None
        axes = []
        for j, (n, prior) in enumerate(zip(sizes, priors)):
            d, w = self._axis_rule(prior, nodes, rule)
            shape = [1] * k
            shape[j] = nodes
            d, w = d.reshape(shape), w.reshape(shape)
            survival = (1.0 - d) if survival is None else survival * (1.0 - d)
            weight = w if weight is None else weight * w
            f = np.arange(n + 1)
            axes.append((n, gammaln(n + 1) - gammaln(f + 1) - gammaln(n - f + 1), 1.0 - survival, survival))

        probs = np.zeros(tuple(n + 1 for n in sizes))

        # one partial product per level is alive at a time
        def fill(j: int, prefix: Tuple[int, ...], partial: np.ndarray) -> None:
            n, log_binom, total, surv = axes[j]
            for x in range(n + 1):
                term = partial * (math.exp(log_binom[x]) * total ** x * surv ** (n - x))
                if j == k - 1:
                    probs[prefix + (x,)] = float(term.sum())
                else:
                    fill(j + 1, prefix + (x,), term)

        fill(0, (), weight)
        return PmfTable(sizes, np.clip(probs, 0.0, None))

    def quadrature_convergence(
        self, sizes: Sequence[int], priors: Sequence[BetaParams], nodes: Optional[int] = None, rule: str = "jacobi"
    ) -> float:
        """Largest cell change when the node count is doubled."""
        nodes = nodes or self.nodes
        coarse = self.quadrature_joint_pmf(sizes, priors, nodes, rule)
        fine = self.quadrature_joint_pmf(sizes, priors, 2 * nodes, rule)
        return float(np.max(np.abs(coarse.probs - fine.probs)))


def ks_distance(samples: Sequence[float], cdf: Callable) -> float:
    """
    Sup-norm distance between the empirical distribution of `samples` and a
    reference distribution function (vectorised over numpy arrays).

    Raises:
        ModelViolation: empty sample.
    """
    x = np.sort(np.asarray(samples, dtype=float))
    n = x.size
    if n == 0:
        raise ModelViolation("KS distance of an empty sample")
    if n < 100:
        logger.warning("KS distance from only %d samples", n)
    ref = np.asarray(cdf(x), dtype=float)
    upper = np.arange(1, n + 1) / n - ref
    lower = ref - np.arange(0, n) / n
    return float(max(upper.max(), lower.max()))


def mc_joint_pmf(
    sizes: Sequence[int], priors: Sequence[BetaParams], replicates: int, seed: int, workers: int = 1
) -> McPmfResult:
    return OracleRunner().mc_joint_pmf(sizes, priors, replicates, seed, workers=workers)


def quadrature_joint_pmf(
    sizes: Sequence[int], priors: Sequence[BetaParams], nodes: Optional[int] = None, rule: str = "jacobi"
) -> PmfTable:
    return OracleRunner().quadrature_joint_pmf(sizes, priors, nodes=nodes, rule=rule)
