"""
The urn chain: k groups ordered best to worst, coupled by

    D*_1 = D_1,    D*_i = D*_{i-1} + (1 - D*_{i-1}) D_i.

Total PDs, increments, the beta-Stacy conditional laws and the exact joint
law of the default counts F_1..F_k.
"""

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Iterator, List, Optional, Sequence, TextIO, Tuple

import numpy as np
from scipy.special import betainc, betaln, gammaln, logsumexp

from utils.settings import Settings

from .common_utils import CsvWriter
from .errors import ModelViolation, ResourceCapExceeded
from .polya_urn import BetaParams, ln_beta, ln_binomial

logger = logging.getLogger(__name__)

_RANGE_TOL = 1e-12
# cells below this are stored as exact zeros
_TINY = 1e-300
# largest scratch tensor built while integrating out one group
_BLOCK_ELEMENTS = 1 << 22


class _ChainVector:
    values: Tuple[float, ...]

    def __len__(self) -> int:
        return len(self.values)

    def __iter__(self):
        return iter(self.values)

    def __getitem__(self, index):
        return self.values[index]

    def as_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=float)


@dataclass(frozen=True)
class IdioVector(_ChainVector):
    """Idiosyncratic PDs D_1..D_k, best group first."""

    values: Tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        for i, v in enumerate(self.values):
            if not -_RANGE_TOL <= v <= 1 + _RANGE_TOL:
                raise ModelViolation(f"idiosyncratic PD of group {i + 1} outside [0, 1]: {v}")


@dataclass(frozen=True)
class TotalVector(_ChainVector):
    """Total PDs D*_1..D*_k; nondecreasing along the reliability order."""

    values: Tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        for i, v in enumerate(self.values):
            if not -_RANGE_TOL <= v <= 1 + _RANGE_TOL:
                raise ModelViolation(f"total PD of group {i + 1} outside [0, 1]: {v}")
        for i in range(1, len(self.values)):
            if self.values[i] < self.values[i - 1]:
                raise ModelViolation(
                    f"total PDs must be nondecreasing: group {i + 1} has {self.values[i]} "
                    f"below group {i} with {self.values[i - 1]}"
                )


@dataclass(frozen=True)
class IncrementVector(_ChainVector):
    """Increments E_i = D*_i - D*_{i-1}; nonnegative, summing to at most 1."""

    values: Tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if any(v < 0 for v in self.values) or sum(self.values) > 1 + _RANGE_TOL:
            raise ModelViolation(f"increments must be nonnegative with sum <= 1, got {self.values}")


@dataclass(frozen=True)
class ChainSample:
    idio: IdioVector
    totals: TotalVector
    increments: IncrementVector


@dataclass
class PmfTable:
    """
    Probability table over default-count tuples (f_1, ..., f_k).

    Attributes:
        dims (Tuple[int, ...]): group sizes n_i.
        probs (np.ndarray): shape (n_1 + 1, ..., n_k + 1); probs[f] = P[F = f].
    """

    dims: Tuple[int, ...]
    probs: np.ndarray

    def __post_init__(self):
        self.dims = tuple(int(n) for n in self.dims)
        expected = tuple(n + 1 for n in self.dims)
        if self.probs.shape != expected:
            raise ModelViolation(f"table shape {self.probs.shape} does not match sizes {self.dims}")
        if np.any(self.probs < 0):
            raise ModelViolation("pmf table holds negative probabilities")

    def total(self) -> float:
        return float(self.probs.sum())

    def check_normalized(self, tol: float = 1e-8) -> None:
        if abs(self.total() - 1.0) > tol:
            raise ModelViolation(f"pmf table sums to {self.total()!r}, not 1 within {tol}")

    def marginal(self, axis: int) -> np.ndarray:
        """Law of F_{axis+1} alone."""
        others = tuple(a for a in range(len(self.dims)) if a != axis)
        return self.probs.sum(axis=others)

    def cells(self) -> Iterator[Tuple[Tuple[int, ...], float]]:
        """Cells in lexicographic tuple order."""
        for index in np.ndindex(*self.probs.shape):
            yield index, float(self.probs[index])

    def to_csv(self, stream: TextIO) -> None:
        header = [f"f_{i + 1}" for i in range(len(self.dims))] + ["prob"]
        rows = ([*index, CsvWriter.significant(p)] for index, p in self.cells())
        CsvWriter().write(stream, header, rows)


def compose_total(idio: IdioVector) -> TotalVector:
    """
    Recombine idiosyncratic PDs into total PDs.

    Example:
        (d, 0, 0) -> (d, d, d): inferior groups inherit the systemic floor.
    """
    totals = []
    previous = 0.0
    for d in idio.values:
        previous = previous + (1.0 - previous) * d
        totals.append(previous)
    return TotalVector(tuple(totals))


def invert_chain(totals: TotalVector) -> IdioVector:
    """
    Recover D_i = (D*_i - D*_{i-1}) / (1 - D*_{i-1}) from total PDs.

    Raises:
        ModelViolation: a group before the last already defaults with certainty,
            so the chain below it is undefined.
    """
    if not isinstance(totals, TotalVector):
        totals = TotalVector(tuple(totals))
    idio = []
    previous = 0.0
    for i, t in enumerate(totals.values):
        if previous >= 1.0:
            raise ModelViolation(
                f"group {i} has total PD 1; idiosyncratic PD of group {i + 1} is undefined"
            )
        idio.append((t - previous) / (1.0 - previous))
        previous = t
    return IdioVector(tuple(idio))


def increments(totals: TotalVector) -> IncrementVector:
    values = []
    previous = 0.0
    for t in totals.values:
        values.append(t - previous)
        previous = t
    return IncrementVector(tuple(values))


def _totals_from_draws(idio: np.ndarray) -> np.ndarray:
    totals = np.empty_like(idio)
    previous = np.zeros(idio.shape[0])
    for i in range(idio.shape[1]):
        previous = previous + (1.0 - previous) * idio[:, i]
        totals[:, i] = previous
    return totals


def sample_chain(priors: Sequence[BetaParams], rng: np.random.Generator) -> ChainSample:
    """
    Draw independent D_i ~ Beta(alpha_i, beta_i) and derive totals and increments.

    Args:
        priors (Sequence[BetaParams]): one Beta law per group, best first.
        rng (np.random.Generator): seeded random source.

    Returns:
        ChainSample: (idio, totals, increments) of one draw.
    """
    if not priors:
        raise ModelViolation("the chain needs at least one group")
    idio = IdioVector(tuple(rng.beta(p.alpha, p.beta) for p in priors))
    totals = compose_total(idio)
    return ChainSample(idio, totals, increments(totals))


def sample_chain_many(
    priors: Sequence[BetaParams], draws: int, rng: np.random.Generator
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Vectorised sample_chain.

    Returns:
        tuple: (idio, totals, increments), each of shape (draws, k).
    """
    if not priors:
        raise ModelViolation("the chain needs at least one group")
    idio = np.column_stack([rng.beta(p.alpha, p.beta, size=draws) for p in priors])
    totals = _totals_from_draws(idio)
    incs = np.diff(totals, axis=1, prepend=0.0)
    return idio, totals, incs


def sample_conditional_increment(
    prior: BetaParams, previous_increments: Sequence[float], draws: int, rng: np.random.Generator
) -> np.ndarray:
    """Draws of E_i given E_1..E_{i-1}: D_i scaled by the remaining mass 1 - sum(E_j)."""
    remaining = 1.0 - float(sum(previous_increments))
    if remaining <= 0:
        raise ModelViolation("no probability mass left for the next increment")
    return remaining * rng.beta(prior.alpha, prior.beta, size=draws)


def _check_beta_stacy(a: float, b: float, c: float) -> None:
    if not (a > 0 and b > 0 and c > 0):
        raise ModelViolation(f"beta-Stacy parameters must be positive, got a={a}, b={b}, c={c}")


def _beta_stacy_logpdf(x: float, a: float, b: float, c: float) -> float:
    if not 0 < x < c:
        return -math.inf
    return (
        (a - 1) * math.log(x)
        + (b - 1) * math.log(c - x)
        - (a + b - 1) * math.log(c)
        - ln_beta(a, b)
    )


def beta_stacy_pdf(x: float, a: float, b: float, c: float) -> float:
    """
    Beta-Stacy density x^(a-1) (c-x)^(b-1) / (B(a,b) c^(a+b-1)) on (0, c), zero elsewhere.

    With c = 1 this is the Beta(a, b) density.
    """
    _check_beta_stacy(a, b, c)
    return math.exp(_beta_stacy_logpdf(x, a, b, c))


def beta_stacy_cdf(x, a: float, b: float, c: float):
    """Distribution function of the beta-Stacy law; accepts scalars or arrays."""
    _check_beta_stacy(a, b, c)
    return betainc(a, b, np.clip(np.asarray(x, dtype=float) / c, 0.0, 1.0))


def increments_logpdf(incs: Sequence[float], priors: Sequence[BetaParams]) -> float:
    """
    Joint log density of (E_1, ..., E_k) as the product of the conditional
    beta-Stacy densities E_i | E_<i ~ BS(alpha_i, beta_i, 1 - sum E_<i).
    """
    if len(incs) != len(priors):
        raise ModelViolation(f"{len(incs)} increments for {len(priors)} groups")
    log_density = 0.0
    remaining = 1.0
    for e, p in zip(incs, priors):
        if remaining <= 0:
            return -math.inf
        log_density += _beta_stacy_logpdf(e, p.alpha, p.beta, remaining)
        remaining -= e
    return log_density


def is_generalized_dirichlet(priors: Sequence[BetaParams], tol: float = 1e-9) -> bool:
    """
    True when beta_i equals the sum of the later groups' alphas for every i < k,
    the condition under which the chain law is a Generalized Dirichlet.
    """
    for i in range(len(priors) - 1):
        tail = sum(p.alpha for p in priors[i + 1:])
        if abs(priors[i].beta - tail) > tol:
            return False
    return True


def _clean(probs: np.ndarray) -> np.ndarray:
    probs[probs < _TINY] = 0.0
    return probs


def _level_kernel(rows: int, cols: int, f: int, carried: int, alpha: float, beta: float) -> np.ndarray:
    """
    Log weights K[p, q] taking the coefficient of (D*_j)^p, once group j's
    likelihood with f defaults is multiplied in, to the coefficient of
    (D*_{j-1})^q after D_j is integrated out. carried is n_j + ... + n_k.

    Expanding D*_j = D*_{j-1} + S_{j-1} D_j with a = p + f and i = a - q gives
    C(a, i) B(alpha + i, beta + carried - a) / B(alpha, beta); q > a is -inf.
    """
    a = np.arange(rows)[:, None] + f
    i = a - np.arange(cols)[None, :]
    valid = i >= 0
    i = np.where(valid, i, 0)
    log_c = gammaln(a + 1) - gammaln(i + 1) - gammaln(a - i + 1)
    kernel = log_c + betaln(alpha + i, beta + carried - a) - betaln(alpha, beta)
    return np.where(valid, kernel, -np.inf)


def _level_block(args) -> np.ndarray:
    states, f, cols, carried, alpha, beta = args
    kernel = _level_kernel(states.shape[1], cols, f, carried, alpha, beta)
    out = np.empty((states.shape[0], cols))
    step = max(1, _BLOCK_ELEMENTS // kernel.size)
    with np.errstate(divide="ignore", invalid="ignore"):
        for start in range(0, states.shape[0], step):
            chunk = states[start:start + step, :, None] + kernel[None, :, :]
            out[start:start + step] = logsumexp(chunk, axis=1)
    return out


def _joint_log_table(sizes: Tuple[int, ...], shapes: Tuple[Tuple[float, float], ...], mapper) -> np.ndarray:
    """
    log P[F = f] for every cell, integrating out D_k, ..., D_1 in turn.

    Row r of `states` holds the log coefficients, by power of D*_j, of the
    integrand for one assignment of the counts of groups j..k; rows are in
    lexicographic order of those counts. Every row of a level shares the
    kernel of its own count f, so a level costs one kernel per f.
    """
    states = np.zeros((1, 1))
    carried = 0
    for j in reversed(range(len(sizes))):
        alpha, beta = shapes[j]
        n = sizes[j]
        carried += n
        # D*_0 = 0 leaves only the power-zero term at the top
        cols = 1 if j == 0 else states.shape[1] + n
        jobs = [(states, f, cols, carried, alpha, beta) for f in range(n + 1)]
        states = np.concatenate(list(mapper(_level_block, jobs)), axis=0)

    log_p = states[:, 0].reshape(tuple(n + 1 for n in sizes))
    for axis, n in enumerate(sizes):
        f = np.arange(n + 1)
        shape = [1] * len(sizes)
        shape[axis] = n + 1
        log_p = log_p + (gammaln(n + 1) - gammaln(f + 1) - gammaln(n - f + 1)).reshape(shape)
    return log_p


class JointPmfCalculator:
    """
    Exact joint and marginal default-count laws of the chain.

    The table cap comes from URNCHAIN_PMF_CELL_CAP; larger problems belong to
    the Monte Carlo oracle.
    """

    def __init__(self, settings: Optional[Settings] = None):
        self.settings = settings or Settings()
        self.cell_cap = self.settings.pmf_cell_cap

    def _check_cap(self, sizes: Sequence[int]) -> int:
        if any(n < 0 for n in sizes):
            raise ModelViolation(f"group sizes must be nonnegative, got {list(sizes)}")
        cells = math.prod(n + 1 for n in sizes)
        if cells > self.cell_cap:
            raise ResourceCapExceeded(cells, self.cell_cap, suggested_mode="mc")
        return cells

    def joint_pmf_two(self, n1: int, n2: int, prior1: BetaParams, prior2: BetaParams) -> PmfTable:
        """
        Joint law of (F_1, F_2) for the two best groups.

        Expands (D*_2)^f2 = sum_i C(f2, i) D_1^(f2-i) ((1-D_1) D_2)^i with
        1 - D*_2 = (1-D_1)(1-D_2), so every cell is a positive sum of Beta
        function ratios:

            C(n1,f1) C(n2,f2) sum_i C(f2,i)
                B(a1+f1+f2-i, b1+n1-f1+n2-f2+i)/B(a1,b1) * B(a2+i, b2+n2-f2)/B(a2,b2)

        Raises:
            ResourceCapExceeded: (n1+1)(n2+1) above the configured cap.
        """
        self._check_cap((n1, n2))
        a1, b1, a2, b2 = prior1.alpha, prior1.beta, prior2.alpha, prior2.beta
        lnb1, lnb2 = ln_beta(a1, b1), ln_beta(a2, b2)
        probs = np.zeros((n1 + 1, n2 + 1))
        for f1 in range(n1 + 1):
            for f2 in range(n2 + 1):
                i = np.arange(f2 + 1)
                terms = (
                    np.array([ln_binomial(f2, int(x)) for x in i])
                    + betaln(a1 + f1 + f2 - i, b1 + n1 - f1 + n2 - f2 + i) - lnb1
                    + betaln(a2 + i, b2 + n2 - f2) - lnb2
                )
                probs[f1, f2] = math.exp(ln_binomial(n1, f1) + ln_binomial(n2, f2) + float(logsumexp(terms)))
        table = PmfTable((n1, n2), _clean(probs))
        table.check_normalized()
        return table

    def joint_pmf_k(
        self, sizes: Sequence[int], priors: Sequence[BetaParams], workers: int = 1
    ) -> PmfTable:
        """
        Joint law of (F_1, ..., F_k) for any number of groups.

        Two groups go through joint_pmf_two, so both forms return the same
        table bit for bit.

        Args:
            sizes (Sequence[int]): group sizes n_i, best group first.
            priors (Sequence[BetaParams]): Beta law of each D_i.
            workers (int): process count for the per-count kernels; the table
                is identical to the serial one.

        Raises:
            ResourceCapExceeded: prod(n_i + 1) above the configured cap.
        """
        if not sizes or len(sizes) != len(priors):
            raise ModelViolation(f"need one prior per group, got {len(sizes)} sizes and {len(priors)} priors")
        sizes = tuple(int(n) for n in sizes)
        if len(sizes) == 2:
            return self.joint_pmf_two(sizes[0], sizes[1], priors[0], priors[1])
        cells = self._check_cap(sizes)
        shapes = tuple((p.alpha, p.beta) for p in priors)
        logger.debug("joint pmf over %d cells for sizes %s", cells, sizes)

        if workers > 1 and cells > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                log_p = _joint_log_table(sizes, shapes, pool.map)
        else:
            log_p = _joint_log_table(sizes, shapes, map)

        table = PmfTable(sizes, _clean(np.exp(log_p)))
        table.check_normalized()
        return table

    def marginal_pmf(self, sizes: Sequence[int], priors: Sequence[BetaParams], index: int) -> np.ndarray:
        """
        P[F_i = f] for f = 0..n_i, where i = index (0-based).

        Only the groups above i influence D*_i; their sizes are set to zero.
        """
        if not 0 <= index < len(sizes):
            raise ModelViolation(f"group index {index} out of range for {len(sizes)} groups")
        reduced = [0] * index + [int(sizes[index])]
        table = self.joint_pmf_k(reduced, list(priors[: index + 1]))
        return table.probs.reshape(-1)

    def printed_joint_formula_two(
        self, n1: int, n2: int, prior1: BetaParams, prior2: BetaParams
    ) -> np.ndarray:
        """
        Diagnostic: the two-group formula in the form it is usually quoted,

            C(n1,f1) C(n2,f2) sum_i C(f2,i) B(w1+i, b1+n2-i)/B(a1,b1) * B(w2-i, b2)/B(a2,b2)

        with (w_j, b_j) the beta-binomial posterior shapes (a_j + f_j, b_j + n_j - f_j).
        The result is not a probability table: it is not normalised, and
        cells whose Beta arguments turn nonpositive are NaN. Compare it with
        joint_pmf_two, do not use it.
        """
        self._check_cap((n1, n2))
        logger.warning("evaluating the printed two-group formula; output is diagnostic only")
        a1, b1, a2, b2 = prior1.alpha, prior1.beta, prior2.alpha, prior2.beta
        raw = np.full((n1 + 1, n2 + 1), np.nan)
        for f1 in range(n1 + 1):
            for f2 in range(n2 + 1):
                w1, v1 = a1 + f1, b1 + n1 - f1
                w2, v2 = a2 + f2, b2 + n2 - f2
                total = 0.0
                defined = True
                for i in range(f2 + 1):
                    args = (w1 + i, v1 + n2 - i, w2 - i, v2)
                    if min(args) <= 0:
                        defined = False
                        break
                    total += math.exp(
                        ln_binomial(f2, i)
                        + ln_beta(args[0], args[1]) - ln_beta(a1, b1)
                        + ln_beta(args[2], args[3]) - ln_beta(a2, b2)
                    )
                if defined:
                    raw[f1, f2] = math.exp(ln_binomial(n1, f1) + ln_binomial(n2, f2)) * total
        return raw


def joint_pmf_two(n1: int, n2: int, prior1: BetaParams, prior2: BetaParams) -> PmfTable:
    return JointPmfCalculator().joint_pmf_two(n1, n2, prior1, prior2)


def joint_pmf_k(sizes: Sequence[int], priors: Sequence[BetaParams], workers: int = 1) -> PmfTable:
    return JointPmfCalculator().joint_pmf_k(sizes, priors, workers=workers)


def priors_from_pairs(pairs: Sequence[Sequence[float]]) -> List[BetaParams]:
    return [BetaParams(float(a), float(b)) for a, b in pairs]
