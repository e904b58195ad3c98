"""
Urn chain algebra, beta-Stacy laws and the exact default-count tables.

Coverage:
- compose_total / invert_chain / increments examples, round trips, monotonicity
- per-sample increment identity E_i = D_i prod_{j<i}(1 - D_j)
- beta-Stacy density, distribution function and conditional increment law
- Generalized Dirichlet condition
- joint_pmf_two / joint_pmf_k against beta-binomial, quadrature and Monte Carlo
- table cap, serial vs parallel evaluation, CSV layout
"""

import io

import numpy as np
import pytest
from scipy import integrate
from scipy.stats import beta as beta_dist
from scipy.stats import dirichlet

from library.errors import ModelViolation, ResourceCapExceeded
from library.oracle import OracleRunner, ks_distance
from library.polya_urn import BetaParams, beta_binomial_table
from library.urn_chain import (
    IdioVector,
    JointPmfCalculator,
    PmfTable,
    TotalVector,
    beta_stacy_cdf,
    beta_stacy_pdf,
    compose_total,
    increments,
    increments_logpdf,
    invert_chain,
    is_generalized_dirichlet,
    joint_pmf_k,
    joint_pmf_two,
    sample_chain,
    sample_chain_many,
    sample_conditional_increment,
)
from utils.settings import Settings


REFERENCE_TOTALS = (0.0198, 0.0582, 0.0861)


def test_compose_total_examples():
    assert compose_total(IdioVector((0, 0, 0))).values == (0, 0, 0)
    assert compose_total(IdioVector((0.3, 0, 0))).values == pytest.approx((0.3, 0.3, 0.3))


def test_invert_chain_examples():
    idio = invert_chain(TotalVector(REFERENCE_TOTALS))
    assert idio[0] == pytest.approx(0.0198, abs=1e-15)
    assert idio[1] == pytest.approx(0.039176, abs=1e-6)
    assert idio[2] == pytest.approx(0.029624, abs=1e-6)
    assert invert_chain(TotalVector((0.42,))).values == (0.42,)
    assert invert_chain(TotalVector((0.5, 0.5))).values == pytest.approx((0.5, 0.0))


def test_compose_reproduces_reference_totals():
    totals = compose_total(invert_chain(TotalVector(REFERENCE_TOTALS)))
    assert totals.values == pytest.approx(REFERENCE_TOTALS, abs=1e-12)


def test_invert_chain_rejects_certain_default():
    with pytest.raises(ModelViolation):
        invert_chain(TotalVector((1.0, 1.0)))


def test_total_vector_must_be_nondecreasing():
    with pytest.raises(ModelViolation):
        TotalVector((0.1, 0.05))


def test_increments_examples():
    assert increments(TotalVector(REFERENCE_TOTALS)).values == pytest.approx((0.0198, 0.0384, 0.0279), abs=1e-12)
    assert increments(TotalVector((0.2, 0.2, 0.2))).values == pytest.approx((0.2, 0.0, 0.0))


def test_round_trips_and_monotonicity():
    rng = np.random.default_rng(5)
    for _ in range(500):
        k = int(rng.integers(1, 7))
        idio = IdioVector(tuple(rng.uniform(0, 0.5, size=k)))
        totals = compose_total(idio)
        assert all(b >= a for a, b in zip(totals.values, totals.values[1:]))
        assert invert_chain(totals).values == pytest.approx(idio.values, abs=1e-12)
        assert compose_total(invert_chain(totals)).values == pytest.approx(totals.values, abs=1e-12)


def test_increment_identity_per_sample():
    priors = [BetaParams(2, 5), BetaParams(1, 3), BetaParams(0.5, 0.5), BetaParams(4, 1)]
    rng = np.random.default_rng(9)
    for _ in range(200):
        sample = sample_chain(priors, rng)
        survival = 1.0
        for d, e in zip(sample.idio.values, sample.increments.values):
            assert e == pytest.approx(d * survival, abs=1e-14)
            survival *= 1.0 - d
        assert sum(sample.increments.values) <= 1.0 + 1e-12


def test_sample_chain_degenerate_priors():
    means = (0.02, 0.04, 0.03)
    priors = [BetaParams(1e9 * m, 1e9 * (1 - m)) for m in means]
    sample = sample_chain(priors, np.random.default_rng(0))
    assert sample.totals.values == pytest.approx(compose_total(IdioVector(means)).values, abs=1e-4)


def test_sample_chain_many_shapes():
    priors = [BetaParams(2, 5), BetaParams(1, 3)]
    idio, totals, incs = sample_chain_many(priors, 1000, np.random.default_rng(1))
    assert idio.shape == totals.shape == incs.shape == (1000, 2)
    assert np.all(np.diff(totals, axis=1) >= 0)
    assert np.allclose(incs.sum(axis=1), totals[:, -1])


def test_beta_stacy_reduces_to_beta():
    for a, b in [(2, 5), (0.7, 1.3), (1, 1)]:
        for x in np.linspace(0.01, 0.99, 25):
            assert beta_stacy_pdf(x, a, b, 1.0) == pytest.approx(beta_dist.pdf(x, a, b), rel=1e-12)


def test_beta_stacy_uniform_and_support():
    assert beta_stacy_pdf(0.15, 1, 1, 0.3) == pytest.approx(1 / 0.3, rel=1e-12)
    assert beta_stacy_pdf(0.4, 2, 3, 0.3) == 0.0
    assert beta_stacy_pdf(-0.1, 2, 3, 0.3) == 0.0
    with pytest.raises(ModelViolation):
        beta_stacy_pdf(0.1, 0, 1, 1)


def test_beta_stacy_integrates_to_one():
    rng = np.random.default_rng(21)
    for _ in range(10):
        a, b = rng.uniform(1.0, 6.0, size=2)
        c = rng.uniform(0.1, 1.0)
        value, _ = integrate.quad(beta_stacy_pdf, 0, c, args=(a, b, c), epsabs=1e-12, epsrel=1e-12)
        assert value == pytest.approx(1.0, abs=1e-8)
        assert float(beta_stacy_cdf(c, a, b, c)) == pytest.approx(1.0, abs=1e-12)
        half, _ = integrate.quad(beta_stacy_pdf, 0, c / 2, args=(a, b, c), epsabs=1e-12, epsrel=1e-12)
        assert float(beta_stacy_cdf(c / 2, a, b, c)) == pytest.approx(half, abs=1e-8)


def test_conditional_increment_follows_beta_stacy():
    prior = BetaParams(2.0, 3.0)
    previous = [0.1, 0.25]
    remaining = 1.0 - sum(previous)
    samples = sample_conditional_increment(prior, previous, 100_000, np.random.default_rng(4))
    assert samples.max() <= remaining
    distance = ks_distance(samples, lambda x: beta_stacy_cdf(x, prior.alpha, prior.beta, remaining))
    assert distance < 0.02


def test_conditional_increment_from_chain_slices():
    # E_2 / (1 - E_1) is Beta(alpha_2, beta_2) whatever E_1 is
    priors = [BetaParams(1.5, 4.0), BetaParams(2.0, 3.0)]
    _, _, incs = sample_chain_many(priors, 100_000, np.random.default_rng(8))
    scaled = incs[:, 1] / (1.0 - incs[:, 0])
    assert ks_distance(scaled, lambda x: beta_stacy_cdf(x, 2.0, 3.0, 1.0)) < 0.02


def test_increments_logpdf_matches_dirichlet():
    # beta_i = alpha_{i+1} + beta_{i+1} makes the increments Dirichlet
    a1, a2, a3 = 2.0, 3.0, 1.5
    priors = [BetaParams(a1, a2 + a3), BetaParams(a2, a3)]

    for e in [(0.2, 0.3), (0.05, 0.6), (0.4, 0.1)]:
        point = [e[0], e[1], 1 - e[0] - e[1]]
        assert increments_logpdf(e, priors) == pytest.approx(dirichlet.logpdf(point, [a1, a2, a3]), rel=1e-10)


def test_generalized_dirichlet_condition():
    a2, a3 = 1.7, 0.6
    priors = [BetaParams(2.0, a2 + a3), BetaParams(a2, a3), BetaParams(a3, 4.2)]
    assert is_generalized_dirichlet(priors)
    assert is_generalized_dirichlet([BetaParams(1, 1), BetaParams(1, 1)])
    assert not is_generalized_dirichlet([BetaParams(2, 5), BetaParams(3, 3)])


def test_joint_pmf_two_small_cases():
    prior1 = BetaParams(2, 5)
    table = joint_pmf_two(1, 0, prior1, BetaParams(1, 3))
    assert table.probs[:, 0] == pytest.approx([5 / 7, 2 / 7], abs=1e-14)
    table = joint_pmf_two(0, 0, prior1, BetaParams(1, 3))
    assert table.probs[0, 0] == pytest.approx(1.0, abs=1e-15)


def test_joint_pmf_two_marginal_is_beta_binomial():
    prior1, prior2 = BetaParams(2, 5), BetaParams(1, 3)
    table = joint_pmf_two(6, 5, prior1, prior2)
    assert table.total() == pytest.approx(1.0, abs=1e-8)
    assert table.marginal(0) == pytest.approx(beta_binomial_table(6, prior1), abs=1e-10)


def _random_prior_pairs(seed):
    rng = np.random.default_rng(seed)
    return [(BetaParams(*rng.uniform(0.5, 5.0, size=2)), BetaParams(*rng.uniform(0.5, 5.0, size=2))) for _ in range(3)]


ORACLE_CASES = [
    (n1, n2, prior1, prior2)
    for n1, n2 in [(3, 4), (5, 5), (10, 2)]
    for prior1, prior2 in _random_prior_pairs(100 * n1 + n2)
]


def _max_z(exact, mc):
    # exact binomial error covers cells the sample missed
    replicates = mc.replicates
    se = np.maximum(mc.standard_errors, np.sqrt(exact.probs * (1 - exact.probs) / replicates))
    se = np.maximum(se, 1.0 / replicates)
    return float(np.max(np.abs(exact.probs - mc.table.probs) / se))


@pytest.mark.parametrize("n1, n2, prior1, prior2", ORACLE_CASES)
def test_joint_pmf_two_matches_quadrature(n1, n2, prior1, prior2):
    exact = joint_pmf_two(n1, n2, prior1, prior2)
    quad = OracleRunner().quadrature_joint_pmf((n1, n2), [prior1, prior2], nodes=40)
    assert exact.total() == pytest.approx(1.0, abs=1e-8)
    assert np.max(np.abs(exact.probs - quad.probs)) < 1e-7
    # second marginal against a one-dimensional integral over D*_2
    assert exact.marginal(1) == pytest.approx(quad.marginal(1), abs=1e-8)


@pytest.mark.parametrize("n1, n2, prior1, prior2", ORACLE_CASES)
def test_joint_pmf_two_matches_monte_carlo(n1, n2, prior1, prior2):
    exact = joint_pmf_two(n1, n2, prior1, prior2)
    mc = OracleRunner().mc_joint_pmf((n1, n2), [prior1, prior2], 1_000_000, seed=12345)
    assert _max_z(exact, mc) < 5.0


@pytest.mark.slow
@pytest.mark.parametrize("n1, n2, prior1, prior2", ORACLE_CASES)
def test_joint_pmf_two_matches_monte_carlo_ten_million(n1, n2, prior1, prior2):
    exact = joint_pmf_two(n1, n2, prior1, prior2)
    mc = OracleRunner().mc_joint_pmf((n1, n2), [prior1, prior2], 10_000_000, seed=777, workers=4)
    assert _max_z(exact, mc) < 4.0


def test_joint_pmf_k_routes_two_groups_to_closed_form():
    prior1, prior2 = BetaParams(0.514, 19.486), BetaParams(0.8, 9.0)
    two = joint_pmf_two(5, 7, prior1, prior2)
    k = joint_pmf_k((5, 7), [prior1, prior2])
    assert np.array_equal(k.probs, two.probs)


def test_joint_pmf_k_recursion_agrees_with_two_group_form():
    # an empty third group sends the two-group problem through the level recursion
    prior1, prior2 = BetaParams(0.514, 19.486), BetaParams(0.8, 9.0)
    two = joint_pmf_two(5, 7, prior1, prior2)
    k = joint_pmf_k((5, 7, 0), [prior1, prior2, BetaParams(1.0, 1.0)])
    np.testing.assert_allclose(k.probs[:, :, 0], two.probs, rtol=1e-12, atol=1e-300)


def test_joint_pmf_k_larger_groups():
    priors = [BetaParams(0.514, 19.486), BetaParams(1.3, 18.0), BetaParams(1.8, 17.5)]
    table = joint_pmf_k((5, 15, 30), priors)
    assert table.probs.shape == (6, 16, 31)
    assert table.total() == pytest.approx(1.0, abs=1e-8)
    assert table.marginal(0) == pytest.approx(beta_binomial_table(5, priors[0]), abs=1e-10)


def test_joint_pmf_k_single_group_is_beta_binomial():
    prior = BetaParams(1.3, 7.1)
    table = joint_pmf_k((12,), [prior])
    assert table.probs == pytest.approx(beta_binomial_table(12, prior), abs=1e-14)


def test_joint_pmf_k_three_groups_matches_quadrature():
    rng = np.random.default_rng(31)
    priors = [BetaParams(*rng.uniform(1.0, 5.0, size=2)) for _ in range(3)]
    exact = joint_pmf_k((2, 2, 2), priors)
    quad = OracleRunner().quadrature_joint_pmf((2, 2, 2), priors, nodes=40)
    assert exact.total() == pytest.approx(1.0, abs=1e-8)
    assert np.max(np.abs(exact.probs - quad.probs)) < 1e-6


def test_joint_pmf_k_degenerate_at_zero():
    priors = [BetaParams(1e-9, 1.0)] * 3
    table = joint_pmf_k((2, 3, 1), priors)
    assert table.probs[0, 0, 0] == pytest.approx(1.0, abs=1e-7)


def test_joint_pmf_k_parallel_matches_serial():
    priors = [BetaParams(2, 5), BetaParams(1, 3), BetaParams(0.7, 2.2)]
    serial = joint_pmf_k((3, 2, 4), priors)
    parallel = joint_pmf_k((3, 2, 4), priors, workers=2)
    assert np.array_equal(serial.probs, parallel.probs)


def test_joint_pmf_cap(monkeypatch):
    monkeypatch.setenv("URNCHAIN_PMF_CELL_CAP", "100")
    calculator = JointPmfCalculator(Settings())
    with pytest.raises(ResourceCapExceeded) as excinfo:
        calculator.joint_pmf_k((10, 10), [BetaParams(1, 1), BetaParams(1, 1)])
    assert excinfo.value.cells == 121
    assert "mc" in str(excinfo.value)


def test_joint_pmf_k_size_mismatch():
    with pytest.raises(ModelViolation):
        joint_pmf_k((2, 2), [BetaParams(1, 1)])


def test_marginal_pmf_matches_joint():
    priors = [BetaParams(2, 5), BetaParams(1, 3), BetaParams(0.7, 2.2)]
    joint = joint_pmf_k((3, 2, 4), priors)
    marginal = JointPmfCalculator().marginal_pmf((3, 2, 4), priors, 2)
    assert marginal == pytest.approx(joint.marginal(2), abs=1e-12)


def test_printed_formula_is_diagnostic_only():
    prior1, prior2 = BetaParams(2, 5), BetaParams(1, 3)
    raw = JointPmfCalculator().printed_joint_formula_two(3, 0, prior1, prior2)
    assert raw.shape == (4, 1)
    assert raw[:, 0] == pytest.approx(beta_binomial_table(3, prior1), rel=1e-12)
    raw = JointPmfCalculator().printed_joint_formula_two(3, 4, prior1, prior2)
    assert raw.shape == (4, 5)


def test_pmf_table_csv_layout():
    table = joint_pmf_two(1, 1, BetaParams(2, 5), BetaParams(1, 3))
    stream = io.StringIO()
    table.to_csv(stream)
    lines = stream.getvalue().split("\n")
    assert lines[0] == "f_1,f_2,prob"
    assert [line.split(",")[:2] for line in lines[1:5]] == [["0", "0"], ["0", "1"], ["1", "0"], ["1", "1"]]
    assert float(lines[1].split(",")[2]) == table.probs[0, 0]
    assert lines[-1] == ""


def test_pmf_table_rejects_wrong_shape():
    with pytest.raises(ModelViolation):
        PmfTable((2,), np.ones(2) / 2)
