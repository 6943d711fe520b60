import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ellcov import (
    Gaussian,
    ProbabilitySubset,
    StudentT,
    benchmark,
    k_invariant,
    k_invariant_mc,
    k_via_radial,
    tail_density,
    tail_probability,
    truncated_moments,
    validate_model,
)
from ellcov.errors import DataFormatError, EmptySubsetError, TooFewConditionedSamplesError
from ellcov.invariants import standardized_moments

from conftest import Phi, phi


def truncnorm_moments(a, b):
    """Closed-form mean and variance of N(0, 1) truncated to [a, b]."""
    pa = phi(a) if math.isfinite(a) else 0.0
    pb = phi(b) if math.isfinite(b) else 0.0
    apa = a * pa if math.isfinite(a) else 0.0
    bpb = b * pb if math.isfinite(b) else 0.0
    z = Phi(b) - Phi(a)
    mean = (pa - pb) / z
    var = 1 + (apa - bpb) / z - mean**2
    return z, mean, var


def student_tail_density(nu, w):
    c1 = math.exp(math.lgamma((nu + 1) / 2) - math.lgamma(nu / 2)) / math.sqrt(math.pi * (nu - 2))
    return c1 * (nu - 2) / (nu - 1) * (1 + w * w / (nu - 2)) ** (-(nu - 1) / 2)


@st.composite
def subsets(draw, max_intervals=3):
    k = draw(st.integers(1, max_intervals))
    cuts = sorted(draw(st.lists(st.floats(0.0, 1.0), min_size=2 * k, max_size=2 * k, unique=True)))
    pairs = [(cuts[2 * i], cuts[2 * i + 1]) for i in range(k)]
    pairs = [(lo, hi) for lo, hi in pairs if hi - lo > 1e-3]
    if not pairs:
        pairs = [(0.25, 0.75)]
    return ProbabilitySubset(tuple(pairs))


# -- subsets ---------------------------------------------------------------


def test_subset_parse_and_measure():
    s = ProbabilitySubset.parse("0:0.2, 0.5:1")
    assert s.intervals == ((0.0, 0.2), (0.5, 1.0))
    assert s.measure == pytest.approx(0.7)
    assert str(s) == "0:0.2,0.5:1"
    assert s.reflect().intervals == ((0.0, 0.5), (0.8, 1.0))


@pytest.mark.parametrize("text", ["0.3:0.2", "0:1.5", "-0.1:0.5", "0:0.5,0.4:0.6", "0.2:0.2"])
def test_subset_rejects_bad_intervals(text):
    with pytest.raises(EmptySubsetError):
        ProbabilitySubset.parse(text)


def test_subset_parse_errors():
    with pytest.raises(DataFormatError):
        ProbabilitySubset.parse("0-0.5")
    with pytest.raises(DataFormatError):
        ProbabilitySubset.parse("a:b")


def test_contains_half_open():
    s = ProbabilitySubset.parse("0.2:0.4")
    np.testing.assert_array_equal(s.contains([0.1, 0.2, 0.3, 0.4]), [False, True, True, False])


# -- truncated moments -------------------------------------------------------


def test_truncated_moments_full_space(identity2):
    spec = benchmark(identity2, [1, 0])
    prob, mean, var = truncated_moments(spec, ProbabilitySubset.full())
    assert prob == 1.0
    assert mean == pytest.approx(0.0, abs=1e-14)
    assert var == pytest.approx(1.0, abs=1e-12)


def test_truncated_moments_half_normal(identity2):
    spec = benchmark(identity2, [1, 0])
    prob, mean, var = truncated_moments(spec, ProbabilitySubset.interval(0.0, 0.5))
    _, m_ref, v_ref = truncnorm_moments(-math.inf, 0.0)
    assert prob == 0.5
    assert mean == pytest.approx(m_ref, abs=1e-12)
    assert var == pytest.approx(v_ref, abs=1e-12)
    assert mean == pytest.approx(-math.sqrt(2 / math.pi), abs=1e-12)
    assert var == pytest.approx(1 - 2 / math.pi, abs=1e-12)


def test_truncated_moments_symmetric_interval(identity2):
    spec = benchmark(identity2, [1, 0])
    assert truncated_moments(spec, ProbabilitySubset.interval(0.198, 0.802)).mean == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("lo,hi", [(0.0, 0.01), (0.1, 0.3), (0.45, 0.9), (0.97, 1.0), (1e-6, 0.001)])
def test_truncated_moments_match_closed_form(lo, hi):
    a, b = float(Gaussian().ppf(lo)), float(Gaussian().ppf(hi))
    _, m_ref, v_ref = truncnorm_moments(a, b)
    _, mean, var = standardized_moments(Gaussian(), ProbabilitySubset.interval(lo, hi))
    assert mean == pytest.approx(m_ref, rel=1e-9, abs=1e-12)
    assert var == pytest.approx(v_ref, rel=1e-8)


def test_truncated_moments_scale_with_benchmark():
    model = validate_model([1.0, 2.0], [[2.0, 0.5], [0.5, 1.0]])
    spec = benchmark(model, [1.0, 1.0])
    subset = ProbabilitySubset.interval(0.2, 0.7)
    a, b = float(Gaussian().ppf(0.2)), float(Gaussian().ppf(0.7))
    _, m_ref, v_ref = truncnorm_moments(a, b)
    _, mean, var = truncated_moments(spec, subset)
    assert mean == pytest.approx(3.0 + math.sqrt(4.0) * m_ref, rel=1e-10)
    assert var == pytest.approx(4.0 * v_ref, rel=1e-10)


# -- tail density ------------------------------------------------------------


def test_gaussian_tail_density_is_phi():
    assert tail_density(Gaussian(), 0.0) == pytest.approx(1 / math.sqrt(2 * math.pi), rel=1e-12)
    assert tail_density(Gaussian(), 1.5) == pytest.approx(phi(1.5), rel=1e-12)
    assert tail_density(Gaussian(), 1.5) == pytest.approx(0.129518, abs=1e-6)


@pytest.mark.parametrize("nu", [3, 5, 10, 40])
@pytest.mark.parametrize("w", [0.0, 0.7, 3.0, 25.0, 400.0])
def test_student_tail_density_closed_form(nu, w):
    assert tail_density(StudentT(nu), w) == pytest.approx(student_tail_density(nu, w), rel=1e-10)


@settings(max_examples=30, deadline=None)
@given(w=st.floats(-50, 50), nu=st.sampled_from([3.0, 4.5, 10.0]))
def test_tail_density_even(w, nu):
    assert tail_density(StudentT(nu), w) == tail_density(StudentT(nu), -w)


@pytest.mark.parametrize("family", [Gaussian(), StudentT(3), StudentT(5), StudentT(10)], ids=str)
def test_tail_density_normalized(family):
    assert tail_probability(family, -math.inf, math.inf, method="direct") == pytest.approx(1.0, abs=1e-8)


@pytest.mark.parametrize("family", [Gaussian(), StudentT(3), StudentT(7)], ids=str)
@pytest.mark.parametrize("lo,hi", [(-math.inf, -1.2), (-0.4, 2.5), (1.0, math.inf)])
def test_tail_probability_routes_agree(family, lo, hi):
    direct = tail_probability(family, lo, hi, method="direct")
    assert tail_probability(family, lo, hi) == pytest.approx(direct, rel=1e-9, abs=1e-13)


# -- K-invariant -------------------------------------------------------------


def test_gaussian_k_is_one():
    assert k_invariant(Gaussian(), ProbabilitySubset.interval(0, 0.2)).k == pytest.approx(1.0, abs=1e-10)


@settings(max_examples=20, deadline=None)
@given(subset=subsets())
def test_gaussian_k_is_one_for_random_unions(subset):
    assert abs(k_invariant(Gaussian(), subset).k - 1.0) < 1e-8


def test_full_space_k_is_one():
    inv = k_invariant(StudentT(5), ProbabilitySubset.full())
    assert inv.k == pytest.approx(1.0, abs=1e-10)
    assert inv.var_v1 == pytest.approx(1.0, abs=1e-10)
    assert inv.k_prime == pytest.approx(1.0, abs=1e-10)


def test_student_k_matches_direct_nested_quadrature():
    fam = StudentT(4)
    subset = ProbabilitySubset.parse("0.05:0.3,0.6:0.95")
    bounds = subset.value_intervals(fam)
    direct = sum(tail_probability(fam, lo, hi, method="direct") for lo, hi in bounds) / subset.measure
    assert k_invariant(fam, subset).k == pytest.approx(direct, rel=1e-9)


def test_ratio_identity():
    inv = k_invariant(StudentT(6), ProbabilitySubset.interval(0.3, 0.9))
    assert inv.k_prime * inv.var_v1 == pytest.approx(inv.k, abs=10 * inv.err_estimate + 1e-15)


@settings(max_examples=15, deadline=None)
@given(subset=subsets(), nu=st.sampled_from([3.0, 5.0, 12.0]))
def test_reflection_symmetry(subset, nu):
    fam = StudentT(nu)
    assert k_invariant(fam, subset).k == pytest.approx(k_invariant(fam, subset.reflect()).k, rel=1e-9)


MC_CASES = [
    (Gaussian(), "0.4:0.6"),
    (Gaussian(), "0:0.2"),
    (StudentT(3), "0.045:0.955"),
    (StudentT(3), "0.9:1"),
    (StudentT(5), "0.877:1"),
    (StudentT(5), "0:0.3,0.7:1"),
    (StudentT(7), "0.15:0.85"),
    (StudentT(10), "0.166:0.834"),
    (StudentT(10), "0:0.05"),
    (StudentT(25), "0.5:0.75"),
]


@pytest.mark.parametrize("family,text", MC_CASES, ids=lambda v: str(v))
def test_quadrature_agrees_with_monte_carlo(family, text):
    subset = ProbabilitySubset.parse(text)
    q = k_invariant(family, subset)
    mc = k_invariant_mc(family, subset, 10**7, 11)
    assert abs(q.k - mc.k) < 4 * mc.err_estimate
    assert abs(q.var_v1 - mc.var_v1) < 4 * mc.var_v1_err


def test_monte_carlo_unconditional_variance():
    mc = k_invariant_mc(StudentT(6), ProbabilitySubset.full(), 10**6, 3)
    assert abs(mc.var_v1 - 1.0) < 4 * mc.var_v1_err
    assert abs(mc.k - 1.0) < 4 * mc.err_estimate


def test_monte_carlo_gaussian_independence():
    mc = k_invariant_mc(Gaussian(), ProbabilitySubset.interval(0.4, 0.6), 10**6, 8)
    assert abs(mc.k - 1.0) < 4 * mc.err_estimate


def test_monte_carlo_determinism_and_guards():
    s = ProbabilitySubset.interval(0.1, 0.2)
    assert k_invariant_mc(StudentT(5), s, 10**4, 1) == k_invariant_mc(StudentT(5), s, 10**4, 1)
    with pytest.raises(TooFewConditionedSamplesError):
        k_invariant_mc(Gaussian(), ProbabilitySubset.interval(0.5, 0.5001), 10**4, 1)
    with pytest.raises(ValueError):
        k_invariant_mc(Gaussian(), s, 100, 1)


def test_radial_identity_gaussian():
    model = validate_model(np.zeros(3), np.eye(3))
    est = k_via_radial(model, [1, 1, 1], ProbabilitySubset.interval(0, 0.2), 10**6, 4)
    assert abs(est.value - 1.0) < 4 * est.stderr


def test_radial_identity_student_matches_quadrature():
    model = validate_model([0.5, -1.0], [[1.0, 0.3], [0.3, 2.0]], StudentT(7))
    subset = ProbabilitySubset.interval(0.15, 0.85)
    est = k_via_radial(model, [1.0, -1.0], subset, 10**7, 9)
    assert abs(est.value - k_invariant(StudentT(7), subset).k) < 4 * est.stderr


@pytest.mark.parametrize("family", [Gaussian(), StudentT(5)], ids=str)
def test_radial_identity_unconditional(family):
    model = validate_model([1.0, 2.0, 0.0], [[2.0, 0.5, 0.0], [0.5, 1.0, 0.2], [0.0, 0.2, 1.0]], family)
    est = k_via_radial(model, [1.0, 0.0, 2.0], ProbabilitySubset.full(), 10**6, 2)
    assert abs(est.value - 1.0) < 4 * est.stderr


def test_radial_identity_needs_two_dimensions():
    with pytest.raises(ValueError):
        k_via_radial(validate_model([0.0], [[1.0]]), [1.0], ProbabilitySubset.full(), 10**4, 1)
