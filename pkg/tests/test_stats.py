"""Empirical statistics: KS distances, tail estimation, convergence reports."""

import math

import numpy as np
import pytest

from branchregen import (ConvergenceReport, EmpiricalDistribution, RngStream,
                         classify_recurrence, compute_theta,
                         convergence_study, ks_distance, ks_two_sample,
                         tail_exponent_estimate)
from branchregen.samplers import Constant, MigrationParams
from branchregen.stats import HorizonResult, marginal_at


# ---------------------------------------------------------------------------
# Empirical distributions and KS
# ---------------------------------------------------------------------------

def test_empirical_cdf_and_quantile():
    emp = EmpiricalDistribution([3.0, 1.0, 2.0])
    assert emp.size == 3
    assert np.array_equal(emp.values, [1.0, 2.0, 3.0])
    assert emp.cdf(0.5) == 0.0
    assert emp.cdf(1.0) == pytest.approx(1 / 3)      # right-continuous
    assert emp.cdf(2.5) == pytest.approx(2 / 3)
    assert emp.quantile(0.5) == 2.0
    with pytest.raises(ValueError):
        EmpiricalDistribution([])
    with pytest.raises(ValueError):
        EmpiricalDistribution([1.0, math.nan])


def test_ks_distance_hand_case():
    # sample {1,2,3} against U(0,4): both one-sided gaps equal 1/4
    emp = EmpiricalDistribution([1.0, 2.0, 3.0])
    ks = ks_distance(emp, lambda x: np.clip(np.asarray(x) / 4.0, 0.0, 1.0))
    assert ks == pytest.approx(0.25)


def test_ks_distance_with_atom():
    # law: atom 1/2 at zero, then uniform on (0, 1); perfect sample of it
    emp = EmpiricalDistribution([0.0, 0.0, 0.25, 0.75])
    cdf = lambda x: np.where(np.asarray(x) < 0, 0.0,
                             0.5 + 0.5 * np.clip(np.asarray(x), 0.0, 1.0))
    assert ks_distance(emp, cdf) == pytest.approx(0.125)


def test_ks_distance_zero_for_exact_quantile_sample():
    n = 1000
    xs = -np.log(1.0 - (np.arange(1, n + 1) - 0.5) / n)   # Exp(1) quantiles
    emp = EmpiricalDistribution(xs)
    ks = ks_distance(emp, lambda x: -np.expm1(-np.asarray(x, float)))
    assert ks <= 0.5 / n + 1e-12


def test_ks_two_sample():
    a = EmpiricalDistribution([1.0, 2.0, 3.0])
    assert ks_two_sample(a, a) == 0.0
    b = EmpiricalDistribution([10.0, 11.0])
    assert ks_two_sample(a, b) == 1.0


# ---------------------------------------------------------------------------
# Theta and recurrence classification
# ---------------------------------------------------------------------------

def test_compute_theta_and_classification():
    mig = MigrationParams(p=0.0, q=0.5, r=0.5, immigration_plus=Constant(2))
    assert compute_theta(mig, b=2.0) == pytest.approx(0.5)
    assert classify_recurrence(1.5) == "non-recurrent"
    assert classify_recurrence(1.0) == "boundary"
    assert classify_recurrence(0.0) == "null-recurrent"
    assert classify_recurrence(-0.5) == "positive-recurrent"
    with pytest.raises(ValueError):
        compute_theta(mig, b=0.0)


# ---------------------------------------------------------------------------
# Tail exponent estimation
# ---------------------------------------------------------------------------

def test_tail_exponent_on_exact_pareto():
    # deterministic quantile sample of P{T > t} = t^(-0.8)
    n = 200000
    u = (np.arange(n) + 0.5) / n
    durations = np.ceil(u ** (-1.0 / 0.8))
    est = tail_exponent_estimate(durations)
    assert est.exponent == pytest.approx(0.8, abs=0.05)
    assert est.hill_exponent == pytest.approx(0.8, abs=0.05)
    assert est.power_tail_plausible
    assert est.n_tail == 20000


def test_tail_exponent_flags_non_power_tail():
    # geometric durations: survival decays exponentially, so the loglog
    # slope is strongly curved and the split-range check must flag it
    draws = RngStream(7, 0).generator.geometric(0.05, size=100000)
    est = tail_exponent_estimate(draws)
    assert not est.power_tail_plausible


def test_tail_exponent_input_validation():
    with pytest.raises(ValueError):
        tail_exponent_estimate(np.arange(1, 50))     # too small
    with pytest.raises(ValueError):
        tail_exponent_estimate(np.zeros(1000), min_tail=900)


# ---------------------------------------------------------------------------
# Marginal scalings and convergence reports
# ---------------------------------------------------------------------------

def test_marginal_scalings():
    values = np.array([0.0, 10.0, 100.0])
    lin = marginal_at(values, time=10, scaling="linear", b=2.0)
    assert np.array_equal(lin.sample.values, [0.0, 0.5, 5.0])
    assert lin.survival_fraction == pytest.approx(2 / 3)

    log = marginal_at(values, time=100, scaling="log")
    # zeros dropped, log(value)/log(t)
    assert np.allclose(log.sample.values, [0.5, 1.0])
    assert log.n_raw == 3

    ident = marginal_at(values, time=10, scaling="identity")
    assert np.array_equal(ident.sample.values, [0.0, 10.0, 100.0])

    with pytest.raises(ValueError):
        marginal_at(values, time=1, scaling="linear")
    with pytest.raises(ValueError):
        marginal_at(values, time=10, scaling="sqrt")
    with pytest.raises(ValueError):
        marginal_at(np.zeros(3), time=10, scaling="log")


def test_convergence_study_and_report_round_trips():
    gen = RngStream(11, 0).generator
    marginals = {t: 1.0 * t * gen.exponential(size=4000) for t in (50, 200)}
    report = convergence_study(marginals, lambda x: -np.expm1(-np.asarray(x)),
                               scaling="linear", label="exp-check", b=1.0)
    assert [h.time for h in report.horizons] == [50, 200]
    assert report.final_ks < 0.05
    assert all(h.n_effective == 4000 for h in report.horizons)

    again = ConvergenceReport.from_json(report.to_json())
    assert again.to_dict() == report.to_dict()
    from_csv = ConvergenceReport.from_csv(report.to_csv())
    assert from_csv.to_dict() == report.to_dict()


def test_convergence_study_conditional_drops_zeros():
    marginals = {10: np.array([0.0] * 50 + [5.0] * 50)}
    report = convergence_study(marginals, lambda x: np.clip(x, 0, 1),
                               scaling="linear", label="cond", b=1.0,
                               conditional=True)
    assert report.horizons[0].n_effective == 50
    assert report.horizons[0].survival_fraction == pytest.approx(0.5)


def test_is_decreasing():
    rep = ConvergenceReport(label="x", scaling="linear")
    for t, ks in [(10, 0.5), (100, 0.3), (1000, 0.31)]:
        rep.add(HorizonResult(time=t, ks=ks, survival_fraction=1.0,
                              n_effective=10))
    assert not rep.is_decreasing()
    assert rep.is_decreasing(slack=0.02)
