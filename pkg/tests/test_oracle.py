import json
import math

import numpy as np
import pytest

from ulc.extremal import minimize_prob_at_mean
from ulc.oracle import (
    TrialConfig,
    domination_slacks,
    entropy_slack,
    poisson_reference,
    property_suite,
    run_theorem_trials,
    sample_ulc,
    sample_ulc_finite,
    tilt_parameter,
    tilt_to_mean,
    trial_seed,
)
from ulc.seqcore import Pmf, binomial, is_ulc_finite, is_ulc_inf, mean, poisson, poisson_pmf


# generators


def test_samples_are_ulc_and_inside_support():
    for i in range(300):
        mu = sample_ulc(25, trial_seed(1, i))
        assert 0 <= mu.support.lo and mu.support.hi <= 25
        assert is_ulc_inf(mu)
        assert math.isclose(mu.values.sum(), 1.0, rel_tol=1e-12)


def test_finite_samples_are_ulc_n():
    for i in range(200):
        n = 1 + i % 12
        mu = sample_ulc_finite(n, trial_seed(2, i))
        assert mu.support.hi <= n and is_ulc_finite(mu, n)


def test_samples_are_deterministic():
    a, b = sample_ulc(10, 123), sample_ulc(10, 123)
    assert a.offset == b.offset and np.array_equal(a.values, b.values)
    assert trial_seed(5, 3) == trial_seed(5, 3) != trial_seed(5, 4)


def test_sample_on_smallest_support():
    mu = sample_ulc(1, 0)
    assert mu.support.hi <= 1
    with pytest.raises(ValueError):
        sample_ulc(0, 0)


# tilting


def test_tilt_parameter_recovers_poisson_rate():
    theta = tilt_parameter(poisson(2.0, 40), 3)
    assert abs(theta - 1.5) < 1e-10


def test_tilt_parameter_identity_and_errors():
    assert tilt_parameter(Pmf([0.25, 0.5, 0.25]), 1) == 1.0
    with pytest.raises(ValueError):
        tilt_parameter(Pmf([0.25, 0.5, 0.25]), 2)
    with pytest.raises(ValueError):
        tilt_parameter(Pmf([0.5, 0.5], offset=3), 1)


def test_tilt_to_mean_hits_target():
    for i in range(100):
        mu = sample_ulc(20, trial_seed(3, i))
        lo, hi = mu.support.lo, mu.support.hi
        if hi - lo < 2:
            continue
        n0 = (lo + hi) // 2 if lo < (lo + hi) // 2 else lo + 1
        t = tilt_to_mean(mu, n0)
        assert abs(mean(t) - n0) <= 1e-11 * max(1, n0)
        assert is_ulc_inf(t)


# theorem trials


def test_trials_small_example():
    rep = run_theorem_trials(TrialConfig(2, 15, 1000, 7))
    assert rep.violations == 0 and rep.evaluated + rep.skipped == 1000
    assert rep.min_observed_prob >= rep.poisson_prob - 1e-10


def test_trials_on_two_points_reach_the_extremal_value():
    # on [0, 2] with mean 1 the smallest mu(1) is sqrt(2) - 1
    rep = run_theorem_trials(TrialConfig(1, 2, 100, 1))
    assert rep.violations == 0
    assert rep.min_observed_prob >= math.sqrt(2) - 1 - 1e-12


def test_trials_never_beat_the_family_minimum():
    # random ULC(inf) pmfs on [0, L] cannot go below the extreme-point optimum
    for n0, L in [(1, 6), (3, 9)]:
        best = minimize_prob_at_mean(n0, L).min_prob
        rep = run_theorem_trials(TrialConfig(n0, L, 400, 11))
        assert rep.min_observed_prob >= best - 1e-10


def test_trials_serial_and_parallel_agree():
    cfg = TrialConfig(3, 12, 300, 4)
    assert run_theorem_trials(cfg).to_dict() == run_theorem_trials(cfg, workers=2).to_dict()


def test_trial_report_is_json_and_reproducible():
    cfg = TrialConfig(2, 10, 50, 0)
    a = json.dumps(run_theorem_trials(cfg).to_dict())
    b = json.dumps(run_theorem_trials(cfg).to_dict())
    assert a == b
    worst = json.loads(a)["worst_pmf"]
    assert set(worst) == {"offset", "values", "kind"}


def test_trial_config_validation():
    for args in [(0, 5, 10, 0), (5, 5, 10, 0), (1, 5, 0, 0), (1, 5, 10, -1)]:
        with pytest.raises(ValueError):
            TrialConfig(*args)


# Poisson reference and property suites


def test_poisson_reference_truncation():
    n, p = poisson_reference(3.0)
    tail = 1.0 - math.fsum(p.tolist())
    assert tail < 1e-14
    assert 1.0 - math.fsum(p[:-1].tolist()) >= 1e-14 - 1e-16
    assert math.isclose(p[3], poisson_pmf(3, 3.0), rel_tol=1e-14)
    assert poisson_reference(0.0)[1].tolist() == [1.0]


def test_binomial_is_dominated_by_poisson():
    mu = binomial(2, 0.5)
    assert math.isclose(mu.expect(lambda x: x**2), 1.5, rel_tol=1e-15)
    slacks = domination_slacks(mu)
    assert math.isclose(slacks["square"], 0.5, rel_tol=1e-12)
    assert all(v >= 0 for v in slacks.values())
    assert entropy_slack(mu) > 0


def test_poisson_itself_is_tight():
    mu = poisson(2.0, 60)
    # the truncated reference drops tail mass, which e^{x/2} weights most
    assert all(abs(v) < 1e-9 for v in domination_slacks(mu).values())
    assert abs(entropy_slack(mu)) < 1e-10


def test_property_suite_passes():
    rep = property_suite(10, 200, 3)
    assert rep.ok
    assert rep.convolution.passed == rep.domination.passed == rep.entropy.passed == 200
    d = json.loads(json.dumps(rep.to_dict()))
    assert d["ok"] is True


def test_property_suite_rejects_small_support():
    with pytest.raises(ValueError):
        property_suite(1, 10, 0)
