import dataclasses
import math

import numpy as np
import pytest

import oracles
from hpmd.algorithms import run_asmd, run_smd
from hpmd.mirror import MirrorMap
from hpmd.problems import NoiseModel, Problem, certified_sigma
from hpmd.schedules import StepSchedule, weights_asmd, weights_smd
from hpmd.verify import (WeightConditionError, asmd_martingale, check_asmd_step_inequality,
                         check_smd_step_inequality, estimate_mgf_bound, helper_taylor_check,
                         markov_tail, smd_martingale, smd_s1_closed_form)


def _smd_record(p, m, start, T=200, sigma=1.0, seed=0, eta=0.05):
    return run_smd(p, m, StepSchedule("fixed", eta), T, start, seed, True,
                   noise=NoiseModel.gaussian(p.dim, sigma))


# step inequalities ---------------------------------------------------------------

@pytest.mark.parametrize("seed", range(5))
def test_smd_step_inequality_holds(seed):
    p = Problem.lipschitz_norm([0.0, 0.0, 0.0], 1.0)
    rep = check_smd_step_inequality(_smd_record(p, p.domain, np.ones(3), seed=seed), p, p.domain)
    assert rep.passed and rep.n_steps == 200 and rep.n_violations == 0
    assert rep.worst_margin >= 0


def test_smd_step_inequality_on_the_simplex():
    m = MirrorMap.entropy(3)
    p = Problem.composite(np.eye(3), 1.0, [0.2, 0.3, 0.5], m)
    rec = _smd_record(p, m, np.full(3, 1 / 3), sigma=2.0, eta=0.2)
    assert check_smd_step_inequality(rec, p, m).passed


def test_smd_step_inequality_without_noise():
    p = Problem.lipschitz_norm([0.0, 0.0], 1.0)
    rec = _smd_record(p, p.domain, np.ones(2), sigma=0.0)
    rep = check_smd_step_inequality(rec, p, p.domain)
    assert rep.passed


def test_dropping_the_noise_term_is_caught():
    p = Problem.lipschitz_norm([0.0, 0.0], 1.0)
    rec = _smd_record(p, p.domain, np.ones(2), sigma=3.0, eta=0.3)
    bad = dataclasses.replace(rec, noise=np.zeros_like(rec.noise))
    rep = check_smd_step_inequality(bad, p, p.domain)
    assert not rep.passed
    assert rep.violations and rep.margins[rep.worst_index - 1] == rep.worst_margin


def test_step_checks_need_stored_noise():
    p = Problem.lipschitz_norm([0.0], 1.0)
    rec = run_smd(p, p.domain, StepSchedule("fixed", 0.1), 5, [1.0], 0,
                  noise=NoiseModel.gaussian(1, 1.0))
    with pytest.raises(ValueError, match="retain_noise"):
        check_smd_step_inequality(rec, p, p.domain)
    q = Problem.quadratic([[1.0]], [0.0])
    with pytest.raises(ValueError, match="finite gradient bound"):
        check_smd_step_inequality(_smd_record(q, q.domain, [1.0]), q, q.domain)


@pytest.mark.parametrize("kind", ["quadratic", "composite", "lipschitz_norm"])
def test_asmd_step_inequality_holds(kind):
    A = np.diag([1.0, 0.5])
    m = MirrorMap.box(2, -1.0, 1.0)
    p = {"quadratic": Problem.quadratic(A, [0.1, -0.2], m),
         "composite": Problem.composite(A, 0.5, [0.1, -0.2], m),
         "lipschitz_norm": Problem.lipschitz_norm([0.1, -0.2], 1.0)}[kind]
    eta = 0.01 if p.beta == 0 else 1 / (4 * p.beta) / 50
    start = np.array([0.9, 0.9])
    for seed in range(3):
        rec = run_asmd(p, p.domain, eta, 200, start, seed, True,
                       noise=NoiseModel.gaussian(2, 1.0))
        rep = check_asmd_step_inequality(rec, p, p.domain)
        assert rep.passed, rep.to_dict()


def test_asmd_step_inequality_rejects_large_steps():
    p = Problem.quadratic(np.eye(2), [0.0, 0.0])
    with pytest.warns(RuntimeWarning):
        rec = run_asmd(p, p.domain, 1.0, 5, [1.0, 1.0], 0, True,
                       noise=NoiseModel.gaussian(2, 0.1))
    with pytest.raises(ValueError, match="too large"):
        check_asmd_step_inequality(rec, p, p.domain)


# helper Taylor inequality --------------------------------------------------------

def test_taylor_at_the_origin_is_exactly_one():
    rep = helper_taylor_check(0.0, 0.0, NoiseModel.gaussian(2, 1.0), n_samples=1000)
    assert rep.log_estimate == 0.0 and rep.log_bound == 0.0 and rep.passed


def test_taylor_on_the_sphere_matches_closed_form():
    noise = NoiseModel.sphere(3, 0.5)
    sigma = certified_sigma(noise)
    a, b = 0.7, 0.4 / sigma
    rep = helper_taylor_check(a, b, noise, n_samples=1000)
    assert math.exp(rep.log_estimate) == pytest.approx(oracles.sphere_taylor_lhs(a, b, 0.5),
                                                       rel=1e-12)
    assert rep.rel_stderr < 1e-15 and rep.passed


@pytest.mark.parametrize("noise", [NoiseModel.gaussian(1, 1.0), NoiseModel.gaussian(4, 0.3),
                                   NoiseModel.rademacher(3, 1.0)], ids=["g1", "g4", "rad"])
def test_taylor_holds_on_a_grid(noise):
    sigma = certified_sigma(noise)
    for a in (0.0, 0.5 / sigma, 1.0 / sigma):
        for b in (0.0, 0.25 / sigma, 0.5 / sigma):
            assert helper_taylor_check(a, b, noise, n_samples=50_000, rng=1).passed


def test_taylor_argument_ranges():
    noise = NoiseModel.gaussian(2, 1.0)
    sigma = certified_sigma(noise)
    with pytest.raises(ValueError):
        helper_taylor_check(-0.1, 0.0, noise, n_samples=10)
    with pytest.raises(ValueError):
        helper_taylor_check(0.0, 0.6 / sigma, noise, n_samples=10)


# martingale bookkeeping ----------------------------------------------------------

def test_smd_martingale_recompute_and_identity():
    p = Problem.lipschitz_norm([0.0, 0.0], 1.0)
    sched = StepSchedule("fixed", 0.1)
    noise = NoiseModel.gaussian(2, 1.0)
    rec = run_smd(p, p.domain, sched, 15, [0.5, 0.5], 3, noise=noise)
    w = weights_smd(sched, certified_sigma(noise), 15)
    tr = smd_martingale(rec, w, p.grad_bound)
    assert tr.recompute_ok()
    assert tr.S1 == pytest.approx(smd_s1_closed_form(rec, w, p.grad_bound), rel=1e-10, abs=1e-12)
    assert tr.S[-1] == tr.Z[-1]
    # the telescoped divergence ends at x_{T+1}; using x_T breaks the identity
    wv = np.asarray(w.values)
    wrong = (math.fsum(wv[1:] * rec.etas * rec.gaps) - math.fsum(wv[1:] * rec.etas ** 2)
             + wv[-1] * (rec.divergences[-2] - rec.initial_divergence))
    assert abs(wrong - tr.S1) > 1e-6 * max(1.0, abs(tr.S1))


def test_martingale_rejects_mismatched_weights():
    p = Problem.lipschitz_norm([0.0, 0.0], 1.0)
    sched = StepSchedule("fixed", 0.1)
    rec = run_smd(p, p.domain, sched, 10, [0.5, 0.5], 3, noise=NoiseModel.gaussian(2, 1.0))
    with pytest.raises(ValueError):
        smd_martingale(rec, weights_smd(sched, 1.5, 11), 1.0)
    with pytest.raises(ValueError):
        smd_martingale(rec, weights_asmd(0.1, 1.5, 10), 1.0)


def test_asmd_martingale_recompute():
    p = Problem.composite(np.eye(2), 0.5, [0.0, 0.0])
    noise = NoiseModel.gaussian(2, 1.0)
    rec = run_asmd(p, p.domain, 0.02, 10, [0.5, 0.5], 1, noise=noise)
    tr = asmd_martingale(rec, weights_asmd(0.02, certified_sigma(noise), 10), p.mixed_G, p.beta)
    assert tr.recompute_ok() and len(tr.Z) == 10 and math.isfinite(tr.exponent)


def test_markov_tail_counts():
    S1 = np.arange(100.0)
    out = markov_tail(S1, 90.0 - math.log(10.0), 0.1)
    assert out["fraction"] == pytest.approx(0.10)
    assert out["limit"] == pytest.approx(0.1 + 3 * math.sqrt(0.09 / 100))
    assert out["passed"]


# MGF estimate ----------------------------------------------------------------------

def _mgf_setup():
    p = Problem.lipschitz_norm([0.0, 0.0], 1.0)
    noise = NoiseModel.gaussian(2, 1.0)
    return p, noise, certified_sigma(noise)


def test_mgf_bound_smd_small_run():
    p, noise, sigma = _mgf_setup()
    sched = StepSchedule("fixed", 0.2)
    w = weights_smd(sched, sigma, 5)
    rep = estimate_mgf_bound(p, p.domain, sched, w, 5, 3000, "smd", noise=noise,
                             x1=[0.5, 0.5], seed=1)
    assert rep.passed, rep.to_dict()
    assert rep.bookkeeping_ok and rep.identity_ok and rep.markov_passed
    again = estimate_mgf_bound(p, p.domain, sched, w, 5, 3000, "smd", noise=noise,
                               x1=[0.5, 0.5], seed=1)
    assert again.S1.tobytes() == rep.S1.tobytes()


def test_mgf_bound_accelerated_small_run():
    p = Problem.composite(np.diag([1.0, 0.5]), 0.5, [0.0, 0.0])
    noise = NoiseModel.gaussian(2, 1.0)
    w = weights_asmd(0.05, certified_sigma(noise), 5)
    rep = estimate_mgf_bound(p, p.domain, StepSchedule("accelerated", 0.05), w, 5, 3000,
                             "accelerated", noise=noise, x1=[0.5, 0.5], seed=2)
    assert rep.passed, rep.to_dict()
    assert set(rep.to_dict()["markov"]) == {"0.1", "0.05"}


def test_mgf_refuses_inflated_weights():
    p, noise, sigma = _mgf_setup()
    sched = StepSchedule("fixed", 0.2)
    w = weights_smd(sched, sigma, 5)
    big = dataclasses.replace(w, values=np.asarray(w.values) * 4)
    with pytest.raises(WeightConditionError):
        estimate_mgf_bound(p, p.domain, sched, big, 5, 10, "smd", noise=noise, x1=[0.5, 0.5])
    with pytest.raises(WeightConditionError):
        estimate_mgf_bound(p, p.domain, sched, weights_smd(sched, 2 * sigma, 5), 5, 10, "smd",
                           noise=noise, x1=[0.5, 0.5])


def test_mgf_horizon_limit():
    p, noise, sigma = _mgf_setup()
    sched = StepSchedule("fixed", 0.01)
    with pytest.raises(ValueError, match="at most 20"):
        estimate_mgf_bound(p, p.domain, sched, weights_smd(sched, sigma, 21), 21, 10, "smd",
                           noise=noise, x1=[0.5, 0.5])
