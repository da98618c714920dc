"""Numerical checks of the per-step descent inequalities and the MGF bounds.

Deterministic inequalities are checked per realization with the mixed
tolerance ``LHS <= RHS + tol * (1 + |RHS|)``.  Stochastic ones use a
three-standard-error band and are evaluated in the log domain.
"""
import math
from dataclasses import dataclass, field

import numpy as np

from ._mc import as_generator, mc_upper_check, trial_seed
from .algorithms import run_asmd, run_smd
from .mirror import bregman_rows, dual_norm_rows
from .problems import certified_sigma
from .schedules import StepSchedule, check_weight_conditions

STEP_TOL = 1e-8


class WeightConditionError(ValueError):
    """The weight sequence does not satisfy the hypotheses of the MGF bound."""


@dataclass(frozen=True)
class StepCheckReport:
    check: str
    passed: bool
    n_steps: int
    n_violations: int
    worst_margin: float
    worst_index: int
    tol: float
    margins: np.ndarray = field(repr=False)
    lhs: np.ndarray = field(repr=False)
    rhs: np.ndarray = field(repr=False)

    @property
    def violations(self):
        """1-based iteration indices where the inequality failed."""
        return (np.flatnonzero(self.margins < 0) + 1).tolist()

    def to_dict(self):
        return {"check": self.check, "passed": self.passed, "n_steps": self.n_steps,
                "n_violations": self.n_violations, "worst_margin": self.worst_margin,
                "worst_index": self.worst_index, "tol": self.tol}


def _step_report(name, lhs, rhs, tol):
    margins = rhs + tol * (1.0 + np.abs(rhs)) - lhs
    margins = np.where(np.isnan(margins), -np.inf, margins)
    k = int(np.argmin(margins))
    n_bad = int(np.sum(margins < 0))
    return StepCheckReport(name, n_bad == 0, len(lhs), n_bad, float(margins[k]), k + 1,
                           tol, margins, lhs, rhs)


def _needs_trajectory(record, algorithm):
    if record.algorithm != algorithm:
        raise ValueError(f"expected a {algorithm} record, got {record.algorithm}")
    if record.noise is None or record.xs is None:
        raise ValueError("record has no stored noise; run with retain_noise=True")


def check_smd_step_inequality(record, problem, mirror, G=None, tol=STEP_TOL):
    """Per-step SMD inequality, recomputed from the stored iterates and noise.

    At each t = 1..T::

        eta_t (f(x_t) - f*) - eta_t^2 G^2 + D(x*, x_{t+1}) - D(x*, x_t)
            <= eta_t <xi_t, x* - x_t> + eta_t^2 ||xi_t||_*^2

    ``G`` defaults to ``problem.grad_bound`` (a bound on the dual norm of the
    gradient over the domain) and must be finite.
    """
    _needs_trajectory(record, "smd")
    G = problem.grad_bound if G is None else float(G)
    if not math.isfinite(G):
        raise ValueError("the SMD step inequality needs a finite gradient bound G; "
                         "use a bounded domain or pass G explicitly")
    X = np.asarray(record.xs)
    xi = np.asarray(record.noise)
    eta = np.asarray(record.etas)
    xstar = problem.xstar
    gaps = problem.values(X[:-1]) - problem.fstar
    D = bregman_rows(mirror, xstar, X)
    lhs = eta * gaps - eta ** 2 * G ** 2 + D[1:] - D[:-1]
    inner = np.sum(xi * (xstar - X[:-1]), axis=1)
    rhs = eta * inner + eta ** 2 * dual_norm_rows(mirror, xi) ** 2
    return _step_report("lemma4", lhs, rhs, tol)


def check_asmd_step_inequality(record, problem, mirror, G=None, beta=None, tol=STEP_TOL):
    """Per-step inequality for the accelerated method.

    At each t = 1..T, with c_t = 1 - beta alpha_t eta_t::

        (eta_t/alpha_t) gap(y_t) - (eta_t (1-alpha_t)/alpha_t) gap(y_{t-1})
            - eta_t^2 G^2 / c_t + D(x*, z_t) - D(x*, z_{t-1})
            <= eta_t <xi_t, x* - z_{t-1}> + (eta_t^2 / c_t) ||xi_t||_*^2

    ``G`` defaults to ``problem.mixed_G`` and ``beta`` to ``problem.beta``.
    """
    _needs_trajectory(record, "asmd")
    G = problem.mixed_G if G is None else float(G)
    beta = problem.beta if beta is None else float(beta)
    eta = np.asarray(record.etas)
    alpha = np.asarray(record.alphas)
    c = 1.0 - beta * alpha * eta
    if np.any(c <= 0):
        t = int(np.flatnonzero(c <= 0)[0]) + 1
        raise ValueError(f"1 - beta*alpha_t*eta_t <= 0 at t={t}; eta is too large "
                         f"(needs eta <= 1/(4 beta))")
    Y, Z, xi = np.asarray(record.ys), np.asarray(record.zs), np.asarray(record.noise)
    xstar = problem.xstar
    gy = problem.values(Y) - problem.fstar
    D = bregman_rows(mirror, xstar, Z)
    lead = eta / alpha
    lag = eta * (1.0 - alpha) / alpha
    lhs = lead * gy[1:] - lag * gy[:-1] - eta ** 2 * G ** 2 / c + D[1:] - D[:-1]
    inner = np.sum(xi * (xstar - Z[:-1]), axis=1)
    rhs = eta * inner + eta ** 2 / c * dual_norm_rows(mirror, xi) ** 2
    return _step_report("lemma6", lhs, rhs, tol)


# helper Taylor lemma ---------------------------------------------------------

@dataclass(frozen=True)
class TaylorReport:
    passed: bool
    a: float
    b: float
    sigma: float
    n_samples: int
    log_estimate: float
    log_bound: float
    rel_stderr: float

    def to_dict(self):
        return {"check": "taylor", **self.__dict__}


def helper_taylor_check(a, b, noise, n_samples=1_000_000, rng=0, sigma=None):
    """Monte Carlo check of E[exp(aX + b^2 X^2) - aX] <= exp(3 (a^2 + b^2) sigma^2).

    X = ||xi||_2 for xi drawn from ``noise``; sigma defaults to the certified
    value.  Requires a >= 0 and 0 <= b <= 1/(2 sigma).
    """
    sigma = certified_sigma(noise) if sigma is None else float(sigma)
    a, b = float(a), float(b)
    if a < 0:
        raise ValueError("a must be nonnegative")
    if b < 0 or b > (1.0 + 1e-12) / (2.0 * sigma):
        raise ValueError(f"b must lie in [0, 1/(2 sigma)] = [0, {1 / (2 * sigma):g}]")
    X = noise.sample_norms(as_generator(rng), int(n_samples))
    v = a * X + b * b * X * X
    try:
        res = mc_upper_check(v, 3.0 * (a * a + b * b) * sigma * sigma, subtract=a * X)
    except OverflowError as exc:
        raise OverflowError(f"{exc}; shrink a and b toward 0") from None
    return TaylorReport(res.passed, a, b, sigma, int(n_samples), res.log_estimate,
                        res.log_bound, res.rel_stderr)


# martingale bookkeeping --------------------------------------------------------

@dataclass(frozen=True)
class MartingaleTrace:
    """Z_t (t = 1..T), suffix sums S_t = sum_{i >= t} Z_i, and the bound exponent."""
    variant: str
    Z: np.ndarray
    S: np.ndarray
    weights: object = field(repr=False)
    exponent: float

    @property
    def S1(self):
        return float(self.S[0])

    def recompute_ok(self, rtol=1e-10):
        """Do the stored partial sums equal freshly summed Z (relative 1e-10)?"""
        fresh = np.array([math.fsum(self.Z[t:]) for t in range(len(self.Z))])
        scale = np.maximum(1.0, np.abs(fresh))
        return bool(np.all(np.abs(fresh - self.S) <= rtol * scale))


def _suffix_sums(Z):
    return np.cumsum(Z[::-1])[::-1]


def smd_martingale(record, weights, G):
    """Z_t = w_{t+1}(eta_t gap_t - eta_t^2 G^2) + w_{T+1}(D_{t+1} - D_t)."""
    if weights.convention != "smd" or weights.T != record.T:
        raise ValueError("weights must be w_1..w_{T+1} for this record")
    w = np.asarray(weights.values)
    eta = np.asarray(record.etas)
    D = np.concatenate([[record.initial_divergence], record.divergences])
    Z = w[1:] * (eta * record.gaps - eta ** 2 * G ** 2) + w[-1] * np.diff(D)
    s2 = weights.sigma ** 2
    exponent = (w[0] - w[-1]) * D[0] + 3.0 * s2 * math.fsum(w[1:] * eta ** 2)
    return MartingaleTrace("smd", Z, _suffix_sums(Z), weights, float(exponent))


def asmd_martingale(record, weights, G, beta):
    """Accelerated analogue with w_0..w_T and the 1/(1 - beta alpha_t eta_t) factors."""
    if weights.convention != "accelerated" or weights.T != record.T:
        raise ValueError("weights must be w_0..w_T for this record")
    w = np.asarray(weights.values)
    eta, alpha = np.asarray(record.etas), np.asarray(record.alphas)
    c = 1.0 - beta * alpha * eta
    gy = np.concatenate([[record.initial_gap], record.gaps])
    D = np.concatenate([[record.initial_divergence], record.divergences])
    core = eta / alpha * gy[1:] - eta * (1.0 - alpha) / alpha * gy[:-1] - eta ** 2 * G ** 2 / c
    Z = w[1:] * core + w[-1] * np.diff(D)
    s2 = weights.sigma ** 2
    exponent = (w[0] - w[-1]) * D[0] + 3.0 * s2 * math.fsum(w[1:] * eta ** 2 / c)
    return MartingaleTrace("accelerated", Z, _suffix_sums(Z), weights, float(exponent))


def smd_s1_closed_form(record, weights, G):
    """S_1 written out: weighted gaps minus G^2 terms plus the telescoped divergence."""
    w = np.asarray(weights.values)
    eta = np.asarray(record.etas)
    return (math.fsum(w[1:] * eta * record.gaps) - G ** 2 * math.fsum(w[1:] * eta ** 2)
            + w[-1] * (record.final_divergence - record.initial_divergence))


# MGF estimate ------------------------------------------------------------------

@dataclass(frozen=True)
class MGFReport:
    passed: bool
    variant: str
    T: int
    n_trials: int
    log_estimate: float
    exponent: float
    rel_stderr: float
    bookkeeping_ok: bool
    identity_ok: bool
    markov: dict
    S1: np.ndarray = field(repr=False)

    @property
    def markov_passed(self):
        return all(m["passed"] for m in self.markov.values())

    def to_dict(self):
        d = {k: v for k, v in self.__dict__.items() if k != "S1"}
        d["markov"] = {str(k): v for k, v in self.markov.items()}
        return {"check": "mgf", **d, "markov_passed": self.markov_passed}


def markov_tail(S1, exponent, delta):
    """Fraction of trials with S_1 >= exponent + ln(1/delta) against delta + 3 stderr."""
    S1 = np.asarray(S1)
    n = len(S1)
    frac = float(np.mean(S1 >= exponent + math.log(1.0 / delta)))
    limit = delta + 3.0 * math.sqrt(delta * (1.0 - delta) / n)
    return {"fraction": frac, "limit": limit, "passed": frac <= limit}


def estimate_mgf_bound(problem, mirror, schedule, weights, T, n_trials, variant, *,
                       noise, x1, seed=0, sigma=None, deltas=(0.1, 0.05), backend=None):
    """Estimate E[exp(S_1)] over independent trajectories and compare it with its bound.

    ``weights`` must satisfy the weight conditions for the certified sigma,
    otherwise ``WeightConditionError`` is raised before any trial runs.
    Trial i uses the stream ``trial_seed(seed, i)``; trials are folded in
    index order so the estimate is reproducible.
    """
    if T > 20:
        raise ValueError("T must be at most 20 for the MGF check")
    if variant not in ("smd", "accelerated"):
        raise ValueError("variant must be 'smd' or 'accelerated'")
    sigma = certified_sigma(noise) if sigma is None else float(sigma)
    if weights.T != T:
        raise ValueError("weight sequence length does not match T")
    if variant == "accelerated" and schedule.kind != "accelerated":
        schedule = StepSchedule("accelerated", schedule.eta)
    report = check_weight_conditions(weights, schedule, sigma, beta=problem.beta)
    if not report.passed:
        bad = [k for k, c in report.conditions.items() if not c.passed]
        raise WeightConditionError(f"weight conditions {bad} fail; refusing to estimate")
    if abs(weights.sigma - sigma) > 1e-12 * sigma:
        raise WeightConditionError("weights were built for a different sigma")

    if not math.isfinite(problem.grad_bound if variant == "smd" else problem.mixed_G):
        raise ValueError("problem has no finite gradient constant for this variant")
    S1 = np.empty(n_trials)
    exponent = None
    book_ok = ident_ok = True
    for i in range(n_trials):
        s = trial_seed(seed, i)
        if variant == "smd":
            rec = run_smd(problem, mirror, schedule, T, x1, s, noise=noise, backend=backend)
            tr = smd_martingale(rec, weights, problem.grad_bound)
            if i < 100:
                ident = smd_s1_closed_form(rec, weights, problem.grad_bound)
                ident_ok &= abs(ident - tr.S1) <= 1e-10 * max(1.0, abs(ident))
        else:
            rec = run_asmd(problem, mirror, schedule.eta, T, x1, s, noise=noise,
                           backend=backend)
            tr = asmd_martingale(rec, weights, problem.mixed_G, problem.beta)
        if i < 100:
            book_ok &= tr.recompute_ok()
        exponent = tr.exponent
        S1[i] = tr.S1
    res = mc_upper_check(S1, exponent)
    markov = {float(d): markov_tail(S1, exponent, d) for d in deltas}
    passed = res.passed and all(m["passed"] for m in markov.values()) and book_ok and ident_ok
    return MGFReport(bool(passed), variant, int(T), int(n_trials), res.log_estimate,
                     float(exponent), res.rel_stderr, bool(book_ok), bool(ident_ok),
                     markov, S1)
