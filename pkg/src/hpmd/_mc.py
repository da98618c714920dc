"""Log-domain Monte Carlo helpers shared by the stochastic checks."""
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class MCBound:
    log_estimate: float
    rel_stderr: float
    log_bound: float
    passed: bool

    @property
    def log_margin(self):
        return self.log_bound - self.log_estimate


def mc_upper_check(log_terms, log_bound, subtract=None, n_std=3.0, rtol=1e-12):
    """Test ``E[exp(v) - c] <= exp(log_bound)`` from samples ``v`` (and ``c``).

    With ``est`` the sample mean and ``r`` its relative standard error the
    check passes iff ``est <= bound * (1 + n_std * r)``, compared in the log
    domain.  Sample values are rescaled by ``exp(-max(v))`` so nothing is
    exponentiated out of range.
    """
    v = np.asarray(log_terms, dtype=float)
    if v.size < 2:
        raise ValueError("need at least two samples")
    if not np.all(np.isfinite(v)):
        raise OverflowError("non-finite exponent in Monte Carlo samples")
    m = float(np.max(v))
    e = np.exp(v - m)
    if subtract is not None:
        # c * exp(-m) underflows harmlessly for large m
        e = e - np.asarray(subtract, dtype=float) * np.exp(-m)
    mean = float(np.mean(e))
    if not mean > 0.0:
        raise ValueError("Monte Carlo mean is not positive; estimate undefined in log domain")
    rel = float(np.std(e, ddof=1)) / np.sqrt(v.size) / mean
    log_est = float(np.log(mean) + m)
    slack = rtol * max(1.0, abs(log_bound))
    passed = log_est <= log_bound + np.log1p(n_std * rel) + slack
    return MCBound(log_estimate=log_est, rel_stderr=rel, log_bound=float(log_bound),
                   passed=bool(passed))


def as_generator(rng):
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def trial_seed(master_seed, trial_id):
    """Integer seed for trial ``trial_id``, drawn from its own spawned stream."""
    ss = np.random.SeedSequence(int(master_seed), spawn_key=(int(trial_id),))
    return int(ss.generate_state(2, dtype=np.uint64)[0] >> np.uint64(1))
