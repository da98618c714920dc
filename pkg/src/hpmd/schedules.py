"""Step-size schedules and the non-increasing weight sequences {w_t}.

Indexing follows the two algorithms:

* SMD weights are ``w_1 .. w_{T+1}``; ``ws.at(t)`` takes that index.
* Accelerated weights are ``w_0 .. w_T``.

Both are built backward from the last weight ``1 / (2C)`` by
``w_prev = w_next + 6 sigma^2 eta_t^2 w_next^2``, so the recursion condition
holds with equality and the sequence stays in ``[1/(2C), 1/C]``.
"""
import math
import warnings
from dataclasses import dataclass

import numpy as np

SIGMA_FLOOR_REL = 1e-12


@dataclass(frozen=True)
class StepSchedule:
    kind: str
    eta: float

    def __post_init__(self):
        if self.kind not in ("fixed", "invsqrt", "accelerated"):
            raise ValueError(f"unknown schedule kind {self.kind!r}")
        if not (math.isfinite(self.eta) and self.eta > 0):
            raise ValueError("eta must be positive and finite")
        object.__setattr__(self, "eta", float(self.eta))

    @property
    def convention(self):
        return "accelerated" if self.kind == "accelerated" else "smd"

    def step_at(self, t):
        return step_at(self, t)

    def etas(self, T):
        """eta_1 .. eta_T as an array."""
        t = np.arange(1, T + 1, dtype=float)
        if self.kind == "fixed":
            return np.full(T, self.eta)
        if self.kind == "invsqrt":
            return self.eta / np.sqrt(t)
        return t * self.eta

    def alphas(self, T):
        if self.kind != "accelerated":
            return None
        return 2.0 / (np.arange(1, T + 1, dtype=float) + 1.0)


def step_at(schedule, t):
    """(eta_t, alpha_t) for t >= 1; alpha_t is None outside the accelerated schedule."""
    if int(t) != t or t < 1:
        raise ValueError("t must be a positive integer")
    if schedule.kind == "fixed":
        return schedule.eta, None
    if schedule.kind == "invsqrt":
        return schedule.eta / math.sqrt(t), None
    return t * schedule.eta, 2.0 / (t + 1)


def effective_sigma(sigma, G=1.0):
    """Noise level used for weight bookkeeping; zero noise is floored at 1e-12 * G."""
    if sigma > 0:
        return float(sigma)
    floor = SIGMA_FLOOR_REL * max(float(G), 1.0)
    warnings.warn(f"sigma={sigma} replaced by {floor:g} for weight bookkeeping",
                  RuntimeWarning, stacklevel=2)
    return floor


def _recursion_step(w_next, sigma, eta_t):
    return w_next + 6.0 * sigma * sigma * eta_t * eta_t * w_next * w_next


@dataclass(frozen=True, eq=False)
class WeightSequence:
    values: np.ndarray
    C: float
    convention: str
    sigma: float
    eta: float
    schedule_kind: str

    @property
    def first_index(self):
        return 1 if self.convention == "smd" else 0

    @property
    def T(self):
        return len(self.values) - 1

    def at(self, t):
        return float(self.values[t - self.first_index])

    @property
    def indices(self):
        return np.arange(self.first_index, self.first_index + len(self.values))


def _check_normalizer(C):
    if not (math.isfinite(C) and C > 0 and math.isfinite(1.0 / (2.0 * C))):
        raise OverflowError(f"normalizer C={C!r} is out of floating-point range")


def _finish(values, C, convention, sigma, schedule):
    if not np.all(np.isfinite(values)):
        raise OverflowError("weight recursion overflowed; reduce T or eta")
    values = np.asarray(values, dtype=float)
    values.flags.writeable = False
    return WeightSequence(values, float(C), convention, float(sigma), schedule.eta, schedule.kind)


def weights_smd(schedule, sigma, T):
    """Weights w_1 .. w_{T+1} for SMD with a fixed or 1/sqrt(t) schedule."""
    if schedule.convention != "smd":
        raise ValueError("weights_smd needs a fixed or invsqrt schedule")
    if not sigma > 0:
        raise ValueError("sigma must be positive (see effective_sigma)")
    if T < 1:
        raise ValueError("T must be positive")
    etas = schedule.etas(T)
    s2 = sigma * sigma
    if schedule.kind == "fixed":
        C = 6.0 * s2 * schedule.eta ** 2 * (T + 1)
    else:
        C = 6.0 * s2 * schedule.eta ** 2 * math.fsum(1.0 / t for t in range(1, T + 1))
    _check_normalizer(C)
    w = np.empty(T + 1)
    w[T] = 1.0 / (2.0 * C)
    for t in range(T, 0, -1):  # paper index t; w[t] holds w_{t+1}
        w[t - 1] = _recursion_step(w[t], sigma, etas[t - 1])
    return _finish(w, C, "smd", sigma, schedule)


def weights_asmd(eta, sigma, T):
    """Weights w_0 .. w_T for the accelerated method with eta_t = t * eta."""
    if not sigma > 0:
        raise ValueError("sigma must be positive (see effective_sigma)")
    if T < 2:
        raise ValueError("T must be at least 2")
    schedule = StepSchedule("accelerated", eta)
    etas = schedule.etas(T)
    C = sigma * sigma * eta * eta * T * (T + 1) * (2 * T + 1)
    _check_normalizer(C)
    w = np.empty(T + 1)
    w[T] = 1.0 / (2.0 * C)
    for t in range(T, 0, -1):
        w[t - 1] = _recursion_step(w[t], sigma, etas[t - 1])
    return _finish(w, C, "accelerated", sigma, schedule)


@dataclass(frozen=True)
class ConditionResult:
    name: str
    indices: np.ndarray
    margins: np.ndarray
    passed: bool

    @property
    def worst_margin(self):
        return float(np.min(self.margins)) if self.margins.size else float("inf")

    @property
    def worst_index(self):
        return int(self.indices[np.argmin(self.margins)]) if self.margins.size else None

    def to_dict(self):
        return {"passed": self.passed, "worst_margin": self.worst_margin,
                "worst_index": self.worst_index}


@dataclass(frozen=True)
class WeightReport:
    convention: str
    conditions: dict

    @property
    def passed(self):
        return all(c.passed for c in self.conditions.values())

    def to_dict(self):
        return {"check": "weights", "convention": self.convention, "passed": self.passed,
                "conditions": {k: v.to_dict() for k, v in self.conditions.items()}}


def _result(name, idx, margins, scale, rtol):
    margins = np.asarray(margins, dtype=float)
    ok = bool(np.all(margins >= -rtol * np.asarray(scale)))
    return ConditionResult(name, np.asarray(idx), margins, ok)


def check_weight_conditions(ws, schedule, sigma, beta=None, rtol=1e-12):
    """Evaluate the hypotheses the concentration argument needs.

    SMD: C1  w_t >= w_{t+1} + 6 sigma^2 eta_t^2 w_{t+1}^2   (1 <= t <= T)
         C2  w_{t+1} eta_t^2 <= 1 / (4 sigma^2)
    Accelerated:
         C1  w_{t-1} >= w_t + 6 sigma^2 eta_t^2 w_t^2          (1 <= t <= T)
         C2  w_t eta_t^2 / (1 - beta alpha_t eta_t) <= 1/(4 sigma^2), with a
             positive denominator                            (0 <= t <= T)
         C3  w_{t-1} eta_{t-1}/alpha_{t-1} >= w_t eta_t (1 - alpha_t)/alpha_t
                                                              (1 <= t <= T)
    Margins are (right side - left side) of each ">=" form; a condition
    passes when every margin is >= -rtol * (size of the compared terms).
    """
    if ws.convention != schedule.convention:
        raise ValueError(f"weight convention {ws.convention!r} does not match "
                         f"schedule {schedule.kind!r}")
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    T = ws.T
    w = np.asarray(ws.values)
    etas = schedule.etas(T)
    t_idx = np.arange(1, T + 1)
    cap = 1.0 / (4.0 * sigma * sigma)
    conds = {}
    if ws.convention == "smd":
        w_next = w[1:]
        rhs = np.array([_recursion_step(wn, sigma, e) for wn, e in zip(w_next, etas)])
        conds["C1"] = _result("C1", t_idx, w[:-1] - rhs, w[:-1], rtol)
        lhs = w_next * etas ** 2
        conds["C2"] = _result("C2", t_idx, cap - lhs, cap, rtol)
        return WeightReport("smd", conds)

    beta = 0.0 if beta is None else float(beta)
    alphas = schedule.alphas(T)
    w_cur = w[1:]
    rhs = np.array([_recursion_step(wc, sigma, e) for wc, e in zip(w_cur, etas)])
    conds["C1"] = _result("C1", t_idx, w[:-1] - rhs, w[:-1], rtol)

    # t = 0 has eta_0 = 0, so its C2 term vanishes
    denom = 1.0 - beta * alphas * etas
    with np.errstate(divide="ignore", invalid="ignore"):
        lhs = np.where(denom > 0, w_cur * etas ** 2 / denom, np.inf)
    margins2 = np.concatenate([[cap], cap - lhs])
    conds["C2"] = _result("C2", np.arange(0, T + 1), margins2, cap, rtol)

    lead = etas / alphas                      # eta_t / alpha_t
    lag = etas * (1.0 - alphas) / alphas      # eta_t (1 - alpha_t) / alpha_t
    lead_prev = np.concatenate([[0.0], lead[:-1]])
    left = w[:-1] * lead_prev
    right = w_cur * lag
    conds["C3"] = _result("C3", t_idx, left - right, np.maximum(left, right), rtol)
    return WeightReport("accelerated", conds)
