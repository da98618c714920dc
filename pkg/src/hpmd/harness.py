"""Experiment orchestration: configs, closed-form bounds, many-trial runs, summaries.

A config is a flat JSON object.  Every quantity is a dimensionless real or
integer (there are no physical units); vectors and matrices are JSON lists.
Unknown keys are rejected so a typo cannot silently fall back to a default.
"""
import csv
import json
import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, fields

import numpy as np

from ._mc import trial_seed
from .algorithms import NonFiniteIterateError, run_asmd, run_smd
from .mirror import MirrorMap, bregman
from .problems import (DegenerateNoiseWarning, NoiseModel, Problem, certified_sigma,
                       check_subgaussian)
from .schedules import (StepSchedule, check_weight_conditions, effective_sigma,
                        weights_asmd, weights_smd)
from .verify import (check_asmd_step_inequality, check_smd_step_inequality,
                     estimate_mgf_bound, helper_taylor_check)

ALGORITHMS = ("smd-fixed", "smd-invsqrt", "asmd")


class ConfigError(ValueError):
    """Invalid or inconsistent experiment configuration."""


# config --------------------------------------------------------------------

_DEFAULTS = {
    "algorithm": None,
    "problem": None,
    "dim": None,
    "xstar": None,
    "G": 1.0,
    "A": None,
    "A_diag": None,
    "n_pieces": 4,
    "piece_seed": 0,
    "mirror": "euclidean",
    "box_lo": -1.0,
    "box_hi": 1.0,
    "noise": "gaussian",
    "noise_scale": None,
    "noise_sigma": None,
    "x1": None,
    "eta": "auto",
    "T": None,
    "n_trials": 1,
    "delta": 0.05,
    "seed": 0,
    "workers": 1,
    "output_dir": "results",
    # verification-only knobs
    "verify_T": None,
    "verify_trials": None,
    "n_samples": None,
    "lambda_grid_size": 16,
    "taylor_a": None,
    "taylor_b": None,
}
_REQUIRED = ("algorithm", "problem", "dim", "T")


@dataclass(frozen=True)
class ExperimentConfig:
    algorithm: str
    problem: str
    dim: int
    T: int
    xstar: list = None
    G: float = 1.0
    A: list = None
    A_diag: list = None
    n_pieces: int = 4
    piece_seed: int = 0
    mirror: str = "euclidean"
    box_lo: object = -1.0
    box_hi: object = 1.0
    noise: str = "gaussian"
    noise_scale: float = None
    noise_sigma: float = None
    x1: list = None
    eta: object = "auto"
    n_trials: int = 1
    delta: float = 0.05
    seed: int = 0
    workers: int = 1
    output_dir: str = "results"
    verify_T: int = None
    verify_trials: int = None
    n_samples: int = None
    lambda_grid_size: int = 16
    taylor_a: list = None
    taylor_b: list = None

    @classmethod
    def from_dict(cls, d):
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        unknown = sorted(set(d) - set(_DEFAULTS))
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        missing = [k for k in _REQUIRED if d.get(k) is None]
        if missing:
            raise ConfigError(f"missing required config keys: {', '.join(missing)}")
        cfg = cls(**d)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path):
        try:
            with open(path) as fh:
                d = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        return cls.from_dict(d)

    def to_dict(self):
        return asdict(self)

    def replace(self, **kw):
        d = self.to_dict()
        d.update({k: v for k, v in kw.items() if v is not None})
        return ExperimentConfig.from_dict(d)

    def validate(self):
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(f"algorithm must be one of {ALGORITHMS}")
        for name in ("dim", "T", "n_trials", "workers"):
            v = getattr(self, name)
            if not isinstance(v, int) or isinstance(v, bool) or v < 1:
                raise ConfigError(f"{name} must be a positive integer")
        if self.algorithm == "asmd" and self.T < 2:
            raise ConfigError("asmd needs T >= 2")
        if not (isinstance(self.delta, (int, float)) and 0.0 < self.delta < 1.0):
            raise ConfigError("delta must lie in (0, 1)")
        if not (self.eta == "auto" or (isinstance(self.eta, (int, float))
                                       and math.isfinite(self.eta) and self.eta > 0)):
            raise ConfigError('eta must be a positive number or "auto"')
        if self.noise_scale is not None and self.noise_sigma is not None:
            raise ConfigError("give at most one of noise_scale and noise_sigma")
        if self.noise_sigma is not None and self.noise != "gaussian":
            raise ConfigError("noise_sigma is only meaningful for gaussian noise")
        # building the objects catches the remaining domain errors
        exp = build(self)
        if exp.algorithm != "asmd" and not math.isfinite(exp.problem.grad_bound):
            raise ConfigError("gradient bound G is infinite for this problem/domain "
                              "(quadratic on R^d); the SMD bound would be infinite")
        if exp.algorithm == "asmd" and self.eta != "auto" and exp.problem.beta > 0 \
                and self.eta > 1.0 / (4.0 * exp.problem.beta):
            raise ConfigError(f"asmd needs eta <= 1/(4 beta) = {1 / (4 * exp.problem.beta):g}")
        exp.eta  # raises ConfigError for an undefined automatic step


@dataclass(frozen=True)
class Experiment:
    """The objects a config describes, plus derived constants."""
    config: ExperimentConfig
    problem: Problem
    mirror: MirrorMap
    noise: NoiseModel
    x1: np.ndarray
    sigma: float
    D1: float

    @property
    def algorithm(self):
        return self.config.algorithm

    @property
    def G(self):
        return self.problem.mixed_G if self.algorithm == "asmd" else self.problem.grad_bound

    @property
    def eta(self):
        c = self.config
        if c.eta != "auto":
            return float(c.eta)
        try:
            return auto_eta(self.algorithm, D=self.D1, G=self.G, sigma=self.sigma,
                            beta=self.problem.beta, T=c.T, delta=c.delta)
        except ValueError as exc:
            raise ConfigError(f"cannot choose eta automatically: {exc}") from None

    @property
    def schedule(self):
        kind = {"smd-fixed": "fixed", "smd-invsqrt": "invsqrt", "asmd": "accelerated"}
        return StepSchedule(kind[self.algorithm], self.eta)

    def bound_params(self):
        return {"D": self.D1, "G": self.G, "sigma": self.sigma, "beta": self.problem.beta,
                "eta": self.eta, "T": self.config.T, "delta": self.config.delta}


def _vector(v, d, name):
    a = np.asarray(v, dtype=float)
    if a.ndim == 0:
        a = np.full(d, float(a))
    if a.shape != (d,):
        raise ConfigError(f"{name} must have length {d}")
    return a


def build(cfg):
    """Instantiate problem, mirror map, noise and starting point from a config."""
    d = cfg.dim
    try:
        if cfg.mirror == "euclidean":
            mirror = MirrorMap.euclidean(d)
        elif cfg.mirror == "box":
            mirror = MirrorMap.box(d, _vector(cfg.box_lo, d, "box_lo"),
                                   _vector(cfg.box_hi, d, "box_hi"))
        elif cfg.mirror == "entropy":
            mirror = MirrorMap.entropy(d)
        else:
            raise ConfigError(f"unknown mirror {cfg.mirror!r}")

        if cfg.xstar is not None:
            xstar = _vector(cfg.xstar, d, "xstar")
        elif cfg.mirror == "entropy":
            xstar = np.full(d, 1.0 / d)
        elif cfg.mirror == "box":
            xstar = 0.5 * (mirror.lo + mirror.hi)
        else:
            xstar = np.zeros(d)

        if cfg.A is not None and cfg.A_diag is not None:
            raise ConfigError("give at most one of A and A_diag")
        if cfg.A is not None:
            A = np.asarray(cfg.A, dtype=float)
        elif cfg.A_diag is not None:
            A = np.diag(_vector(cfg.A_diag, d, "A_diag"))
        else:
            A = np.eye(d)

        if cfg.problem == "lipschitz_norm":
            problem = Problem.lipschitz_norm(xstar, cfg.G, mirror)
        elif cfg.problem == "quadratic":
            problem = Problem.quadratic(A, xstar, mirror)
        elif cfg.problem == "composite":
            problem = Problem.composite(A, cfg.G, xstar, mirror)
        elif cfg.problem == "piecewise_max":
            problem = Problem.random_piecewise_max(xstar, cfg.n_pieces, cfg.piece_seed, mirror)
        else:
            raise ConfigError(f"unknown problem {cfg.problem!r}")

        if cfg.noise not in ("gaussian", "sphere", "rademacher"):
            raise ConfigError(f"unknown noise {cfg.noise!r}")
        if cfg.noise_sigma is not None:
            noise = NoiseModel.gaussian_with_sigma(d, float(cfg.noise_sigma))
        else:
            noise = NoiseModel(cfg.noise, d, 1.0 if cfg.noise_scale is None
                               else float(cfg.noise_scale))

        if cfg.x1 is not None:
            x1 = mirror.check_point(_vector(cfg.x1, d, "x1"), "x1")
        elif cfg.mirror == "euclidean":
            x1 = xstar + np.ones(d) / math.sqrt(d)
        elif cfg.mirror == "box":
            x1 = np.where(xstar - mirror.lo >= mirror.hi - xstar, mirror.lo, mirror.hi)
        else:
            x1 = np.full(d, 1.0 / d)
            if np.allclose(x1, xstar):
                x1 = 0.5 * x1 + 0.5 * np.eye(d)[0]
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from None

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateNoiseWarning)
        sigma = 0.0 if noise.degenerate else certified_sigma(noise)
    return Experiment(cfg, problem, mirror, noise, x1, float(sigma),
                      float(bregman(mirror, problem.xstar, x1)))


# closed-form bounds ------------------------------------------------------------

def _harmonic(T):
    return math.fsum(1.0 / t for t in range(1, int(T) + 1))


def _check_params(params, need):
    missing = [k for k in need if k not in params]
    if missing:
        raise ValueError(f"missing bound parameters: {', '.join(missing)}")
    p = {k: float(params[k]) for k in need}
    for k in ("D", "G", "sigma", "beta"):
        if k in p and not p[k] >= 0:
            raise ValueError(f"{k} must be nonnegative")
    if "T" in p and not (p["T"] >= 1 and p["T"] == int(p["T"])):
        raise ValueError("T must be a positive integer")
    if "delta" in p and not 0.0 < p["delta"] <= 1.0:
        raise ValueError("delta must lie in (0, 1]")
    if "eta" in p and not (math.isfinite(p["eta"]) and p["eta"] > 0):
        raise ValueError("eta must be positive")
    return p


def auto_eta(kind, *, D, G, sigma, T, delta, beta=0.0):
    """Balancing step size for ``kind`` (eta_t = eta / sqrt(t) uses H_T in place of T)."""
    p = _check_params(dict(D=D, G=G, sigma=sigma, beta=beta, T=T, delta=delta),
                      ("D", "G", "sigma", "beta", "T", "delta"))
    K = p["G"] ** 2 + p["sigma"] ** 2 * (1.0 + math.log(1.0 / p["delta"]))
    if kind in ("smd-fixed", "smd-invsqrt"):
        horizon = p["T"] if kind == "smd-fixed" else _harmonic(p["T"])
        if K == 0 or p["D"] == 0:
            raise ValueError("balancing step undefined when D = 0 or G = sigma = 0")
        return math.sqrt(p["D"] / (K * horizon))
    if kind != "asmd":
        raise ValueError(f"unknown algorithm {kind!r}")
    cap = 1.0 / (4.0 * p["beta"]) if p["beta"] > 0 else math.inf
    bal = math.sqrt(p["D"]) / (math.sqrt(K) * p["T"] ** 1.5) if K > 0 else math.inf
    eta = min(cap, bal)
    if not (math.isfinite(eta) and eta > 0):
        raise ValueError("balancing step undefined for these parameters")
    return eta


def theoretical_bound(kind, params):
    """(gap_bound, divergence_bound) from the exact constants of the corollaries.

    ``params`` holds D (initial Bregman divergence), G, sigma, eta, T, delta
    and, for asmd, beta.  ``eta`` may be ``"auto"``.
    """
    params = dict(params)
    if params.get("eta") == "auto":
        params["eta"] = auto_eta(kind, **{k: params[k] for k in
                                          ("D", "G", "sigma", "T", "delta")},
                                 beta=params.get("beta", 0.0))
    if kind in ("smd-fixed", "smd-invsqrt"):
        p = _check_params(params, ("D", "G", "sigma", "eta", "T", "delta"))
    elif kind == "asmd":
        params.setdefault("beta", 0.0)
        p = _check_params(params, ("D", "G", "sigma", "beta", "eta", "T", "delta"))
    else:
        raise ValueError(f"unknown algorithm {kind!r}")
    D, G, s, eta, T, L = p["D"], p["G"], p["sigma"], p["eta"], p["T"], math.log(1.0 / p["delta"])
    if kind == "smd-fixed":
        K = 2.0 * G * G + 6.0 * s * s * (1.0 + 4.0 * L)
        return 2.0 * D / (eta * T) + K * eta, 2.0 * D + K * eta * eta * T
    if kind == "smd-invsqrt":
        K = 2.0 * G * G + 6.0 * s * s * (1.0 + 2.0 * L)
        H = _harmonic(T)
        return (2.0 * D / eta + K * eta * H) / math.sqrt(T), 2.0 * D + K * eta * eta * H
    if p["beta"] > 0 and eta > (1.0 + 1e-12) / (4.0 * p["beta"]):
        raise ValueError(f"asmd needs eta <= 1/(4 beta) = {1 / (4 * p['beta']):g}")
    K = G * G + (1.0 + L) * s * s
    return 4.0 * D / (eta * T * T) + 24.0 * K * eta * T, 2.0 * D + 12.0 * K * eta * eta * T ** 3


# trials and summaries ----------------------------------------------------------

@dataclass(frozen=True)
class TrialMetrics:
    trial_id: int
    seed: int
    avg_gap: float
    output_gap: float
    final_bregman: float
    aborted: bool


def _run_trial(exp, schedule, trial_id):
    c = exp.config
    seed = trial_seed(c.seed, trial_id)
    try:
        if c.algorithm == "asmd":
            rec = run_asmd(exp.problem, exp.mirror, schedule.eta, c.T, exp.x1, seed,
                           noise=exp.noise)
        else:
            rec = run_smd(exp.problem, exp.mirror, schedule, c.T, exp.x1, seed,
                          noise=exp.noise)
    except NonFiniteIterateError:
        nan = float("nan")
        return TrialMetrics(trial_id, seed, nan, nan, nan, True)
    return TrialMetrics(trial_id, seed, rec.average_gap, rec.output_gap,
                        rec.final_divergence, False)


def run_trials(exp, workers=None):
    """All trials of ``exp``, sorted by trial id whatever the completion order."""
    schedule = exp.schedule
    n = exp.config.n_trials
    workers = exp.config.workers if workers is None else int(workers)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        if workers <= 1:
            out = [_run_trial(exp, schedule, i) for i in range(n)]
        else:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                out = list(pool.map(lambda i: _run_trial(exp, schedule, i), range(n)))
    return sorted(out, key=lambda m: m.trial_id)


def quantile_index(n, delta):
    """1-based order statistic ceil((1 - delta) n), guarded against rounding."""
    if n < 1:
        raise ValueError("need at least one trial")
    k = n - math.floor(delta * n + 1e-9)
    return max(1, min(n, k))


def empirical_quantile(values, delta):
    v = np.sort(np.asarray(values, dtype=float))
    return float(v[quantile_index(len(v), delta) - 1])


@dataclass(frozen=True)
class ExperimentSummary:
    algorithm: str
    T: int
    eta: float
    delta: float
    n_trials: int
    n_aborted: int
    quantile_index: int
    gap_quantile: float
    divergence_quantile: float
    output_gap_quantile: float
    gap_mean: float
    divergence_mean: float
    gap_bound: float
    divergence_bound: float
    gap_ratio: float
    divergence_ratio: float
    bound_exceeded: bool
    weights_passed: bool
    trials_file: str = "trials.csv"

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        names = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in d.items() if k in names})

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def summarize(trials, delta, bounds, *, algorithm="smd-fixed", T=0, eta=float("nan"),
              weights_passed=True):
    """Quantiles, means and empirical/theoretical ratios over the non-aborted trials.

    ``bounds`` is ``(gap_bound, divergence_bound)``.  The gap statistic is the
    per-trial average of f(x_t) - f* for SMD and f(y_T) - f* for asmd.
    """
    trials = list(trials)
    if not trials:
        raise ValueError("no trials to summarize")
    gap_bound, div_bound = (float(b) for b in bounds)
    if not (math.isfinite(gap_bound) and math.isfinite(div_bound)
            and gap_bound > 0 and div_bound > 0):
        raise ValueError("theoretical bounds must be finite and positive")
    ok = [m for m in trials if not m.aborted]
    if not ok:
        raise ValueError("every trial aborted")
    asmd = algorithm == "asmd"
    gaps = np.array([m.output_gap if asmd else m.avg_gap for m in ok])
    outs = np.array([m.output_gap for m in ok])
    divs = np.array([m.final_bregman for m in ok])
    gq = empirical_quantile(gaps, delta)
    dq = empirical_quantile(divs, delta)
    return ExperimentSummary(
        algorithm=algorithm, T=int(T), eta=float(eta), delta=float(delta),
        n_trials=len(trials), n_aborted=len(trials) - len(ok),
        quantile_index=quantile_index(len(ok), delta), gap_quantile=gq,
        divergence_quantile=dq, output_gap_quantile=empirical_quantile(outs, delta),
        gap_mean=float(np.mean(gaps)), divergence_mean=float(np.mean(divs)),
        gap_bound=gap_bound, divergence_bound=div_bound,
        gap_ratio=gq / gap_bound, divergence_ratio=dq / div_bound,
        bound_exceeded=bool(gq > gap_bound or dq > div_bound),
        weights_passed=bool(weights_passed))


def write_trials_csv(path, trials, algorithm):
    second = "final_gap" if algorithm == "asmd" else "avg_iterate_gap"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["trial_id", "seed", "avg_gap", second, "final_bregman", "aborted"])
        for m in trials:
            w.writerow([m.trial_id, m.seed, repr(m.avg_gap), repr(m.output_gap),
                        repr(m.final_bregman), int(m.aborted)])


def read_trials_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    out = []
    for r in rows[1:]:
        out.append(TrialMetrics(int(r[0]), int(r[1]), float(r[2]), float(r[3]),
                                float(r[4]), bool(int(r[5]))))
    return out


def weight_report(exp):
    c = exp.config
    sigma = exp.sigma
    if sigma <= 0:
        sigma = effective_sigma(sigma, exp.G if math.isfinite(exp.G) else 1.0)
    sched = exp.schedule
    if c.algorithm == "asmd":
        ws = weights_asmd(sched.eta, sigma, c.T)
    else:
        ws = weights_smd(sched, sigma, c.T)
    return ws, check_weight_conditions(ws, sched, sigma, beta=exp.problem.beta)


def run_experiment(config, workers=None, seed=None, output_dir=None):
    """Run every trial of ``config`` and write config.json, trials.csv and summary.json."""
    if isinstance(config, dict):
        config = ExperimentConfig.from_dict(config)
    config = config.replace(seed=seed, workers=workers, output_dir=output_dir)
    exp = build(config)
    bounds = theoretical_bound(config.algorithm, exp.bound_params())
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        try:
            _, wrep = weight_report(exp)
            w_ok = wrep.passed
        except OverflowError:
            w_ok = False
    trials = run_trials(exp)
    os.makedirs(config.output_dir, exist_ok=True)
    resolved = config.to_dict()
    resolved["eta"] = exp.eta
    with open(os.path.join(config.output_dir, "config.json"), "w") as fh:
        json.dump(resolved, fh, indent=2, sort_keys=True)
    write_trials_csv(os.path.join(config.output_dir, "trials.csv"), trials, config.algorithm)
    summary = summarize(trials, config.delta, bounds, algorithm=config.algorithm,
                        T=config.T, eta=exp.eta, weights_passed=w_ok)
    with open(os.path.join(config.output_dir, "summary.json"), "w") as fh:
        fh.write(summary.to_json())
    return summary


# verification driver --------------------------------------------------------------

CHECKS = ("lemma4", "lemma6", "taylor", "mgf", "subgaussian", "weights")


def _step_checks(exp, check):
    c = exp.config
    want = "asmd" if check == "lemma6" else "smd"
    if (c.algorithm == "asmd") != (want == "asmd"):
        raise ConfigError(f"{check} needs algorithm {'asmd' if want == 'asmd' else 'smd-*'}")
    T = c.verify_T or c.T
    n = c.verify_trials or 10
    sched = exp.schedule if T == c.T else build(c.replace(T=T)).schedule
    worst, worst_trial, worst_t, n_bad = math.inf, None, None, 0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        for i in range(n):
            s = trial_seed(c.seed, i)
            if want == "asmd":
                rec = run_asmd(exp.problem, exp.mirror, sched.eta, T, exp.x1, s, True,
                               noise=exp.noise)
                rep = check_asmd_step_inequality(rec, exp.problem, exp.mirror)
            else:
                rec = run_smd(exp.problem, exp.mirror, sched, T, exp.x1, s, True,
                              noise=exp.noise)
                rep = check_smd_step_inequality(rec, exp.problem, exp.mirror)
            n_bad += rep.n_violations
            if rep.worst_margin < worst:
                worst, worst_trial, worst_t = rep.worst_margin, i, rep.worst_index
    return {"check": check, "passed": n_bad == 0, "n_trajectories": n, "T": T,
            "n_steps": n * T, "n_violations": n_bad, "worst_margin": worst,
            "worst_trial": worst_trial, "worst_index": worst_t, "tol": rep.tol}


def run_check(config, check):
    """Run one named verification for ``config`` and return a JSON-ready dict."""
    if check not in CHECKS:
        raise ConfigError(f"check must be one of {CHECKS}")
    exp = build(config)
    c = config
    if check in ("lemma4", "lemma6"):
        return _step_checks(exp, check)
    if check == "subgaussian":
        if exp.noise.degenerate:
            raise ConfigError("subgaussian check needs nonzero noise")
        rep = check_subgaussian(exp.noise, exp.sigma, n_samples=c.n_samples or 100_000,
                                lambda_grid_size=c.lambda_grid_size, rng=c.seed)
        return rep.to_dict()
    if check == "taylor":
        if exp.noise.degenerate:
            raise ConfigError("taylor check needs nonzero noise")
        top = 1.0 / (2.0 * exp.sigma)
        a_grid = c.taylor_a if c.taylor_a is not None else [0.0, 0.5 * top, top]
        b_grid = c.taylor_b if c.taylor_b is not None else [0.0, 0.5 * top, top]
        results = []
        for i, a in enumerate(a_grid):
            for j, b in enumerate(b_grid):
                try:
                    rep = helper_taylor_check(a, b, exp.noise, c.n_samples or 1_000_000,
                                              rng=trial_seed(c.seed, i * len(b_grid) + j),
                                              sigma=exp.sigma)
                except ValueError as exc:
                    raise ConfigError(str(exc)) from None
                results.append(rep.to_dict())
        return {"check": "taylor", "passed": all(r["passed"] for r in results),
                "sigma": exp.sigma, "n_samples": c.n_samples or 1_000_000,
                "points": results}
    if check == "weights":
        ws, rep = weight_report(exp)
        return {**rep.to_dict(), "T": ws.T, "sigma": ws.sigma, "eta": ws.eta, "C": ws.C}
    # mgf
    T = c.verify_T or 5
    exp_T = build(c.replace(T=T)) if T != c.T else exp
    ws, _ = weight_report(exp_T)
    variant = "accelerated" if c.algorithm == "asmd" else "smd"
    rep = estimate_mgf_bound(exp.problem, exp.mirror, exp_T.schedule, ws, T,
                             c.verify_trials or 100_000, variant, noise=exp.noise,
                             x1=exp.x1, seed=c.seed, sigma=ws.sigma)
    return rep.to_dict()
