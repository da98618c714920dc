"""Stochastic mirror descent and its accelerated variant as seeded trial runs."""
import warnings
from dataclasses import dataclass, field

import numpy as np

from ._mc import as_generator
from .kernels import get_kernels
from .mirror import bregman
from .problems import NoiseModel
from .schedules import StepSchedule


class NonFiniteIterateError(FloatingPointError):
    """An iterate became NaN/Inf; ``t`` is the 1-based iteration that produced it."""

    def __init__(self, t, algorithm):
        super().__init__(f"{algorithm}: non-finite iterate produced at iteration t={t}")
        self.t = t
        self.algorithm = algorithm


def _readonly(a):
    if a is None:
        return None
    a = np.asarray(a)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class TrialRecord:
    """Everything one run produced.

    ``gaps[t-1]`` is f(x_t) - f* for SMD and f(y_t) - f* for the accelerated
    method; ``divergences[t-1]`` is D(x*, x_{t+1}) (SMD) or D(x*, z_t).
    Iterate arrays are kept only when the noise is retained: for SMD
    ``xs[t-1] = x_t`` (t = 1..T+1); for the accelerated method ``xs[t]``,
    ``ys[t]``, ``zs[t]`` hold x_t, y_t, z_t for t = 0..T (``xs[0]`` = x_0).
    """
    algorithm: str
    seed: int
    gaps: np.ndarray
    divergences: np.ndarray
    etas: np.ndarray
    alphas: np.ndarray
    initial_divergence: float
    initial_gap: float
    output: np.ndarray
    output_gap: float
    average_gap: float
    last: np.ndarray
    noise: np.ndarray = field(default=None, repr=False)
    xs: np.ndarray = field(default=None, repr=False)
    ys: np.ndarray = field(default=None, repr=False)
    zs: np.ndarray = field(default=None, repr=False)

    @property
    def T(self):
        return len(self.gaps)

    @property
    def final_divergence(self):
        return float(self.divergences[-1])

    def same_as(self, other):
        """Bitwise equality of every recorded array and scalar."""
        for name in self.__dataclass_fields__:
            a, b = getattr(self, name), getattr(other, name)
            if isinstance(a, np.ndarray) or isinstance(b, np.ndarray):
                if a is None or b is None or a.shape != b.shape:
                    return False
                if a.tobytes() != b.tobytes():
                    return False
            elif a != b and not (a != a and b != b):
                return False
        return True


def _prepare(problem, mirror, start, noise, T):
    if mirror != problem.domain:
        raise ValueError("mirror map domain does not match the problem domain")
    start = mirror.check_point(start, "initial point")
    if noise.dim != problem.dim:
        raise ValueError("noise dimension does not match problem")
    if T < 1:
        raise ValueError("T must be positive")
    return start


def _draw(noise, rng, T, xi):
    if xi is not None:
        xi = np.ascontiguousarray(xi, dtype=float)
        if xi.shape != (T, noise.dim):
            raise ValueError(f"replayed noise must have shape {(T, noise.dim)}")
        return xi
    return np.ascontiguousarray(noise.sample(rng, T))


def _seed_of(rng):
    return int(rng) if isinstance(rng, (int, np.integer)) else -1


def run_smd(problem, mirror, schedule, T, x1, rng, retain_noise=False, *, noise,
            xi=None, backend=None):
    """Algorithm: x_{t+1} = prox(x_t, grad f(x_t) + xi_t, eta_t); returns the average x_1..x_T.

    ``rng`` is a ``numpy.random.Generator`` or an integer seed.  Passing
    ``xi`` (shape (T, d)) replays a stored noise sequence instead of drawing.
    """
    if schedule.convention != "smd":
        raise ValueError("run_smd needs a fixed or invsqrt schedule")
    x1 = _prepare(problem, mirror, x1, noise, T)
    seed = _seed_of(rng)
    xi = _draw(noise, as_generator(rng) if xi is None else None, T, xi)
    etas = schedule.etas(T)
    k = get_kernels(backend)
    pcode, xstar, A, rows, offs, G, fstar = problem.kernel_args()
    mcode, lo, hi = mirror.kernel_args()
    gaps, divs, xs, xbar, xlast, status = k.smd_loop(
        pcode, xstar, A, rows, offs, G, fstar, mcode, lo, hi, x1, etas, xi,
        bool(retain_noise))
    if status >= 0:
        raise NonFiniteIterateError(status + 1, "smd")
    if mirror.kind == "entropy":
        xbar = xbar / xbar.sum()
    out_gap = float(k.f_value(pcode, xbar, xstar, A, rows, offs, G) - fstar)
    return TrialRecord(
        algorithm="smd", seed=seed, gaps=_readonly(gaps), divergences=_readonly(divs),
        etas=_readonly(etas), alphas=None,
        initial_divergence=bregman(mirror, problem.xstar, x1),
        initial_gap=float(gaps[0]), output=_readonly(xbar), output_gap=out_gap,
        average_gap=float(np.mean(gaps)), last=_readonly(xlast),
        noise=_readonly(xi) if retain_noise else None,
        xs=_readonly(xs) if retain_noise else None)


def run_asmd(problem, mirror, eta, T, x0, rng, retain_noise=False, *, noise,
             xi=None, backend=None):
    """Accelerated SMD with alpha_t = 2/(t+1), eta_t = t * eta; returns y_T."""
    schedule = StepSchedule("accelerated", eta)
    if problem.beta > 0 and eta > 1.0 / (4.0 * problem.beta):
        warnings.warn(f"eta={eta:g} exceeds 1/(4 beta)={1 / (4 * problem.beta):g}",
                      RuntimeWarning, stacklevel=2)
    x0 = _prepare(problem, mirror, x0, noise, T)
    seed = _seed_of(rng)
    xi = _draw(noise, as_generator(rng) if xi is None else None, T, xi)
    k = get_kernels(backend)
    pcode, xstar, A, rows, offs, G, fstar = problem.kernel_args()
    mcode, lo, hi = mirror.kernel_args()
    gaps, divs, xs, ys, zs, y, status = k.asmd_loop(
        pcode, xstar, A, rows, offs, G, fstar, mcode, lo, hi, x0, float(eta), xi,
        bool(retain_noise))
    if status >= 0:
        raise NonFiniteIterateError(status + 1, "asmd")
    keep = bool(retain_noise)
    return TrialRecord(
        algorithm="asmd", seed=seed, gaps=_readonly(gaps), divergences=_readonly(divs),
        etas=_readonly(schedule.etas(T)), alphas=_readonly(schedule.alphas(T)),
        initial_divergence=bregman(mirror, problem.xstar, x0),
        initial_gap=float(k.f_value(pcode, x0, xstar, A, rows, offs, G) - fstar),
        output=_readonly(y), output_gap=float(gaps[-1]), average_gap=float(np.mean(gaps)),
        last=_readonly(y.copy()),
        noise=_readonly(xi) if keep else None,
        xs=_readonly(xs) if keep else None, ys=_readonly(ys) if keep else None,
        zs=_readonly(zs) if keep else None)


def replay(record, problem, mirror, start, schedule=None, backend=None):
    """Re-run a retained trajectory from its stored noise."""
    if record.noise is None:
        raise ValueError("record was produced without retained noise")
    noise = NoiseModel("gaussian", problem.dim, 0.0)  # only the dimension is used
    if record.algorithm == "smd":
        return run_smd(problem, mirror, schedule, record.T, start, record.seed, True,
                       noise=noise, xi=record.noise, backend=backend)
    return run_asmd(problem, mirror, record.etas[0], record.T, start, record.seed, True,
                    noise=noise, xi=record.noise, backend=backend)
