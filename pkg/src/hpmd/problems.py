"""Test objectives with known minimizers and noisy gradient oracles.

Objectives
----------
``lipschitz_norm``  f(x) = G ||x - x*||_2
``piecewise_max``   f(x) = max_i <a_i, x> + b_i
``quadratic``       f(x) = 0.5 (x - x*)^T A (x - x*),  A symmetric PSD
``composite``       quadratic + G ||x - x*||_2

Noise families (all independent of the query point)
---------------------------------------------------
``gaussian``    iid N(0, s^2) coordinates
``sphere``      uniform on the radius-r sphere
``rademacher``  r * (random sign vector) / sqrt(d), so ||xi||_2 = r exactly
"""
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from ._mc import as_generator, mc_upper_check
from .mirror import MirrorMap

_KIND_CODES = {
    "lipschitz_norm": kernels.LIPSCHITZ_NORM,
    "piecewise_max": kernels.PIECEWISE_MAX,
    "quadratic": kernels.QUADRATIC,
    "composite": kernels.COMPOSITE,
}


class CertificationError(RuntimeError):
    """The subgaussian certifier could not bracket a valid sigma."""


class DegenerateNoiseWarning(UserWarning):
    pass


def _frozen(a):
    a = np.array(a, dtype=float)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class Problem:
    kind: str
    domain: MirrorMap
    xstar: np.ndarray
    G: float = 0.0
    A: np.ndarray = field(default=None, repr=False)
    rows: np.ndarray = field(default=None, repr=False)
    offsets: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind not in _KIND_CODES:
            raise ValueError(f"unknown problem kind {self.kind!r}")
        d = self.domain.dim
        object.__setattr__(self, "xstar", _frozen(self.domain.check_point(self.xstar, "xstar")))
        if self.G < 0:
            raise ValueError("G must be nonnegative")
        object.__setattr__(self, "G", float(self.G))
        if self.kind in ("quadratic", "composite"):
            A = np.array(self.A, dtype=float)
            if A.shape != (d, d):
                raise ValueError(f"A must be {d}x{d}")
            if not np.allclose(A, A.T, atol=1e-12):
                raise ValueError("A must be symmetric")
            A = 0.5 * (A + A.T)
            eig = np.linalg.eigvalsh(A)
            if eig[0] < -1e-10 * max(1.0, abs(eig[-1])):
                raise ValueError("A must be positive semidefinite")
            object.__setattr__(self, "A", _frozen(A))
            beta = float(max(eig[-1], 0.0))
        else:
            object.__setattr__(self, "A", None)
            beta = 0.0
        if self.kind == "piecewise_max":
            rows = np.array(self.rows, dtype=float)
            offs = np.array(self.offsets, dtype=float)
            if rows.ndim != 2 or rows.shape[1] != d or offs.shape != (rows.shape[0],):
                raise ValueError("rows must be (m, d) and offsets (m,)")
            object.__setattr__(self, "rows", _frozen(rows))
            object.__setattr__(self, "offsets", _frozen(offs))
            object.__setattr__(self, "G", float(np.max(np.linalg.norm(rows, axis=1))))
        else:
            object.__setattr__(self, "rows", None)
            object.__setattr__(self, "offsets", None)
        object.__setattr__(self, "_beta", beta)
        object.__setattr__(self, "_fstar", self._value(self.xstar))

    # constructors --------------------------------------------------------
    @classmethod
    def lipschitz_norm(cls, xstar, G, domain=None):
        xstar = np.asarray(xstar, dtype=float)
        return cls("lipschitz_norm", domain or MirrorMap.euclidean(xstar.size), xstar, G=G)

    @classmethod
    def quadratic(cls, A, xstar, domain=None):
        xstar = np.asarray(xstar, dtype=float)
        return cls("quadratic", domain or MirrorMap.euclidean(xstar.size), xstar, A=A)

    @classmethod
    def composite(cls, A, G, xstar, domain=None):
        xstar = np.asarray(xstar, dtype=float)
        return cls("composite", domain or MirrorMap.euclidean(xstar.size), xstar, G=G, A=A)

    @classmethod
    def piecewise_max(cls, rows, offsets, xstar, domain=None):
        xstar = np.asarray(xstar, dtype=float)
        return cls("piecewise_max", domain or MirrorMap.euclidean(xstar.size), xstar,
                   rows=rows, offsets=offsets)

    @classmethod
    def random_piecewise_max(cls, xstar, n_pieces, rng, domain=None):
        """Pieces that all vanish at ``xstar`` with 0 in the hull of their slopes.

        The last slope is minus the sum of the others, so the slopes average
        to zero and ``xstar`` is a global minimizer with f(xstar) = 0.
        """
        xstar = np.asarray(xstar, dtype=float)
        rng = as_generator(rng)
        if n_pieces < 2:
            raise ValueError("need at least two pieces")
        rows = rng.standard_normal((n_pieces - 1, xstar.size))
        rows = np.vstack([rows, -rows.sum(axis=0)])
        return cls.piecewise_max(rows, -rows @ xstar, xstar, domain)

    # properties ------------------------------------------------------------
    @property
    def dim(self):
        return self.domain.dim

    @property
    def beta(self):
        """Smoothness constant: largest eigenvalue of A (0 without a quadratic part)."""
        return self._beta

    @property
    def fstar(self):
        return self._fstar

    @property
    def code(self):
        return _KIND_CODES[self.kind]

    @property
    def grad_bound(self):
        """sup of ||grad f||_2 over the domain; inf for quadratics on R^d."""
        if self.kind in ("lipschitz_norm", "piecewise_max"):
            return self.G
        if self.beta == 0.0:
            return self.G
        return self.G + self.beta * self.domain.radius_from(self.xstar)

    @property
    def mixed_G(self):
        """Constant G' with f(y) <= f(x) + <g(x), y-x> + G'||y-x|| + beta/2 ||y-x||^2.

        A convex G-Lipschitz term only satisfies this with G' = 2G in
        general (take a kink between x and y); for the piecewise family the
        largest slope difference is used instead.
        """
        if self.kind == "quadratic":
            return 0.0
        if self.kind == "piecewise_max":
            diff = self.rows[:, None, :] - self.rows[None, :, :]
            return float(np.max(np.linalg.norm(diff, axis=2)))
        return 2.0 * self.G

    def kernel_args(self):
        """(code, xstar, A, rows, offsets, G, fstar) for ``hpmd.kernels``."""
        d = self.dim
        A = self.A if self.A is not None else np.zeros((0, 0))
        rows = self.rows if self.rows is not None else np.zeros((0, d))
        offs = self.offsets if self.offsets is not None else np.zeros(0)
        return (self.code, np.ascontiguousarray(self.xstar), np.ascontiguousarray(A),
                np.ascontiguousarray(rows), np.ascontiguousarray(offs), self.G, self.fstar)

    # evaluation -------------------------------------------------------------
    def _value(self, x):
        if self.kind == "piecewise_max":
            return float(np.max(self.rows @ x + self.offsets))
        v = x - self.xstar
        out = 0.0
        if self.kind in ("quadratic", "composite"):
            out += 0.5 * float(v @ self.A @ v)
        if self.kind in ("lipschitz_norm", "composite"):
            out += self.G * float(np.linalg.norm(v))
        return out

    def value(self, x):
        return self._value(self.domain.check_point(x))

    def values(self, X):
        """f at every row of ``X`` (no domain validation)."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self.kind == "piecewise_max":
            return np.max(X @ self.rows.T + self.offsets, axis=1)
        V = X - self.xstar
        out = np.zeros(len(X))
        if self.kind in ("quadratic", "composite"):
            out += 0.5 * np.einsum("ij,jk,ik->i", V, self.A, V)
        if self.kind in ("lipschitz_norm", "composite"):
            out += self.G * np.sqrt(np.sum(V * V, axis=1))
        return out

    def gap(self, x):
        return self.value(x) - self.fstar


def grad(problem, x):
    """A (sub)gradient of ``problem`` at ``x``; ties go to the lowest-index piece."""
    x = problem.domain.check_point(x)
    if problem.kind == "piecewise_max":
        return problem.rows[int(np.argmax(problem.rows @ x + problem.offsets))].copy()
    v = x - problem.xstar
    g = np.zeros_like(v)
    if problem.kind in ("quadratic", "composite"):
        g += problem.A @ v
    if problem.kind in ("lipschitz_norm", "composite"):
        nrm = np.linalg.norm(v)
        if nrm > 0:
            g += problem.G * v / nrm
    return g


@dataclass(frozen=True)
class NoiseModel:
    kind: str
    dim: int
    scale: float

    def __post_init__(self):
        if self.kind not in ("gaussian", "sphere", "rademacher"):
            raise ValueError(f"unknown noise kind {self.kind!r}")
        if not (math.isfinite(self.scale) and self.scale >= 0):
            raise ValueError("noise scale must be finite and nonnegative")
        object.__setattr__(self, "dim", int(self.dim))
        object.__setattr__(self, "scale", float(self.scale))

    @classmethod
    def gaussian(cls, dim, s):
        return cls("gaussian", dim, s)

    @classmethod
    def gaussian_with_sigma(cls, dim, sigma):
        """Gaussian noise scaled so its certified sigma is (up to bisection) ``sigma``."""
        return cls("gaussian", dim, sigma / _gaussian_sigma_factor(dim))

    @classmethod
    def sphere(cls, dim, r):
        return cls("sphere", dim, r)

    @classmethod
    def rademacher(cls, dim, r):
        return cls("rademacher", dim, r)

    @property
    def degenerate(self):
        return self.scale == 0.0

    def sample(self, rng, size=None):
        """Draw one vector (``size=None``) or a ``(size, dim)`` batch.

        A batch of n consumes the stream exactly like n single draws.
        """
        shape = (self.dim,) if size is None else (int(size), self.dim)
        if self.kind == "gaussian":
            return self.scale * rng.standard_normal(shape)
        if self.kind == "sphere":
            v = rng.standard_normal(shape)
            nrm = np.linalg.norm(v, axis=-1, keepdims=True)
            return self.scale * v / nrm
        signs = np.where(rng.random(shape) < 0.5, -1.0, 1.0)
        return (self.scale / np.sqrt(self.dim)) * signs

    def sample_norms(self, rng, n):
        return np.linalg.norm(self.sample(rng, n), axis=1)


def sample_stochastic_grad(problem, noise, x, rng):
    """grad f(x) + xi with xi drawn fresh from ``noise``."""
    if noise.dim != problem.dim:
        raise ValueError("noise dimension does not match problem")
    return grad(problem, x) + noise.sample(rng)


# subgaussian certification ------------------------------------------------

def gaussian_log_mgf(s, d, lam):
    """log E[exp(lam^2 ||xi||^2)] for xi ~ N(0, s^2 I_d); inf past the pole."""
    u = 2.0 * np.square(lam) * s * s
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(u < 1.0, -0.5 * d * np.log1p(-np.minimum(u, 1.0)), np.inf)
    return out


def _gaussian_grid_ok(s, d, sigma, n_grid):
    lam = np.linspace(1.0 / (sigma * n_grid), 1.0 / sigma, n_grid)
    return bool(np.all(gaussian_log_mgf(s, d, lam) <= lam * lam * sigma * sigma))


def _bisect_gaussian_sigma(s, d, n_grid=64, rtol=1e-13, max_iter=400):
    lo = math.sqrt(2.0) * s  # the MGF pole sits exactly at lambda = 1/sigma here
    hi = 2.0 * s * math.sqrt(d + 2.0)
    for _ in range(60):
        if _gaussian_grid_ok(s, d, hi, n_grid):
            break
        lo, hi = hi, 2.0 * hi
    else:
        raise CertificationError(f"no valid sigma found for gaussian s={s}, d={d}")
    for _ in range(max_iter):
        if hi - lo <= rtol * hi:
            break
        mid = 0.5 * (lo + hi)
        if _gaussian_grid_ok(s, d, mid, n_grid):
            hi = mid
        else:
            lo = mid
    else:
        raise CertificationError("bisection did not converge")
    if not _gaussian_grid_ok(s, d, hi, n_grid):
        raise CertificationError("bisection returned an invalid sigma")
    return hi


def _gaussian_sigma_factor(d):
    return _bisect_gaussian_sigma(1.0, int(d))


def certified_sigma(noise):
    """A sigma with E[exp(l^2 ||xi||^2)] <= exp(l^2 sigma^2) for |l| <= 1/sigma.

    Bounded families (||xi|| <= r) certify sigma = r directly.  For the
    Gaussian family the closed-form MGF is checked on a 64-point lambda grid
    and the smallest passing sigma is found by bisection; the returned value
    is the feasible end of the final bracket.  Zero noise returns the
    smallest positive normal float and emits ``DegenerateNoiseWarning``.
    """
    if noise.degenerate:
        warnings.warn("zero noise: certified sigma replaced by the smallest positive float",
                      DegenerateNoiseWarning, stacklevel=2)
        return float(np.finfo(float).tiny)
    if noise.kind in ("sphere", "rademacher"):
        return noise.scale
    return _bisect_gaussian_sigma(noise.scale, noise.dim)


@dataclass(frozen=True)
class SubgaussianReport:
    passed: bool
    sigma: float
    n_samples: int
    lambdas: list
    log_estimates: list
    log_bounds: list
    point_passed: list
    lemma2_log_estimate: float
    lemma2_passed: bool

    @property
    def failed_lambdas(self):
        return [lam for lam, ok in zip(self.lambdas, self.point_passed) if not ok]

    def to_dict(self):
        return {"check": "subgaussian", **self.__dict__, "failed_lambdas": self.failed_lambdas}


def check_subgaussian(noise, sigma, n_samples=100_000, lambda_grid_size=16, rng=0):
    """Monte Carlo check of the subgaussian MGF condition on ||xi||_2.

    For each lambda on an evenly spaced grid over (0, 1/sigma] the estimate
    of E[exp(lambda^2 ||xi||^2)] must not exceed exp(lambda^2 sigma^2) by
    more than three standard errors.  The consequence E[exp(||xi||^2 /
    sigma^2)] <= e is checked the same way.
    """
    if n_samples < 10_000:
        raise ValueError("n_samples must be at least 1e4")
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    rng = as_generator(rng)
    x2 = np.square(noise.sample_norms(rng, n_samples))
    lambdas = np.linspace(1.0 / (sigma * lambda_grid_size), 1.0 / sigma, lambda_grid_size)
    ests, bounds, oks = [], [], []
    for lam in lambdas:
        res = mc_upper_check(lam * lam * x2, lam * lam * sigma * sigma)
        ests.append(res.log_estimate)
        bounds.append(res.log_bound)
        oks.append(res.passed)
    lemma2 = mc_upper_check(x2 / (sigma * sigma), 1.0)
    return SubgaussianReport(
        passed=bool(all(oks) and lemma2.passed), sigma=float(sigma), n_samples=int(n_samples),
        lambdas=[float(v) for v in lambdas], log_estimates=ests, log_bounds=bounds,
        point_passed=oks, lemma2_log_estimate=lemma2.log_estimate,
        lemma2_passed=lemma2.passed)
