"""Bregman geometry: mirror maps, divergences and the constrained prox step.

Three maps are supported:

* ``euclidean`` -- psi(x) = 0.5 ||x||_2^2 over R^d, paired with the l2 norm;
* ``box`` -- the same psi restricted to an axis-aligned box ``[lo, hi]``;
* ``entropy`` -- negative entropy sum_i x_i log x_i over the probability
  simplex, paired with the l1 norm (strong convexity is Pinsker's inequality).

Each map is 1-strongly convex with respect to its paired norm, so
``bregman(m, x, y) >= 0.5 * m.norm(x - y) ** 2``.
"""
from dataclasses import dataclass, field

import numpy as np

from . import kernels

SIMPLEX_SUM_TOL = 1e-9
NEG_TOL = 1e-12
BOX_TOL = 1e-12


class DomainError(ValueError):
    """A point lies outside the domain of a mirror map."""


@dataclass(frozen=True, eq=False)
class MirrorMap:
    kind: str
    dim: int
    lo: np.ndarray = field(default=None, repr=False)
    hi: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind not in ("euclidean", "box", "entropy"):
            raise ValueError(f"unknown mirror map kind {self.kind!r}")
        if int(self.dim) < 1:
            raise ValueError("dimension must be positive")
        object.__setattr__(self, "dim", int(self.dim))
        if self.kind == "box":
            lo = np.broadcast_to(np.asarray(self.lo, dtype=float), (self.dim,)).copy()
            hi = np.broadcast_to(np.asarray(self.hi, dtype=float), (self.dim,)).copy()
            if not np.all(lo <= hi):
                raise ValueError("box needs lo <= hi componentwise")
            lo.flags.writeable = False
            hi.flags.writeable = False
            object.__setattr__(self, "lo", lo)
            object.__setattr__(self, "hi", hi)
        else:
            object.__setattr__(self, "lo", None)
            object.__setattr__(self, "hi", None)

    @classmethod
    def euclidean(cls, dim):
        return cls("euclidean", dim)

    @classmethod
    def box(cls, dim, lo, hi):
        return cls("box", dim, lo, hi)

    @classmethod
    def entropy(cls, dim):
        return cls("entropy", dim)

    def __eq__(self, other):
        if not isinstance(other, MirrorMap):
            return NotImplemented
        if (self.kind, self.dim) != (other.kind, other.dim):
            return False
        if self.kind == "box":
            return bool(np.array_equal(self.lo, other.lo) and np.array_equal(self.hi, other.hi))
        return True

    def __hash__(self):
        return hash((self.kind, self.dim))

    @property
    def code(self):
        return {"euclidean": kernels.EUCLIDEAN, "box": kernels.BOX,
                "entropy": kernels.ENTROPY}[self.kind]

    def kernel_args(self):
        """(code, lo, hi) in the layout expected by ``hpmd.kernels``."""
        if self.kind == "box":
            return self.code, self.lo, self.hi
        empty = np.zeros(self.dim)
        return self.code, empty, empty

    # norms -------------------------------------------------------------
    def norm(self, v):
        """Primal norm the map is 1-strongly convex against."""
        v = np.asarray(v, dtype=float)
        if self.kind == "entropy":
            return float(np.sum(np.abs(v)))
        return float(np.sqrt(np.sum(v * v)))

    def dual_norm(self, v):
        v = np.asarray(v, dtype=float)
        if self.kind == "entropy":
            return float(np.max(np.abs(v)))
        return float(np.sqrt(np.sum(v * v)))

    # domain ------------------------------------------------------------
    def check_point(self, x, name="x"):
        """Validate ``x`` and return it as a float array inside the domain.

        Simplex points within the membership tolerance are clipped at zero
        and renormalized; box points within ``BOX_TOL`` are clamped.
        """
        x = np.array(x, dtype=float)
        if x.shape != (self.dim,):
            raise DomainError(f"{name} has shape {x.shape}, expected ({self.dim},)")
        if not np.all(np.isfinite(x)):
            raise DomainError(f"{name} has non-finite entries")
        if self.kind == "entropy":
            if np.min(x) < -NEG_TOL:
                raise DomainError(f"{name} has negative entries (min {np.min(x):.3g})")
            if abs(np.sum(x) - 1.0) > SIMPLEX_SUM_TOL:
                raise DomainError(f"{name} is off the simplex (sum {np.sum(x)!r})")
            x = np.maximum(x, 0.0)
            x /= np.sum(x)
        elif self.kind == "box":
            if np.any(x < self.lo - BOX_TOL) or np.any(x > self.hi + BOX_TOL):
                raise DomainError(f"{name} is outside the box")
            x = np.clip(x, self.lo, self.hi)
        return x

    def contains(self, x):
        try:
            self.check_point(x)
        except DomainError:
            return False
        return True

    def psi(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "entropy":
            pos = x > 0
            return float(np.sum(x[pos] * np.log(x[pos])))
        return 0.5 * float(np.sum(x * x))

    def grad_psi(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "entropy":
            return np.log(x) + 1.0
        return x.copy()

    def random_point(self, rng, scale=1.0, interior=True):
        """Draw a domain point (used by property tests and problem builders)."""
        if self.kind == "entropy":
            x = rng.dirichlet(np.ones(self.dim))
            if interior:
                x = np.maximum(x, 1e-8)
                x /= x.sum()
            return x
        if self.kind == "box":
            return rng.uniform(self.lo, self.hi)
        return scale * rng.standard_normal(self.dim)

    def radius_from(self, center):
        """sup over the domain of ||x - center||_2 (inf on R^d)."""
        center = np.asarray(center, dtype=float)
        if self.kind == "euclidean":
            return float("inf")
        if self.kind == "box":
            far = np.maximum(np.abs(self.lo - center), np.abs(self.hi - center))
            return float(np.sqrt(np.sum(far * far)))
        # convex in x, so the max over the simplex sits at a vertex
        eye = np.eye(self.dim)
        return float(np.max(np.sqrt(np.sum((eye - center) ** 2, axis=1))))

    def diameter_l2(self):
        if self.kind == "euclidean":
            return float("inf")
        if self.kind == "box":
            return float(np.sqrt(np.sum((self.hi - self.lo) ** 2)))
        return float(np.sqrt(2.0)) if self.dim > 1 else 0.0


def bregman(mirror, x, y):
    """D_psi(x, y) = psi(x) - psi(y) - <grad psi(y), x - y>."""
    x = mirror.check_point(x, "x")
    y = mirror.check_point(y, "y")
    if mirror.kind != "entropy":
        v = x - y
        return 0.5 * float(np.dot(v, v))
    if np.any(y <= 0.0):
        raise DomainError("entropy divergence undefined: y has a zero component")
    pos = x > 0
    # generalized KL; the trailing terms cancel on the simplex up to rounding
    return float(np.sum(x[pos] * np.log(x[pos] / y[pos])) + np.sum(y) - np.sum(x))


def prox_step(mirror, x, g, eta):
    """argmin_u  eta <g, u> + D_psi(u, x)  over the domain of ``mirror``."""
    x = mirror.check_point(x, "x")
    g = np.asarray(g, dtype=float)
    if g.shape != x.shape:
        raise ValueError(f"gradient shape {g.shape} does not match point {x.shape}")
    if not np.all(np.isfinite(g)):
        raise ValueError("gradient has non-finite entries")
    if eta < 0:
        raise ValueError("step size must be nonnegative")
    if eta == 0:
        return x
    if mirror.kind == "euclidean":
        return x - eta * g
    if mirror.kind == "box":
        return np.clip(x - eta * g, mirror.lo, mirror.hi)
    # multiplicative weights update, evaluated in the log domain
    logu = np.log(np.maximum(x, kernels.ENTROPY_FLOOR)) - eta * g
    u = np.exp(logu - logu.max())
    u /= u.sum()
    u = np.clip(u, kernels.ENTROPY_FLOOR, 1.0)
    return u / u.sum()


def bregman_rows(mirror, x, Y):
    """D_psi(x, y) for every row y of ``Y`` (no domain validation)."""
    x = np.asarray(x, dtype=float)
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    if mirror.kind != "entropy":
        V = Y - x
        return 0.5 * np.sum(V * V, axis=1)
    pos = x > 0
    kl = np.sum(x[pos] * (np.log(x[pos]) - np.log(Y[:, pos])), axis=1)
    return kl + np.sum(Y, axis=1) - np.sum(x)


def dual_norm_rows(mirror, V):
    V = np.atleast_2d(np.asarray(V, dtype=float))
    if mirror.kind == "entropy":
        return np.max(np.abs(V), axis=1)
    return np.sqrt(np.sum(V * V, axis=1))
