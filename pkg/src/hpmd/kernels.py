"""Inner iteration loops for both optimizers.

The loops are written once.  ``numpy_kernels`` runs them as ordinary Python
over numpy arrays; ``numba_kernels`` compiles the same functions with
``numba.njit`` (helpers are ``register_jitable`` so they stay callable from
Python).  ``active`` is the numba build unless ``HPMD_DISABLE_NUMBA=1`` is set
or numba is missing.

Problems and mirror maps are passed in flattened form (integer kind code plus
parameter arrays) so the loops can be compiled in nopython mode; see
``Problem.kernel_args`` and ``MirrorMap.kernel_args``.
"""
import os
from types import SimpleNamespace

import numpy as np

try:
    import numba
    import numba.extending
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

# problem kind codes
LIPSCHITZ_NORM = 0
PIECEWISE_MAX = 1
QUADRATIC = 2
COMPOSITE = 3

# mirror map kind codes
EUCLIDEAN = 0
BOX = 1
ENTROPY = 2

ENTROPY_FLOOR = 1e-300

if numba is not None:
    # callable as plain Python, inlined when called from compiled code
    _jitable = numba.extending.register_jitable
else:  # pragma: no cover
    def _jitable(fn):
        return fn

NUMBA_DISABLED = os.environ.get("HPMD_DISABLE_NUMBA", "").strip().lower() in {
    "1", "true", "yes", "on"}
HAVE_NUMBA = numba is not None
USE_NUMBA = HAVE_NUMBA and not NUMBA_DISABLED


@_jitable
def f_value(pcode, x, xstar, A, rows, offs, G):
    if pcode == PIECEWISE_MAX:
        return np.max(np.dot(rows, x) + offs)
    v = x - xstar
    if pcode == LIPSCHITZ_NORM:
        return G * np.sqrt(np.sum(v * v))
    quad = 0.5 * np.dot(v, np.dot(A, v))
    if pcode == QUADRATIC:
        return quad
    return quad + G * np.sqrt(np.sum(v * v))


@_jitable
def f_grad(pcode, x, xstar, A, rows, offs, G):
    if pcode == PIECEWISE_MAX:
        # np.argmax returns the lowest index among ties
        return rows[np.argmax(np.dot(rows, x) + offs)].copy()
    v = x - xstar
    if pcode == QUADRATIC:
        return np.dot(A, v)
    nrm = np.sqrt(np.sum(v * v))
    if nrm > 0.0:
        g = (G / nrm) * v
    else:
        g = np.zeros_like(v)
    if pcode == COMPOSITE:
        g = g + np.dot(A, v)
    return g


@_jitable
def prox(mcode, x, g, eta, lo, hi):
    if eta == 0.0:
        return x.copy()
    if mcode == EUCLIDEAN:
        return x - eta * g
    if mcode == BOX:
        return np.minimum(np.maximum(x - eta * g, lo), hi)
    logu = np.log(np.maximum(x, ENTROPY_FLOOR)) - eta * g
    u = np.exp(logu - np.max(logu))
    u = u / np.sum(u)
    u = np.minimum(np.maximum(u, ENTROPY_FLOOR), 1.0)
    return u / np.sum(u)


@_jitable
def bregman(mcode, x, y):
    if mcode != ENTROPY:
        v = x - y
        return 0.5 * np.sum(v * v)
    s = 0.0
    for i in range(x.shape[0]):
        if x[i] > 0.0:
            s += x[i] * np.log(x[i] / y[i])
        s += y[i] - x[i]
    return s


def _smd_loop(pcode, xstar, A, rows, offs, G, fstar,
              mcode, lo, hi, x1, etas, noise, store):
    T, d = noise.shape
    gaps = np.full(T, np.nan)
    divs = np.full(T, np.nan)
    xs = np.empty((T + 1 if store else 0, d))
    xsum = np.zeros(d)
    x = x1.copy()
    status = -1
    for t in range(T):
        if store:
            xs[t] = x
        gaps[t] = f_value(pcode, x, xstar, A, rows, offs, G) - fstar
        xsum += x
        g = f_grad(pcode, x, xstar, A, rows, offs, G) + noise[t]
        x = prox(mcode, x, g, etas[t], lo, hi)
        if not np.all(np.isfinite(x)):
            status = t
            break
        divs[t] = bregman(mcode, xstar, x)
    if store and status < 0:
        xs[T] = x
    return gaps, divs, xs, xsum / T, x, status


def _asmd_loop(pcode, xstar, A, rows, offs, G, fstar,
               mcode, lo, hi, x0, eta, noise, store):
    T, d = noise.shape
    gaps = np.full(T, np.nan)
    divs = np.full(T, np.nan)
    n_store = T + 1 if store else 0
    xs = np.empty((n_store, d))
    ys = np.empty((n_store, d))
    zs = np.empty((n_store, d))
    y = x0.copy()
    z = x0.copy()
    if store:
        xs[0] = x0
        ys[0] = x0
        zs[0] = x0
    status = -1
    for t in range(1, T + 1):
        alpha = 2.0 / (t + 1.0)
        eta_t = t * eta
        x = (1.0 - alpha) * y + alpha * z
        g = f_grad(pcode, x, xstar, A, rows, offs, G) + noise[t - 1]
        z = prox(mcode, z, g, eta_t, lo, hi)
        y = (1.0 - alpha) * y + alpha * z
        if not (np.all(np.isfinite(z)) and np.all(np.isfinite(y))):
            status = t - 1
            break
        gaps[t - 1] = f_value(pcode, y, xstar, A, rows, offs, G) - fstar
        divs[t - 1] = bregman(mcode, xstar, z)
        if store:
            xs[t] = x
            ys[t] = y
            zs[t] = z
    return gaps, divs, xs, ys, zs, y, status


numpy_kernels = SimpleNamespace(f_value=f_value, f_grad=f_grad, prox=prox, bregman=bregman,
                                smd_loop=_smd_loop, asmd_loop=_asmd_loop)

if HAVE_NUMBA:
    _njit = numba.njit(cache=True, nogil=True)
    numba_kernels = SimpleNamespace(
        f_value=_njit(f_value), f_grad=_njit(f_grad), prox=_njit(prox),
        bregman=_njit(bregman), smd_loop=_njit(_smd_loop), asmd_loop=_njit(_asmd_loop))
else:  # pragma: no cover
    numba_kernels = None

active = numba_kernels if USE_NUMBA else numpy_kernels


def get_kernels(backend=None):
    """Return the kernel namespace for ``backend`` ('numba', 'numpy' or None=default)."""
    if backend is None:
        return active
    if backend == "numpy":
        return numpy_kernels
    if backend == "numba":
        if numba_kernels is None:
            raise RuntimeError("numba is not installed")
        return numba_kernels
    raise ValueError(f"unknown backend {backend!r}")
