import os
import subprocess
import sys

import numpy as np
import pytest

from hpmd import kernels
from hpmd.algorithms import run_asmd, run_smd
from hpmd.mirror import MirrorMap
from hpmd.problems import NoiseModel, Problem
from hpmd.schedules import StepSchedule

pytestmark = pytest.mark.skipif(kernels.numba_kernels is None, reason="numba not installed")


def _cases():
    rng = np.random.default_rng(0)
    A = rng.normal(size=(3, 3))
    A = A @ A.T / 3
    out = []
    for m in (MirrorMap.euclidean(3), MirrorMap.box(3, -1.0, 1.0), MirrorMap.entropy(3)):
        xs = np.array([0.2, 0.3, 0.5]) if m.kind == "entropy" else np.array([0.1, -0.2, 0.3])
        start = np.full(3, 1 / 3) if m.kind == "entropy" else np.array([0.9, 0.9, -0.9])
        out += [(Problem.lipschitz_norm(xs, 1.5, m), start),
                (Problem.quadratic(A, xs, m), start),
                (Problem.composite(A, 0.4, xs, m), start),
                (Problem.random_piecewise_max(xs, 4, 1, m), start)]
    return out


CASES = _cases()


@pytest.mark.parametrize("case", range(len(CASES)))
def test_numba_and_numpy_agree(case):
    p, start = CASES[case]
    noise = NoiseModel.gaussian(3, 0.8)
    kw = dict(noise=noise)
    # Nonsmooth objectives amplify last-bit differences (the subgradient of a
    # norm flips direction near x*), so they are compared over a short horizon.
    T = 120 if p.kind == "quadratic" else 15
    a = run_smd(p, p.domain, StepSchedule("invsqrt", 0.2), T, start, 3, True,
                backend="numpy", **kw)
    b = run_smd(p, p.domain, StepSchedule("invsqrt", 0.2), T, start, 3, True,
                backend="numba", **kw)
    np.testing.assert_allclose(a.xs, b.xs, rtol=1e-11, atol=1e-13)
    np.testing.assert_allclose(a.gaps, b.gaps, rtol=1e-11, atol=1e-13)
    eta = 0.05 if p.beta == 0 else min(0.05, 1 / (4 * p.beta))
    a = run_asmd(p, p.domain, eta, T, start, 4, True, backend="numpy", **kw)
    b = run_asmd(p, p.domain, eta, T, start, 4, True, backend="numba", **kw)
    np.testing.assert_allclose(a.ys, b.ys, rtol=1e-11, atol=1e-13)
    np.testing.assert_allclose(a.divergences, b.divergences, rtol=1e-10, atol=1e-13)


def test_helper_kernels_agree():
    rng = np.random.default_rng(2)
    x, g = rng.dirichlet(np.ones(4)), rng.normal(size=4)
    lo = hi = np.zeros(4)
    for k in (kernels.numpy_kernels, kernels.numba_kernels):
        u = k.prox(kernels.ENTROPY, x, g, 0.7, lo, hi)
        assert u.sum() == pytest.approx(1.0)
        assert k.bregman(kernels.ENTROPY, x, u) >= 0
    np.testing.assert_allclose(kernels.numpy_kernels.prox(kernels.ENTROPY, x, g, 0.7, lo, hi),
                               kernels.numba_kernels.prox(kernels.ENTROPY, x, g, 0.7, lo, hi),
                               rtol=1e-13)


def test_backend_selection():
    assert kernels.get_kernels("numpy") is kernels.numpy_kernels
    assert kernels.get_kernels("numba") is kernels.numba_kernels
    assert kernels.get_kernels() is kernels.active
    with pytest.raises(ValueError):
        kernels.get_kernels("cuda")


def test_env_flag_disables_numba():
    env = dict(os.environ, HPMD_DISABLE_NUMBA="1")
    code = "from hpmd import kernels; print(kernels.active is kernels.numpy_kernels)"
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True,
                         check=True)
    assert out.stdout.strip() == "True"
