import os
import random
import subprocess
import sys

import numpy as np
import pytest

from seppoisson import _kernels
from seppoisson._accel import ENV_FLAG, HAVE_NUMBA
from seppoisson.darboux import build_darboux

from conftest import random_structure


def _data(seed, n=5, m=40):
    rng = random.Random(seed)
    np_rng = np.random.default_rng(seed)
    s = random_structure(rng, n)
    X = s.domain.sample(m, np_rng)
    return s, X, s.phi_batch(X), s.dphi_batch(X)


@pytest.mark.parametrize("seed", range(5))
def test_numba_and_numpy_agree(seed):
    s, X, phi, dphi = _data(seed, n=2 + seed)
    A = s.A_float
    fast, ref = _kernels.numba_impl, _kernels.numpy_impl
    J1, J2 = fast["structure"](A, phi), ref["structure"](A, phi)
    assert np.allclose(J1, J2, rtol=1e-14, atol=0)
    d1, d2 = fast["separable_derivative"](A, phi, dphi), ref["separable_derivative"](A, phi, dphi)
    assert np.allclose(d1, d2, rtol=1e-14, atol=0)
    r1, r2 = fast["jacobi_residual"](J1, d1), ref["jacobi_residual"](J2, d2)
    assert np.allclose(r1, r2, rtol=0, atol=1e-13)
    t = build_darboux(s)
    c1 = fast["transformed_defect"](t.P_float, A, phi, t.canonical_float)
    c2 = ref["transformed_defect"](t.P_float, A, phi, t.canonical_float)
    # both are rounding noise; summation order differs between backends
    assert c1.max() <= 1e-10 and c2.max() <= 1e-10
    assert np.allclose(c1, c2, rtol=0, atol=1e-11)


def test_derivative_kernel_matches_finite_differences():
    s, X, phi, dphi = _data(42, n=4, m=5)
    dJ = _kernels.separable_derivative_batch(s.A_float, phi, dphi)
    h = 1e-6
    for p, x in enumerate(X):
        for l in range(s.n):
            xp, xm = x.copy(), x.copy()
            xp[l] += h
            xm[l] -= h
            if not (s.domain.contains(xp) and s.domain.contains(xm)):
                continue
            fd = (s.matrix(xp) - s.matrix(xm)) / (2 * h)
            assert np.allclose(dJ[p, l], fd, rtol=1e-6, atol=1e-8)


def test_non_jacobi_residual_detected():
    # J = [[0, x3, x2], ...] built by hand; residual at (1,2,3) is 2
    x = np.array([1.0, 2.0, 3.0])
    J = np.zeros((1, 3, 3))
    J[0, 0, 1], J[0, 0, 2], J[0, 1, 2] = x[2], x[1], x[2]
    J[0] -= J[0].T
    dJ = np.zeros((1, 3, 3, 3))
    dJ[0, 2, 0, 1] = dJ[0, 1, 0, 2] = dJ[0, 2, 1, 2] = 1.0
    dJ[0] -= np.transpose(dJ[0], (0, 2, 1))
    for impl in (_kernels.numba_impl, _kernels.numpy_impl):
        assert impl["jacobi_residual"](J, dJ)[0] == pytest.approx(2.0)


def _active_backend(flag):
    env = dict(os.environ)
    env.pop(ENV_FLAG, None)
    if flag is not None:
        env[ENV_FLAG] = flag
    code = (
        "from seppoisson import _kernels, _accel;"
        "print('numba' if _kernels._active is _kernels.numba_impl else 'numpy', _accel.USE_NUMBA)"
    )
    proc = subprocess.run([sys.executable, "-c", code], capture_output=True, text=True, env=env, check=True)
    return proc.stdout.split()


def test_env_flag_selects_numpy():
    assert _active_backend("1") == ["numpy", "False"]
    assert _active_backend("0")[0] == ("numba" if HAVE_NUMBA else "numpy")


def test_env_flag_full_run():
    env = dict(os.environ, **{ENV_FLAG: "1"})
    proc = subprocess.run(
        [sys.executable, "-m", "seppoisson", "verify", "--model", "toda", "--samples", "10"],
        capture_output=True, text=True, env=env,
    )
    assert proc.returncode == 0
    assert "result: PASS" in proc.stdout
