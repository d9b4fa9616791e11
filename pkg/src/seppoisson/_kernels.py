"""Batch numeric kernels over ``m`` sample points.

Each kernel exists twice: an explicit-loop version compiled with numba and a
vectorized NumPy version. ``USE_NUMBA`` picks the one exported under the
public name; both stay importable for tests and benchmarks.

Shapes: ``A`` is ``(n, n)``, ``phi``/``dphi`` are ``(m, n)``, ``J`` is
``(m, n, n)`` and ``dJ[p, l, j, k]`` holds ``d J^{jk} / d x^l`` at point ``p``.
"""
import numpy as np

from ._accel import USE_NUMBA, njit

# -- loop implementations (numba) ---------------------------------------------


@njit
def _structure_loops(A, phi):
    m, n = phi.shape
    out = np.zeros((m, n, n))
    for p in range(m):
        for i in range(n):
            for j in range(n):
                out[p, i, j] = A[i, j] * phi[p, i] * phi[p, j]
    return out


@njit
def _separable_derivative_loops(A, phi, dphi):
    m, n = phi.shape
    out = np.zeros((m, n, n, n))
    for p in range(m):
        for j in range(n):
            for k in range(n):
                a = A[j, k]
                if a == 0.0:
                    continue
                # only l == j and l == k survive the Kronecker deltas
                out[p, j, j, k] += a * dphi[p, j] * phi[p, k]
                out[p, k, j, k] += a * phi[p, j] * dphi[p, k]
    return out


@njit
def _jacobi_residual_loops(J, dJ):
    m, n, _ = J.shape
    out = np.zeros(m)
    for p in range(m):
        worst = 0.0
        for i in range(n):
            for j in range(i + 1, n):
                for k in range(j + 1, n):
                    s = 0.0
                    for l in range(n):
                        s += J[p, l, i] * dJ[p, l, j, k]
                        s += J[p, l, j] * dJ[p, l, k, i]
                        s += J[p, l, k] * dJ[p, l, i, j]
                    if abs(s) > worst:
                        worst = abs(s)
        out[p] = worst
    return out


@njit
def _transformed_defect_loops(P, A, phi, canonical):
    m, n = phi.shape
    out = np.zeros(m)
    D = np.empty((n, n))
    J = np.empty((n, n))
    T = np.empty((n, n))
    for p in range(m):
        for i in range(n):
            for j in range(n):
                D[i, j] = P[i, j] / phi[p, j]
                J[i, j] = A[i, j] * phi[p, i] * phi[p, j]
        for i in range(n):
            for l in range(n):
                s = 0.0
                for k in range(n):
                    s += D[i, k] * J[k, l]
                T[i, l] = s
        worst = 0.0
        for i in range(n):
            for j in range(n):
                s = 0.0
                for l in range(n):
                    s += T[i, l] * D[j, l]
                d = abs(s - canonical[i, j])
                if d > worst:
                    worst = d
        out[p] = worst
    return out


# -- numpy implementations ------------------------------------------------------


def _structure_numpy(A, phi):
    return A[None, :, :] * phi[:, :, None] * phi[:, None, :]


def _separable_derivative_numpy(A, phi, dphi):
    m, n = phi.shape
    eye = np.eye(n)
    # dJ[p,l,j,k] = A[j,k] (delta_lj dphi_j phi_k + delta_lk phi_j dphi_k)
    first = eye[None, :, :, None] * (dphi[:, None, :, None] * phi[:, None, None, :])
    second = eye[None, :, None, :] * (phi[:, None, :, None] * dphi[:, None, None, :])
    return A[None, None, :, :] * (first + second)


def _triples(n):
    return np.array([(i, j, k) for i in range(n) for j in range(i + 1, n) for k in range(j + 1, n)], dtype=np.intp).reshape(-1, 3)


def _jacobi_residual_numpy(J, dJ):
    m, n, _ = J.shape
    t = _triples(n)
    if len(t) == 0:
        return np.zeros(m)
    # full[p,i,j,k] = sum_l J[p,l,i] dJ[p,l,j,k]
    full = np.einsum("pli,pljk->pijk", J, dJ)
    i, j, k = t[:, 0], t[:, 1], t[:, 2]
    s = full[:, i, j, k] + full[:, j, k, i] + full[:, k, i, j]
    return np.abs(s).max(axis=1)


def _transformed_defect_numpy(P, A, phi, canonical):
    D = P[None, :, :] / phi[:, None, :]
    J = _structure_numpy(A, phi)
    T = D @ J @ np.transpose(D, (0, 2, 1))
    return np.abs(T - canonical[None, :, :]).max(axis=(1, 2))


numba_impl = {
    "structure": _structure_loops,
    "separable_derivative": _separable_derivative_loops,
    "jacobi_residual": _jacobi_residual_loops,
    "transformed_defect": _transformed_defect_loops,
}

numpy_impl = {
    "structure": _structure_numpy,
    "separable_derivative": _separable_derivative_numpy,
    "jacobi_residual": _jacobi_residual_numpy,
    "transformed_defect": _transformed_defect_numpy,
}

_active = numba_impl if USE_NUMBA else numpy_impl


def _f64(*arrays):
    return tuple(np.ascontiguousarray(a, dtype=np.float64) for a in arrays)


def structure_batch(A, phi):
    return _active["structure"](*_f64(A, phi))


def separable_derivative_batch(A, phi, dphi):
    return _active["separable_derivative"](*_f64(A, phi, dphi))


def jacobi_residual_batch(J, dJ):
    return _active["jacobi_residual"](*_f64(J, dJ))


def transformed_defect_batch(P, A, phi, canonical):
    return _active["transformed_defect"](*_f64(P, A, phi, canonical))
