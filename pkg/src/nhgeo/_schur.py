"""Dense complex Schur decomposition kernels.

Pipeline: Householder reduction to upper Hessenberg form, explicit
single-shift QR iteration with Wilkinson shifts and Givens rotations,
then right eigenvectors by back-substitution on the triangular factor.
Everything operates on complex128 arrays and is numba-compilable; with
``NHGEO_NUMBA=0`` the same loops run interpreted.
"""

import numpy as np

from ._backend import njit

_EPS = 2.220446049250313e-16


@njit
def hessenberg_reduce(A):
    """Return (H, Q) with A = Q H Q^dag, H upper Hessenberg, Q unitary."""
    n = A.shape[0]
    H = A.copy()
    Q = np.eye(n, dtype=np.complex128)
    v = np.zeros(n, dtype=np.complex128)
    for j in range(n - 2):
        nx2 = 0.0
        for i in range(j + 1, n):
            nx2 += H[i, j].real ** 2 + H[i, j].imag ** 2
        nx = np.sqrt(nx2)
        if nx < 1e-300:
            continue
        a0 = H[j + 1, j]
        ph = a0 / abs(a0) if abs(a0) > 0.0 else 1.0 + 0.0j
        nv2 = 0.0
        for i in range(j + 1, n):
            v[i] = H[i, j]
        v[j + 1] += ph * nx
        for i in range(j + 1, n):
            nv2 += v[i].real ** 2 + v[i].imag ** 2
        nv = np.sqrt(nv2)
        if nv < 1e-300:
            continue
        for i in range(j + 1, n):
            v[i] /= nv
        # H <- P H, rows j+1.. , columns j..
        for col in range(j, n):
            acc = 0.0 + 0.0j
            for i in range(j + 1, n):
                acc += np.conj(v[i]) * H[i, col]
            for i in range(j + 1, n):
                H[i, col] -= 2.0 * v[i] * acc
        # H <- H P, columns j+1..
        for row in range(n):
            acc = 0.0 + 0.0j
            for i in range(j + 1, n):
                acc += H[row, i] * v[i]
            for i in range(j + 1, n):
                H[row, i] -= 2.0 * acc * np.conj(v[i])
        # Q <- Q P
        for row in range(n):
            acc = 0.0 + 0.0j
            for i in range(j + 1, n):
                acc += Q[row, i] * v[i]
            for i in range(j + 1, n):
                Q[row, i] -= 2.0 * acc * np.conj(v[i])
    return H, Q


@njit
def qr_iterate(T, Z, maxiter_per_eig):
    """In-place shifted QR on Hessenberg T, accumulating into Z.

    Returns 0 on success, or 1 + index of the eigenvalue that failed to
    converge.
    """
    n = T.shape[0]
    cs = np.zeros(n, dtype=np.float64)
    sn = np.zeros(n, dtype=np.complex128)
    hi = n - 1
    while hi > 0:
        its = 0
        while True:
            lo = hi
            while lo > 0:
                s = abs(T[lo - 1, lo - 1]) + abs(T[lo, lo])
                if s == 0.0:
                    s = 1.0
                if abs(T[lo, lo - 1]) <= _EPS * s:
                    T[lo, lo - 1] = 0.0
                    break
                lo -= 1
            if lo == hi:
                hi -= 1
                break
            if its >= maxiter_per_eig:
                return 1 + hi
            its += 1
            # Wilkinson shift from the trailing 2x2 block
            a = T[hi - 1, hi - 1]
            b = T[hi - 1, hi]
            c = T[hi, hi - 1]
            d = T[hi, hi]
            tr = a + d
            disc = np.sqrt(tr * tr - 4.0 * (a * d - b * c))
            l1 = 0.5 * (tr + disc)
            l2 = 0.5 * (tr - disc)
            mu = l1 if abs(l1 - d) <= abs(l2 - d) else l2
            if its % 11 == 0:
                mu = d + 1.5 * abs(T[hi, hi - 1])  # exceptional shift
            for i in range(lo, hi + 1):
                T[i, i] -= mu
            # QR factorization of the shifted Hessenberg block (left Givens)
            for i in range(lo, hi):
                x = T[i, i]
                y = T[i + 1, i]
                ax = abs(x)
                ay = abs(y)
                if ay == 0.0:
                    c_ = 1.0
                    s_ = 0.0 + 0.0j
                elif ax == 0.0:
                    c_ = 0.0
                    s_ = np.conj(y) / ay
                else:
                    r = np.hypot(ax, ay)
                    c_ = ax / r
                    s_ = (x / ax) * np.conj(y) / r
                cs[i - lo] = c_
                sn[i - lo] = s_
                for jj in range(i, n):
                    ti = T[i, jj]
                    ti1 = T[i + 1, jj]
                    T[i, jj] = c_ * ti + s_ * ti1
                    T[i + 1, jj] = -np.conj(s_) * ti + c_ * ti1
            # multiply by Q on the right (column rotations), accumulate Z
            for i in range(lo, hi):
                c_ = cs[i - lo]
                s_ = sn[i - lo]
                top = min(i + 2, hi) + 1
                for jj in range(top):
                    ti = T[jj, i]
                    ti1 = T[jj, i + 1]
                    T[jj, i] = c_ * ti + np.conj(s_) * ti1
                    T[jj, i + 1] = -s_ * ti + c_ * ti1
                for jj in range(n):
                    zi = Z[jj, i]
                    zi1 = Z[jj, i + 1]
                    Z[jj, i] = c_ * zi + np.conj(s_) * zi1
                    Z[jj, i + 1] = -s_ * zi + c_ * zi1
            for i in range(lo, hi + 1):
                T[i, i] += mu
    return 0


@njit
def triangular_eigvecs(T, Z):
    """Right eigenvectors from the Schur form: columns of Z Y where
    (T - T[j,j]) y_j = 0 is solved by back-substitution."""
    n = T.shape[0]
    tnorm = 0.0
    for i in range(n):
        for j in range(n):
            a = abs(T[i, j])
            if a > tnorm:
                tnorm = a
    smin = _EPS * (tnorm + 1e-300)
    Y = np.zeros((n, n), dtype=np.complex128)
    for j in range(n):
        lam = T[j, j]
        Y[j, j] = 1.0
        for i in range(j - 1, -1, -1):
            acc = 0.0 + 0.0j
            for kk in range(i + 1, j + 1):
                acc += T[i, kk] * Y[kk, j]
            d = T[i, i] - lam
            if abs(d) < smin:
                d = smin + 0.0j
            Y[i, j] = -acc / d
        nv2 = 0.0
        for i in range(j + 1):
            nv2 += Y[i, j].real ** 2 + Y[i, j].imag ** 2
        nv = np.sqrt(nv2)
        for i in range(j + 1):
            Y[i, j] /= nv
    V = Z @ Y
    for j in range(n):
        nv2 = 0.0
        for i in range(n):
            nv2 += V[i, j].real ** 2 + V[i, j].imag ** 2
        nv = np.sqrt(nv2)
        for i in range(n):
            V[i, j] /= nv
    return V


def schur_eig(A, maxiter_per_eig=40):
    """Eigenvalues and unit-norm right eigenvectors of a dense complex matrix.

    Raises ArithmeticError if the QR iteration stalls (does not happen for
    matrices with finite entries at desk scale; the bound is a safety net).
    """
    A = np.ascontiguousarray(A, dtype=np.complex128)
    T, Q = hessenberg_reduce(A)
    status = qr_iterate(T, Q, maxiter_per_eig)
    if status != 0:
        raise ArithmeticError(
            f"QR iteration failed to converge at eigenvalue index {status - 1}"
        )
    V = triangular_eigvecs(T, Q)
    return np.diag(T).copy(), V
