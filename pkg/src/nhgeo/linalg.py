"""Dense complex linear algebra for small non-Hermitian matrices.

Eigendecompositions come with both right and left eigenvectors in the
biorthogonal convention <L_n|R_m> = delta_nm: right vectors are unit-norm
columns, left vectors are columns of the inverse-adjoint of the right
matrix, so biorthonormality holds by construction and defectiveness shows
up as a large right-matrix condition number.

Eigenvalues are ordered by ascending real part, ties by ascending
imaginary part; this fixes band indexing for momentum scans.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _schur
from .errors import DefectiveMatrix

DEFAULT_COND_THRESHOLD = 1e10


@dataclass(frozen=True)
class EigenSystem:
    """Eigendecomposition H R = R diag(E), H^dag L = L diag(E*).

    Columns of `right`/`left` are the eigenvectors; `gramian` is the
    right-vector overlap matrix I_nm = <R_n|R_m> (Hermitian positive
    definite); `condition` is the 2-norm condition number of the right
    eigenvector matrix.
    """

    energies: np.ndarray
    right: np.ndarray
    left: np.ndarray
    condition: float
    gramian: np.ndarray = field(repr=False, default=None)

    @property
    def dim(self) -> int:
        return self.energies.shape[0]

    def gramian_inverse_diag(self) -> np.ndarray:
        """Diagonal of I^{-1}; equals <L_n|L_n> in this convention."""
        return np.einsum("ij,ij->j", self.left.conj(), self.left).real


def _order_by_energy(E, R):
    order = np.lexsort((E.imag, E.real))
    return E[order], R[:, order]


def _eig2_closed(H):
    """Stable closed-form eigendecomposition of one 2x2 complex matrix."""
    a, b = H[0, 0], H[0, 1]
    c, d = H[1, 0], H[1, 1]
    tr = a + d
    det = a * d - b * c
    disc = np.sqrt(tr * tr - 4.0 * det)
    # pick the root of larger magnitude first, recover the other via Vieta
    if abs(tr + disc) >= abs(tr - disc):
        l1 = 0.5 * (tr + disc)
    else:
        l1 = 0.5 * (tr - disc)
    l2 = det / l1 if abs(l1) > 0.0 else 0.5 * (tr - disc)
    E = np.array([l1, l2])
    scale = abs(a) + abs(b) + abs(c) + abs(d)
    R = np.zeros((2, 2), dtype=complex)
    for j, lam in enumerate(E):
        va = np.array([b, lam - a])
        vb = np.array([lam - d, c])
        na, nb = np.linalg.norm(va), np.linalg.norm(vb)
        if max(na, nb) <= 1e-14 * scale:
            # (near-)diagonal matrix: coordinate eigenvectors
            v = np.array([1.0, 0.0]) if abs(lam - a) <= abs(lam - d) else np.array([0.0, 1.0])
            if j == 1 and np.array_equal(v, R[:, 0].real):
                v = v[::-1].copy()
            R[:, j] = v
        else:
            R[:, j] = va / na if na >= nb else vb / nb
    return _order_by_energy(E, R)


def _eig2_batch(H):
    """Vectorized closed form for a stack of 2x2 matrices, shape (L, 2, 2).

    Returns (E, R, Lv, cond): energies (L, 2) ordered ascending, unit-norm
    right vectors (L, 2, 2), biorthonormal left vectors, condition numbers.
    """
    a, b = H[:, 0, 0], H[:, 0, 1]
    c, d = H[:, 1, 0], H[:, 1, 1]
    tr = a + d
    det = a * d - b * c
    disc = np.sqrt(tr * tr - 4.0 * det)
    plus = np.abs(tr + disc) >= np.abs(tr - disc)
    l1 = np.where(plus, 0.5 * (tr + disc), 0.5 * (tr - disc))
    safe = np.abs(l1) > 0.0
    l2 = np.where(safe, det / np.where(safe, l1, 1.0), 0.5 * (tr - disc))
    E = np.stack([l1, l2], axis=1)
    order = np.lexsort((E.imag, E.real), axis=1)
    E = np.take_along_axis(E, order, axis=1)

    L = H.shape[0]
    R = np.empty((L, 2, 2), dtype=complex)
    scale = np.abs(a) + np.abs(b) + np.abs(c) + np.abs(d)
    for j in range(2):
        lam = E[:, j]
        va = np.stack([b, lam - a], axis=1)
        vb = np.stack([lam - d, c], axis=1)
        na = np.linalg.norm(va, axis=1)
        nb = np.linalg.norm(vb, axis=1)
        use_a = na >= nb
        v = np.where(use_a[:, None], va, vb)
        nv = np.where(use_a, na, nb)
        tiny = nv <= 1e-14 * scale
        if np.any(tiny):
            # (near-)diagonal rows: coordinate eigenvectors, e1 then e2
            # (tiny for both columns only happens for scalar matrices)
            v[tiny] = 0.0
            v[tiny, j] = 1.0
            nv = np.where(tiny, 1.0, nv)
        R[:, :, j] = v / nv[:, None]

    detR = R[:, 0, 0] * R[:, 1, 1] - R[:, 0, 1] * R[:, 1, 0]
    g = np.einsum("lk,lk->l", R[:, :, 0].conj(), R[:, :, 1])
    gm = np.clip(np.abs(g), 0.0, 1.0 - 1e-300)
    cond = np.sqrt((1.0 + gm) / (1.0 - gm))
    bad = np.abs(detR) < 1e-300
    detR = np.where(bad, 1.0, detR)
    cond = np.where(bad, np.inf, cond)
    inv = np.empty_like(R)
    inv[:, 0, 0] = R[:, 1, 1] / detR
    inv[:, 0, 1] = -R[:, 0, 1] / detR
    inv[:, 1, 0] = -R[:, 1, 0] / detR
    inv[:, 1, 1] = R[:, 0, 0] / detR
    Lv = np.conj(np.transpose(inv, (0, 2, 1)))
    return E, R, Lv, cond


def eig_general(H, cond_threshold: float = DEFAULT_COND_THRESHOLD) -> EigenSystem:
    """General eigendecomposition with biorthonormal left/right vectors.

    Parameters
    ----------
    H : (n, n) array_like, complex
        Square matrix with finite entries, n up to desk scale (~64).
    cond_threshold : float
        Raise DefectiveMatrix when the right-eigenvector matrix condition
        number exceeds this value (proximity to an exceptional point).

    Notes
    -----
    dim 2 uses an analytic closed form; larger dims go through Hessenberg
    reduction plus shifted QR iteration (see `_schur`). The two paths are
    cross-checked in the test suite.
    """
    H = np.asarray(H, dtype=complex)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {H.shape}")
    if not (np.all(np.isfinite(H.real)) and np.all(np.isfinite(H.imag))):
        raise ValueError("matrix entries must be finite")
    n = H.shape[0]
    if n == 1:
        e = H[0, 0]
        one = np.ones((1, 1), dtype=complex)
        return EigenSystem(np.array([e]), one.copy(), one.copy(), 1.0, one.copy())
    if n == 2:
        E, R = _eig2_closed(H)
    else:
        E, R = _schur.schur_eig(H)
        E, R = _order_by_energy(E, R)

    cond = np.linalg.cond(R)
    if not np.isfinite(cond) or cond > cond_threshold:
        raise DefectiveMatrix(
            f"right-eigenvector matrix condition {cond:.3e} exceeds "
            f"{cond_threshold:.1e}; matrix is defective or near an "
            "exceptional point",
            condition=float(cond),
        )
    left = np.linalg.inv(R).conj().T
    gram = R.conj().T @ R
    return EigenSystem(E, R, left, float(cond), gram)


def evolution_operator(es: EigenSystem, t: float) -> np.ndarray:
    """U(t) = R diag(exp(-i E t)) L^dag; reduces to exp(-i t H)."""
    phases = np.exp(-1j * es.energies * t)
    return (es.right * phases[None, :]) @ es.left.conj().T


def apply_adjoint_evolution(es: EigenSystem, t: float, v: np.ndarray) -> np.ndarray:
    """Apply U(t)^dag to a vector in the eigenbasis.

    U(t)^dag = L diag(exp(+i E* t)) R^dag, which differs from U(-t) unless
    H is Hermitian.
    """
    v = np.asarray(v, dtype=complex)
    if v.shape != (es.dim,):
        raise ValueError(f"vector length {v.shape} does not match dim {es.dim}")
    coeff = es.right.conj().T @ v
    coeff *= np.exp(1j * np.conj(es.energies) * t)
    return es.left @ coeff
