"""Bloch Hamiltonian families on a 1D periodic lattice.

The concrete model is a two-band PT-symmetric chain with balanced
gain/loss of strength m,

    H(k) = [[ i m cos k,  e^{-ik} ],
            [ e^{ik},   -i m cos k ]],

whose spectrum +-sqrt(1 - m^2 cos^2 k) is real for |m| <= 1 (unbroken
regime) and develops exceptional points at cos^2 k = 1/m^2 otherwise.
Other 1D N-band families can be supplied through callables.

`scan_bands` diagonalizes over the uniform momentum grid, aligns band
indices by left-right overlap continuity and stores a smooth periodic
gauge (parallel transport with the closure phase spread evenly over the
grid), so that stored eigenvectors can be differentiated in k.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from .errors import DefectiveMatrix
from .linalg import DEFAULT_COND_THRESHOLD, EigenSystem, _eig2_batch, eig_general

DEFAULT_GRID = 256
_FD_STEP = 1e-6


@dataclass(frozen=True)
class BlochModel:
    """1D Bloch Hamiltonian family given by callables k -> matrix.

    `velocity_fn` is the analytic derivative d_k H; when omitted it falls
    back to a central finite difference of `hamiltonian_fn`.
    """

    nbands: int
    L: int
    hamiltonian_fn: Callable[[float], np.ndarray]
    velocity_fn: Optional[Callable[[float], np.ndarray]] = None
    name: str = "bloch"

    def __post_init__(self):
        if self.L < 8 or self.L % 2:
            raise ValueError("grid size L must be even and >= 8")

    def hamiltonian(self, k: float) -> np.ndarray:
        return np.asarray(self.hamiltonian_fn(k), dtype=complex)

    def velocity(self, k: float) -> np.ndarray:
        if self.velocity_fn is not None:
            return np.asarray(self.velocity_fn(k), dtype=complex)
        h = _FD_STEP
        return (self.hamiltonian(k + h) - self.hamiltonian(k - h)) / (2.0 * h)

    def exceptional_momenta(self):
        """Momenta of known exceptional points in [0, 2pi); empty unless a
        concrete family overrides this."""
        return np.empty(0)


@dataclass(frozen=True)
class PTChainModel:
    """The two-band PT-symmetric chain with gain/loss strength m."""

    m: float
    L: int = DEFAULT_GRID
    nbands: int = field(default=2, init=False)
    name: str = field(default="pt_chain", init=False)

    def __post_init__(self):
        if self.L < 8 or self.L % 2:
            raise ValueError("grid size L must be even and >= 8")

    @property
    def pt_unbroken(self) -> bool:
        return abs(self.m) <= 1.0

    def hamiltonian(self, k: float) -> np.ndarray:
        c = np.cos(k)
        return np.array(
            [[1j * self.m * c, np.exp(-1j * k)],
             [np.exp(1j * k), -1j * self.m * c]]
        )

    def velocity(self, k: float) -> np.ndarray:
        s = np.sin(k)
        return np.array(
            [[-1j * self.m * s, -1j * np.exp(-1j * k)],
             [1j * np.exp(1j * k), 1j * self.m * s]]
        )

    def dispersion(self, k, band: int):
        """Closed-form band energy +-sqrt(1 - m^2 cos^2 k); band 0 is the
        lower branch (matching the global eigenvalue ordering)."""
        root = np.sqrt(np.asarray(1.0 - self.m**2 * np.cos(k) ** 2, dtype=complex))
        return root if band else -root

    def exceptional_momenta(self):
        if abs(self.m) < 1.0:
            return np.empty(0)
        kstar = np.arccos(1.0 / abs(self.m)) if abs(self.m) > 1.0 else 0.0
        ks = {kstar, np.pi - kstar, np.pi + kstar, (2.0 * np.pi - kstar) % (2.0 * np.pi)}
        return np.array(sorted(ks))


AnyModel = Union[BlochModel, PTChainModel]


def hamiltonian_at(model: AnyModel, k: float) -> np.ndarray:
    return model.hamiltonian(k)


def velocity_at(model: AnyModel, k: float) -> np.ndarray:
    return model.velocity(k)


def dispersion(model: PTChainModel, k, band: int):
    return model.dispersion(k, band)


@dataclass(frozen=True)
class BandScan:
    """Eigensystems over the momentum grid in a smooth periodic gauge.

    `energies[j, n]`, `right[j, :, n]`, `left[j, :, n]` refer to band n at
    k_grid[j], already aligned by continuity; `band_map[j]` records the
    permutation applied to the raw energy-ordered output at each k.
    """

    model: AnyModel
    k_grid: np.ndarray
    energies: np.ndarray
    right: np.ndarray
    left: np.ndarray
    condition: np.ndarray
    band_map: np.ndarray

    @property
    def L(self) -> int:
        return self.k_grid.shape[0]

    @property
    def dk(self) -> float:
        return 2.0 * np.pi / self.L

    @property
    def nbands(self) -> int:
        return self.energies.shape[1]

    def grid_index(self, k: float) -> int:
        """Nearest grid index to momentum k (2pi-periodic)."""
        return int(np.rint(k / self.dk)) % self.L

    def eigensystem_at(self, j: int) -> EigenSystem:
        R = self.right[j]
        return EigenSystem(
            self.energies[j].copy(), R.copy(), self.left[j].copy(),
            float(self.condition[j]), R.conj().T @ R,
        )

    def gramian_diag(self, band: int) -> np.ndarray:
        u = self.right[:, :, band]
        return np.einsum("jk,jk->j", u.conj(), u).real

    def with_gauge_twist(self, phases: np.ndarray, band: int) -> "BandScan":
        """Copy of the scan with right/left vectors of one band multiplied
        by e^{i phases[j]}: a pure gauge change (biorthonormality kept).
        Used by invariance tests."""
        ph = np.exp(1j * np.asarray(phases))
        right = self.right.copy()
        left = self.left.copy()
        right[:, :, band] *= ph[:, None]
        left[:, :, band] *= ph[:, None]
        return BandScan(self.model, self.k_grid, self.energies.copy(),
                        right, left, self.condition.copy(), self.band_map.copy())


def _track_bands(energies, right, left):
    """Align band indices by maximal |<L_n(k_j)|R_m(k_{j+1})>| continuity."""
    L, N = energies.shape
    band_map = np.tile(np.arange(N), (L, 1))
    for j in range(1, L):
        # rows: bands at k_{j-1} (already aligned); cols: raw bands at k_j
        ov = np.abs(left[j - 1].conj().T @ right[j])
        new = np.full(N, -1)
        used = np.zeros(N, dtype=bool)
        # greedy assignment, strongest overlaps first
        flat = np.argsort(ov, axis=None)[::-1]
        for idx in flat:
            n_prev, m_next = divmod(int(idx), N)
            if new[n_prev] < 0 and not used[m_next]:
                new[n_prev] = m_next
                used[m_next] = True
        band_map[j] = new
        energies[j] = energies[j][new]
        right[j] = right[j][:, new]
        left[j] = left[j][:, new]
    # periodic closure: compare last to first
    ov = np.abs(left[L - 1].conj().T @ right[0])
    closure = np.argmax(ov, axis=1)
    if not np.array_equal(closure, np.arange(N)):
        raise DefectiveMatrix(
            "band tracking does not close around the Brillouin zone "
            f"(closure permutation {closure})"
        )
    return band_map


def _smooth_gauge(right, left):
    """Parallel-transport each band along the grid and spread the closure
    phase evenly, giving a smooth gauge that is exactly periodic."""
    L, _, N = right.shape
    for n in range(N):
        for j in range(1, L):
            ov = np.vdot(right[j - 1, :, n], right[j, :, n])
            a = abs(ov)
            ph = ov / a if a > 0 else 1.0
            right[j, :, n] /= ph
            left[j, :, n] /= ph
        closure = np.angle(np.vdot(right[L - 1, :, n], right[0, :, n]))
        spread = np.exp(1j * closure * np.arange(L) / L)
        right[:, :, n] *= spread[:, None]
        left[:, :, n] *= spread[:, None]


def scan_bands(model: AnyModel,
               cond_threshold: float = DEFAULT_COND_THRESHOLD) -> BandScan:
    """Diagonalize over the momentum grid with continuity-aligned bands.

    Raises DefectiveMatrix, reporting the offending momentum, when the
    model has an exceptional point in the zone or any grid eigensystem is
    near-defective.
    """
    eps = model.exceptional_momenta()
    if eps.size:
        raise DefectiveMatrix(
            f"model has exceptional point(s) in the zone, first at k = {eps[0]:.6f}; "
            "band scan is ill-defined",
            k=float(eps[0]),
        )
    L = model.L
    ks = 2.0 * np.pi * np.arange(L) / L
    if model.nbands == 2:
        H = np.stack([model.hamiltonian(k) for k in ks])
        energies, right, left, cond = _eig2_batch(H)
        bad = ~np.isfinite(cond) | (cond > cond_threshold)
        if np.any(bad):
            j = int(np.argmax(bad))
            raise DefectiveMatrix(
                f"near-defective eigensystem at k = {ks[j]:.6f} "
                f"(condition {cond[j]:.3e})",
                condition=float(cond[j]), k=float(ks[j]),
            )
    else:
        energies = np.empty((L, model.nbands), dtype=complex)
        right = np.empty((L, model.nbands, model.nbands), dtype=complex)
        left = np.empty_like(right)
        cond = np.empty(L)
        for j, k in enumerate(ks):
            try:
                es = eig_general(model.hamiltonian(k), cond_threshold)
            except DefectiveMatrix as exc:
                raise DefectiveMatrix(
                    f"near-defective eigensystem at k = {k:.6f}",
                    condition=exc.condition, k=float(k),
                ) from exc
            energies[j] = es.energies
            right[j] = es.right
            left[j] = es.left
            cond[j] = es.condition

    band_map = _track_bands(energies, right, left)
    _smooth_gauge(right, left)
    return BandScan(model, ks, energies, right, left, cond, band_map)
