"""Biorthogonal quantum geometry at a momentum point.

Central objects for band n with right/left cell-periodic vectors u, l
(biorthonormal, <l|u> = 1):

    A_rr = i <u|du>/<u|u>          right-right Berry connection
    A_lr = i <l|du>                left-right Berry connection
    Q    = A_rr - A_lr             gauge-invariant difference
    q    = <du|du>/<u|u> - <du|u><u|du>/<u|u>^2     geometric tensor
    q_lr = <dl|du> - <dl|u><l|du>  left-right geometric tensor

Derivatives are central differences in a locally aligned gauge: the
neighbors are re-phased so <u(k)|u(k +- dk)> is real positive, which
leaves every gauge-invariant combination unchanged to O(dk^2).

Q also has the sum-over-states form (nondegenerate spectra)

    Q_n = i sum_{n' != n} (I_nn'/I_nn) <l_n'|dH|u_n> / (E_n - E_n'),

used as an exact cross-check against the stencil.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateSpectrum
from .linalg import EigenSystem, eig_general
from .model import AnyModel, BandScan

GAP_TOLERANCE = 1e-8
PROBE_STEP = 3e-4


@dataclass(frozen=True)
class GeometryPoint:
    """Connections and geometric tensor of one band at one momentum."""

    k: float
    band: int
    a_rr: complex
    a_lr: complex
    q_conn: complex
    qgt: complex


@dataclass(frozen=True)
class FidelityProbe:
    """Perturbation step for fidelity expansions along one parameter."""

    lambda_step: float
    direction: int = 0

    def __post_init__(self):
        if self.lambda_step < 0:
            raise ValueError("lambda_step must be >= 0")


def _frame_from_scan(scan: BandScan, band: int, k_index: int, nside: int):
    """Aligned (u, l) pairs for offsets -nside..nside around k_index."""
    offsets = range(-nside, nside + 1)
    L = scan.L
    us = []
    ls = []
    for off in offsets:
        j = (k_index + off) % L
        us.append(scan.right[j, :, band].copy())
        ls.append(scan.left[j, :, band].copy())
    # parallel transport outward from the center
    c = nside
    for i in range(c + 1, 2 * nside + 1):
        ov = np.vdot(us[i - 1], us[i])
        ph = ov / abs(ov)
        us[i] /= ph
        ls[i] /= ph
    for i in range(c - 1, -1, -1):
        ov = np.vdot(us[i + 1], us[i])
        ph = ov / abs(ov)
        us[i] /= ph
        ls[i] /= ph
    return us, ls


def connections_fd(scan: BandScan, band: int, k_index: int) -> GeometryPoint:
    """Berry connections and geometric tensor by central differences.

    Gauge: neighbors aligned to the center (positive real right-overlap),
    so a_rr comes out purely imaginary here; q_conn and qgt are gauge
    invariant and carry O(dk^2) stencil error.
    """
    us, ls = _frame_from_scan(scan, band, k_index, 1)
    um, u0, up = us
    l0 = ls[1]
    dk = scan.dk
    du = (up - um) / (2.0 * dk)
    inn = np.vdot(u0, u0).real
    a_rr = 1j * np.vdot(u0, du) / inn
    a_lr = 1j * np.vdot(l0, du)
    qgt = np.vdot(du, du) / inn - np.vdot(du, u0) * np.vdot(u0, du) / inn**2
    return GeometryPoint(
        k=float(scan.k_grid[k_index]), band=band,
        a_rr=complex(a_rr), a_lr=complex(a_lr),
        q_conn=complex(a_rr - a_lr), qgt=complex(qgt),
    )


def qgt_left_right(scan: BandScan, band: int, k_index: int) -> complex:
    """Left-right geometric tensor <dl|du> - <dl|u><l|du> (biorthonormal
    convention), central differences in the aligned gauge."""
    us, ls = _frame_from_scan(scan, band, k_index, 1)
    um, u0, up = us
    lm, l0, lp = ls
    dk = scan.dk
    du = (up - um) / (2.0 * dk)
    dl = (lp - lm) / (2.0 * dk)
    return complex(np.vdot(dl, du) - np.vdot(dl, u0) * np.vdot(l0, du))


def connection_difference_sos(es: EigenSystem, dH: np.ndarray, band: int) -> complex:
    """Q_n from the sum-over-states formula with the analytic dH.

    Requires a nondegenerate spectrum (min gap > 1e-8), else raises
    DegenerateSpectrum.
    """
    E = es.energies
    n = band
    others = [m for m in range(es.dim) if m != n]
    if others:
        gaps = np.abs(E[others] - E[n])
        if gaps.min() <= GAP_TOLERANCE:
            raise DegenerateSpectrum(
                f"minimum gap {gaps.min():.3e} below {GAP_TOLERANCE:.0e}"
            )
    inn = es.gramian[n, n].real
    total = 0.0 + 0.0j
    for m in others:
        total += (
            1j * (es.gramian[n, m] / inn)
            * np.vdot(es.left[:, m], dH @ es.right[:, n])
            / (E[n] - E[m])
        )
    return complex(total)


def fidelity(left: np.ndarray, right: np.ndarray) -> float:
    """F = |<left|right>|^2 / (<left|left><right|right>), in [0, 1]."""
    left = np.asarray(left, dtype=complex)
    right = np.asarray(right, dtype=complex)
    nl = np.vdot(left, left).real
    nr = np.vdot(right, right).real
    if nl <= 0.0 or nr <= 0.0:
        raise ValueError("fidelity of a zero-norm vector is undefined")
    return float(abs(np.vdot(left, right)) ** 2 / (nl * nr))


def _fidelity_prefactor(gramian: np.ndarray, band: int) -> float:
    inn = gramian[band, band].real
    inv_nn = np.linalg.inv(gramian)[band, band].real
    return 1.0 / (inn * inv_nn)


def fidelity_first_order(point: GeometryPoint, probe: FidelityProbe,
                         gramian: np.ndarray) -> float:
    """First-order fidelity between the left state and the d-lambda
    perturbed right state: (1 - 2 dlam Im Q) / (I_nn (I^-1)_nn)."""
    dlam = probe.lambda_step
    return float((1.0 - 2.0 * dlam * point.q_conn.imag)
                 * _fidelity_prefactor(gramian, point.band))


def fidelity_second_order(point: GeometryPoint, probe: FidelityProbe,
                          qgt_lr: complex, dq_dk: float,
                          gramian: np.ndarray) -> float:
    """Second-order fidelity expansion.

    `qgt_lr` is the left-right geometric tensor along the probe direction
    and `dq_dk` the derivative of Im Q. With every ingredient evaluated at
    the base point (the convention here), the quadratic coefficient is
    Re q_lr + d Im Q - 2 (Im Q)^2; stating the linear term through Im Q at
    the displaced point instead flips the sign of the derivative term.
    Verified against exact fidelities by an O(d lambda^3) scaling test.
    """
    dlam = probe.lambda_step
    imq = point.q_conn.imag
    quad = np.real(qgt_lr) + dq_dk - 2.0 * imq * imq
    return float((1.0 - 2.0 * dlam * imq - dlam * dlam * quad)
                 * _fidelity_prefactor(gramian, point.band))


def _aligned_probe_frame(model: AnyModel, k: float, step: float, nside: int):
    """Fresh eigensystems at k + j*step (j = -nside..nside), each band
    parallel-transport aligned to the center; returns (systems, us, ls)
    with us[j][:, n] the aligned right vector of band n."""
    pts = [k + j * step for j in range(-nside, nside + 1)]
    systems = [eig_general(model.hamiltonian(kk)) for kk in pts]
    N = systems[0].dim
    us = [s.right.copy() for s in systems]
    ls = [s.left.copy() for s in systems]
    c = nside
    for n in range(N):
        for i in range(c + 1, len(pts)):
            ov = np.vdot(us[i - 1][:, n], us[i][:, n])
            ph = ov / abs(ov)
            us[i][:, n] /= ph
            ls[i][:, n] /= ph
        for i in range(c - 1, -1, -1):
            ov = np.vdot(us[i + 1][:, n], us[i][:, n])
            ph = ov / abs(ov)
            us[i][:, n] /= ph
            ls[i][:, n] /= ph
    return systems, us, ls


def geometry_point_sos(model: AnyModel, band: int, k: float,
                       step: float = PROBE_STEP) -> GeometryPoint:
    """Geometry at arbitrary k from fresh eigensolves: Q by sum over
    states (exact matrix elements), qgt by an O(step^2) stencil."""
    systems, us, ls = _aligned_probe_frame(model, k, step, 1)
    es = systems[1]
    q_sos = connection_difference_sos(es, model.velocity(k), band)
    u0 = us[1][:, band]
    du = (us[2][:, band] - us[0][:, band]) / (2.0 * step)
    inn = np.vdot(u0, u0).real
    a_rr = 1j * np.vdot(u0, du) / inn
    qgt = np.vdot(du, du) / inn - np.vdot(du, u0) * np.vdot(u0, du) / inn**2
    return GeometryPoint(k=float(k), band=band, a_rr=complex(a_rr),
                         a_lr=complex(a_rr - q_sos), q_conn=complex(q_sos),
                         qgt=complex(qgt))


def qgt_left_right_model(model: AnyModel, band: int, k: float,
                         step: float = PROBE_STEP) -> complex:
    """Left-right geometric tensor at arbitrary k (fresh eigensolves)."""
    _, us, ls = _aligned_probe_frame(model, k, step, 1)
    du = (us[2][:, band] - us[0][:, band]) / (2.0 * step)
    dl = (ls[2][:, band] - ls[0][:, band]) / (2.0 * step)
    u0 = us[1][:, band]
    l0 = ls[1][:, band]
    return complex(np.vdot(dl, du) - np.vdot(dl, u0) * np.vdot(l0, du))


def q_conn_derivative(model: AnyModel, band: int, k: float,
                      step: float = PROBE_STEP) -> complex:
    """d_k Q by central differences of the (gauge-invariant) SOS values."""
    qp = connection_difference_sos(
        eig_general(model.hamiltonian(k + step)), model.velocity(k + step), band)
    qm = connection_difference_sos(
        eig_general(model.hamiltonian(k - step)), model.velocity(k - step), band)
    return complex((qp - qm) / (2.0 * step))
