"""Quantum geometry and wave-packet response of non-Hermitian Bloch models."""

from ._backend import NUMBA_ENABLED, backend_name
from .errors import (ConfigError, DefectiveMatrix, DegenerateSpectrum,
                     DelocalizedState, PTBroken)
from .linalg import EigenSystem, apply_adjoint_evolution, eig_general, evolution_operator
from .model import (BandScan, BlochModel, PTChainModel, dispersion,
                    hamiltonian_at, scan_bands, velocity_at)
from .geometry import (FidelityProbe, GeometryPoint, connection_difference_sos,
                       connections_fd, fidelity, fidelity_first_order,
                       fidelity_second_order, geometry_point_sos, qgt_left_right)
from .wavepacket import (WavePacket, WavePacketState, build_gaussian,
                         central_position, evolve, momentum_cumulants,
                         position_spread)
from .response import (BroadeningParams, FHCoefficients, ResponseSeries,
                       band_curvature, dc_anomalous_velocity, fh_coefficients,
                       integrated_response_analytic, integrated_response_numeric,
                       response_analytic_time, response_frequency,
                       response_numeric, response_series)
from .special import exp_integral_ei

__version__ = "0.1.0"

__all__ = [
    "NUMBA_ENABLED", "backend_name",
    "ConfigError", "DefectiveMatrix", "DegenerateSpectrum",
    "DelocalizedState", "PTBroken",
    "EigenSystem", "eig_general", "evolution_operator", "apply_adjoint_evolution",
    "BlochModel", "PTChainModel", "BandScan", "scan_bands",
    "hamiltonian_at", "velocity_at", "dispersion",
    "GeometryPoint", "FidelityProbe", "connections_fd",
    "connection_difference_sos", "fidelity", "fidelity_first_order",
    "fidelity_second_order", "geometry_point_sos", "qgt_left_right",
    "WavePacket", "WavePacketState", "build_gaussian", "evolve",
    "central_position", "position_spread", "momentum_cumulants",
    "ResponseSeries", "FHCoefficients", "BroadeningParams",
    "response_numeric", "response_series", "fh_coefficients",
    "response_analytic_time", "response_frequency", "dc_anomalous_velocity",
    "integrated_response_numeric", "integrated_response_analytic",
    "band_curvature", "exp_integral_ei",
    "__version__",
]
