"""Exception types shared across the package."""


class DefectiveMatrix(Exception):
    """Eigenvector matrix too ill-conditioned to invert: the matrix is
    defective or close to an exceptional point."""

    def __init__(self, message, condition=None, k=None):
        super().__init__(message)
        self.condition = condition
        self.k = k


class DegenerateSpectrum(Exception):
    """Sum-over-states formulas require a nondegenerate spectrum."""


class DelocalizedState(Exception):
    """Phase-operator position is ill-conditioned for delocalized states."""


class PTBroken(Exception):
    """Requested quantity is only defined in the PT-unbroken regime."""


class ConfigError(Exception):
    """Invalid experiment configuration."""
