"""
Exception hierarchy shared by the toolkit modules
"""

from typing import Optional


class SrrisError(Exception):
    """Base class for toolkit errors"""


class NonConvergent(SrrisError, ArithmeticError):
    """Quadrature could not reach the requested tolerance"""


class NoSignChange(SrrisError, ValueError):
    """Root bracket does not straddle a sign change"""


class NoSolution(SrrisError, ValueError):
    """Equation has no root in the regime asked for"""


class NotPsd(SrrisError, ValueError):
    """Matrix has an eigenvalue below the PSD tolerance"""


class DegenerateGeometry(SrrisError, ValueError):
    """Distances or exponents that make path loss undefined"""


class ModulusViolation(SrrisError, ValueError):
    """Reflection coefficient modulus exceeds one"""


class DegenerateChannel(SrrisError, ValueError):
    """Reflecting gain is zero"""


class DegenerateConstellation(SrrisError, ValueError):
    """Duplicate composite points leave neighbor sets undefined"""


class SingularGram(SrrisError, ArithmeticError):
    """Training Gram matrix is rank deficient"""


class NotApplicable(SrrisError, ValueError):
    """Evaluator called outside the geometry it is derived for"""


class TrialError(SrrisError, RuntimeError):
    """Failure inside a Monte Carlo trial, tagged with its position"""

    def __init__(self, message: str, snr_index: int, trial: Optional[int] = None):
        where = f"snr_index={snr_index}"
        if trial is not None:
            where += f", trial={trial}"
        super().__init__(f"{message} ({where})")
        self.message = message
        self.snr_index = snr_index
        self.trial = trial

    def __reduce__(self):
        return type(self), (self.message, self.snr_index, self.trial)
