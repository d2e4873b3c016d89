"""
Numerical primitives shared by the solver, theory and channel modules
Q-function, error function, quadrature, bracketed root search, PSD square root
"""

import logging
import math
import warnings
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate as sp_integrate
from scipy import optimize, special

from .errors import NoSignChange, NonConvergent, NotPsd

log = logging.getLogger(__name__)

PSD_TOL = 1e-10


@dataclass(frozen=True)
class Interval:
    """Closed real interval used for integration and root brackets"""
    lo: float
    hi: float

    def __post_init__(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)):
            raise ValueError(f"Interval bounds must be finite, got [{self.lo}, {self.hi}]")
        if not self.lo < self.hi:
            raise ValueError(f"Interval requires lo < hi, got [{self.lo}, {self.hi}]")

    @property
    def width(self) -> float:
        return self.hi - self.lo


def db_to_linear(db):
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0)


def linear_to_db(lin):
    return 10.0 * np.log10(lin)


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def q_function(t):
    """Gaussian tail probability Q(t), vectorised"""
    return 0.5 * special.erfc(np.asarray(t, dtype=float) / np.sqrt(2.0))


def erf(u):
    return special.erf(u)


def integrate(f: Callable[[float], float], iv: Interval, tol: float,
              points: Optional[Sequence[float]] = None) -> float:
    """
    Adaptive quadrature of f over iv with absolute error control.

    Args:
        f: Real integrand, bounded on iv
        iv: Integration interval
        tol: Absolute error target
        points: Optional interior breakpoints where f changes quickly

    Returns:
        Integral estimate

    Raises:
        NonConvergent: if the subdivision budget runs out before tol is met
    """
    if tol <= 0:
        raise ValueError(f"tol must be positive, got {tol}")
    inner = None
    if points is not None:
        inner = [p for p in points if iv.lo < p < iv.hi] or None

    with warnings.catch_warnings():
        warnings.simplefilter("error", sp_integrate.IntegrationWarning)
        try:
            value, abserr = sp_integrate.quad(f, iv.lo, iv.hi, epsabs=tol, epsrel=0.0,
                                              limit=500, points=inner)
        except sp_integrate.IntegrationWarning as e:
            raise NonConvergent(f"Quadrature on [{iv.lo}, {iv.hi}] failed: {e}") from e

    if abserr > tol:
        raise NonConvergent(f"Quadrature error {abserr:.3e} exceeds tol {tol:.1e}")
    return value


def bisect_root(f: Callable[[float], float], iv: Interval, tol: float) -> float:
    """Bisection root of a continuous f on a sign-changing bracket"""
    f_lo, f_hi = f(iv.lo), f(iv.hi)
    if f_lo == 0.0:
        return iv.lo
    if f_hi == 0.0:
        return iv.hi
    if np.sign(f_lo) == np.sign(f_hi):
        raise NoSignChange(
            f"No sign change on [{iv.lo:.6g}, {iv.hi:.6g}]: f={f_lo:.3e}, {f_hi:.3e}")
    try:
        return optimize.bisect(f, iv.lo, iv.hi, xtol=tol, maxiter=200)
    except RuntimeError as e:
        raise NonConvergent(str(e)) from e


def psd_sqrt(R: np.ndarray) -> np.ndarray:
    """
    Hermitian square root of a numerically PSD matrix.

    Eigenvalues in [-1e-10, 0) are treated as round-off and clamped to zero.
    """
    R = np.asarray(R)
    if R.ndim != 2 or R.shape[0] != R.shape[1]:
        raise ValueError(f"Expected a square matrix, got shape {R.shape}")
    w, V = np.linalg.eigh(R)
    if w.min() < -PSD_TOL:
        raise NotPsd(f"Smallest eigenvalue {w.min():.3e} below -{PSD_TOL:.0e}")
    if w.min() < 0:
        log.debug(f"Clamping eigenvalues down to {w.min():.3e}")
    w = np.clip(w, 0.0, None)
    S = (V * np.sqrt(w)) @ V.conj().T
    if np.isrealobj(R):
        S = S.real
    return 0.5 * (S + S.conj().T)
