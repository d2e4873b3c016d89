"""
Closed-form design of the (alpha, beta) reflection split

Maximises the minimum Euclidean distance of the composite QPSK x BPSK
constellation subject to the bit-mapping angle constraints and the unit-modulus
constraints of the surface. Also provides an exhaustive grid search used to
check the closed form.
"""

import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Optional, Sequence, Tuple

import numpy as np

from config.config import SOLVER_CONFIG
from .errors import NoSignChange, NoSolution
from .numerics import Interval, bisect_root

log = logging.getLogger(__name__)

SQRT2 = math.sqrt(2.0)
# beta_1 = beta_3 = NODE_GAIN * xi at theta = -pi/4
NODE_GAIN = (math.sqrt(6.0) - SQRT2) / 2.0
RATIO_THRESHOLDS = (1.0, 1.0 / NODE_GAIN, SQRT2 + 1.0)
PI = math.pi


@dataclass(frozen=True)
class RatioRegime:
    ratio: float
    case_id: int
    thresholds: Tuple[float, float, float] = RATIO_THRESHOLDS

    @classmethod
    def classify(cls, ratio: float,
                 thresholds: Tuple[float, float, float] = RATIO_THRESHOLDS) -> "RatioRegime":
        """Boundary ratios belong to the higher case"""
        if ratio < 0:
            raise ValueError(f"Channel strength ratio must be nonnegative, got {ratio}")
        if ratio == 0:
            case_id = 1
        elif ratio < thresholds[0]:
            case_id = 2
        elif ratio < thresholds[1]:
            case_id = 3
        elif ratio < thresholds[2]:
            case_id = 4
        else:
            case_id = 5
        return cls(ratio=ratio, case_id=case_id, thresholds=tuple(thresholds))


@dataclass(frozen=True)
class BoundaryFunctions:
    """
    Magnitude boundaries between the distance regions of the composite
    constellation, as functions of the phase theta of beta in [-pi, 0].
    """
    xi: float

    def beta1(self, theta):
        c = np.cos(theta)
        return self.xi * (-c + np.sqrt(1.0 + c * c))

    def beta2(self, theta):
        c = np.cos(theta)
        return self.xi * (c + np.sqrt(1.0 + c * c))

    def beta3(self, theta):
        s = np.sin(theta)
        return self.xi * (s + np.sqrt(1.0 + s * s))

    def beta4(self, theta):
        s = np.sin(theta)
        return self.xi * (-s + np.sqrt(1.0 + s * s))

    @staticmethod
    def sector(theta):
        """3 on [-pi/4, 0], 4 on [-3pi/4, -pi/4), 5 on [-pi, -3pi/4)"""
        theta = np.asarray(theta, dtype=float)
        return np.where(theta >= -PI / 4, 3, np.where(theta >= -3 * PI / 4, 4, 5))

    def beta5(self, theta):
        sec = self.sector(theta)
        return np.where(sec == 3, self.beta1(theta),
                        np.where(sec == 4, self.beta3(theta), self.beta2(theta)))

    def beta6(self, theta):
        sec = self.sector(theta)
        return np.where(sec == 3, self.beta2(theta),
                        np.where(sec == 4, self.beta4(theta), self.beta1(theta)))

    def region(self, beta: complex) -> int:
        """Distance region 1..5 that beta falls in"""
        mag, theta = abs(beta), float(np.angle(beta)) if beta != 0 else 0.0
        if mag <= self.beta5(theta):
            return 1
        if mag > self.beta6(theta):
            return 5
        return {3: 2, 4: 3, 5: 4}[int(self.sector(theta))]

    def piecewise_dmin(self, beta: complex) -> float:
        """Piecewise minimum distance; the active pair depends on the region"""
        xi = self.xi
        region = self.region(beta)
        if region == 1:
            return 2.0 * abs(beta)
        if region == 2:
            return SQRT2 * abs(xi - beta)
        if region == 3:
            return SQRT2 * abs(xi - 1j * beta)
        if region == 4:
            return SQRT2 * abs(xi + beta)
        return 2.0 * xi


def c2bar_limit(theta, xi):
    """Largest |beta| at phase theta that keeps both angle constraints"""
    theta = np.asarray(theta, dtype=float)
    sign = np.where(theta <= -PI / 2, -1.0, 1.0)
    return xi / (np.cos(theta) * sign - np.sin(theta))


def c4bar_limit(theta, alpha):
    """Largest |beta| at phase theta with |alpha + beta| <= 1 and |alpha - beta| <= 1"""
    theta = np.asarray(theta, dtype=float)
    # -1 on the half plane where cos(theta) < 0
    sign = np.where(np.cos(theta) < 0, -1.0, 1.0)
    return np.sqrt(1.0 - alpha ** 2 * np.sin(theta) ** 2) - alpha * np.cos(theta) * sign


def magnitude_limit(theta, alpha, ratio):
    """Largest feasible |beta| at phase theta: the tighter of the angle and modulus limits"""
    return np.minimum(c2bar_limit(theta, ratio + alpha), c4bar_limit(theta, alpha))


def _min_distance(xi, beta):
    """Minimum over the composite distance set, broadcasting over xi and beta"""
    candidates = (
        2.0 * np.abs(beta),
        SQRT2 * np.abs(xi - beta),
        SQRT2 * np.abs(xi - 1j * beta),
        SQRT2 * np.abs(xi + beta),
        SQRT2 * np.abs(xi + 1j * beta),
        2.0 * np.abs(xi) + 0.0 * np.abs(beta),
        2.0 * np.abs(xi - beta),
        2.0 * np.abs(xi + beta),
    )
    return np.minimum.reduce(candidates)


def dmin_given(alpha: float, beta: complex, ratio: float) -> float:
    """Minimum Euclidean distance of the normalised composite constellation"""
    return float(_min_distance(ratio + alpha, beta))


def constraint_violations(alpha: float, beta: complex, ratio: float,
                          tol: float = SOLVER_CONFIG["constraint_tol"]) -> Tuple[str, ...]:
    """Names of the violated constraints among C1..C4 (empty when feasible)"""
    xi = ratio + alpha
    failed = []
    lower = np.angle(xi + beta)
    upper = np.angle(xi - beta)
    if not (-PI / 4 - tol <= lower <= tol):
        failed.append("C1")
    if not (-tol <= upper <= PI / 4 + tol):
        failed.append("C2")
    if abs(alpha + beta) > 1 + tol:
        failed.append("C3")
    if abs(alpha - beta) > 1 + tol:
        failed.append("C4")
    return tuple(failed)


def _root(f, lo: float, hi: float, what: str) -> float:
    """Bisection that accepts a bracket edge already sitting on the root"""
    tol = SOLVER_CONFIG["root_tol"]
    edge_tol = 1e-12
    if abs(f(lo)) <= edge_tol:
        return lo
    if abs(f(hi)) <= edge_tol:
        return hi
    try:
        return bisect_root(f, Interval(lo, hi), tol)
    except NoSignChange as e:
        raise NoSolution(f"{what}: {e}") from e


def transition_alpha1(ratio: float) -> float:
    """alpha where the constellation node at -pi/4 first touches the modulus limit"""
    def gap(alpha):
        return BoundaryFunctions(ratio + alpha).beta1(-PI / 4) - c4bar_limit(-PI / 4, alpha)
    return _root(gap, 0.0, 1.0, f"first transition point at ratio {ratio}")


def transition_alpha2(ratio: float) -> float:
    def gap(alpha):
        return BoundaryFunctions(ratio + alpha).beta3(-PI / 2) - math.sqrt(max(0.0, 1 - alpha ** 2))
    return _root(gap, 0.0, 1.0, f"second transition point at ratio {ratio}")


def transition_points(ratio: float) -> Tuple[float, float]:
    """
    The two values of alpha where the optimal beta changes regime.

    Raises:
        NoSolution: when either transition point does not exist for this ratio
    """
    if ratio < 0:
        raise ValueError(f"Channel strength ratio must be nonnegative, got {ratio}")
    return transition_alpha1(ratio), transition_alpha2(ratio)


def transition_points_fitted(ratio: float) -> Tuple[float, float]:
    """Fitted closed-form approximations of the transition points"""
    a1 = 0.25 * (math.sqrt(8 - 0.54 * ratio ** 2) - 1.27 * ratio)
    a2 = 0.43 * (-0.34 * ratio + math.sqrt(-0.68 * ratio ** 2 + 4.7))
    return a1, a2


def beta_star_given_alpha(alpha: float, ratio: float) -> Tuple[complex, float]:
    """
    Optimal beta and the resulting minimum distance for a fixed alpha.

    Args:
        alpha: Symbol-invariant amplitude in [0, 1]
        ratio: Channel strength ratio |h|/g

    Returns:
        (beta, dmin)
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    alpha1, alpha2 = transition_points(ratio)
    xi = ratio + alpha
    bounds = BoundaryFunctions(xi)

    if alpha <= alpha1:
        mag = NODE_GAIN * xi
        return mag * np.exp(-1j * PI / 4), 2.0 * mag
    if alpha >= alpha2:
        mag = math.sqrt(1.0 - alpha ** 2)
        return -1j * mag, 2.0 * mag

    # Node on the beta_3 boundary meets the modulus limit
    theta1 = _root(lambda t: float(c4bar_limit(t, alpha) - bounds.beta3(t)),
                   -PI / 2, -PI / 4, f"node phase at alpha {alpha}")
    mag = float(bounds.beta3(theta1))
    return mag * np.exp(1j * theta1), 2.0 * mag


def dmin_curve(ratio: float, alphas: Iterable[float]) -> np.ndarray:
    """Optimised minimum distance as a function of alpha"""
    return np.array([beta_star_given_alpha(a, ratio)[1] for a in alphas])


def select_alpha(ratio: float) -> float:
    """Transition point with the larger optimised minimum distance"""
    alpha1, alpha2 = transition_points(ratio)
    d1 = beta_star_given_alpha(alpha1, ratio)[1]
    d2 = beta_star_given_alpha(alpha2, ratio)[1]
    return alpha1 if d1 > d2 else alpha2


@dataclass(frozen=True)
class SolverResult:
    alpha: float
    beta: complex
    dmin: float
    case_id: int
    beta_phase_range: Optional[Tuple[float, float]] = None

    def to_dict(self):
        return {
            "case": self.case_id,
            "alpha": self.alpha,
            "beta_re": self.beta.real,
            "beta_im": self.beta.imag,
            "beta_abs": abs(self.beta),
            "beta_phase": float(np.angle(self.beta)),
            "dmin": self.dmin,
            "phase_range": list(self.beta_phase_range) if self.beta_phase_range else None,
        }


@lru_cache(maxsize=4096)
def solve(ratio: float,
          thresholds: Tuple[float, float, float] = RATIO_THRESHOLDS) -> SolverResult:
    """
    Optimal (alpha, beta) for a channel strength ratio.

    Args:
        ratio: |h|/g
        thresholds: Case boundaries, overridable for fault injection

    Returns:
        SolverResult with the case that applied
    """
    regime = RatioRegime.classify(ratio, thresholds)
    phase_range = None

    if regime.case_id == 1:
        alpha, beta = math.cos(PI / 8), -1j * math.sin(PI / 8)
    elif regime.case_id == 2:
        alpha = transition_alpha2(ratio)
        beta = beta_star_given_alpha(alpha, ratio)[0]
    elif regime.case_id == 3:
        alpha = transition_alpha1(ratio)
        beta = beta_star_given_alpha(alpha, ratio)[0]
    elif regime.case_id == 4:
        bounds = BoundaryFunctions(ratio)
        upper = _root(lambda t: float(bounds.beta1(t)) - 1.0, -PI / 4, 0.0,
                      f"upper phase at ratio {ratio}")
        lower = _root(lambda t: float(bounds.beta3(t)) - 1.0, -PI / 2, -PI / 4,
                      f"lower phase at ratio {ratio}")
        phase_range = (lower, upper)
        alpha, beta = 0.0, np.exp(1j * 0.5 * (lower + upper))
    else:
        phase_range = (-PI, 0.0)
        alpha, beta = 0.0, -1j

    beta = complex(beta)
    headroom = float(magnitude_limit(np.angle(beta), alpha, ratio)) - abs(beta)
    if headroom < -SOLVER_CONFIG["constraint_tol"]:
        log.warning(f"solve(ratio={ratio:.6g}): |beta| exceeds its limit by {-headroom:.3g}")
    result = SolverResult(alpha=float(alpha), beta=beta, dmin=dmin_given(alpha, beta, ratio),
                          case_id=regime.case_id, beta_phase_range=phase_range)
    log.debug(f"solve(ratio={ratio:.6g}) -> case {result.case_id}, "
              f"alpha={result.alpha:.6f}, beta={result.beta:.6f}, dmin={result.dmin:.6f}")
    return result


def solve_batch(ratios) -> Tuple[np.ndarray, np.ndarray]:
    """
    Vectorised solve() for an array of ratios, default thresholds only.

    The transition points and the case-4 phase limits solve quadratics in
    closed form here, so no per-ratio root search is needed.

    Returns:
        (alpha, beta) arrays shaped like ratios
    """
    r = np.asarray(ratios, dtype=float)
    if np.any(r < 0) or not np.all(np.isfinite(r)):
        raise ValueError("Channel strength ratios must be finite and nonnegative")
    t1, t2, t3 = RATIO_THRESHOLDS
    k2 = (SQRT2 - 1.0) ** 2
    gb = NODE_GAIN * math.sqrt(1.5)

    # (sqrt2 - 1)(r + a) = sqrt(1 - a^2)
    alpha2 = (-k2 * r + np.sqrt(np.maximum(k2 + 1.0 - k2 * r ** 2, 0.0))) / (k2 + 1.0)
    # NODE_GAIN (r + a) = sqrt(1 - a^2 / 2) - a / sqrt2
    alpha1 = (-gb * r + np.sqrt(np.maximum(2.0 - 0.5 * (NODE_GAIN * r) ** 2, 0.0))) / 2.0
    safe = np.maximum(r, 1.0)
    lower = np.arcsin(np.clip((1.0 - safe ** 2) / (2.0 * safe), -1.0, 1.0))
    upper = -np.arccos(np.clip((safe ** 2 - 1.0) / (2.0 * safe), -1.0, 1.0))

    alpha = np.select(
        [r == 0, r < t1, r < t2],
        [math.cos(PI / 8), alpha2, alpha1],
        default=0.0,
    )
    beta = np.select(
        [r == 0, r < t1, r < t2, r < t3],
        [-1j * math.sin(PI / 8),
         -1j * np.sqrt(np.maximum(1.0 - alpha2 ** 2, 0.0)),
         NODE_GAIN * (r + alpha1) * np.exp(-1j * PI / 4),
         np.exp(0.5j * (lower + upper))],
        default=-1j,
    )
    return alpha, beta.astype(complex)


def grid_oracle(ratio: float, alpha_step: float, mag_step: float, phase_step: float,
                alphas: Optional[Sequence[float]] = None) -> SolverResult:
    """
    Exhaustive search over (alpha, |beta|, phase) keeping feasible points only.

    Angle constraints are checked on the constellation itself, not through the
    closed-form magnitude limits. Ties keep the first point in (alpha, |beta|,
    phase) order.
    """
    if min(alpha_step, mag_step, phase_step) <= 0:
        raise ValueError("Grid steps must be positive")
    tol = 1e-12
    if alphas is None:
        alphas = np.linspace(0.0, 1.0, int(round(1.0 / alpha_step)) + 1)
    mags = np.linspace(0.0, 1.0, int(round(1.0 / mag_step)) + 1)
    phases = np.linspace(-PI, 0.0, int(math.ceil(PI / phase_step)) + 1)
    beta = mags[:, None] * np.exp(1j * phases[None, :])

    best = None
    for alpha in alphas:
        xi = ratio + alpha
        lower = np.angle(xi + beta)
        upper = np.angle(xi - beta)
        feasible = ((lower >= -PI / 4 - tol) & (lower <= tol)
                    & (upper >= -tol) & (upper <= PI / 4 + tol)
                    & (np.abs(alpha + beta) <= 1 + tol) & (np.abs(alpha - beta) <= 1 + tol))
        if not feasible.any():
            continue
        dist = np.where(feasible, _min_distance(xi, beta), -np.inf)
        k = int(np.argmax(dist))
        if best is None or dist.flat[k] > best[0]:
            best = (float(dist.flat[k]), float(alpha), complex(beta.flat[k]))

    if best is None:
        raise NoSolution(f"No feasible grid point at ratio {ratio}")
    dmin, alpha, b = best
    return SolverResult(alpha=alpha, beta=b, dmin=dmin,
                        case_id=RatioRegime.classify(ratio).case_id)
