"""
Analytical BER evaluators

Exact BER for the standard 8PSK geometry (no direct link) from the phase
density of a noisy point, the strong-direct-link asymptotics, and the
nearest-neighbour pairwise approximation for any composite constellation.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from config.config import SOLVER_CONFIG
from .detector import POPCOUNT
from .errors import DegenerateConstellation, NotApplicable
from .modulation import CompositeConstellation
from .numerics import Interval, integrate, q_function

log = logging.getLogger(__name__)

PI = math.pi


@dataclass(frozen=True)
class SnrPair:
    """Instantaneous direct-link and reflecting-link SNRs (linear)"""
    gamma_d: float
    gamma_b: float

    def __post_init__(self):
        for value in (self.gamma_d, self.gamma_b):
            if not (math.isfinite(value) and value >= 0):
                raise ValueError(f"SNR values must be finite and nonnegative, got {value}")


@dataclass(frozen=True)
class BerTriple:
    p_x: float
    p_s: float
    p_c: float

    def to_dict(self):
        return {"ber_x": self.p_x, "ber_s": self.p_s, "ber_c": self.p_c}


def _phase_kernel(phi, gamma):
    """e^{-g sin^2} cos (1 + erf(sqrt(g) cos)), evaluated without cancellation"""
    phi = np.asarray(phi, dtype=float)
    c = np.cos(phi)
    a = np.sqrt(gamma) * c
    front = np.exp(-gamma * np.sin(phi) ** 2) * c * special.erfc(-a)
    back = np.exp(-gamma) * c * special.erfcx(-a)
    return np.where(c >= 0, front, back)


def phase_pdf(phi, gamma_b: float):
    """Density of the phase of a unit point in complex Gaussian noise at SNR gamma_b"""
    if gamma_b < 0:
        raise ValueError(f"gamma_b must be nonnegative, got {gamma_b}")
    density = (math.exp(-gamma_b) / (2 * PI)
               + 0.5 * math.sqrt(gamma_b / PI) * _phase_kernel(phi, gamma_b))
    return np.maximum(density, 0.0)


def _sector(gamma: float, lo: float, hi: float) -> float:
    return integrate(lambda p: float(_phase_kernel(p, gamma)), Interval(lo, hi),
                     SOLVER_CONFIG["quad_tol"])


def ber_8psk_exact(gamma_b: float, ratio: float = 0.0) -> BerTriple:
    """
    Exact BER of the no-direct-link design, which is 8PSK with rule-I labels.

    Args:
        gamma_b: Instantaneous reflecting-link SNR g^2 / sigma^2 (linear)
        ratio: Channel strength ratio; anything but 0 is rejected

    Returns:
        BerTriple for x, s and c
    """
    if ratio != 0:
        raise NotApplicable(f"Exact 8PSK BER only holds at ratio 0, got {ratio}")
    if gamma_b < 0:
        raise ValueError(f"gamma_b must be nonnegative, got {gamma_b}")

    base = math.exp(-gamma_b) / 8.0
    weight = 0.5 * math.sqrt(gamma_b / PI)
    adjacent = base + weight * _sector(gamma_b, PI / 8, 3 * PI / 8)        # +-pi/4
    quarter = base + weight * _sector(gamma_b, 3 * PI / 8, 5 * PI / 8)     # +-pi/2
    three_quarter = base + weight * _sector(gamma_b, 5 * PI / 8, 7 * PI / 8)
    # The opposite sector wraps around pi, so both halves count
    opposite = base + 2 * weight * _sector(gamma_b, 7 * PI / 8, PI)

    # Bit distances from the reference point: +pi/4 -> 1, -pi/4 -> 2,
    # +-pi/2 -> 1, +3pi/4 -> 2, -3pi/4 -> 3, pi -> 2
    p_x = (2 * quarter + adjacent) / 3 + 2 * (opposite + three_quarter + adjacent) / 3 \
        + three_quarter
    p_s = 0.5 * (2 * quarter + three_quarter + adjacent) + opposite + three_quarter
    p_c = 2 * adjacent + 2 * three_quarter
    return BerTriple(p_x=p_x, p_s=p_s, p_c=p_c)


def ber_asymptotic(snr: SnrPair) -> BerTriple:
    """Strong-direct-link limit where s and c errors decouple"""
    p_s = float(q_function(math.sqrt(snr.gamma_d)))
    p_c = float(q_function(math.sqrt(2 * snr.gamma_b)))
    return BerTriple(p_x=2 * p_s / 3 + p_c / 3, p_s=p_s, p_c=p_c)


def ber_nn_approx(constellation: CompositeConstellation, sigma: float) -> BerTriple:
    """
    Nearest-neighbour pairwise-error approximation.

    Each point only confuses with the points at its own minimum distance
    (within a relative 1e-6); errors are weighted by Hamming distance.
    """
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    points = constellation.points
    labels = constellation.labels
    mu = abs(constellation.gain) / (math.sqrt(2.0) * sigma)
    scale = max(np.abs(points).max(), 1.0)

    dist = np.abs(points[:, None] - points[None, :])
    np.fill_diagonal(dist, np.inf)
    d_min = dist.min(axis=1)
    if np.any(d_min <= 1e-12 * scale):
        raise DegenerateConstellation("Coincident composite points, neighbour sets undefined")

    neighbors = dist <= (1 + SOLVER_CONFIG["neighbor_rel"]) * d_min[:, None]
    pep = np.where(neighbors, q_function(mu * np.where(neighbors, dist, 0.0)), 0.0)

    flips = labels[:, None] ^ labels[None, :]
    x_bits = POPCOUNT[flips]
    c_bits = flips & 1
    s_bits = x_bits - c_bits

    n = len(points)
    return BerTriple(p_x=float((pep * x_bits).sum() / (3 * n)),
                     p_s=float((pep * s_bits).sum() / (2 * n)),
                     p_c=float((pep * c_bits).sum() / n))
