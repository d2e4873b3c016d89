"""
Constellations, reflection patterns and the composite signal
"""

import logging
from dataclasses import dataclass, replace
from enum import Enum
from typing import List, Optional, Tuple

import numpy as np

from config.config import SOLVER_CONFIG
from .channel import ChannelRealization
from .errors import DegenerateChannel, ModulusViolation

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class PrimaryConstellation:
    """Gray-labelled QPSK in quadrant order"""
    points: Tuple[complex, ...] = tuple(np.array([1 + 1j, -1 + 1j, -1 - 1j, 1 - 1j]) / np.sqrt(2))
    bit_labels: Tuple[int, ...] = (0b00, 0b01, 0b11, 0b10)


@dataclass(frozen=True)
class SecondaryConstellation:
    """Antipodal symbols; +1 carries bit 1, -1 carries bit 0"""
    points: Tuple[int, ...] = (1, -1)
    bit_labels: Tuple[int, ...] = (1, 0)


PRIMARY = PrimaryConstellation()
SECONDARY = SecondaryConstellation()

S_POINTS = np.array(PRIMARY.points)
C_POINTS = np.array(SECONDARY.points, dtype=float)
S_LABELS = np.array(PRIMARY.bit_labels)
C_LABELS = np.array(SECONDARY.bit_labels)

# Composite slot i carries (s index, c index) = (i // 2, i % 2)
COMPOSITE_S = np.repeat(np.arange(4), 2)
COMPOSITE_C = np.tile(np.arange(2), 4)
# Composite word = [s bit1, s bit0, c bit]
COMPOSITE_LABELS = (S_LABELS[COMPOSITE_S] << 1) | C_LABELS[COMPOSITE_C]


class Scheme(str, Enum):
    CONVENTIONAL = "conventional"
    PROPOSED = "proposed"


@dataclass(frozen=True)
class ModulationDesign:
    """
    Split of the reflection pattern into a symbol-invariant part (alpha) and a
    symbol-varying part (beta * c), sharing the alignment vector phi.
    """
    scheme: Scheme
    alpha: float
    beta: complex
    phi: Optional[np.ndarray] = None

    @classmethod
    def conventional(cls) -> "ModulationDesign":
        return cls(scheme=Scheme.CONVENTIONAL, alpha=0.0, beta=1 + 0j)

    @classmethod
    def proposed(cls, alpha: float, beta: complex) -> "ModulationDesign":
        return cls(scheme=Scheme.PROPOSED, alpha=float(alpha), beta=complex(beta))

    def with_phases(self, phi: np.ndarray) -> "ModulationDesign":
        return replace(self, phi=np.asarray(phi, dtype=complex))

    @property
    def satisfies_modulus(self) -> bool:
        tol = SOLVER_CONFIG["constraint_tol"]
        return (abs(self.alpha + self.beta) <= 1 + tol
                and abs(self.alpha - self.beta) <= 1 + tol)


@dataclass(frozen=True)
class CompositeConstellation:
    points: np.ndarray
    labels: np.ndarray
    provenance: Tuple[Tuple[int, int], ...]
    gain: complex

    def coincidences(self, rel_tol: float = 1e-12) -> List[Tuple[int, int]]:
        """Index pairs whose points coincide"""
        scale = max(np.abs(self.points).max(), 1.0)
        pairs = []
        for i in range(len(self.points)):
            for j in range(i + 1, len(self.points)):
                if abs(self.points[i] - self.points[j]) <= rel_tol * scale:
                    pairs.append((i, j))
        return pairs


def build_phase_matrix(real: ChannelRealization) -> np.ndarray:
    """Alignment vector: every reflected path arrives with the phase of h"""
    rotation = np.angle(real.h) if abs(real.h) > 0 else 0.0
    return np.exp(1j * (rotation + real.align_phases))


def reflection_coeffs(design: ModulationDesign, c: int, clamp: bool = False) -> np.ndarray:
    """
    Per-element reflection coefficients (alpha + beta * c) * phi.

    Args:
        design: Design carrying the alignment vector
        c: Secondary symbol, +1 or -1
        clamp: Rescale moduli that exceed one by at most clamp_tol instead of failing

    Returns:
        Length-K complex coefficient vector
    """
    if c not in (1, -1):
        raise ValueError(f"Secondary symbol must be +1 or -1, got {c}")
    if design.phi is None:
        raise ValueError("Design has no alignment vector; call with_phases first")

    amplitude = design.alpha + design.beta * c
    excess = abs(amplitude) - 1.0
    if excess > SOLVER_CONFIG["constraint_tol"]:
        if not clamp or excess > SOLVER_CONFIG["clamp_tol"]:
            raise ModulusViolation(
                f"|alpha + beta*c| = {abs(amplitude):.6f} exceeds 1 for c={c}")
        log.warning(f"Clamping reflection modulus {abs(amplitude):.6f} to 1 for c={c}")
        amplitude = amplitude / abs(amplitude)
    return amplitude * design.phi


def composite_points(h, w, g, alpha, beta) -> np.ndarray:
    """
    Normalised composite points in slot order, broadcasting over leading axes.

    h, w, g, alpha and beta are scalars or arrays of shape (n,); the result has
    a trailing axis of 8 slots.
    """
    h, w, g, alpha, beta = (np.asarray(v)[..., None] for v in (h, w, g, alpha, beta))
    amplitude = alpha + beta * C_POINTS[COMPOSITE_C]
    return (h + amplitude * w) * S_POINTS[COMPOSITE_S] / g


def build_composite(real: ChannelRealization, design: ModulationDesign,
                    power: float = 1.0) -> CompositeConstellation:
    """
    Composite constellation seen at the receiver, normalised by g.

    Point i is (h + (alpha + beta*c) * w) * s / g with w the aligned reflecting
    sum, which equals (h/g + alpha + beta*c) * s when h is real positive.
    """
    if real.g <= 0:
        raise DegenerateChannel("Composite constellation undefined for g = 0")
    phi = design.phi if design.phi is not None else build_phase_matrix(real)
    w = np.sum(np.conj(real.h_r) * phi * real.f)

    points = composite_points(real.h, w, real.g, design.alpha, design.beta)
    provenance = tuple(zip(COMPOSITE_S.tolist(), COMPOSITE_C.tolist()))
    constellation = CompositeConstellation(points=points, labels=COMPOSITE_LABELS.copy(),
                                           provenance=provenance,
                                           gain=complex(np.sqrt(power) * real.g))
    overlaps = constellation.coincidences()
    if overlaps:
        log.debug(f"Composite constellation has coincident points: {overlaps}")
    return constellation
