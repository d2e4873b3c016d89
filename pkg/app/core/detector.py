"""
Receivers: joint ML detection for the conventional scheme and the two-step
composite detector for the proposed scheme, plus bit-error accounting
"""

import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from config.config import SOLVER_CONFIG
from .channel import ChannelRealization
from .modulation import (C_LABELS, C_POINTS, COMPOSITE_C, COMPOSITE_S, S_LABELS, S_POINTS,
                         CompositeConstellation, composite_points)

log = logging.getLogger(__name__)

POPCOUNT = np.array([bin(i).count("1") for i in range(8)])


@dataclass(frozen=True)
class Decision:
    s_hat: complex
    c_hat: int
    s_index: int
    c_index: int
    x_index: Optional[int]
    tie: bool


@dataclass(frozen=True)
class ErrorCounts:
    """Bit errors out of 2*trials (s), trials (c) and 3*trials (x)"""
    trials: int = 0
    bit_errors_s: int = 0
    bit_errors_c: int = 0
    bit_errors_x: int = 0

    def __post_init__(self):
        if self.bit_errors_x != self.bit_errors_s + self.bit_errors_c:
            raise ValueError(
                f"Composite errors {self.bit_errors_x} != {self.bit_errors_s} + {self.bit_errors_c}")

    def __add__(self, other: "ErrorCounts") -> "ErrorCounts":
        return ErrorCounts(trials=self.trials + other.trials,
                           bit_errors_s=self.bit_errors_s + other.bit_errors_s,
                           bit_errors_c=self.bit_errors_c + other.bit_errors_c,
                           bit_errors_x=self.bit_errors_x + other.bit_errors_x)

    @property
    def bits_s(self) -> int:
        return 2 * self.trials

    @property
    def bits_c(self) -> int:
        return self.trials

    @property
    def bits_x(self) -> int:
        return 3 * self.trials


def nearest(y: np.ndarray, candidates: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Index of the closest candidate per sample, ties to the lowest index.

    Args:
        y: Received samples, shape (n,)
        candidates: Noiseless hypotheses, shape (n, m)

    Returns:
        (index, tie) arrays of shape (n,)
    """
    y = np.asarray(y)[..., None]
    dist = np.abs(y - candidates) ** 2
    best = dist.min(axis=-1, keepdims=True)
    scale = np.maximum(np.abs(y) ** 2, (np.abs(candidates) ** 2).max(axis=-1, keepdims=True))
    within = dist <= best + SOLVER_CONFIG["tie_tol"] * scale
    return np.argmax(within, axis=-1), within.sum(axis=-1) > 1


def _decision(index: int, tie: bool, composite: bool) -> Decision:
    s_idx, c_idx = int(COMPOSITE_S[index]), int(COMPOSITE_C[index])
    return Decision(s_hat=complex(S_POINTS[s_idx]), c_hat=int(C_POINTS[c_idx]),
                    s_index=s_idx, c_index=c_idx,
                    x_index=index if composite else None, tie=bool(tie))


def conventional_hypotheses(h, w, power: float) -> np.ndarray:
    """Noiseless sqrt(p) * (h + w*c) * s over (s, c) in composite slot order"""
    return np.sqrt(power) * composite_points(h, w, 1.0, 0.0, 1.0)


def detect_conventional(y: complex, real: ChannelRealization, phi_con: np.ndarray,
                        power: float) -> Decision:
    """Joint ML detection of (s, c) when c multiplies the whole reflected link"""
    w = np.sum(np.conj(real.h_r) * phi_con * real.f)
    hyps = conventional_hypotheses(real.h, w, power)
    idx, tie = nearest(np.array([y]), hyps[None, :])
    return _decision(int(idx[0]), tie[0], composite=False)


def detect_composite(y: complex, constellation: CompositeConstellation) -> Decision:
    """Nearest composite point, then demap through its provenance"""
    if abs(constellation.gain) <= 0:
        raise ValueError("Constellation gain must be positive")
    idx, tie = nearest(np.array([y]), (constellation.gain * constellation.points)[None, :])
    return _decision(int(idx[0]), tie[0], composite=True)


def accumulate(counts: ErrorCounts, truth: Tuple[int, int], decision: Decision,
               labels: Tuple[np.ndarray, np.ndarray] = (S_LABELS, C_LABELS)) -> ErrorCounts:
    """Add one symbol's bit errors; truth is (s index, c index)"""
    s_labels, c_labels = labels
    s_err = int(POPCOUNT[s_labels[truth[0]] ^ s_labels[decision.s_index]])
    c_err = int(POPCOUNT[c_labels[truth[1]] ^ c_labels[decision.c_index]])
    return counts + ErrorCounts(trials=1, bit_errors_s=s_err, bit_errors_c=c_err,
                                bit_errors_x=s_err + c_err)


def tally(s_true: np.ndarray, c_true: np.ndarray, s_hat: np.ndarray,
          c_hat: np.ndarray) -> ErrorCounts:
    """Vectorised accumulate over a batch of symbol indices"""
    s_err = int(POPCOUNT[S_LABELS[s_true] ^ S_LABELS[s_hat]].sum())
    c_err = int(POPCOUNT[C_LABELS[c_true] ^ C_LABELS[c_hat]].sum())
    return ErrorCounts(trials=int(len(s_true)), bit_errors_s=s_err, bit_errors_c=c_err,
                       bit_errors_x=s_err + c_err)
