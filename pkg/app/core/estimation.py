"""
Least-squares estimation of the direct link and the cascaded surface channel
from DFT training patterns
"""

import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .channel import ChannelRealization
from .errors import SingularGram

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainingPlan:
    """
    T training slots for K elements. Row t of patterns is [1, phi_t]: the
    direct link always contributes, the surface applies pattern phi_t.
    """
    T: int
    K: int
    patterns: np.ndarray
    pilots: np.ndarray

    @classmethod
    def dft(cls, K: int, T: int) -> "TrainingPlan":
        """Stacked (K+1)-point DFT blocks with all-ones pilots"""
        n = K + 1
        if K < 1:
            raise ValueError(f"Element count must be positive, got {K}")
        if T < n or T % n:
            raise ValueError(f"Training length T={T} must be a positive multiple of K+1={n}")
        grid = np.arange(n)
        block = np.exp(-2j * np.pi * np.outer(grid, grid) / n)
        return cls(T=T, K=K, patterns=np.tile(block, (T // n, 1)), pilots=np.ones(T, dtype=complex))

    @property
    def matrix(self) -> np.ndarray:
        """S * Phi_0, the T x (K+1) training matrix without power"""
        return self.pilots[:, None] * self.patterns

    def gram(self) -> np.ndarray:
        A = self.matrix
        G = A.conj().T @ A
        if np.linalg.matrix_rank(G) < self.K + 1:
            raise SingularGram(f"Training Gram matrix is rank deficient (T={self.T}, K={self.K})")
        return G


@dataclass(frozen=True)
class CsiEstimate:
    h_hat: complex
    v_hat: np.ndarray
    mse_pred: float


def predict_mse(plan: TrainingPlan, power: float, sigma2: float) -> float:
    """Total LS error variance over the K+1 unknowns"""
    G = plan.gram()
    return float(sigma2 / power * np.trace(np.linalg.inv(G)).real)


def observe(plan: TrainingPlan, h, v, power: float, sigma2: float,
            rng: np.random.Generator) -> np.ndarray:
    """
    Training observations y = sqrt(p) * S Phi_0 [h; v] + z.

    h may be a scalar or shape (n,), v shape (K,) or (n, K); output is (T,) or (n, T).
    """
    unknowns = np.concatenate([np.atleast_1d(h)[..., None], np.atleast_2d(v)], axis=-1)
    clean = np.sqrt(power) * unknowns @ plan.matrix.T
    z = rng.standard_normal(clean.shape + (2,))
    noisy = clean + np.sqrt(sigma2 / 2) * (z[..., 0] + 1j * z[..., 1])
    return noisy[0] if np.ndim(h) == 0 else noisy


def estimate_batch(observations: np.ndarray, plan: TrainingPlan,
                   power: float) -> Tuple[np.ndarray, np.ndarray]:
    """LS estimates for a batch of observation rows, returns (h_hat, v_hat)"""
    A = plan.matrix
    G = plan.gram()
    Y = np.atleast_2d(observations)
    rhs = (Y @ A.conj()).T
    est = np.linalg.solve(G, rhs).T / np.sqrt(power)
    return est[:, 0], est[:, 1:]


def ls_estimate(observations: np.ndarray, plan: TrainingPlan, power: float,
                sigma2: float) -> CsiEstimate:
    """
    LS estimate of h and the cascaded channel v_k = conj(h_r,k) * f_k.

    Args:
        observations: Length-T training samples
        plan: Training plan the samples were collected with
        power: Transmit power used during training
        sigma2: Noise power, only used for the predicted MSE

    Returns:
        CsiEstimate
    """
    h_hat, v_hat = estimate_batch(observations, plan, power)
    return CsiEstimate(h_hat=complex(h_hat[0]), v_hat=v_hat[0],
                       mse_pred=predict_mse(plan, power, sigma2))


def degrade_realization(real: ChannelRealization, est: CsiEstimate) -> ChannelRealization:
    """
    Realization the transmitter believes in: h and the per-element reflected
    products come from the estimate. Detection noise and propagation still use
    the true realization.
    """
    if est.v_hat.shape != (real.K,):
        raise ValueError(f"Estimate has {est.v_hat.shape} elements, channel has {real.K}")
    return ChannelRealization(h_d=est.h_hat, f=est.v_hat, h_r=np.ones(real.K, dtype=complex),
                              a_s=0j)


def estimate_realization(real: ChannelRealization, plan: TrainingPlan, power: float,
                         sigma2: float, rng: np.random.Generator) -> ChannelRealization:
    y = observe(plan, real.h, real.cascade, power, sigma2, rng)
    return degrade_realization(real, ls_estimate(y, plan, power, sigma2))
