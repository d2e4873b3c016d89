"""
Channel generation for the RIS-assisted link
Path loss, spatial correlation, Rayleigh draws and the effective link quantities
"""

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Dict, Optional, Tuple

import numpy as np

from .errors import DegenerateChannel, DegenerateGeometry
from .numerics import psd_sqrt

log = logging.getLogger(__name__)

Point = Tuple[float, float]


def path_loss(d: float, xi: float) -> float:
    """Large-scale power gain 1e-3 * d^-xi"""
    if d <= 0:
        raise DegenerateGeometry(f"Link distance must be positive, got {d}")
    if xi <= 0:
        raise DegenerateGeometry(f"Path-loss exponent must be positive, got {xi}")
    return 1e-3 * d ** (-xi)


@dataclass(frozen=True)
class Topology:
    ptx: Point
    ris: Point
    crx: Point
    exp_direct: float
    exp_ptx_ris: float
    exp_ris_crx: float

    def __post_init__(self):
        for name, d in (("direct", self.d_direct), ("ptx_ris", self.d_ptx_ris),
                        ("ris_crx", self.d_ris_crx)):
            if d <= 0:
                raise DegenerateGeometry(f"Zero-length {name} link in topology")
        for exp in (self.exp_direct, self.exp_ptx_ris, self.exp_ris_crx):
            if exp <= 0:
                raise DegenerateGeometry(f"Path-loss exponents must be positive, got {exp}")

    @classmethod
    def from_config(cls, cfg: Dict) -> "Topology":
        return cls(ptx=tuple(cfg["ptx"]), ris=tuple(cfg["ris"]), crx=tuple(cfg["crx"]),
                   exp_direct=cfg["exp_direct"], exp_ptx_ris=cfg["exp_ptx_ris"],
                   exp_ris_crx=cfg["exp_ris_crx"])

    @property
    def d_direct(self) -> float:
        return math.dist(self.ptx, self.crx)

    @property
    def d_ptx_ris(self) -> float:
        return math.dist(self.ptx, self.ris)

    @property
    def d_ris_crx(self) -> float:
        return math.dist(self.ris, self.crx)

    @property
    def loss_direct(self) -> float:
        return path_loss(self.d_direct, self.exp_direct)

    @property
    def loss_ptx_ris(self) -> float:
        return path_loss(self.d_ptx_ris, self.exp_ptx_ris)

    @property
    def loss_ris_crx(self) -> float:
        return path_loss(self.d_ris_crx, self.exp_ris_crx)

    def to_dict(self) -> Dict:
        return {
            "ptx": list(self.ptx), "ris": list(self.ris), "crx": list(self.crx),
            "exp_direct": self.exp_direct, "exp_ptx_ris": self.exp_ptx_ris,
            "exp_ris_crx": self.exp_ris_crx,
        }


@dataclass(frozen=True)
class CorrelationSpec:
    """Uniform planar array layout: k_h columns, k_v rows, spacing in wavelengths"""
    k_h: int
    k_v: int
    spacing_over_lambda: float

    def __post_init__(self):
        if self.k_h < 1 or self.k_v < 1:
            raise ValueError(f"Array dimensions must be positive, got {self.k_h}x{self.k_v}")
        if self.spacing_over_lambda <= 0:
            raise ValueError(f"Element spacing must be positive, got {self.spacing_over_lambda}")

    @property
    def K(self) -> int:
        return self.k_h * self.k_v


def correlation_matrix(spec: CorrelationSpec) -> np.ndarray:
    """Sinc spatial correlation of the planar array, unit diagonal"""
    idx = np.arange(spec.K)
    pos = np.stack([idx % spec.k_h, idx // spec.k_h], axis=1) * spec.spacing_over_lambda
    dist = np.linalg.norm(pos[:, None, :] - pos[None, :, :], axis=-1)
    # np.sinc is the normalised sin(pi x) / (pi x)
    return np.sinc(2.0 * dist)


def _structural(a_s: complex, cascade: np.ndarray):
    return a_s * cascade.sum(axis=-1)


@dataclass(frozen=True)
class ChannelRealization:
    """
    One coherence block of the link.

    h_d is the direct link, f the PTx->surface vector, h_r the surface->C-Rx vector
    and a_s the structural-mode coefficient (a_s * identity). h, g and align_phases
    are derived on construction.
    """
    h_d: complex
    f: np.ndarray
    h_r: np.ndarray
    a_s: complex = 0j
    h: complex = field(init=False)
    g: float = field(init=False)
    align_phases: np.ndarray = field(init=False)

    def __post_init__(self):
        f = np.asarray(self.f, dtype=complex)
        h_r = np.asarray(self.h_r, dtype=complex)
        if f.shape != h_r.shape or f.ndim != 1:
            raise ValueError(f"f and h_r must be equal-length vectors, got {f.shape}, {h_r.shape}")
        cascade = f * np.conj(h_r)
        object.__setattr__(self, "f", f)
        object.__setattr__(self, "h_r", h_r)
        object.__setattr__(self, "h", complex(self.h_d + _structural(self.a_s, cascade)))
        object.__setattr__(self, "g", float(np.sum(np.abs(f) * np.abs(h_r))))
        object.__setattr__(self, "align_phases", -np.angle(cascade))

    @property
    def K(self) -> int:
        return self.f.shape[0]

    @property
    def cascade(self) -> np.ndarray:
        """Per-element reflected products f_k * conj(h_r,k)"""
        return self.f * np.conj(self.h_r)

    @property
    def ratio(self) -> float:
        if self.g <= 0:
            raise DegenerateChannel("Channel strength ratio undefined for g = 0")
        return abs(self.h) / self.g


@dataclass
class ChannelBatch:
    """Many realizations drawn from one stream, stored as arrays (trials first)"""
    h_d: np.ndarray
    f: np.ndarray
    h_r: np.ndarray
    a_s: complex = 0j

    @property
    def n(self) -> int:
        return self.h_d.shape[0]

    @property
    def cascade(self) -> np.ndarray:
        return self.f * np.conj(self.h_r)

    @property
    def h(self) -> np.ndarray:
        return self.h_d + _structural(self.a_s, self.cascade)

    @property
    def g(self) -> np.ndarray:
        return np.sum(np.abs(self.f) * np.abs(self.h_r), axis=-1)

    def realization(self, i: int) -> ChannelRealization:
        return ChannelRealization(h_d=complex(self.h_d[i]), f=self.f[i], h_r=self.h_r[i],
                                  a_s=self.a_s)

    def rescale_to_ratio(self, target_ratio: float) -> "ChannelBatch":
        if target_ratio < 0:
            raise ValueError(f"Target ratio must be nonnegative, got {target_ratio}")
        g = self.g
        if np.any(g <= 0):
            raise DegenerateChannel("Cannot rescale a realization with g = 0")
        structural = _structural(self.a_s, self.cascade)
        h = self.h_d + structural
        phase = np.where(np.abs(h) > 0, np.angle(h), 0.0)
        h_new = target_ratio * g * np.exp(1j * phase)
        return ChannelBatch(h_d=h_new - structural, f=self.f, h_r=self.h_r, a_s=self.a_s)

    def slice(self, start: int, stop: int) -> "ChannelBatch":
        return ChannelBatch(h_d=self.h_d[start:stop], f=self.f[start:stop],
                            h_r=self.h_r[start:stop], a_s=self.a_s)


def _unit_gaussian(rng: np.random.Generator, shape) -> np.ndarray:
    x = rng.standard_normal(shape + (2,))
    return (x[..., 0] + 1j * x[..., 1]) / np.sqrt(2.0)


def draw_batch(topology: Topology, K: int, n: int, corr: Optional[CorrelationSpec],
               a_s: complex, rng: np.random.Generator,
               unit_fading: bool = False) -> ChannelBatch:
    """
    Draw n Rayleigh realizations.

    Draw order is fixed (direct link, then PTx->surface, then surface->C-Rx) so a
    given stream always yields the same channels.
    """
    if K < 1:
        raise ValueError(f"Element count must be positive, got {K}")
    if corr is not None and corr.K != K:
        raise ValueError(f"Correlation layout has {corr.K} elements, expected {K}")

    if unit_fading:
        h_d_tilde = np.ones(n, dtype=complex)
        f_tilde = np.ones((n, K), dtype=complex)
        h_r_tilde = np.ones((n, K), dtype=complex)
    else:
        h_d_tilde = _unit_gaussian(rng, (n,))
        f_tilde = _unit_gaussian(rng, (n, K))
        h_r_tilde = _unit_gaussian(rng, (n, K))

    if corr is not None:
        S = psd_sqrt(correlation_matrix(corr))
        f_tilde = f_tilde @ S.T
        h_r_tilde = h_r_tilde @ S.T

    return ChannelBatch(
        h_d=np.sqrt(topology.loss_direct) * h_d_tilde,
        f=np.sqrt(topology.loss_ptx_ris) * f_tilde,
        h_r=np.sqrt(topology.loss_ris_crx) * h_r_tilde,
        a_s=complex(a_s),
    )


def draw_realization(topology: Topology, K: int, corr: Optional[CorrelationSpec],
                     a_s: complex, rng_stream: np.random.Generator,
                     unit_fading: bool = False) -> ChannelRealization:
    return draw_batch(topology, K, 1, corr, a_s, rng_stream, unit_fading).realization(0)


def rescale_to_ratio(real: ChannelRealization, target_ratio: float) -> ChannelRealization:
    """Copy of real with h_d adjusted so |h|/g = target_ratio, keeping angle(h) and g"""
    if target_ratio < 0:
        raise ValueError(f"Target ratio must be nonnegative, got {target_ratio}")
    if real.g <= 0:
        raise DegenerateChannel("Cannot rescale a realization with g = 0")
    structural = _structural(real.a_s, real.cascade)
    phase = np.angle(real.h) if abs(real.h) > 0 else 0.0
    h_new = target_ratio * real.g * np.exp(1j * phase)
    return replace(real, h_d=complex(h_new - structural))


def fixed_realization(K: int, ratio: float) -> ChannelRealization:
    """Deterministic channel with g = 1, real positive h = ratio and no structural term"""
    if K < 1:
        raise ValueError(f"Element count must be positive, got {K}")
    unit = np.full(K, 1.0 / np.sqrt(K), dtype=complex)
    return ChannelRealization(h_d=complex(ratio), f=unit, h_r=unit.copy(), a_s=0j)


def typical_ratio(topology: Topology, K: int) -> float:
    """Ratio of mean |h_d| to mean aligned gain g under Rayleigh fading"""
    mean_direct = math.sqrt(topology.loss_direct) * math.sqrt(math.pi) / 2.0
    mean_gain = K * (math.pi / 4.0) * math.sqrt(topology.loss_ptx_ris * topology.loss_ris_crx)
    return mean_direct / mean_gain


def elements_for_ratio(topology: Topology, ratio: float) -> int:
    """Element count whose typical channel strength ratio is closest to ratio"""
    if ratio <= 0:
        raise ValueError(f"Ratio must be positive, got {ratio}")
    return max(1, round(typical_ratio(topology, 1) / ratio))
