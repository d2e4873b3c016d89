"""
Seeded Monte Carlo engine

Trials are grouped in fixed-size blocks. Every block draws from its own stream
keyed by (seed, snr_index, block), and all draws of a block are made before
any trial is processed, so the draws of a trial never depend on how trials are
split across workers.
"""

import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Tuple, Union

import numpy as np
from scipy import stats

from config.config import MAX_WORKERS, SIMULATION_CONFIG
from .channel import ChannelBatch, CorrelationSpec, Topology, draw_batch
from .detector import ErrorCounts, nearest, tally
from .errors import SrrisError, TrialError
from .estimation import TrainingPlan, estimate_batch, observe
from .modulation import COMPOSITE_C, COMPOSITE_S, Scheme, composite_points
from .numerics import db_to_linear, dbm_to_watts, linear_to_db, q_function
from .optimizer import beta_star_given_alpha, solve, solve_batch

log = logging.getLogger(__name__)

Z95 = float(stats.norm.ppf(0.975))


@dataclass(frozen=True)
class FixedRatio:
    ratio: float

    def __post_init__(self):
        if not (math.isfinite(self.ratio) and self.ratio >= 0):
            raise ValueError(f"Fixed ratio must be finite and nonnegative, got {self.ratio}")


@dataclass(frozen=True)
class NaturalK:
    """Ratio follows from the drawn channel and the element count"""


@dataclass(frozen=True)
class PerfectCsi:
    pass


@dataclass(frozen=True)
class EstimatedCsi:
    train_slots: int


RatioMode = Union[FixedRatio, NaturalK]
CsiMode = Union[PerfectCsi, EstimatedCsi]

SCHEME_CHOICES = {
    "proposed": (Scheme.PROPOSED,),
    "conventional": (Scheme.CONVENTIONAL,),
    "both": (Scheme.CONVENTIONAL, Scheme.PROPOSED),
}


@dataclass(frozen=True)
class SweepSpec:
    """
    Declarative experiment grid.

    snr_points are reflecting-link SNRs in dB. In fading mode they set the
    transmit power through the per-element path loss; in fixed mode the channel
    has g = 1 and they are the instantaneous SNR directly.
    """
    topology: Topology
    K: int
    trials_per_point: int
    seed: int
    snr_points: Tuple[float, ...]
    ratio_mode: RatioMode = NaturalK()
    scheme: str = "both"
    csi: CsiMode = PerfectCsi()
    correlation: Optional[CorrelationSpec] = None
    structural: complex = 0j
    noise_dbm: float = SIMULATION_CONFIG["noise_dbm"]
    channel_mode: str = "fading"
    alpha: Optional[float] = None
    block_size: int = SIMULATION_CONFIG["block_size"]

    def __post_init__(self):
        object.__setattr__(self, "snr_points", tuple(float(s) for s in self.snr_points))
        if self.trials_per_point < 1:
            raise ValueError(f"trials_per_point must be at least 1, got {self.trials_per_point}")
        if not self.snr_points:
            raise ValueError("snr_points must not be empty")
        if self.K < 1:
            raise ValueError(f"K must be positive, got {self.K}")
        if self.seed < 0:
            raise ValueError(f"seed must be nonnegative, got {self.seed}")
        if self.scheme not in SCHEME_CHOICES:
            raise ValueError(f"Unknown scheme '{self.scheme}'")
        if self.channel_mode not in ("fading", "fixed"):
            raise ValueError(f"Unknown channel mode '{self.channel_mode}'")
        if self.channel_mode == "fixed" and not isinstance(self.ratio_mode, FixedRatio):
            raise ValueError("Fixed-channel mode needs a fixed ratio")
        if self.correlation is not None and self.correlation.K != self.K:
            raise ValueError(f"Correlation layout has {self.correlation.K} elements, K={self.K}")
        if isinstance(self.csi, EstimatedCsi):
            TrainingPlan.dft(self.K, self.csi.train_slots)
        if self.alpha is not None and not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha override must lie in [0, 1], got {self.alpha}")
        if self.block_size < 1:
            raise ValueError(f"block_size must be positive, got {self.block_size}")

    @property
    def schemes(self) -> Tuple[Scheme, ...]:
        return SCHEME_CHOICES[self.scheme]

    @property
    def blocks_per_point(self) -> int:
        return -(-self.trials_per_point // self.block_size)

    def to_dict(self) -> Dict:
        ratio = self.ratio_mode.ratio if isinstance(self.ratio_mode, FixedRatio) else None
        return {
            "topology": self.topology.to_dict(),
            "K": self.K,
            "trials_per_point": self.trials_per_point,
            "seed": self.seed,
            "snr_points": list(self.snr_points),
            "ratio": ratio,
            "scheme": self.scheme,
            "train_slots": self.csi.train_slots if isinstance(self.csi, EstimatedCsi) else None,
            "correlation": asdict(self.correlation) if self.correlation else None,
            "structural": [self.structural.real, self.structural.imag],
            "noise_dbm": self.noise_dbm,
            "channel_mode": self.channel_mode,
            "alpha": self.alpha,
            "block_size": self.block_size,
        }

    @classmethod
    def from_dict(cls, data: Dict) -> "SweepSpec":
        return cls(
            topology=Topology.from_config(data["topology"]),
            K=data["K"],
            trials_per_point=data["trials_per_point"],
            seed=data["seed"],
            snr_points=tuple(data["snr_points"]),
            ratio_mode=FixedRatio(data["ratio"]) if data.get("ratio") is not None else NaturalK(),
            scheme=data["scheme"],
            csi=EstimatedCsi(data["train_slots"]) if data.get("train_slots") else PerfectCsi(),
            correlation=CorrelationSpec(**data["correlation"]) if data.get("correlation") else None,
            structural=complex(*data.get("structural", (0.0, 0.0))),
            noise_dbm=data["noise_dbm"],
            channel_mode=data.get("channel_mode", "fading"),
            alpha=data.get("alpha"),
            block_size=data.get("block_size", SIMULATION_CONFIG["block_size"]),
        )


@dataclass(frozen=True)
class BerEstimate:
    errors: int
    bits: int

    @property
    def ber(self) -> float:
        return self.errors / self.bits if self.bits else float("nan")

    @property
    def ci95(self) -> float:
        """Wald half-width"""
        p = self.ber
        return Z95 * math.sqrt(p * (1 - p) / self.bits) if self.bits else float("nan")


@dataclass
class PointTally:
    """Counts plus the per-trial sums the row statistics are built from"""
    counts: ErrorCounts = field(default_factory=ErrorCounts)
    ratio_sum: float = 0.0
    q_direct_sum: float = 0.0
    q_reflect_sum: float = 0.0
    runtime_s: float = 0.0

    def __add__(self, other: "PointTally") -> "PointTally":
        return PointTally(counts=self.counts + other.counts,
                          ratio_sum=self.ratio_sum + other.ratio_sum,
                          q_direct_sum=self.q_direct_sum + other.q_direct_sum,
                          q_reflect_sum=self.q_reflect_sum + other.q_reflect_sum,
                          runtime_s=self.runtime_s + other.runtime_s)


@dataclass(frozen=True)
class SweepRow:
    scheme: str
    ratio: float
    snr_db: float
    trials: int
    seed: int
    counts: ErrorCounts
    reference: Dict[str, float]
    runtime_s: float

    @property
    def ber_x(self) -> BerEstimate:
        return BerEstimate(self.counts.bit_errors_x, self.counts.bits_x)

    @property
    def ber_s(self) -> BerEstimate:
        return BerEstimate(self.counts.bit_errors_s, self.counts.bits_s)

    @property
    def ber_c(self) -> BerEstimate:
        return BerEstimate(self.counts.bit_errors_c, self.counts.bits_c)


@dataclass(frozen=True)
class SweepResult:
    spec: SweepSpec
    rows: Tuple[SweepRow, ...]

    def row(self, scheme: str, snr_db: float) -> SweepRow:
        for r in self.rows:
            if r.scheme == scheme and r.snr_db == snr_db:
                return r
        raise KeyError(f"No row for scheme={scheme}, snr_db={snr_db}")


def snr_to_power(gamma_b_db: float, topology: Topology, sigma2: float) -> float:
    """Transmit power giving reflecting-link SNR gamma_b = p * L_tb * L_br / sigma2"""
    return float(db_to_linear(gamma_b_db)) * sigma2 / (topology.loss_ptx_ris * topology.loss_ris_crx)


def block_stream(seed: int, snr_index: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, snr_index, block])))


def _link_budget(spec: SweepSpec, snr_index: int) -> Tuple[float, float]:
    """(power, sigma2) for one SNR point"""
    snr_db = spec.snr_points[snr_index]
    if spec.channel_mode == "fixed":
        return float(db_to_linear(snr_db)), 1.0
    sigma2 = dbm_to_watts(spec.noise_dbm)
    return snr_to_power(snr_db, spec.topology, sigma2), sigma2


def _channels(spec: SweepSpec, n: int, rng: np.random.Generator) -> ChannelBatch:
    if spec.channel_mode == "fixed":
        unit = np.full((n, spec.K), 1.0 / math.sqrt(spec.K), dtype=complex)
        return ChannelBatch(h_d=np.full(n, spec.ratio_mode.ratio, dtype=complex),
                            f=unit, h_r=unit.copy(), a_s=0j)
    batch = draw_batch(spec.topology, spec.K, n, spec.correlation, spec.structural, rng)
    if isinstance(spec.ratio_mode, FixedRatio):
        batch = batch.rescale_to_ratio(spec.ratio_mode.ratio)
    return batch


def _designs(spec: SweepSpec, scheme: Scheme, ratios: np.ndarray, exact_ratio: bool,
             snr_index: int, first_trial: int) -> Tuple[np.ndarray, np.ndarray]:
    """Per-trial (alpha, beta) arrays"""
    n = len(ratios)
    if scheme is Scheme.CONVENTIONAL:
        return np.zeros(n), np.ones(n, dtype=complex)

    def design(r: float) -> Tuple[float, complex]:
        if spec.alpha is not None:
            return spec.alpha, beta_star_given_alpha(spec.alpha, r)[0]
        result = solve(float(r))
        return result.alpha, result.beta

    if exact_ratio:
        a, b = design(spec.ratio_mode.ratio)
        return np.full(n, a), np.full(n, b, dtype=complex)
    if spec.alpha is None:
        return solve_batch(ratios)

    alpha = np.empty(n)
    beta = np.empty(n, dtype=complex)
    for i, r in enumerate(ratios):
        try:
            alpha[i], beta[i] = design(r)
        except SrrisError as e:
            raise TrialError(f"design failed at ratio {r:.6g}: {e}", snr_index,
                             first_trial + i) from e
    return alpha, beta


def _simulate_block(spec: SweepSpec, snr_index: int, block: int, start: int,
                    stop: int) -> Dict[Scheme, PointTally]:
    """Trials [start, stop) of one block; offsets are relative to the block"""
    t0 = time.perf_counter()
    n = spec.block_size
    rng = block_stream(spec.seed, snr_index, block)
    power, sigma2 = _link_budget(spec, snr_index)

    # Draw order: channels, symbols, data noise, training noise
    channels = _channels(spec, n, rng)
    s_idx = rng.integers(0, 4, n)
    c_idx = rng.integers(0, 2, n)
    noise = rng.standard_normal((n, 2))
    z = math.sqrt(sigma2 / 2) * (noise[:, 0] + 1j * noise[:, 1])
    training = None
    if isinstance(spec.csi, EstimatedCsi):
        plan = TrainingPlan.dft(spec.K, spec.csi.train_slots)
        training = (plan, observe(plan, channels.h, channels.cascade, power, sigma2, rng))

    sl = slice(start, stop)
    channels = channels.slice(start, stop)
    s_idx, c_idx, z = s_idx[sl], c_idx[sl], z[sl]
    h, cascade, g = channels.h, channels.cascade, channels.g

    if training is None:
        h_b, cascade_b = h, cascade
    else:
        plan, y_train = training
        h_b, cascade_b = estimate_batch(y_train[sl], plan, power)
    g_b = np.abs(cascade_b).sum(axis=-1)
    if np.any(g_b <= 0):
        raise TrialError("reflecting gain is zero", snr_index, block * n + start)

    rotation = np.where(np.abs(h_b) > 0, np.angle(h_b), 0.0)
    phi = np.exp(1j * (rotation[:, None] - np.angle(cascade_b)))
    w_true = np.sum(cascade * phi, axis=-1)
    w_b = np.sum(cascade_b * phi, axis=-1)
    ratios_b = np.abs(h_b) / g_b
    exact_ratio = isinstance(spec.ratio_mode, FixedRatio) and training is None

    ratio_true = np.abs(h) / g
    q_direct = q_function(np.sqrt(power * np.abs(h) ** 2 / sigma2))
    q_reflect = q_function(np.sqrt(2 * power * g ** 2 / sigma2))

    out = {}
    slots = 2 * s_idx + c_idx
    for scheme in spec.schemes:
        alpha, beta = _designs(spec, scheme, ratios_b, exact_ratio, snr_index,
                               block * n + start)
        sent = composite_points(h, w_true, 1.0, alpha, beta)
        y = math.sqrt(power) * np.take_along_axis(sent, slots[:, None], axis=-1)[:, 0] + z
        hyps = math.sqrt(power) * composite_points(h_b, w_b, 1.0, alpha, beta)
        idx, _ = nearest(y, hyps)
        out[scheme] = PointTally(
            counts=tally(s_idx, c_idx, COMPOSITE_S[idx], COMPOSITE_C[idx]),
            ratio_sum=float(ratio_true.sum()),
            q_direct_sum=float(q_direct.sum()),
            q_reflect_sum=float(q_reflect.sum()),
        )
    elapsed = time.perf_counter() - t0
    for tally_ in out.values():
        tally_.runtime_s = elapsed / len(out)
    return out


def _block_spans(spec: SweepSpec, trials: range):
    """(block, start, stop) pieces of a trial range, block-relative offsets"""
    n = spec.block_size
    first, last = trials.start, min(trials.stop, spec.trials_per_point)
    for block in range(first // n, -(-last // n)):
        lo = max(first, block * n) - block * n
        hi = min(last, (block + 1) * n) - block * n
        if hi > lo:
            yield block, lo, hi


def tally_point(spec: SweepSpec, snr_index: int,
                trials: Optional[range] = None) -> Dict[Scheme, PointTally]:
    """All schemes of one SNR point over a trial range, sharing channel and noise draws"""
    trials = trials if trials is not None else range(spec.trials_per_point)
    total = {scheme: PointTally() for scheme in spec.schemes}
    for block, lo, hi in _block_spans(spec, trials):
        part = _run_block(spec, snr_index, block, lo, hi)
        total = {scheme: total[scheme] + part[scheme] for scheme in spec.schemes}
    return total


def run_point(spec: SweepSpec, snr_index: int, trials: Optional[range] = None,
              scheme: Optional[Scheme] = None) -> ErrorCounts:
    """
    Error counts for one SNR point and one scheme over a trial range.

    Counts over disjoint ranges add up to the counts over their union.
    """
    scheme = scheme or spec.schemes[-1]
    return tally_point(spec, snr_index, trials)[scheme].counts


def _run_block(spec: SweepSpec, snr_index: int, block: int, lo: int,
               hi: int) -> Dict[Scheme, PointTally]:
    try:
        return _simulate_block(spec, snr_index, block, lo, hi)
    except TrialError:
        raise
    except SrrisError as e:
        raise TrialError(str(e), snr_index, block * spec.block_size + lo) from e


def _block_task(args) -> Tuple[int, int, Dict[Scheme, PointTally]]:
    spec, snr_index, block, lo, hi = args
    return snr_index, block, _run_block(spec, snr_index, block, lo, hi)


def run_sweep(spec: SweepSpec, workers: Optional[int] = None) -> SweepResult:
    """
    Evaluate every (SNR point, scheme) of the sweep.

    Args:
        spec: Experiment description
        workers: Worker processes, capped by SRRIS_THREADS; 1 runs inline

    Returns:
        SweepResult with rows sorted by (scheme, ratio, snr_db)
    """
    tasks = [(spec, i, block, lo, hi)
             for i in range(len(spec.snr_points))
             for block, lo, hi in _block_spans(spec, range(spec.trials_per_point))]
    workers = max(1, min(workers or MAX_WORKERS, MAX_WORKERS, len(tasks)))
    log.info(f"Running {len(spec.snr_points)} SNR points x {spec.trials_per_point} trials "
             f"({len(tasks)} blocks, {workers} workers)")

    if workers == 1:
        results = [_block_task(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_block_task, tasks))

    # Reduce in (snr_index, block) order so float sums do not depend on scheduling
    results.sort(key=lambda r: (r[0], r[1]))
    per_point: List[Dict[Scheme, PointTally]] = [
        {scheme: PointTally() for scheme in spec.schemes} for _ in spec.snr_points]
    for snr_index, _, part in results:
        for scheme, tally_ in part.items():
            per_point[snr_index][scheme] = per_point[snr_index][scheme] + tally_

    rows = []
    for snr_index, snr_db in enumerate(spec.snr_points):
        for scheme, tally_ in per_point[snr_index].items():
            n = tally_.counts.trials
            if isinstance(spec.ratio_mode, FixedRatio):
                ratio = spec.ratio_mode.ratio
            else:
                ratio = tally_.ratio_sum / n
            reference = {"avg_q_direct": tally_.q_direct_sum / n,
                         "avg_q_reflect": tally_.q_reflect_sum / n}
            if spec.channel_mode == "fading":
                power, _ = _link_budget(spec, snr_index)
                reference["tx_power_dbm"] = float(linear_to_db(power)) + 30.0
            rows.append(SweepRow(
                scheme=scheme.value, ratio=ratio, snr_db=snr_db, trials=n, seed=spec.seed,
                counts=tally_.counts,
                reference=reference,
                runtime_s=tally_.runtime_s))
            log.debug(f"{scheme.value} @ {snr_db:g} dB: ber_x={rows[-1].ber_x.ber:.3e}")

    rows.sort(key=lambda r: (r.scheme, r.ratio, r.snr_db))
    return SweepResult(spec=spec, rows=tuple(rows))
