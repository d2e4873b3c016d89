"""
Self-check suite behind the `validate` command

Each check returns (passed, detail). Checks compare the closed-form solver with
the grid search, the analytical BER with Monte Carlo, and the engine against
its own determinism and counting guarantees.
"""

import logging
import math
import time
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from config.config import TOPOLOGY_CONFIG
from .channel import Topology
from .engine import EstimatedCsi, FixedRatio, SweepSpec, run_sweep
from .estimation import TrainingPlan, estimate_batch, observe, predict_mse
from .numerics import Interval, db_to_linear, integrate
from .optimizer import (PI, RATIO_THRESHOLDS, BoundaryFunctions, beta_star_given_alpha,
                        constraint_violations, dmin_given, grid_oracle, select_alpha, solve,
                        transition_points, transition_points_fitted)
from .theory import ber_8psk_exact, phase_pdf

log = logging.getLogger(__name__)

CheckResult = Tuple[bool, str]

# Reference designs: ratio -> (alpha, beta) or phase range in units of pi
TABLE_GOLDENS = {
    0.1: (0.91, -0.42j),
    1.5: (0.18, 0.61 - 0.61j),
}
GOLDEN_PHASE_RANGE = (2.3, (-0.38, -0.12))


def _topology() -> Topology:
    return Topology.from_config(TOPOLOGY_CONFIG)


def check_table_goldens(thresholds=RATIO_THRESHOLDS) -> CheckResult:
    exact = solve(0.0, thresholds)
    if abs(exact.alpha - math.cos(PI / 8)) > 1e-6 or abs(exact.beta + 1j * math.sin(PI / 8)) > 1e-6:
        return False, f"ratio 0 gave alpha={exact.alpha:.6f}, beta={exact.beta:.6f}"
    for ratio, (alpha, beta) in TABLE_GOLDENS.items():
        got = solve(ratio, thresholds)
        if (abs(got.alpha - alpha) > 0.01 or abs(got.beta.real - beta.real) > 0.01
                or abs(got.beta.imag - beta.imag) > 0.01):
            return False, f"ratio {ratio} gave alpha={got.alpha:.4f}, beta={got.beta:.4f}"
    ratio, (lo, hi) = GOLDEN_PHASE_RANGE
    got = solve(ratio, thresholds)
    rng = got.beta_phase_range
    if got.alpha != 0 or rng is None or abs(rng[0] / PI - lo) > 0.02 or abs(rng[1] / PI - hi) > 0.02:
        return False, f"ratio {ratio} gave alpha={got.alpha}, phase range={rng}"
    far = solve(4.0, thresholds)
    if far.alpha != 0 or abs(abs(far.beta) - 1) > 1e-12:
        return False, f"ratio 4 gave alpha={far.alpha}, |beta|={abs(far.beta)}"
    return True, "ratios 0, 0.1, 1.5, 2.3, 4 match"


def check_oracle_equivalence(count: int = 20, seed: int = 7) -> CheckResult:
    ratios = np.random.default_rng(seed).uniform(0.0, 3.0, count)
    worst = 0.0
    for r in ratios:
        closed = solve(float(r)).dmin
        oracle = grid_oracle(float(r), 1e-2, 1e-2, 1e-2).dmin
        worst = max(worst, (oracle - closed) / oracle)
        if closed < 0.98 * oracle:
            return False, f"ratio {r:.4f}: closed form {closed:.5f} < oracle {oracle:.5f}"
    return True, f"{count} ratios, worst oracle excess {100 * worst:.2f}%"


def check_counting_identity() -> CheckResult:
    spec = SweepSpec(topology=_topology(), K=16, trials_per_point=2000, seed=3,
                     snr_points=(-10.0, 0.0, 10.0), ratio_mode=FixedRatio(0.5), scheme="both")
    for row in run_sweep(spec, workers=1).rows:
        c = row.counts
        if c.bit_errors_x != c.bit_errors_s + c.bit_errors_c:
            return False, f"{row.scheme} @ {row.snr_db} dB breaks the identity"
    return True, "all rows satisfy x = s + c"


def check_ambiguity_plateau() -> CheckResult:
    spec = SweepSpec(topology=_topology(), K=16, trials_per_point=10_000, seed=11,
                     snr_points=(10.0, 20.0, 30.0), ratio_mode=FixedRatio(0.0),
                     scheme="conventional", channel_mode="fixed")
    for row in run_sweep(spec, workers=1).rows:
        if abs(row.ber_x.ber - 0.5) > 0.02:
            return False, f"conventional BER {row.ber_x.ber:.4f} at {row.snr_db} dB"
    return True, "conventional scheme stays at 0.5 without a direct link"


def check_exact_8psk_monte_carlo(trials: int = 100_000) -> CheckResult:
    snrs = (10.0, 15.0, 20.0)
    spec = SweepSpec(topology=_topology(), K=16, trials_per_point=trials, seed=5,
                     snr_points=snrs, ratio_mode=FixedRatio(0.0), scheme="proposed",
                     channel_mode="fixed")
    for row in run_sweep(spec, workers=1).rows:
        theory = ber_8psk_exact(float(db_to_linear(row.snr_db)))
        for name, mc, p in (("x", row.ber_x.ber, theory.p_x), ("s", row.ber_s.ber, theory.p_s),
                            ("c", row.ber_c.ber, theory.p_c)):
            sigma = math.sqrt(p * (1 - p) / trials)
            if abs(mc - p) > 3 * sigma:
                return False, f"P_{name} at {row.snr_db} dB: MC {mc:.3e} vs theory {p:.3e}"
    return True, "Monte Carlo within 3 sigma at 10, 15, 20 dB"


def check_phase_pdf_normalization() -> CheckResult:
    for gamma in (0.0, 0.1, 1.0, 10.0, 100.0, 1000.0):
        total = integrate(lambda p: float(phase_pdf(p, gamma)), Interval(-PI, PI), 1e-11,
                          points=[0.0])
        if abs(total - 1.0) > 1e-8:
            return False, f"density integrates to {total:.12f} at gamma={gamma}"
    return True, "normalised for gamma up to 1000"


def check_boundary_identity() -> CheckResult:
    rng = np.random.default_rng(1)
    theta = rng.uniform(-PI, 0.0, 200)
    for xi in rng.uniform(0.0, 4.0, 20):
        bounds = BoundaryFunctions(float(xi))
        err = np.abs(bounds.beta1(theta) * bounds.beta2(theta) - xi ** 2).max()
        if err > 1e-12 * max(1.0, xi ** 2):
            return False, f"beta1*beta2 off by {err:.2e} at xi={xi:.3f}"
    return True, "beta1 * beta2 = xi^2"


def check_solver_constraints() -> CheckResult:
    for r in np.linspace(0.0, 5.0, 501):
        result = solve(float(r))
        failed = constraint_violations(result.alpha, result.beta, float(r))
        if failed:
            return False, f"ratio {r:.3f} violates {', '.join(failed)}"
        if abs(result.dmin - dmin_given(result.alpha, result.beta, float(r))) > 1e-9:
            return False, f"ratio {r:.3f} reports an inconsistent dmin"
    return True, "501 ratios in [0, 5] feasible"


def check_dmin_monotonicity(ratio: float = 0.0) -> CheckResult:
    alpha1, alpha2 = transition_points(ratio)
    rising = [beta_star_given_alpha(a, ratio)[1] for a in np.arange(0.0, alpha1, 1e-3)]
    falling = [beta_star_given_alpha(a, ratio)[1] for a in np.arange(alpha2, 1.0, 1e-3)]
    if np.any(np.diff(rising) < -1e-12):
        return False, "optimised distance not increasing below the first transition point"
    if np.any(np.diff(falling) > 1e-12):
        return False, "optimised distance not decreasing above the second transition point"
    return True, f"monotone on [0, {alpha1:.4f}] and [{alpha2:.4f}, 1]"


def check_case_continuity(thresholds=RATIO_THRESHOLDS) -> CheckResult:
    for t in thresholds:
        left = solve(t - 1e-9, thresholds).dmin
        right = solve(t, thresholds).dmin
        if abs(left - right) > 1e-6:
            return False, f"dmin jumps by {abs(left - right):.3e} at ratio {t:.6f}"
    return True, "continuous across all case boundaries"


def check_alpha_selection() -> CheckResult:
    for r in (0.05, 0.5, 0.9, 1.2, 1.5, 1.9):
        if abs(select_alpha(r) - solve(r).alpha) > 1e-9:
            return False, f"selection rule disagrees with the case dispatch at ratio {r}"
    return True, "selection rule matches the case dispatch"


def check_transition_fit() -> CheckResult:
    for r in np.linspace(0.0, 1.6, 17):
        exact = transition_points(float(r))
        fitted = transition_points_fitted(float(r))
        if max(abs(e - f) for e, f in zip(exact, fitted)) > 0.01:
            return False, f"fitted transition points drift at ratio {r:.2f}: {exact} vs {fitted}"
    return True, "fitted approximations within 0.01"


def check_determinism() -> CheckResult:
    spec = SweepSpec(topology=_topology(), K=8, trials_per_point=3000, seed=99,
                     snr_points=(-5.0, 5.0), ratio_mode=FixedRatio(0.5), scheme="both",
                     block_size=512)
    runs = [run_sweep(spec, workers=w) for w in (1, 2, 8)]
    base = [(r.counts, r.reference) for r in runs[0].rows]
    for other in runs[1:]:
        if [(r.counts, r.reference) for r in other.rows] != base:
            return False, "rows differ between worker counts"
    return True, "identical under 1, 2 and 8 workers"


def check_ls_mse(runs: int = 10_000, K: int = 8) -> CheckResult:
    rng = np.random.default_rng(21)
    power, sigma2 = 1.0, 0.1
    h = complex(0.3, -0.2)
    v = (rng.standard_normal(K) + 1j * rng.standard_normal(K)) / math.sqrt(2)
    truth = np.concatenate([[h], v])
    for T in (K + 1, 2 * (K + 1), 4 * (K + 1)):
        plan = TrainingPlan.dft(K, T)
        y = observe(plan, np.full(runs, h), np.tile(v, (runs, 1)), power, sigma2, rng)
        h_hat, v_hat = estimate_batch(y, plan, power)
        err = np.abs(np.column_stack([h_hat, v_hat]) - truth) ** 2
        empirical = err.sum(axis=1).mean()
        predicted = predict_mse(plan, power, sigma2)
        if abs(empirical - predicted) > 0.05 * predicted:
            return False, f"T={T}: empirical MSE {empirical:.4e} vs predicted {predicted:.4e}"
    return True, "LS MSE within 5% for T = K+1, 2(K+1), 4(K+1)"


def check_snr_gain() -> CheckResult:
    snrs = tuple(np.arange(-16.0, 10.0, 2.0))
    spec = SweepSpec(topology=_topology(), K=16, trials_per_point=100_000, seed=8,
                     snr_points=snrs, ratio_mode=FixedRatio(0.1), scheme="both")
    result = run_sweep(spec)
    crossings = {}
    for scheme in ("proposed", "conventional"):
        curve = [(r.snr_db, r.ber_x.ber) for r in result.rows if r.scheme == scheme]
        crossings[scheme] = crossing_snr(curve, 1e-2)
    if None in crossings.values():
        return False, f"BER 1e-2 not crossed on the grid: {crossings}"
    gain = crossings["conventional"] - crossings["proposed"]
    return gain >= 8.0, f"SNR gain at BER 1e-2 is {gain:.1f} dB"


def check_large_ratio_equivalence() -> CheckResult:
    spec = SweepSpec(topology=_topology(), K=16, trials_per_point=100_000, seed=9,
                     snr_points=(-20.0, -15.0, -10.0, -5.0), ratio_mode=FixedRatio(4.0),
                     scheme="both")
    result = run_sweep(spec)
    for snr in spec.snr_points:
        a, b = result.row("proposed", snr).ber_x, result.row("conventional", snr).ber_x
        p = 0.5 * (a.ber + b.ber)
        sigma = math.sqrt(max(p * (1 - p), 1e-12) / a.bits)
        if abs(a.ber - b.ber) > 3 * sigma:
            return False, f"schemes differ at {snr} dB: {a.ber:.3e} vs {b.ber:.3e}"
    return True, "schemes coincide at ratio 4"


def check_asymptotic_limit() -> CheckResult:
    spec = SweepSpec(topology=_topology(), K=16, trials_per_point=100_000, seed=10,
                     snr_points=(-20.0, -17.0, -14.0), ratio_mode=FixedRatio(20.0),
                     scheme="proposed")
    for row in run_sweep(spec).rows:
        if row.ber_c.ber >= 1e-3:
            ref = row.reference["avg_q_reflect"]
            if abs(row.ber_c.ber - ref) > 0.1 * ref:
                return False, f"P_c {row.ber_c.ber:.3e} vs {ref:.3e} at {row.snr_db} dB"
        ref_s = row.reference["avg_q_direct"]
        if row.ber_s.ber >= 1e-3 and abs(row.ber_s.ber - ref_s) > 0.1 * ref_s:
            return False, f"P_s {row.ber_s.ber:.3e} vs {ref_s:.3e} at {row.snr_db} dB"
    return True, "ratio 20 follows the decoupled Q-function limits"


def check_estimation_trend(trials: int = 50_000) -> CheckResult:
    previous = None
    for T in (9, 18, 36):
        spec = SweepSpec(topology=_topology(), K=8, trials_per_point=trials, seed=12,
                         snr_points=(0.0,), ratio_mode=FixedRatio(0.5), scheme="proposed",
                         csi=EstimatedCsi(T))
        est = run_sweep(spec).rows[0].ber_x
        if previous is not None:
            sigma = math.sqrt(max(previous.ber * (1 - previous.ber), 1e-12) / previous.bits)
            if est.ber > previous.ber + 3 * sigma:
                return False, f"BER rises to {est.ber:.3e} at T={T} from {previous.ber:.3e}"
        previous = est
    return True, "BER with estimated CSI does not rise with T"


def crossing_snr(curve: List[Tuple[float, float]], target: float) -> Optional[float]:
    """SNR where a decreasing BER curve crosses target, log-linear interpolation"""
    for (s0, p0), (s1, p1) in zip(curve, curve[1:]):
        if p0 >= target > p1:
            if p1 <= 0:
                return s1
            frac = (math.log10(p0) - math.log10(target)) / (math.log10(p0) - math.log10(p1))
            return s0 + frac * (s1 - s0)
    return None


def run_validation(full: bool = False, fault: Optional[str] = None) -> Dict:
    """
    Run every check and time it.

    Args:
        full: Also run the fading sweeps at 1e5 trials per point
        fault: "threshold" shifts the first case boundary, for testing the suite

    Returns:
        Dictionary with overall success and per-check records
    """
    thresholds = RATIO_THRESHOLDS
    if fault == "threshold":
        thresholds = (RATIO_THRESHOLDS[0] + 0.05,) + RATIO_THRESHOLDS[1:]
        log.warning(f"Fault injected: case thresholds {thresholds}")
    elif fault is not None:
        raise ValueError(f"Unknown fault '{fault}'")

    checks: List[Tuple[str, Callable[[], CheckResult]]] = [
        ("table_goldens", lambda: check_table_goldens(thresholds)),
        ("case_continuity", lambda: check_case_continuity(thresholds)),
        ("boundary_identity", check_boundary_identity),
        ("solver_constraints", check_solver_constraints),
        ("dmin_monotonicity", check_dmin_monotonicity),
        ("alpha_selection", check_alpha_selection),
        ("transition_fit", check_transition_fit),
        ("oracle_equivalence", check_oracle_equivalence),
        ("phase_pdf_normalization", check_phase_pdf_normalization),
        ("counting_identity", check_counting_identity),
        ("ambiguity_plateau", check_ambiguity_plateau),
        ("exact_8psk_monte_carlo", check_exact_8psk_monte_carlo),
        ("ls_mse", check_ls_mse),
        ("determinism", check_determinism),
    ]
    if full:
        checks += [
            ("snr_gain", check_snr_gain),
            ("large_ratio_equivalence", check_large_ratio_equivalence),
            ("asymptotic_limit", check_asymptotic_limit),
            ("estimation_trend", check_estimation_trend),
        ]

    records = []
    for name, check in checks:
        log.info(f"Running check: {name}")
        t0 = time.perf_counter()
        try:
            passed, detail = check()
        except Exception as e:
            log.error(f"Check {name} raised: {e}", exc_info=True)
            passed, detail = False, f"raised {type(e).__name__}: {e}"
        seconds = time.perf_counter() - t0
        records.append({"name": name, "passed": bool(passed), "detail": detail,
                        "seconds": round(seconds, 3)})
        log.info(f"{'PASS' if passed else 'FAIL'} {name} ({seconds:.2f}s): {detail}")

    failed = [r["name"] for r in records if not r["passed"]]
    return {"success": not failed, "failed": failed, "checks": records}
