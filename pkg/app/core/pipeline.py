"""
Pipeline Orchestrator
Builds sweep specs from INI configs, runs the engine and writes CSV + manifest
"""

import configparser
import csv
import json
import logging
import math
import time
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional


from app import __version__
from config.config import SIMULATION_CONFIG, TOPOLOGY_CONFIG
from .channel import CorrelationSpec, Topology, fixed_realization
from .engine import (EstimatedCsi, FixedRatio, NaturalK, PerfectCsi, SweepResult, SweepSpec,
                     run_sweep)
from .errors import SrrisError
from .modulation import ModulationDesign, build_composite
from .numerics import db_to_linear
from .optimizer import solve
from .theory import SnrPair, ber_8psk_exact, ber_asymptotic, ber_nn_approx

log = logging.getLogger(__name__)

SWEEP_COLUMNS = ["scheme", "ratio", "snr_db", "trials", "ber_x", "ber_s", "ber_c",
                 "ci95_x", "ci95_s", "ci95_c", "bit_errors_x", "bit_errors_s", "bit_errors_c"]
THEORY_COLUMNS = ["model", "snr_db", "ber_x", "ber_s", "ber_c"]
THEORY_MODELS = ("exact8psk", "asymptotic", "nn_approx")


def _parse_floats(text: str) -> List[float]:
    return [float(v) for v in str(text).replace(";", ",").split(",") if v.strip()]


def _square_layout(K: int):
    side = math.isqrt(K)
    return (side, side) if side * side == K else (K, 1)


def build_spec(settings: Mapping[str, Any]) -> SweepSpec:
    """
    Sweep spec from flat settings (INI values or CLI overrides, strings allowed).

    Missing keys fall back to SIMULATION_CONFIG and TOPOLOGY_CONFIG.
    """
    get = settings.get
    K = int(get("k", SIMULATION_CONFIG["elements"]))

    ratio = get("ratio")
    natural = str(get("natural_k", "false")).lower() in ("1", "true", "yes")
    if ratio in (None, "", "natural") or natural:
        ratio_mode = NaturalK()
    else:
        ratio_mode = FixedRatio(float(ratio))

    csi = str(get("csi", "perfect")).lower()
    if csi == "estimated":
        csi_mode = EstimatedCsi(int(get("train_slots", 4 * (K + 1))))
    elif csi == "perfect":
        csi_mode = PerfectCsi()
    else:
        raise ValueError(f"Unknown CSI mode '{csi}'")

    correlation = None
    if get("spacing") not in (None, ""):
        k_h, k_v = _square_layout(K)
        correlation = CorrelationSpec(k_h=int(get("k_h", k_h)), k_v=int(get("k_v", k_v)),
                                      spacing_over_lambda=float(get("spacing")))

    topology = dict(TOPOLOGY_CONFIG)
    for key in ("ptx", "ris", "crx"):
        if get(key):
            topology[key] = tuple(_parse_floats(get(key)))
    for key in ("exp_direct", "exp_ptx_ris", "exp_ris_crx"):
        if get(key):
            topology[key] = float(get(key))

    snr = get("snr_db", SIMULATION_CONFIG["snr_db"])
    snr_points = _parse_floats(snr) if isinstance(snr, str) else [float(v) for v in snr]
    alpha = get("alpha")

    return SweepSpec(
        topology=Topology.from_config(topology),
        K=K,
        trials_per_point=int(get("trials", SIMULATION_CONFIG["trials"])),
        seed=int(get("seed", SIMULATION_CONFIG["seed"])),
        snr_points=tuple(snr_points),
        ratio_mode=ratio_mode,
        scheme=str(get("scheme", "both")).lower(),
        csi=csi_mode,
        correlation=correlation,
        structural=complex(float(get("structural_re", 0.0)), float(get("structural_im", 0.0))),
        noise_dbm=float(get("noise_dbm", SIMULATION_CONFIG["noise_dbm"])),
        channel_mode=str(get("channel_mode", "fading")).lower(),
        alpha=float(alpha) if alpha not in (None, "") else None,
        block_size=int(get("block_size", SIMULATION_CONFIG["block_size"])),
    )


def load_sweep_config(path: Optional[Path], overrides: Optional[Mapping[str, Any]] = None) -> SweepSpec:
    """Read the [sweep] section of an INI file, then apply overrides"""
    settings: Dict[str, Any] = {}
    if path is not None:
        parser = configparser.ConfigParser()
        if not parser.read(path, encoding="utf-8"):
            raise FileNotFoundError(f"Config file not readable: {path}")
        if "sweep" not in parser:
            raise ValueError(f"Config file {path} has no [sweep] section")
        settings.update(parser["sweep"])
    settings.update({k: v for k, v in (overrides or {}).items() if v is not None})
    return build_spec(settings)


def _fmt(value: float) -> str:
    return repr(float(value))


def sweep_rows(result: SweepResult) -> List[List[str]]:
    rows = []
    for r in result.rows:
        rows.append([r.scheme, _fmt(r.ratio), _fmt(r.snr_db), str(r.trials),
                     _fmt(r.ber_x.ber), _fmt(r.ber_s.ber), _fmt(r.ber_c.ber),
                     _fmt(r.ber_x.ci95), _fmt(r.ber_s.ci95), _fmt(r.ber_c.ci95),
                     str(r.counts.bit_errors_x), str(r.counts.bit_errors_s),
                     str(r.counts.bit_errors_c)])
    return rows


def write_csv(path: Path, columns: List[str], rows: List[List[str]]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        writer.writerows(rows)


def theory_curve(model: str, snr_db: List[float], ratio: float = 0.0,
                 scheme: str = "proposed") -> List[Dict[str, float]]:
    """
    Analytical BER rows for one model over an SNR grid.

    SNR is the instantaneous reflecting-link SNR g^2 / sigma^2 in dB; the direct
    link SNR follows as ratio^2 times it.
    """
    if model not in THEORY_MODELS:
        raise ValueError(f"Unknown theory model '{model}'")
    constellation = None
    if model == "nn_approx":
        if scheme == "conventional":
            design = ModulationDesign.conventional()
        else:
            best = solve(ratio)
            design = ModulationDesign.proposed(best.alpha, best.beta)
        constellation = build_composite(fixed_realization(1, ratio), design)

    rows = []
    for snr in snr_db:
        gamma = float(db_to_linear(snr))
        if model == "exact8psk":
            triple = ber_8psk_exact(gamma, ratio=ratio)
        elif model == "asymptotic":
            triple = ber_asymptotic(SnrPair(gamma_d=ratio ** 2 * gamma, gamma_b=gamma))
        else:
            triple = ber_nn_approx(constellation, sigma=1.0 / math.sqrt(gamma))
        rows.append({"model": model, "snr_db": snr, **triple.to_dict()})
    return rows


def theory_csv_rows(curve: List[Dict[str, float]]) -> List[List[str]]:
    return [[r["model"], _fmt(r["snr_db"]), _fmt(r["ber_x"]), _fmt(r["ber_s"]), _fmt(r["ber_c"])]
            for r in curve]


class SweepPipeline:
    """Runs a sweep and stores its CSV and run manifest"""

    def __init__(self, output_dir: Path):
        self.output_dir = output_dir
        (self.output_dir / "sweeps").mkdir(parents=True, exist_ok=True)
        log.info("Pipeline initialized successfully")

    def run(self, spec: SweepSpec, out_path: Optional[Path] = None,
            workers: Optional[int] = None) -> Dict[str, Any]:
        """
        Run the engine and write outputs.

        Args:
            spec: Sweep description
            out_path: CSV destination (default: outputs/sweeps/sweep_<timestamp>.csv)
            workers: Worker processes for the engine

        Returns:
            Dictionary with success flag, file paths and metadata; on failure
            "stage" says whether the engine or the output step failed
        """
        start_time = datetime.now()
        csv_file = out_path or self.output_dir / "sweeps" / f"sweep_{start_time.strftime('%Y%m%d_%H%M%S')}.csv"
        manifest_file = csv_file.with_suffix(".manifest.json")

        log.info(f"Step 1/2: Running sweep ({spec.scheme}, {len(spec.snr_points)} SNR points)...")
        t0 = time.perf_counter()
        try:
            result = run_sweep(spec, workers=workers)
        except (SrrisError, ValueError, ArithmeticError) as e:
            log.error(f"Sweep failed: {e}", exc_info=True)
            return {"success": False, "stage": "engine", "error": str(e)}
        wall_time = time.perf_counter() - t0

        log.info("Step 2/2: Writing CSV and manifest...")
        manifest = {
            "version": __version__,
            "created": start_time.isoformat(),
            "wall_time_s": wall_time,
            "spec": spec.to_dict(),
            "csv_file": str(csv_file),
            "points": [
                {"scheme": r.scheme, "ratio": r.ratio, "snr_db": r.snr_db,
                 "runtime_s": r.runtime_s, **r.reference}
                for r in result.rows
            ],
        }
        try:
            write_csv(csv_file, SWEEP_COLUMNS, sweep_rows(result))
            manifest_file.write_text(json.dumps(manifest, indent=2))
        except OSError as e:
            log.error(f"Could not write outputs: {e}", exc_info=True)
            return {"success": False, "stage": "output", "error": str(e)}

        log.info(f"Sweep completed in {wall_time:.1f} seconds, CSV saved to: {csv_file}")
        return {
            "success": True,
            "csv_file": str(csv_file),
            "manifest_file": str(manifest_file),
            "metadata": {
                "rows": len(result.rows),
                "wall_time_s": wall_time,
                "seed": spec.seed,
                "trials": spec.trials_per_point,
                "timestamp": start_time.isoformat(),
            },
            "result": result,
        }

    def rerun(self, manifest_path: Path, out_path: Optional[Path] = None,
              workers: Optional[int] = None) -> Dict[str, Any]:
        """Re-run the sweep stored in a manifest"""
        manifest = json.loads(Path(manifest_path).read_text())
        spec = SweepSpec.from_dict(manifest["spec"])
        log.info(f"Re-running manifest {manifest_path} (version {manifest.get('version')})")
        return self.run(spec, out_path=out_path, workers=workers)
