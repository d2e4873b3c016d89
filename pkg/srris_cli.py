#!/usr/bin/env python
"""
Command-line interface for the RIS symbiotic radio toolkit
"""

import argparse
import csv
import json
import logging
import math
import sys
from datetime import datetime
from pathlib import Path

# Add parent directory to path
sys.path.insert(0, str(Path(__file__).parent))

from config.config import (LOG_LEVEL, LOGS_DIR, OUTPUT_DIR, SIMULATION_CONFIG, STRUCTURAL_MODES,
                           TOPOLOGY_CONFIG)
from app.core.channel import Topology, elements_for_ratio, typical_ratio
from app.core.engine import SCHEME_CHOICES
from app.core.errors import NoSolution, SrrisError
from app.core.optimizer import dmin_curve, solve
from app.core.pipeline import (THEORY_COLUMNS, THEORY_MODELS, SweepPipeline, load_sweep_config,
                               theory_csv_rows, theory_curve, write_csv)
from app.core.validation import run_validation

log = logging.getLogger("srris_cli")

EXIT_OK = 0
EXIT_VALIDATE_FAILED = 1
EXIT_OUTPUT = 3
EXIT_ENGINE = 4


def setup_logging():
    """Log to a dated file and to stderr; stdout is kept for reports"""
    logging.basicConfig(
        level=getattr(logging, LOG_LEVEL.upper(), logging.INFO),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        handlers=[
            logging.FileHandler(LOGS_DIR / f"srris_{datetime.now().strftime('%Y%m%d')}.log"),
            logging.StreamHandler(sys.stderr),
        ],
    )


def nonnegative_float(text):
    value = float(text)
    if not (math.isfinite(value) and value >= 0):
        raise argparse.ArgumentTypeError(f"must be a finite nonnegative number, got {text}")
    return value


def positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {text}")
    return value


def build_parser():
    parser = argparse.ArgumentParser(
        description='Design and simulate RIS-assisted symbiotic radio links',
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  %(prog)s optimize --ratio 1.5
  %(prog)s optimize --K 16 --curve
  %(prog)s sweep --ratio 0.1 --snr-db -10,-5,0,5 --trials 100000
  %(prog)s sweep --config configs/ratio_0p1.ini --out outputs/sweeps/r0p1.csv
  %(prog)s sweep --from-manifest outputs/sweeps/r0p1.manifest.json
  %(prog)s theory --model exact8psk --snr-db 0,5,10,15,20
  %(prog)s validate --full
        """
    )
    sub = parser.add_subparsers(dest='command', required=True)

    # optimize
    opt = sub.add_parser('optimize', help='Optimal (alpha, beta) for a channel strength ratio')
    target = opt.add_mutually_exclusive_group(required=True)
    target.add_argument('--ratio', type=nonnegative_float, help='Channel strength ratio |h|/g')
    target.add_argument('--K', type=positive_int,
                        help='Element count; the ratio is the typical one for the default topology')
    opt.add_argument('--curve', action='store_true',
                     help='Also print the optimised distance over an alpha grid')
    opt.add_argument('--json', action='store_true', help='Output result as JSON')

    # sweep
    sw = sub.add_parser('sweep', help='Monte Carlo BER sweep, writes CSV + manifest')
    sw.add_argument('--config', help='INI file with a [sweep] section')
    sw.add_argument('--from-manifest', help='Re-run the sweep stored in a run manifest')
    sw.add_argument('--ratio', type=nonnegative_float, help='Fixed channel strength ratio')
    sw.add_argument('--natural-k', action='store_true', default=None,
                    help='Let the ratio follow from the drawn channel and K')
    sw.add_argument('--K', type=int, help=f'Surface elements (default: {SIMULATION_CONFIG["elements"]})')
    sw.add_argument('--snr-db', help='Comma-separated reflecting-link SNR points in dB')
    sw.add_argument('--trials', type=int, help=f'Trials per point (default: {SIMULATION_CONFIG["trials"]})')
    sw.add_argument('--seed', type=int, help=f'Master seed (default: {SIMULATION_CONFIG["seed"]})')
    sw.add_argument('--scheme', choices=sorted(SCHEME_CHOICES), help='Schemes to simulate (default: both)')
    sw.add_argument('--csi', choices=['perfect', 'estimated'], help='Channel knowledge (default: perfect)')
    sw.add_argument('--train-slots', type=int, help='Training slots T, a multiple of K+1')
    sw.add_argument('--spacing', type=float, help='Element spacing in wavelengths (enables correlation)')
    sw.add_argument('--k-h', type=int, help='Elements per row of the correlated layout')
    sw.add_argument('--k-v', type=int, help='Elements per column of the correlated layout')
    sw.add_argument('--structural-re', type=float, help='Structural-mode coefficient, real part')
    sw.add_argument('--structural-im', type=float, help='Structural-mode coefficient, imaginary part')
    sw.add_argument('--structural-mode', choices=sorted(STRUCTURAL_MODES),
                    help='Structural-mode preset')
    sw.add_argument('--alpha', type=float, help='Fix alpha and take beta from the per-alpha optimum')
    sw.add_argument('--channel-mode', choices=['fading', 'fixed'], help='Fading or fixed channel')
    sw.add_argument('--noise-dbm', type=float, help='Noise power in dBm')
    sw.add_argument('--workers', type=positive_int, help='Worker processes (capped by SRRIS_THREADS)')
    sw.add_argument('--out', help='CSV path (default: auto-generated in outputs/sweeps/)')
    sw.add_argument('--json', action='store_true', help='Output result as JSON')

    # theory
    th = sub.add_parser('theory', help='Analytical BER curves as CSV')
    th.add_argument('--model', choices=THEORY_MODELS, required=True, help='Analytical model')
    th.add_argument('--ratio', type=nonnegative_float, default=0.0, help='Channel strength ratio (default: 0)')
    th.add_argument('--snr-db', default='0,5,10,15,20,25,30', help='Comma-separated SNR points in dB')
    th.add_argument('--scheme', choices=['proposed', 'conventional'], default='proposed',
                    help='Design used by nn_approx (default: proposed)')
    th.add_argument('--out', help='CSV path (default: stdout)')

    # validate
    va = sub.add_parser('validate', help='Run the self-check suite')
    va.add_argument('--full', action='store_true', help='Include the fading acceptance sweeps')
    va.add_argument('--inject-fault', choices=['threshold'], help=argparse.SUPPRESS)
    va.add_argument('--json', action='store_true', help='Output result as JSON')

    return parser


def _fmt_pi(theta):
    return f"{theta / math.pi:+.4f}pi"


def cmd_optimize(args, parser):
    topology = Topology.from_config(TOPOLOGY_CONFIG)
    ratio = args.ratio if args.ratio is not None else typical_ratio(topology, args.K)
    result = solve(ratio)
    report = {"ratio": ratio, **result.to_dict()}
    report["elements_estimate"] = elements_for_ratio(topology, ratio) if ratio > 0 else None

    if args.curve:
        alphas = [round(0.05 * i, 2) for i in range(21)]
        try:
            report["curve"] = [{"alpha": a, "dmin": float(d)}
                               for a, d in zip(alphas, dmin_curve(ratio, alphas))]
        except NoSolution as e:
            log.warning(f"No alpha trade-off curve at ratio {ratio}: {e}")
            report["curve"] = None

    if args.json:
        print(json.dumps(report, indent=2))
        return EXIT_OK

    beta = result.beta
    print("RIS Symbiotic Radio Design")
    print("=" * 50)
    print(f"Ratio |h|/g: {ratio:.6f}")
    print(f"Case:        {result.case_id}")
    print(f"alpha:       {result.alpha:.6f}")
    print(f"beta:        {beta.real:.6f}{beta.imag:+.6f}j")
    print(f"             |beta|={abs(beta):.6f}, phase={_fmt_pi(math.atan2(beta.imag, beta.real))}")
    print(f"dmin:        {result.dmin:.6f}")
    if result.beta_phase_range:
        lo, hi = result.beta_phase_range
        print(f"Phase range: ({_fmt_pi(lo)}, {_fmt_pi(hi)})")
    if report["elements_estimate"]:
        print(f"Elements K:  ~{report['elements_estimate']} for the default topology")
    print("=" * 50)
    if report.get("curve"):
        print()
        print("alpha    dmin")
        for point in report["curve"]:
            print(f"{point['alpha']:.2f}     {point['dmin']:.6f}")
    return EXIT_OK


def _sweep_overrides(args):
    overrides = {
        "ratio": args.ratio,
        "natural_k": args.natural_k,
        "k": args.K,
        "trials": args.trials,
        "seed": args.seed,
        "snr_db": args.snr_db,
        "scheme": args.scheme,
        "csi": args.csi,
        "train_slots": args.train_slots,
        "spacing": args.spacing,
        "k_h": args.k_h,
        "k_v": args.k_v,
        "structural_re": args.structural_re,
        "structural_im": args.structural_im,
        "noise_dbm": args.noise_dbm,
        "channel_mode": args.channel_mode,
        "alpha": args.alpha,
    }
    if args.structural_mode:
        preset = STRUCTURAL_MODES[args.structural_mode]
        overrides["structural_re"] = preset.real
        overrides["structural_im"] = preset.imag
    return overrides


def cmd_sweep(args, parser):
    pipeline = SweepPipeline(output_dir=OUTPUT_DIR)
    out_path = Path(args.out) if args.out else None

    if args.from_manifest:
        try:
            result = pipeline.rerun(Path(args.from_manifest), out_path=out_path, workers=args.workers)
        except (OSError, KeyError, ValueError) as e:
            parser.error(f"cannot re-run manifest {args.from_manifest}: {e}")
    else:
        try:
            spec = load_sweep_config(Path(args.config) if args.config else None, _sweep_overrides(args))
        except (OSError, ValueError) as e:
            parser.error(str(e))
        if not args.json:
            print("RIS Symbiotic Radio Sweep")
            print("=" * 50)
            print(f"Scheme: {spec.scheme}")
            ratio = spec.to_dict()["ratio"]
            print(f"Ratio:  {ratio if ratio is not None else 'natural (K)'}")
            print(f"K:      {spec.K}")
            print(f"SNR:    {', '.join(f'{s:g}' for s in spec.snr_points)} dB")
            print(f"Trials: {spec.trials_per_point} per point, seed {spec.seed}")
            print("=" * 50)
            print()
        result = pipeline.run(spec, out_path=out_path, workers=args.workers)

    if not result['success']:
        print(f"Error: {result.get('error', 'Unknown error')}", file=sys.stderr)
        return EXIT_OUTPUT if result.get('stage') == 'output' else EXIT_ENGINE

    if args.json:
        print(json.dumps({k: v for k, v in result.items() if k != 'result'}, indent=2))
        return EXIT_OK

    metadata = result['metadata']
    print(f"✅ CSV saved to: {result['csv_file']}")
    print(f"   Manifest: {result['manifest_file']}")
    print()
    print("Rows:")
    for row in result['result'].rows:
        print(f"   {row.scheme:<12} r={row.ratio:.4g}  {row.snr_db:>6g} dB  "
              f"ber_x={row.ber_x.ber:.3e}  ber_s={row.ber_s.ber:.3e}  ber_c={row.ber_c.ber:.3e}")
    print()
    print(f"Wall time: {metadata['wall_time_s']:.1f}s")
    return EXIT_OK


def cmd_theory(args, parser):
    try:
        snr_db = [float(v) for v in args.snr_db.split(',') if v.strip()]
    except ValueError:
        parser.error(f"invalid SNR list '{args.snr_db}'")
    if not snr_db:
        parser.error("SNR list is empty")
    try:
        curve = theory_curve(args.model, snr_db, ratio=args.ratio, scheme=args.scheme)
    except SrrisError as e:
        parser.error(str(e))

    rows = theory_csv_rows(curve)
    if args.out:
        try:
            write_csv(Path(args.out), THEORY_COLUMNS, rows)
        except OSError as e:
            print(f"Error: could not write {args.out}: {e}", file=sys.stderr)
            return EXIT_OUTPUT
        print(f"✅ Theory curve saved to: {args.out}")
    else:
        writer = csv.writer(sys.stdout, lineterminator="\n")
        writer.writerow(THEORY_COLUMNS)
        writer.writerows(rows)
    return EXIT_OK


def cmd_validate(args, parser):
    report = run_validation(full=args.full, fault=args.inject_fault)
    if args.json:
        print(json.dumps(report, indent=2))
    else:
        print("RIS Symbiotic Radio Validation")
        print("=" * 50)
        for check in report['checks']:
            status = "PASS" if check['passed'] else "FAIL"
            print(f"{status}  {check['name']:<26} {check['seconds']:>8.2f}s  {check['detail']}")
        print("=" * 50)
        total = sum(c['seconds'] for c in report['checks'])
        if report['success']:
            print(f"All {len(report['checks'])} checks passed in {total:.1f}s")
        else:
            print(f"Failed checks: {', '.join(report['failed'])}", file=sys.stderr)
    return EXIT_OK if report['success'] else EXIT_VALIDATE_FAILED


COMMANDS = {
    'optimize': cmd_optimize,
    'sweep': cmd_sweep,
    'theory': cmd_theory,
    'validate': cmd_validate,
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging()

    try:
        return COMMANDS[args.command](args, parser)
    except KeyboardInterrupt:
        print("\n\n⚠️  Cancelled by user", file=sys.stderr)
        return 130


if __name__ == '__main__':
    sys.exit(main())
