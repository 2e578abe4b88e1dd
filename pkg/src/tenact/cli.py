"""Command line front end: synth, run, plot, and metrics subcommands."""

from __future__ import annotations

import argparse
import sys

from .experiment import load_config, run_experiment
from .mri import PhantomSpec, k_test, psnr, ser, synth_ground_truth
from .plotting import VALID_METRICS, emit_plot
from .tensorfile import read_tensor, write_tensor
from .tensors import fft_inverse


def _ints(text):
    return tuple(int(v) for v in text.split(","))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tenact", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="write a synthetic (image, kspace) tensor pair")
    p.add_argument("--shape", required=True, type=_ints, help="comma-separated dims, e.g. 16,16,8")
    p.add_argument("--ranks", required=True, type=_ints, help="Tucker rank per mode, e.g. 2,2,2")
    p.add_argument("--sparse-fraction", type=float, default=0.0)
    p.add_argument("--noise-sigma", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output path prefix")

    p = sub.add_parser("run", help="run an active-sampling experiment from a config file")
    p.add_argument("--config", required=True)

    p = sub.add_parser("plot", help="plot a metric column of a metrics CSV as SVG")
    p.add_argument("--csv", required=True)
    p.add_argument("--metric", required=True, choices=VALID_METRICS)
    p.add_argument("--out", required=True)

    p = sub.add_parser("metrics", help="print k_test / SER / PSNR of a reconstruction")
    p.add_argument("--recon", required=True, help="reconstructed k-space tensor file")
    p.add_argument("--truth", required=True, help="fully sampled k-space tensor file")
    return parser


def cli_main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:  # argparse already printed a diagnostic
        return int(e.code or 0)
    try:
        if args.command == "synth":
            spec = PhantomSpec(
                shape=args.shape,
                tucker_ranks=args.ranks,
                sparse_fraction=args.sparse_fraction,
                noise_sigma=args.noise_sigma,
                seed=args.seed,
            )
            image, kspace = synth_ground_truth(spec)
            write_tensor(f"{args.out}.image.atns", image)
            write_tensor(f"{args.out}.kspace.atns", kspace)
            print(f"{args.out}.image.atns")
            print(f"{args.out}.kspace.atns")
        elif args.command == "run":
            cfg = load_config(args.config)
            rows = run_experiment(cfg)
            print(f"{cfg.output_dir}/metrics.csv ({len(rows)} rows)")
        elif args.command == "plot":
            emit_plot(args.csv, args.metric, args.out)
            print(args.out)
        elif args.command == "metrics":
            recon = read_tensor(args.recon)
            truth = read_tensor(args.truth)
            print(f"k_test: {k_test(recon, truth):.17g}")
            print(f"ser_db: {ser(fft_inverse(recon), fft_inverse(truth)):.17g}")
            print(f"psnr_db: {psnr(fft_inverse(recon), fft_inverse(truth)):.17g}")
    except Exception as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    return 0


def entry():
    sys.exit(cli_main())


if __name__ == "__main__":
    entry()
