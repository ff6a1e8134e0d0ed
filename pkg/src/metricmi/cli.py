"""Command-line interface: gen-toy, distances, estimate, benchmark.

Single-value results are emitted as JSON, tables as CSV, plot data as
two-column .dat files.  Every command is deterministic: identical flags and
seed produce byte-identical outputs regardless of thread count.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

from .bias import DEFAULT_LAMBDAS, DEFAULT_REPEATS, bias_corrected_mi
from .data import (
    FORMAT_CSV_VECTORS,
    FORMAT_SPIKE_TEXT,
    VECTOR,
    load_dataset,
    save_dataset,
)
from .estimators import (
    HistogramConfig,
    KernelConfig,
    KsgConfig,
    histogram_mi,
    kernel_mi,
    ksg_mi,
)
from .metrics import MetricSpec, distance_matrix, write_distance_csv
from .toybench import (
    DEFAULT_MC_SAMPLES,
    DEFAULT_WIDTHS,
    BenchmarkProtocol,
    ToySpec,
    generate_toy,
    run_benchmark,
    write_records_csv,
    write_scatter_dat,
    write_summary_json,
)

_FORMATS = (FORMAT_CSV_VECTORS, FORMAT_SPIKE_TEXT)
_METRICS = ("euclidean", "victor-purpura", "van-rossum")


def _csv_floats(text: str) -> list[float]:
    return [float(tok) for tok in text.split(",") if tok.strip()]


def _add_io_flags(sub):
    sub.add_argument("--input", required=True, help="input dataset file")
    sub.add_argument(
        "--format",
        choices=_FORMATS,
        default=FORMAT_CSV_VECTORS,
        help="input file format (default: csv-vectors)",
    )
    sub.add_argument("--metric", choices=_METRICS, default=None,
                     help="distance metric (default: euclidean for vector data; "
                          "required for spike data)")
    sub.add_argument("--q", type=float, default=None,
                     help="victor-purpura shift cost (1/seconds)")
    sub.add_argument("--tau", type=float, default=None,
                     help="van-rossum time constant (seconds)")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="metricmi",
        description="Mutual information between a discrete stimulus and "
                    "responses in a metric space.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen-toy", help="generate a toy dataset (csv-vectors)")
    gen.add_argument("--ns", type=int, required=True, help="number of stimuli")
    gen.add_argument("--nd", type=int, required=True, help="response dimension")
    gen.add_argument("--nt", type=int, required=True, help="trials per stimulus")
    gen.add_argument("--sigma2", type=float, default=None,
                     help="response variance in [0, 1] (default: drawn uniformly)")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("-o", "--output", required=True)
    gen.set_defaults(handler=_cmd_gen_toy)

    dist = sub.add_parser("distances", help="write the pairwise distance matrix as CSV")
    _add_io_flags(dist)
    dist.add_argument("-o", "--output", required=True)
    dist.set_defaults(handler=_cmd_distances)

    est = sub.add_parser("estimate", help="estimate mutual information (JSON output)")
    _add_io_flags(est)
    kind = est.add_mutually_exclusive_group()
    kind.add_argument("--kernel", action="store_true",
                      help="square-kernel estimator (default)")
    kind.add_argument("--ksg", action="store_true", help="digamma kNN estimator")
    kind.add_argument("--histogram", action="store_true", help="plug-in histogram")
    est.add_argument("--nh", type=int, default=None, help="kernel bandwidth as a count")
    est.add_argument("--h-frac", type=float, default=None,
                     help="kernel bandwidth as a mass fraction in (0, 1]")
    est.add_argument("--nk", type=int, default=None, help="kNN neighbor parameter")
    est.add_argument("--bin-width", type=float, default=None, help="histogram bin width")
    est.add_argument("--origin", type=float, default=0.0,
                     help="histogram bin anchor (default 0)")
    est.add_argument("--bias-correct", action="store_true",
                     help="extrapolate the 1/n_t bias expansion from subsamples")
    est.add_argument("--lambdas", type=_csv_floats, default=None,
                     help="comma-separated subsample fractions (default: the "
                          "0.1..1.0 grid restricted to fractions leaving at "
                          "least 2 trials)")
    est.add_argument("--repeats", type=int, default=DEFAULT_REPEATS,
                     help="subsamples per fraction below 1")
    est.add_argument("--seed", type=int, default=0)
    est.add_argument("-o", "--output", default=None, help="write JSON here instead of stdout")
    est.set_defaults(handler=_cmd_estimate)

    bench = sub.add_parser("benchmark", help="toy benchmark: kernel vs histogram")
    bench.add_argument("--ns", type=int, required=True)
    bench.add_argument("--nd", type=int, required=True)
    bench.add_argument("--nt", type=int, required=True)
    bench.add_argument("--datasets", type=int, required=True)
    bench.add_argument("--seed", type=int, default=0)
    bench.add_argument("--no-prune", action="store_true",
                       help="skip true-MI range balancing")
    bench.add_argument("--widths", type=_csv_floats, default=list(DEFAULT_WIDTHS),
                       help="histogram widths to sweep")
    bench.add_argument("--mc-samples", type=int, default=DEFAULT_MC_SAMPLES,
                       help="Monte-Carlo samples for the true MI")
    bench.add_argument("--repeats", type=int, default=DEFAULT_REPEATS)
    bench.add_argument("--threads", type=int, default=None,
                       help="parallel workers (default: all cores)")
    bench.add_argument("-o", "--output", required=True, help="output directory")
    bench.set_defaults(handler=_cmd_benchmark)

    return parser


def _metric_from_args(args, dataset_kind: str, parser) -> MetricSpec:
    if args.metric is None:
        if dataset_kind == VECTOR:
            return MetricSpec.euclidean()
        parser.error("spike-train input requires an explicit --metric")
    if args.metric == "euclidean":
        return MetricSpec.euclidean()
    if args.metric == "victor-purpura":
        if args.q is None:
            parser.error("--metric victor-purpura requires --q")
        return MetricSpec.victor_purpura(args.q)
    if args.tau is None:
        parser.error("--metric van-rossum requires --tau")
    return MetricSpec.van_rossum(args.tau)


def _cmd_gen_toy(args, parser) -> int:
    spec = ToySpec(args.ns, args.nd, args.nt, args.sigma2, args.seed)
    dataset, _, _ = generate_toy(spec)
    save_dataset(dataset, args.output)
    return 0


def _cmd_distances(args, parser) -> int:
    dataset = load_dataset(args.input, args.format)
    metric = _metric_from_args(args, dataset.kind, parser)
    write_distance_csv(distance_matrix(dataset, metric), args.output)
    return 0


def _cmd_estimate(args, parser) -> int:
    dataset = load_dataset(args.input, args.format)
    if args.histogram:
        if args.bin_width is None:
            parser.error("--histogram requires --bin-width")
        config = HistogramConfig(width=args.bin_width, origin=args.origin)
        estimate = histogram_mi(dataset, config)
        dm = None
    else:
        metric = _metric_from_args(args, dataset.kind, parser)
        dm = distance_matrix(dataset, metric)
        if args.ksg:
            if args.nk is None:
                parser.error("--ksg requires --nk")
            config = KsgConfig(n_k=args.nk)
            estimate = ksg_mi(dataset, dm, config)
        else:
            if args.nh is not None and args.h_frac is not None:
                parser.error("give at most one of --nh and --h-frac")
            if args.nh is not None:
                config = KernelConfig(n_h=args.nh)
            elif args.h_frac is not None:
                config = KernelConfig(h=args.h_frac)
            else:
                config = KernelConfig(n_h=dataset.n_t)
            estimate = kernel_mi(dataset, dm, config)

    out = {"estimator": estimate.estimator, "config": estimate.config,
           "bits": estimate.bits}
    if args.bias_correct:
        lambdas = args.lambdas
        if lambdas is None:
            lambdas = [l for l in DEFAULT_LAMBDAS if math.floor(l * dataset.n_t) >= 2]
        fit, curve = bias_corrected_mi(
            dataset, dm, config,
            lambdas=lambdas, repeats=args.repeats, seed=args.seed,
        )
        out["curve"] = [[size, bits] for size, bits in curve]
        out["intercept_bits"] = fit.intercept_bits
        out["A_bits"] = fit.A_bits
        out["B_bits"] = fit.B_bits
        out["residual"] = fit.residual

    text = json.dumps(out, indent=2, sort_keys=True) + "\n"
    if args.output:
        with open(args.output, "w", encoding="ascii") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def _cmd_benchmark(args, parser) -> int:
    protocol = BenchmarkProtocol(
        args.ns, args.nd, args.nt, args.datasets, prune=not args.no_prune
    )
    result = run_benchmark(
        protocol,
        seed=args.seed,
        widths=args.widths,
        repeats=args.repeats,
        mc_samples=args.mc_samples,
        max_workers=args.threads,
    )
    os.makedirs(args.output, exist_ok=True)
    write_records_csv(result, os.path.join(args.output, "records.csv"))
    write_summary_json(result, os.path.join(args.output, "summary.json"))
    write_scatter_dat(result, os.path.join(args.output, "scatter.dat"))
    sys.stdout.write(json.dumps(result.summary, indent=2, sort_keys=True) + "\n")
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args, parser)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
