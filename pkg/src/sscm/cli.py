"""Command-line front end for the generate → extract → fit → match/eval pipeline.

Exit codes: 0 success, 1 usage error, 2 data or validation error.
Diagnostics go to stderr; machine-readable results to stdout or files.
"""

from __future__ import annotations

import argparse
import sys
import warnings
from pathlib import Path

from . import io
from .channel import CarrierConfig, ChannelDims
from .extract import EmptyChannelError, ExtractConfig, extract_stats
from .feedback import DftCodebook, compute_csi_targets, evaluate, noise_inject, train_linear_codec
from .fit import BASELINE_NAMES, build_catalog, build_sscm, catalog_match, load_baseline, load_catalog, save_catalog
from .generate import GenConfig, generate_dataset

EXIT_USAGE = 1
EXIT_DATA = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="sscm", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", help="synthesize a channel dataset from a parameter file")
    g.add_argument("--params", required=True)
    g.add_argument("--count", type=int, required=True)
    g.add_argument("--seed", type=int, required=True)
    g.add_argument("--start", type=int, default=0, help="index of the first sample")
    g.add_argument("--nrx", type=int, default=4)
    g.add_argument("--ntx", type=int, default=8)
    g.add_argument("--nsc", type=int, default=208)
    g.add_argument("--scs", type=float, default=CarrierConfig().subcarrier_spacing, help="Hz")
    g.add_argument("--fc", type=float, default=CarrierConfig().carrier_freq, help="Hz")
    g.add_argument("--workers", type=int, default=1)
    g.add_argument("--out", required=True)

    e = sub.add_parser("extract", help="per-sample statistics to CSV")
    e.add_argument("--in", dest="inp", required=True)
    e.add_argument("--out", required=True)
    e.add_argument("--threshold-db", type=float, default=ExtractConfig.pdp_threshold_db)
    e.add_argument("--gap", type=int, default=ExtractConfig.cluster_gap_taps)
    e.add_argument("--figures", metavar="DIR", help="also write histograms of the statistics")

    f = sub.add_parser("fit", help="fit statistics into a baseline parameter set")
    f.add_argument("--stats", required=True)
    f.add_argument("--baseline", required=True, help=", ".join(BASELINE_NAMES))
    f.add_argument("--out", required=True)

    c = sub.add_parser("catalog", help="build a sub-scenario catalog directory")
    c.add_argument("--kf-grid", type=_floats, required=True, help="mean K-factors in dB")
    c.add_argument("--as-grid", type=_floats, required=True, help="mean lg ASD values")
    c.add_argument("--nc-grid", type=_floats, required=True, help="cluster rates")
    c.add_argument("--baseline", default="uma-los")
    c.add_argument("--prefix", default="uma")
    c.add_argument("--out", required=True)

    m = sub.add_parser("match", help="rank catalog entries against a query parameter file")
    m.add_argument("--catalog", required=True)
    m.add_argument("--query", required=True)
    m.add_argument("--top-k", type=int, default=1)

    v = sub.add_parser("eval", help="train a codec and score SGCS on a test dataset")
    v.add_argument("--train")
    v.add_argument("--test", required=True)
    v.add_argument("--codec", choices=("linear", "dft"), default="linear")
    v.add_argument("--coeffs", type=int, default=7)
    v.add_argument("--bits-per-comp", type=int, default=4)
    v.add_argument("--beams", type=int, default=2)
    v.add_argument("--amp-bits", type=int, default=3)
    v.add_argument("--phase-bits", type=int, default=3)
    v.add_argument("--subband", type=int, default=16)
    v.add_argument("--per-sample", metavar="CSV")
    v.add_argument("--figures", metavar="DIR")

    a = sub.add_parser("augment", help="noise-injection augmentation of a dataset")
    a.add_argument("--in", dest="inp", required=True)
    a.add_argument("--snr-db", type=float, required=True)
    a.add_argument("--seed", type=int, required=True)
    a.add_argument("--out", required=True)

    r = sub.add_parser("report", help="8-byte statistics report codec")
    rsub = r.add_subparsers(dest="action", required=True, parser_class=_Parser)
    re_ = rsub.add_parser("encode")
    re_.add_argument("--params", required=True)
    rd = rsub.add_parser("decode")
    rd.add_argument("--hex", required=True)
    return p


def cmd_generate(args) -> None:
    if args.count < 1:
        raise UsageError("--count must be >= 1")
    if args.workers < 1:
        raise UsageError("--workers must be >= 1")
    params = io.read_params(args.params)
    try:
        config = GenConfig(dims=ChannelDims(args.nrx, args.ntx, args.nsc), carrier=CarrierConfig(args.fc, args.scs))
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    samples = generate_dataset(params, config, args.count, args.seed, start=args.start, workers=args.workers)
    io.write_dataset(args.out, samples)


def cmd_extract(args) -> None:
    try:
        cfg = ExtractConfig(args.threshold_db, args.gap)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    samples = io.read_dataset(args.inp)
    stats = []
    for i, s in enumerate(samples):
        try:
            stats.append(extract_stats(s, cfg))
        except EmptyChannelError as exc:
            raise EmptyChannelError(f"sample {i}: {exc}") from None
    io.write_stats_csv(args.out, stats)
    if args.figures:
        from .plotting import plot_stats

        plot_stats(stats, args.figures)


def cmd_fit(args) -> None:
    try:
        baseline = load_baseline(args.baseline)
    except KeyError as exc:
        raise UsageError(exc.args[0]) from None
    stats = io.read_stats_csv(args.stats)
    sscm = build_sscm(stats, baseline)
    io.write_params(args.out, sscm, comment=f"fitted from {Path(args.stats).name} ({len(stats)} samples) on {args.baseline}")


def cmd_catalog(args) -> None:
    try:
        baseline = load_baseline(args.baseline)
    except KeyError as exc:
        raise UsageError(exc.args[0]) from None
    save_catalog(build_catalog(args.kf_grid, args.as_grid, args.nc_grid, baseline, args.prefix), args.out)


def cmd_match(args) -> None:
    if args.top_k < 1:
        raise UsageError("--top-k must be >= 1")
    catalog = load_catalog(args.catalog)
    query = io.read_params(args.query)
    for rank, (entry, dist) in enumerate(catalog_match(catalog, query, args.top_k), start=1):
        print(f"{rank},{entry.id},{dist:.9g}")


def cmd_eval(args) -> None:
    test = io.read_dataset(args.test)
    if args.codec == "linear":
        if not args.train:
            raise UsageError("--train is required for the linear codec")
        train = io.read_dataset(args.train)
        targets = [compute_csi_targets(s, args.subband) for s in train]
        codec = train_linear_codec(targets, args.coeffs, args.bits_per_comp)
        train_id = Path(args.train).stem
    else:
        try:
            codec = DftCodebook(test[0].h_f.shape[1], args.beams, args.amp_bits, args.phase_bits)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        train_id = ""
    report = evaluate(codec, test, args.subband, train_id, Path(args.test).stem)
    sys.stdout.write(report.to_text())
    if args.per_sample:
        Path(args.per_sample).write_text(report.per_sample_csv(), encoding="utf-8")
    if args.figures:
        from .plotting import plot_sgcs

        plot_sgcs(report, args.figures)


def cmd_augment(args) -> None:
    io.write_dataset(args.out, noise_inject(io.read_dataset(args.inp), args.snr_db, args.seed))


def cmd_report(args) -> None:
    if args.action == "encode":
        sys.stdout.write(io.encode_report(io.read_params(args.params)).hex() + "\n")
        return
    try:
        data = bytes.fromhex(args.hex)
    except ValueError:
        raise UsageError(f"--hex is not a hex string: {args.hex!r}") from None
    fields = io.decode_report(data)
    sys.stdout.write(io.format_params(io.report_to_params(fields)))


COMMANDS = {
    "generate": cmd_generate,
    "extract": cmd_extract,
    "fit": cmd_fit,
    "catalog": cmd_catalog,
    "match": cmd_match,
    "eval": cmd_eval,
    "augment": cmd_augment,
    "report": cmd_report,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    with warnings.catch_warnings():
        warnings.simplefilter("default")
        try:
            COMMANDS[args.command](args)
        except UsageError as exc:
            parser.print_usage(sys.stderr)
            print(f"sscm {args.command}: error: {exc}", file=sys.stderr)
            return EXIT_USAGE
        except (OSError, ValueError) as exc:
            print(f"sscm {args.command}: {exc}", file=sys.stderr)
            return EXIT_DATA
    return 0


if __name__ == "__main__":
    sys.exit(main())
