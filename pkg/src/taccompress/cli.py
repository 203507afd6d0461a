"""Command-line surface.

Subcommands: simulate, convert, compress, decompress, metrics, bdrate,
bench-lossless, bench-lossy, bench-downstream, classify, cluster,
probe-codecs.  Exit codes: 0 success, 1 usage error, 2 data error,
3 codec error.
"""

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

from . import __version__, bench
from .adapters import load_codec_specs, probe
from .analysis import adjusted_rand_index, featurize, kmeans, tsne_2d
from .codec import (
    decode,
    encode_lossless,
    encode_lossy,
    read_blob,
    write_blob,
)
from .errors import CodecError, FormatError
from .imaging import image_to_trace, read_ppm, trace_to_image, write_ppm
from .layout import GraspPose, default_layout
from .metrics import (
    QualityMetric,
    RDCurve,
    RDPoint,
    bandwidth_bits_per_second,
    bd_rate,
    bpss,
    compression_ratio,
    format_metric,
    ms_ssim,
    psnr,
)
from .simulate import OBJECT_NAMES, PhasePlan, default_profiles, generate_trace
from .trace import load_trace, save_trace

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_CODEC = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _pose_of(token: str) -> GraspPose:
    try:
        return GraspPose[token.upper()]
    except KeyError:
        raise FormatError(f"unknown pose {token!r}") from None


def _slug(name: str) -> str:
    return name.replace(" ", "_")


def _load_image(path: Path):
    if path.suffix == ".mptd":
        return trace_to_image(load_trace(path))
    return read_ppm(path)


def _cmd_simulate(args):
    objects = args.objects.split(",") if args.objects != "all" else list(OBJECT_NAMES)
    poses = (
        [_pose_of(t) for t in args.poses.split(",")]
        if args.poses != "all"
        else list(GraspPose)
    )
    plan = (
        PhasePlan(*[float(t) for t in args.plan.split(",")])
        if args.plan
        else PhasePlan()
    )
    profiles = {p.name: p for p in default_profiles()}
    out_dir = Path(args.out or ".")
    out_dir.mkdir(parents=True, exist_ok=True)
    for obj in objects:
        obj = obj.strip()
        if obj not in profiles:
            raise FormatError(f"unknown object {obj!r}")
        for pose in poses:
            for rep in range(args.reps):
                trace = generate_trace(
                    profiles[obj],
                    pose,
                    plan,
                    sample_rate_hz=args.rate,
                    seed=bench._trace_seed(args.seed, obj, pose, rep),
                    repetition_id=rep,
                )
                name = f"{_slug(obj)}_{pose.name.lower()}_{rep}.mptd"
                save_trace(trace, out_dir / name)
                print(name)
    return EXIT_OK


def _cmd_convert(args):
    src, dst = Path(args.input), Path(args.output)
    if src.suffix == ".mptd" and dst.suffix == ".ppm":
        trace = load_trace(src)
        write_ppm(trace_to_image(trace), dst)
    elif src.suffix == ".ppm" and dst.suffix == ".mptd":
        image = read_ppm(src)
        trace = image_to_trace(
            image,
            default_layout(),
            sample_rate_hz=args.rate,
            object_label=args.object,
            pose_label=_pose_of(args.pose),
            repetition_id=args.rep,
        )
        save_trace(trace, dst)
    else:
        raise FormatError("convert maps .mptd -> .ppm or .ppm -> .mptd")
    print(dst)
    return EXIT_OK


def _cmd_compress(args):
    image = _load_image(Path(args.input))
    blob = encode_lossy(image, args.qp) if args.qp else encode_lossless(image)
    size = write_blob(blob, Path(args.output))
    rate = bpss(blob.payload_bits, image.sample_count)
    print(
        f"{args.output}: {size} bytes, bpss {format_metric(rate)}, "
        f"cr {format_metric(compression_ratio(rate))}"
    )
    return EXIT_OK


def _cmd_decompress(args):
    blob = read_blob(Path(args.input))
    image = decode(blob)
    dst = Path(args.output)
    if dst.suffix == ".mptd":
        trace = image_to_trace(
            image,
            default_layout(),
            sample_rate_hz=args.rate,
            object_label=args.object,
            pose_label=_pose_of(args.pose),
            repetition_id=args.rep,
        )
        save_trace(trace, dst)
    else:
        write_ppm(image, dst)
    print(dst)
    return EXIT_OK


def _cmd_metrics(args):
    a = _load_image(Path(args.a))
    b = _load_image(Path(args.b))
    print(f"psnr_db = {format_metric(psnr(a, b))}")
    print(f"ms_ssim = {format_metric(ms_ssim(a, b))}")
    if args.bits is not None:
        rate = bpss(args.bits, a.sample_count)
        print(f"bpss = {format_metric(rate)}")
        print(f"cr = {format_metric(compression_ratio(rate))}")
        print(
            "bandwidth_bits_per_s = "
            f"{format_metric(bandwidth_bits_per_second(args.rate, a.width, rate))}"
        )
    return EXIT_OK


def _read_curve(path: Path, codec_id: str) -> RDCurve:
    points = []
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
    header = [c.strip().lower() for c in rows[0]]
    try:
        bi = header.index("bpss")
        pi = header.index("psnr_db")
        mi = header.index("ms_ssim")
    except ValueError:
        raise FormatError(f"{path}: need bpss, psnr_db, ms_ssim columns") from None
    for row in rows[1:]:
        points.append(
            RDPoint(
                bpss=float(row[bi]),
                psnr_db=float(row[pi]),
                ms_ssim=float(row[mi]),
            )
        )
    points.sort(key=lambda p: p.bpss)
    return RDCurve(codec_id=codec_id, points=tuple(points))


def _cmd_bdrate(args):
    ref = _read_curve(Path(args.reference), "reference")
    test = _read_curve(Path(args.test), "test")
    metric = QualityMetric.PSNR if args.metric == "psnr" else QualityMetric.MSSSIM
    value = bd_rate(ref, test, metric)
    print(f"bd_rate_percent = {format_metric(value)}")
    return EXIT_OK


def _cmd_probe_codecs(args):
    specs = load_codec_specs(args.specs)
    wanted = set(args.codecs.split(",")) if args.codecs else None
    print(f"{'codec':14s} {'kind':9s} {'status':12s} detail")
    for spec in specs:
        if wanted and spec.codec_id not in wanted:
            continue
        result = probe(spec)
        print(
            f"{spec.codec_id:14s} {spec.kind.value:9s} "
            f"{result.status.value:12s} {result.detail}"
        )
    return EXIT_OK


def _bench_config(args) -> bench.BenchConfig:
    if args.config:
        config = bench.load_config(args.config)
    else:
        config = bench.BenchConfig()
    if args.out:
        config = bench.BenchConfig(
            **{**config.__dict__, "output_directory": args.out}
        )
    if args.jobs is not None:
        config = bench.BenchConfig(**{**config.__dict__, "jobs": args.jobs})
    if args.seed is not None:
        config = bench.BenchConfig(**{**config.__dict__, "seed": args.seed})
    return config


def _cmd_bench_lossless(args):
    config = _bench_config(args)
    report = bench.run_lossless_suite(config)
    for path in bench.write_lossless_report(report, config.output_directory):
        print(path)
    return EXIT_OK


def _cmd_bench_lossy(args):
    config = _bench_config(args)
    if args.config is None and config.codecs == (bench.NATIVE_LOSSLESS,):
        config = bench.BenchConfig(
            **{**config.__dict__, "codecs": (bench.NATIVE_LOSSY,)}
        )
    report = bench.run_lossy_suite(config)
    for path in bench.write_lossy_report(report, config.output_directory):
        print(path)
    return EXIT_OK


def _cmd_bench_downstream(args):
    config = _bench_config(args)
    report = bench.run_downstream_suite(config)
    for path in bench.write_downstream_report(report, config.output_directory):
        print(path)
    return EXIT_OK


def _cmd_cluster(args):
    config = _bench_config(args)
    corpus = bench.build_corpus(config)
    feats = np.stack(
        [featurize(trace_to_image(t), config.feature_height) for t in corpus]
    )
    labels = [t.object_label for t in corpus]
    embedding = tsne_2d(feats, perplexity=args.perplexity, seed=config.split_seed)
    k = len(set(labels))
    result = kmeans(embedding, k, seed=config.split_seed)
    ari = adjusted_rand_index(labels, result.assignments)
    out_dir = Path(config.output_directory)
    out_dir.mkdir(parents=True, exist_ok=True)
    out = out_dir / "cluster_embedding.csv"
    rows = [
        [labels[i], format_metric(float(embedding[i, 0])),
         format_metric(float(embedding[i, 1])), int(result.assignments[i])]
        for i in range(len(labels))
    ]
    bench._atomic_write(out, bench._csv_text(
        [f"tool = taccompress {__version__}", f"k = {k}",
         f"adjusted_rand_index = {format_metric(ari)}"],
        ["label", "x", "y", "cluster"],
        rows,
    ))
    print(out)
    print(f"adjusted_rand_index = {format_metric(ari)}")
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="taccompress", description=__doc__)
    parser.add_argument("--version", action="version", version=f"taccompress {__version__}")
    parser.add_argument("--seed", type=int, default=None, help="base seed for synthetic data")
    parser.add_argument("--jobs", type=int, default=None, help="worker pool size (0 = CPUs)")
    parser.add_argument("--config", default=None, help="benchmark config file")
    parser.add_argument("--out", default=None, help="output directory or file")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="write synthetic .mptd traces")
    p.add_argument("--objects", default="all")
    p.add_argument("--poses", default="all")
    p.add_argument("--reps", type=int, default=1)
    p.add_argument("--rate", type=float, default=100.0)
    p.add_argument("--plan", default=None, help="pre,ramp,lift,hold,decay seconds")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("convert", help="convert .mptd <-> .ppm")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--object", default="")
    p.add_argument("--pose", default="pinch")
    p.add_argument("--rep", type=int, default=0)
    p.add_argument("--rate", type=float, default=100.0)
    p.set_defaults(func=_cmd_convert)

    p = sub.add_parser("compress", help="compress an image/trace to a .tlc1 blob")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--qp", type=int, default=None, help="lossy quantization step (1..64)")
    p.set_defaults(func=_cmd_compress)

    p = sub.add_parser("decompress", help="decode a .tlc1 blob")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--object", default="")
    p.add_argument("--pose", default="pinch")
    p.add_argument("--rep", type=int, default=0)
    p.add_argument("--rate", type=float, default=100.0)
    p.set_defaults(func=_cmd_decompress)

    p = sub.add_parser("metrics", help="PSNR / MS-SSIM between two images")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("--bits", type=int, default=None, help="compressed bits for bpss/CR")
    p.add_argument("--rate", type=float, default=100.0)
    p.set_defaults(func=_cmd_metrics)

    p = sub.add_parser("bdrate", help="BD-rate between two RD curve CSVs")
    p.add_argument("reference")
    p.add_argument("test")
    p.add_argument("--metric", choices=["psnr", "msssim"], default="psnr")
    p.set_defaults(func=_cmd_bdrate)

    p = sub.add_parser("probe-codecs", help="check external codec availability")
    p.add_argument("--specs", default=None, help="codec spec file (default: bundled)")
    p.add_argument("--codecs", default=None, help="comma-separated codec ids")
    p.set_defaults(func=_cmd_probe_codecs)

    for name, fn in (
        ("bench-lossless", _cmd_bench_lossless),
        ("bench-lossy", _cmd_bench_lossy),
        ("bench-downstream", _cmd_bench_downstream),
        ("classify", _cmd_bench_downstream),
    ):
        p = sub.add_parser(name, help=f"run the {name.replace('-', ' ')} suite")
        p.set_defaults(func=fn)

    p = sub.add_parser("cluster", help="t-SNE + k-means clustering of a corpus")
    p.add_argument("--perplexity", type=float, default=20.0)
    p.set_defaults(func=_cmd_cluster)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        return args.func(args)
    except CodecError as exc:
        print(f"codec error: {exc}", file=sys.stderr)
        return EXIT_CODEC
    except (FormatError, ValueError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
