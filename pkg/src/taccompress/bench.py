"""Config-driven benchmark campaigns: lossless table, lossy RD, downstream.

A benchmark run is described by an INI-style config file::

    [dataset]
    kind = synthetic            ; or "ingest" with directory = path/to/mptd
    objects = apple, egg        ; default: all eight
    poses = pinch, cylindrical  ; default: all four
    reps = 10
    seed = 0
    sample_rate_hz = 100
    plan_s = 0.15, 0.10, 0.05, 0.50, 0.05

    [run]
    codecs = tlc1, gzip
    tile_height = 256
    jobs = 0                    ; 0 = logical CPU count
    codec_specs =               ; optional path, else bundled templates
    bd_pairs = hm-intra:hm-scc
    quality_ladder.tlc1-lossy = 2, 4, 8, 16, 32, 64

    [downstream]
    classifiers = knn, softmax
    codec = tlc1-lossy
    qualities = 8, 64
    feature_height = 16
    train_fraction = 0.7
    split_seed = 0

    [output]
    directory = bench-out

Every emitted CSV embeds the fully resolved config and tool versions as
``#`` comment lines, contains no timestamps, and is written atomically, so
identical configs and seeds produce byte-identical reports.
"""

import configparser
import csv
import hashlib
import io
import math
import os
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from . import codec as native
from .adapters import CodecKind, CodecSpec, ProbeResult, load_codec_specs, probe, run_external
from .analysis import (
    ClassifierKind,
    FeatureMatrix,
    accuracy,
    featurize,
    predict,
    split_indices,
    train_classifier,
)
from .errors import CodecIntegrityError, FormatError
from .imaging import DEFAULT_TILE_HEIGHT, TactileImage, tile_ranges, trace_to_image
from .layout import GraspPose
from .metrics import (
    QualityMetric,
    RDCurve,
    RDPoint,
    bd_rate,
    bpss as bpss_of,
    compression_ratio,
    format_metric,
    ms_ssim,
    psnr,
)
from .simulate import OBJECT_NAMES, PhasePlan, default_profiles, generate_trace
from .trace import GraspTrace, load_trace

NATIVE_LOSSLESS = native.CODEC_ID_LOSSLESS
NATIVE_LOSSY = native.CODEC_ID_LOSSY
DEFAULT_LADDER = (2, 4, 8, 16, 32, 64)

# Reference BD-rate results published for SCC-versus-intra coding on the
# real Dex-MPTD recordings; printed for context only, never asserted.
SCC_REFERENCE_CONTEXT = {
    ("vtm-intra", "vtm-scc"): "Dex-MPTD reference: -30.67% (VTM SCC vs intra)",
    ("hm-intra", "hm-scc"): "Dex-MPTD reference: -56.42% (HM SCC vs intra)",
}


@dataclass(frozen=True)
class BenchConfig:
    """Fully resolved benchmark configuration."""

    dataset_kind: str = "synthetic"
    objects: tuple[str, ...] = OBJECT_NAMES
    poses: tuple[GraspPose, ...] = tuple(GraspPose)
    reps: int = 10
    seed: int = 0
    sample_rate_hz: float = 100.0
    plan: PhasePlan = field(
        default_factory=lambda: PhasePlan(0.15, 0.10, 0.05, 0.50, 0.05)
    )
    ingest_directory: str = ""
    codecs: tuple[str, ...] = (NATIVE_LOSSLESS,)
    tile_height: int = DEFAULT_TILE_HEIGHT
    jobs: int = 0
    codec_specs_path: str = ""
    bd_pairs: tuple[tuple[str, str], ...] = ()
    quality_ladders: dict = field(default_factory=dict)
    classifiers: tuple[ClassifierKind, ...] = (
        ClassifierKind.KNN,
        ClassifierKind.SOFTMAX_REGRESSION,
    )
    downstream_codec: str = NATIVE_LOSSY
    downstream_qualities: tuple[int, ...] = (8, 64)
    feature_height: int = 16
    train_fraction: float = 0.7
    split_seed: int = 0
    output_directory: str = "bench-out"

    def __post_init__(self):
        if self.dataset_kind not in ("synthetic", "ingest"):
            raise ValueError(f"unknown dataset kind {self.dataset_kind!r}")
        if not self.codecs:
            raise ValueError("at least one codec required")
        if self.reps < 1:
            raise ValueError("reps must be >= 1")
        if self.tile_height < 1:
            raise ValueError("tile_height must be positive")

    def worker_count(self) -> int:
        return self.jobs if self.jobs > 0 else (os.cpu_count() or 1)

    def resolved_items(self) -> list[tuple[str, str]]:
        plan = ",".join(f"{d:g}" for d in self.plan.durations)
        items = [
            ("dataset.kind", self.dataset_kind),
            ("dataset.objects", ",".join(self.objects)),
            ("dataset.poses", ",".join(p.name.lower() for p in self.poses)),
            ("dataset.reps", str(self.reps)),
            ("dataset.seed", str(self.seed)),
            ("dataset.sample_rate_hz", f"{self.sample_rate_hz:g}"),
            ("dataset.plan_s", plan),
            ("dataset.directory", self.ingest_directory),
            ("run.codecs", ",".join(self.codecs)),
            ("run.tile_height", str(self.tile_height)),
            ("run.codec_specs", self.codec_specs_path),
            ("run.bd_pairs", ",".join(f"{a}:{b}" for a, b in self.bd_pairs)),
        ]
        for cid in sorted(self.quality_ladders):
            items.append(
                (f"run.quality_ladder.{cid}",
                 ",".join(str(q) for q in self.quality_ladders[cid]))
            )
        items += [
            ("downstream.classifiers", ",".join(k.value for k in self.classifiers)),
            ("downstream.codec", self.downstream_codec),
            ("downstream.qualities", ",".join(str(q) for q in self.downstream_qualities)),
            ("downstream.feature_height", str(self.feature_height)),
            ("downstream.train_fraction", f"{self.train_fraction:g}"),
            ("downstream.split_seed", str(self.split_seed)),
            ("output.directory", self.output_directory),
        ]
        return items


def _split_list(raw: str) -> list[str]:
    return [tok.strip() for tok in raw.replace(",", " ").split() if tok.strip()]


def load_config(path) -> BenchConfig:
    parser = configparser.ConfigParser(interpolation=None)
    read = parser.read(path)
    if not read:
        raise FormatError(f"config file not found: {path}")
    return config_from_parser(parser)


def parse_config(text: str) -> BenchConfig:
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise FormatError(f"bad config: {exc}") from exc
    return config_from_parser(parser)


def config_from_parser(parser: configparser.ConfigParser) -> BenchConfig:
    kwargs = {}
    ds = parser["dataset"] if parser.has_section("dataset") else {}
    if "kind" in ds:
        kwargs["dataset_kind"] = ds["kind"].strip().lower()
    if "objects" in ds:
        kwargs["objects"] = tuple(
            tok.strip() for tok in ds["objects"].split(",") if tok.strip()
        )
    if "poses" in ds:
        try:
            kwargs["poses"] = tuple(GraspPose[t.upper()] for t in _split_list(ds["poses"]))
        except KeyError as exc:
            raise FormatError(f"unknown pose {exc}") from None
    if "reps" in ds:
        kwargs["reps"] = int(ds["reps"])
    if "seed" in ds:
        kwargs["seed"] = int(ds["seed"])
    if "sample_rate_hz" in ds:
        kwargs["sample_rate_hz"] = float(ds["sample_rate_hz"])
    if "plan_s" in ds:
        durations = [float(t) for t in _split_list(ds["plan_s"])]
        if len(durations) != 5:
            raise FormatError("plan_s needs exactly 5 durations")
        kwargs["plan"] = PhasePlan(*durations)
    if "directory" in ds:
        kwargs["ingest_directory"] = ds["directory"].strip()

    run = parser["run"] if parser.has_section("run") else {}
    ladders = {}
    for key in run:
        if key.startswith("quality_ladder."):
            cid = key[len("quality_ladder.") :]
            ladders[cid] = tuple(int(t) for t in _split_list(run[key]))
    if ladders:
        kwargs["quality_ladders"] = ladders
    if "codecs" in run:
        kwargs["codecs"] = tuple(_split_list(run["codecs"]))
    if "tile_height" in run:
        kwargs["tile_height"] = int(run["tile_height"])
    if "jobs" in run:
        kwargs["jobs"] = int(run["jobs"])
    if "codec_specs" in run:
        kwargs["codec_specs_path"] = run["codec_specs"].strip()
    if "bd_pairs" in run:
        pairs = []
        for tok in _split_list(run["bd_pairs"]):
            if ":" not in tok:
                raise FormatError(f"bd pair {tok!r} must look like ref:test")
            ref, test = tok.split(":", 1)
            pairs.append((ref.strip(), test.strip()))
        kwargs["bd_pairs"] = tuple(pairs)

    down = parser["downstream"] if parser.has_section("downstream") else {}
    if "classifiers" in down:
        try:
            kwargs["classifiers"] = tuple(
                ClassifierKind(t.lower()) for t in _split_list(down["classifiers"])
            )
        except ValueError as exc:
            raise FormatError(str(exc)) from None
    if "codec" in down:
        kwargs["downstream_codec"] = down["codec"].strip()
    if "qualities" in down:
        kwargs["downstream_qualities"] = tuple(int(t) for t in _split_list(down["qualities"]))
    if "feature_height" in down:
        kwargs["feature_height"] = int(down["feature_height"])
    if "train_fraction" in down:
        kwargs["train_fraction"] = float(down["train_fraction"])
    if "split_seed" in down:
        kwargs["split_seed"] = int(down["split_seed"])

    out = parser["output"] if parser.has_section("output") else {}
    if "directory" in out:
        kwargs["output_directory"] = out["directory"].strip()
    return BenchConfig(**kwargs)


def _trace_seed(base_seed: int, obj: str, pose: GraspPose, rep: int) -> int:
    digest = hashlib.sha256(
        f"trace\x1f{base_seed}\x1f{obj}\x1f{pose.name}\x1f{rep}".encode()
    ).digest()
    return int.from_bytes(digest[:8], "little")


def build_corpus(config: BenchConfig) -> list[GraspTrace]:
    """Materialize the benchmark traces, synthetic or ingested."""
    if config.dataset_kind == "ingest":
        directory = Path(config.ingest_directory)
        files = sorted(directory.glob("*.mptd"))
        if not files:
            raise FormatError(f"ingest directory has no .mptd files: {directory}")
        return [load_trace(f) for f in files]
    profiles = {p.name: p for p in default_profiles()}
    unknown = [o for o in config.objects if o not in profiles]
    if unknown:
        raise ValueError(f"unknown objects: {unknown}")
    corpus = []
    for obj in config.objects:
        for pose in config.poses:
            for rep in range(config.reps):
                corpus.append(
                    generate_trace(
                        profiles[obj],
                        pose,
                        config.plan,
                        sample_rate_hz=config.sample_rate_hz,
                        seed=_trace_seed(config.seed, obj, pose, rep),
                        repetition_id=rep,
                    )
                )
    return corpus


@dataclass
class TraceResult:
    object_label: str
    pose: GraspPose
    repetition: int
    codec_id: str
    quality: int | None
    bits: int
    sub_samples: int
    mse_sum: float          # sum of squared errors over all samples
    msssim_weighted: float  # msssim * sample_count, summed over tiles
    recon: TactileImage | None = None

    @property
    def bpss(self) -> float:
        return bpss_of(self.bits, self.sub_samples)


class CodecRunner:
    """Uniform tile-by-tile interface over the native codec and adapters."""

    def __init__(self, specs: dict[str, CodecSpec], tile_height: int,
                 workdir=None, compute_msssim: bool = True):
        self.specs = specs
        self.tile_height = tile_height
        self.workdir = workdir
        self.compute_msssim = compute_msssim

    def kind_of(self, codec_id: str) -> CodecKind:
        if codec_id == NATIVE_LOSSLESS:
            return CodecKind.LOSSLESS
        if codec_id == NATIVE_LOSSY:
            return CodecKind.LOSSY
        if codec_id in self.specs:
            return self.specs[codec_id].kind
        raise ValueError(f"unknown codec id {codec_id!r}")

    def is_native(self, codec_id: str) -> bool:
        return codec_id in (NATIVE_LOSSLESS, NATIVE_LOSSY)

    def _encode_tile(self, tile: TactileImage, codec_id: str, quality):
        if codec_id == NATIVE_LOSSLESS:
            blob = native.encode_lossless(tile)
            recon = native.decode_lossless(blob)
            if recon != tile:
                raise CodecIntegrityError("tlc1: lossless round trip mismatch")
            return blob.payload_bits, recon
        if codec_id == NATIVE_LOSSY:
            blob = native.encode_lossy(tile, quality)
            return blob.payload_bits, native.decode_lossy(blob)
        spec = self.specs[codec_id]
        blob, recon = run_external(
            spec, tile,
            quality=quality if spec.kind is CodecKind.LOSSY else None,
            workdir=self.workdir,
        )
        return blob.payload_bits, recon

    def run_trace(self, trace: GraspTrace, codec_id: str, quality,
                  keep_recon: bool = False) -> TraceResult:
        bits = 0
        mse_sum = 0.0
        msssim_weighted = 0.0
        recon_tiles = []
        for start, stop in tile_ranges(trace.frame_count, self.tile_height):
            tile = trace_to_image(trace, (start, stop))
            tile_bits, recon = self._encode_tile(tile, codec_id, quality)
            bits += tile_bits
            diff = tile.pixels.astype(np.float64) - recon.pixels.astype(np.float64)
            mse_sum += float((diff * diff).sum())
            if self.compute_msssim:
                msssim_weighted += ms_ssim(tile, recon) * tile.sample_count
            if keep_recon:
                recon_tiles.append(recon.pixels)
        recon_image = (
            TactileImage(np.vstack(recon_tiles)) if keep_recon else None
        )
        return TraceResult(
            object_label=trace.object_label,
            pose=trace.pose_label,
            repetition=trace.repetition_id,
            codec_id=codec_id,
            quality=quality,
            bits=bits,
            sub_samples=trace.sub_sample_count,
            mse_sum=mse_sum,
            msssim_weighted=msssim_weighted,
            recon=recon_image,
        )


def _resolve_codecs(config: BenchConfig, want_kind: CodecKind | None
                    ) -> tuple[dict[str, CodecSpec], list[str], list[ProbeResult]]:
    """Split requested codecs into runnable ids and skipped probe results."""
    spec_path = config.codec_specs_path or None
    all_specs = {s.codec_id: s for s in load_codec_specs(spec_path)}
    runnable = []
    skipped = []
    specs = {}
    for cid in config.codecs:
        if cid in (NATIVE_LOSSLESS, NATIVE_LOSSY):
            kind = CodecKind.LOSSLESS if cid == NATIVE_LOSSLESS else CodecKind.LOSSY
            if want_kind is None or kind is want_kind:
                runnable.append(cid)
            continue
        if cid not in all_specs:
            raise ValueError(f"codec {cid!r} not found in the codec spec file")
        spec = all_specs[cid]
        if want_kind is not None and spec.kind is not want_kind:
            continue
        result = probe(spec)
        if result.available:
            runnable.append(cid)
            specs[cid] = spec
        else:
            skipped.append(result)
    return specs, runnable, skipped


def _parallel_results(items, worker, jobs: int):
    if jobs <= 1:
        return [worker(item) for item in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(worker, items))


def _mean(values) -> float:
    values = list(values)
    return sum(values) / len(values)


@dataclass
class BenchReport:
    kind: str
    header: list[tuple[str, str]]
    cells: list[dict]
    object_marginals: dict
    pose_marginals: dict
    codec_marginals: dict
    skipped: list[ProbeResult] = field(default_factory=list)
    rd_curves: dict = field(default_factory=dict)
    bd_rows: list[dict] = field(default_factory=list)
    total_bits: int = 0
    accuracy_rows: list[dict] = field(default_factory=list)


def _report_header(config: BenchConfig) -> list[tuple[str, str]]:
    return [
        ("tool", f"taccompress {__version__}"),
        ("numpy", np.__version__),
    ] + config.resolved_items()


def run_lossless_suite(config: BenchConfig, corpus=None) -> BenchReport:
    """Compress every trace with every requested lossless codec and tabulate
    bpss / CR per object and pose, Table-1 style."""
    corpus = corpus if corpus is not None else build_corpus(config)
    if not corpus:
        raise FormatError("empty corpus")
    specs, runnable, skipped = _resolve_codecs(config, CodecKind.LOSSLESS)
    if not runnable:
        raise CodecIntegrityError("all requested lossless codecs are unavailable")
    runner = CodecRunner(specs, config.tile_height, compute_msssim=False)

    items = [(trace, cid) for cid in runnable for trace in corpus]
    results = _parallel_results(
        items, lambda it: runner.run_trace(it[0], it[1], None), config.worker_count()
    )

    by_cell = {}
    total_bits = 0
    for res in results:
        by_cell.setdefault((res.object_label, res.pose, res.codec_id), []).append(res)
        total_bits += res.bits

    cells = []
    for (obj, pose, cid) in sorted(by_cell, key=lambda k: (k[0], k[1].value, k[2])):
        group = by_cell[(obj, pose, cid)]
        mean_bpss = _mean(r.bpss for r in group)
        cells.append(
            {
                "object": obj,
                "pose": pose.name.lower(),
                "codec": cid,
                "quality": "",
                "bpss": mean_bpss,
                "cr": compression_ratio(mean_bpss),
                "traces": len(group),
                "bits": sum(r.bits for r in group),
            }
        )

    objects = sorted({c["object"] for c in cells})
    poses = sorted({c["pose"] for c in cells})
    object_marginals = {
        (obj, cid): _mean(c["bpss"] for c in cells if c["object"] == obj and c["codec"] == cid)
        for obj in objects
        for cid in runnable
    }
    pose_marginals = {
        (pose, cid): _mean(c["bpss"] for c in cells if c["pose"] == pose and c["codec"] == cid)
        for pose in poses
        for cid in runnable
    }
    codec_marginals = {
        cid: _mean(c["bpss"] for c in cells if c["codec"] == cid) for cid in runnable
    }
    return BenchReport(
        kind="lossless",
        header=_report_header(config),
        cells=cells,
        object_marginals=object_marginals,
        pose_marginals=pose_marginals,
        codec_marginals=codec_marginals,
        skipped=skipped,
        total_bits=total_bits,
    )


def _ladder_for(config: BenchConfig, codec_id: str, specs) -> tuple[int, ...]:
    if codec_id in config.quality_ladders:
        return tuple(config.quality_ladders[codec_id])
    if codec_id == NATIVE_LOSSY:
        return DEFAULT_LADDER
    return tuple(specs[codec_id].quality_ladder)


def run_lossy_suite(config: BenchConfig, corpus=None) -> BenchReport:
    """Sweep each lossy codec across its quality ladder and aggregate RD
    points over the corpus; compute BD-rate for every requested pair."""
    corpus = corpus if corpus is not None else build_corpus(config)
    if not corpus:
        raise FormatError("empty corpus")
    specs, runnable, skipped = _resolve_codecs(config, CodecKind.LOSSY)
    if not runnable:
        raise CodecIntegrityError("all requested lossy codecs are unavailable")
    runner = CodecRunner(specs, config.tile_height, compute_msssim=True)

    items = []
    for cid in runnable:
        for quality in _ladder_for(config, cid, specs):
            for trace in corpus:
                items.append((trace, cid, quality))
    results = _parallel_results(
        items, lambda it: runner.run_trace(it[0], it[1], it[2]), config.worker_count()
    )

    pooled = {}
    total_bits = 0
    for res in results:
        key = (res.codec_id, res.quality)
        agg = pooled.setdefault(key, {"bits": 0, "samples": 0, "mse": 0.0, "mss": 0.0})
        agg["bits"] += res.bits
        agg["samples"] += res.sub_samples
        agg["mse"] += res.mse_sum
        agg["mss"] += res.msssim_weighted
        total_bits += res.bits

    cells = []
    curve_points = {}
    for (cid, quality) in sorted(pooled, key=lambda k: (k[0], k[1])):
        agg = pooled[(cid, quality)]
        rate = bpss_of(agg["bits"], agg["samples"])
        mse = agg["mse"] / agg["samples"]
        point_psnr = math.inf if mse == 0 else 10.0 * math.log10(255.0**2 / mse)
        point_msssim = agg["mss"] / agg["samples"]
        cells.append(
            {
                "object": "*",
                "pose": "*",
                "codec": cid,
                "quality": quality,
                "bpss": rate,
                "cr": compression_ratio(rate),
                "psnr": point_psnr,
                "msssim": point_msssim,
                "bits": agg["bits"],
            }
        )
        curve_points.setdefault(cid, []).append(
            RDPoint(bpss=rate, psnr_db=point_psnr, ms_ssim=point_msssim)
        )

    rd_curves = {}
    for cid, points in curve_points.items():
        points = sorted(points, key=lambda p: p.bpss)
        deduped = [points[0]]
        for p in points[1:]:
            if p.bpss > deduped[-1].bpss:
                deduped.append(p)
        rd_curves[cid] = RDCurve(codec_id=cid, points=tuple(deduped))

    bd_rows = []
    for ref_id, test_id in config.bd_pairs:
        if ref_id not in rd_curves or test_id not in rd_curves:
            raise ValueError(f"BD pair {ref_id}:{test_id} needs both codecs in the run")
        context = SCC_REFERENCE_CONTEXT.get((ref_id, test_id), "")
        for metric in (QualityMetric.PSNR, QualityMetric.MSSSIM):
            # a metric variant whose curve is not strictly monotone in
            # quality is rejected, recorded rather than crashing the run
            try:
                value = bd_rate(rd_curves[ref_id], rd_curves[test_id], metric)
                note = ""
            except ValueError as exc:
                value = None
                note = f"rejected: {exc}"
            bd_rows.append(
                {
                    "reference": ref_id,
                    "test": test_id,
                    "metric": metric.value,
                    "bd_rate_percent": value,
                    "context": context,
                    "note": note,
                }
            )

    return BenchReport(
        kind="lossy",
        header=_report_header(config),
        cells=cells,
        object_marginals={},
        pose_marginals={},
        codec_marginals={},
        skipped=skipped,
        rd_curves=rd_curves,
        bd_rows=bd_rows,
        total_bits=total_bits,
    )


def run_downstream_suite(config: BenchConfig, corpus=None) -> BenchReport:
    """Classify objects from raw and compressed features, Table-2 style."""
    corpus = corpus if corpus is not None else build_corpus(config)
    if not corpus:
        raise FormatError("empty corpus")
    labels = [t.object_label for t in corpus]
    train_idx, test_idx = split_indices(labels, config.train_fraction, config.split_seed)

    runner = CodecRunner({}, config.tile_height, compute_msssim=False)
    if not runner.is_native(config.downstream_codec):
        specs, _, _ = _resolve_codecs(config, None)
        runner = CodecRunner(specs, config.tile_height, compute_msssim=False)

    variants = [("raw", None, 8.0, [trace_to_image(t) for t in corpus])]
    for quality in sorted(config.downstream_qualities, reverse=False):
        results = _parallel_results(
            corpus,
            lambda t: runner.run_trace(t, config.downstream_codec, quality, keep_recon=True),
            config.worker_count(),
        )
        mean_rate = _mean(r.bpss for r in results)
        variants.append(
            (f"{config.downstream_codec}@{quality}", quality, mean_rate,
             [r.recon for r in results])
        )

    rows = []
    for source, quality, rate, images in variants:
        feats = np.stack([featurize(img, config.feature_height) for img in images])
        matrix = FeatureMatrix(rows=feats, labels=tuple(labels),
                               provenance=tuple([source] * len(labels)))
        train = FeatureMatrix(
            rows=matrix.rows[train_idx],
            labels=tuple(labels[i] for i in train_idx),
            provenance=tuple([source] * len(train_idx)),
        )
        test = FeatureMatrix(
            rows=matrix.rows[test_idx],
            labels=tuple(labels[i] for i in test_idx),
            provenance=tuple([source] * len(test_idx)),
        )
        row = {"source": source, "quality": "" if quality is None else quality,
               "bpss": rate}
        for kind in config.classifiers:
            clf = train_classifier(kind, train, seed=config.split_seed)
            row[kind.value] = accuracy(predict(clf, test.rows), test.labels)
        rows.append(row)

    rows.sort(key=lambda r: -r["bpss"])  # raw (8.0) first, then descending rate
    return BenchReport(
        kind="downstream",
        header=_report_header(config),
        cells=[],
        object_marginals={},
        pose_marginals={},
        codec_marginals={},
        accuracy_rows=rows,
    )


def _atomic_write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv_text(header_lines: list[str], columns: list[str], rows) -> str:
    buf = io.StringIO()
    for line in header_lines:
        buf.write(f"# {line}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow(row)
    return buf.getvalue()


def _header_lines(report: BenchReport) -> list[str]:
    lines = [f"{k} = {v}" for k, v in report.header]
    for skip in report.skipped:
        lines.append(f"skipped: {skip.codec_id} ({skip.status.value}) {skip.detail}")
    return lines


def write_lossless_report(report: BenchReport, out_dir) -> list[Path]:
    out = Path(out_dir)
    header = _header_lines(report)
    codecs = sorted(report.codec_marginals)

    cell_rows = [
        [c["object"], c["pose"], c["codec"], c["traces"], c["bits"],
         format_metric(c["bpss"]), format_metric(c["cr"])]
        for c in report.cells
    ]
    cells_path = out / "lossless_cells.csv"
    _atomic_write(cells_path, _csv_text(
        header, ["object", "pose", "codec", "traces", "bits", "bpss", "cr"], cell_rows
    ))

    objects = sorted({k[0] for k in report.object_marginals})
    poses = sorted({k[0] for k in report.pose_marginals})
    table_rows = []
    for obj in objects:
        table_rows.append(
            ["object", obj]
            + [format_metric(report.object_marginals[(obj, cid)]) for cid in codecs]
        )
    for pose in poses:
        table_rows.append(
            ["pose", pose]
            + [format_metric(report.pose_marginals[(pose, cid)]) for cid in codecs]
        )
    table_rows.append(
        ["average", "bpss"]
        + [format_metric(report.codec_marginals[cid]) for cid in codecs]
    )
    table_rows.append(
        ["average", "cr"]
        + [format_metric(compression_ratio(report.codec_marginals[cid])) for cid in codecs]
    )
    table_path = out / "lossless_table.csv"
    _atomic_write(table_path, _csv_text(header, ["kind", "name"] + codecs, table_rows))
    return [cells_path, table_path]


def write_lossy_report(report: BenchReport, out_dir) -> list[Path]:
    out = Path(out_dir)
    header = _header_lines(report)
    paths = []

    point_rows = [
        [c["codec"], c["quality"], format_metric(c["bpss"]), format_metric(c["cr"]),
         format_metric(c["psnr"]), format_metric(c["msssim"])]
        for c in report.cells
    ]
    p = out / "rd_points.csv"
    _atomic_write(p, _csv_text(
        header, ["codec", "quality", "bpss", "cr", "psnr_db", "ms_ssim"], point_rows
    ))
    paths.append(p)

    for cid, curve in sorted(report.rd_curves.items()):
        rows = [
            [format_metric(pt.bpss), format_metric(pt.psnr_db), format_metric(pt.ms_ssim)]
            for pt in curve.points
        ]
        cp = out / f"rd_curve_{cid}.csv"
        _atomic_write(cp, _csv_text(header, ["bpss", "psnr_db", "ms_ssim"], rows))
        paths.append(cp)

    if report.bd_rows:
        rows = [
            [r["reference"], r["test"], r["metric"],
             "" if r["bd_rate_percent"] is None else format_metric(r["bd_rate_percent"]),
             r["context"], r.get("note", "")]
            for r in report.bd_rows
        ]
        bp = out / "bdrate.csv"
        _atomic_write(bp, _csv_text(
            header,
            ["reference", "test", "metric", "bd_rate_percent", "context", "note"],
            rows,
        ))
        paths.append(bp)
    return paths


def write_downstream_report(report: BenchReport, out_dir) -> list[Path]:
    out = Path(out_dir)
    header = _header_lines(report)
    classifier_cols = [
        k for k in report.accuracy_rows[0] if k not in ("source", "quality", "bpss")
    ] if report.accuracy_rows else []
    rows = [
        [r["source"], r["quality"], format_metric(r["bpss"])]
        + [format_metric(r[c]) for c in classifier_cols]
        for r in report.accuracy_rows
    ]
    p = out / "downstream_accuracy.csv"
    _atomic_write(p, _csv_text(
        header, ["source", "quality", "bpss"] + classifier_cols, rows
    ))
    return [p]
