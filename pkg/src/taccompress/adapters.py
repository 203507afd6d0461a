"""Harness for external codecs driven by command templates.

A codec spec names an encode and a decode command with ``{input}``,
``{output}`` and (for lossy codecs) ``{quality}`` placeholders.  Commands run
through the shell in an isolated scratch directory, so templates may use
redirection (``gzip -c {input} > {output}``).  The measured size is the
encoded file's byte length, container headers included, because that is the
real storage/transmission cost.

Lossless specs are verified: the decoded raster must match the source
bit-exactly or the run is reported as a codec-integrity failure rather than
silently counted.

Spec files are INI-style, one section per codec::

    [gzip]
    kind = lossless
    io_format = raw
    encode = gzip -c -9 {input} > {output}
    decode = gzip -dc {input} > {output}

    [webp]
    kind = lossless
    io_format = ppm
    encode = cwebp -z 9 -lossless {input} -o {output}
    decode = dwebp {input} -ppm -o {output}

``TACCOMPRESS_CODEC_PATH`` prepends executable search paths.
"""

import configparser
import os
import shlex
import shutil
import subprocess
import tempfile
from dataclasses import dataclass
from enum import Enum
from importlib import resources
from pathlib import Path

import numpy as np

from .codec import CompressedBlob
from .errors import CodecIntegrityError, CodecRunError, CodecUnavailableError, FormatError
from .imaging import TactileImage, read_ppm, write_ppm

DEFAULT_TIMEOUT_S = 300.0
CODEC_PATH_ENV = "TACCOMPRESS_CODEC_PATH"


class CodecKind(Enum):
    LOSSLESS = "lossless"
    LOSSY = "lossy"


class ProbeStatus(Enum):
    AVAILABLE = "available"
    UNAVAILABLE = "unavailable"
    DEGRADED = "degraded"
    SPEC_INVALID = "spec-invalid"


class IOFormat(Enum):
    PPM = "ppm"
    RAW_BYTES = "raw"


@dataclass(frozen=True)
class CodecSpec:
    """Command templates and quality ladder for one external codec."""

    codec_id: str
    kind: CodecKind
    encode_template: str
    decode_template: str
    quality_ladder: tuple[int, ...] = ()
    io_format: IOFormat = IOFormat.PPM

    def validate(self):
        for name, template in (("encode", self.encode_template),
                               ("decode", self.decode_template)):
            if not template.strip():
                raise ValueError(f"{self.codec_id}: empty {name} template")
            for placeholder in ("{input}", "{output}"):
                if placeholder not in template:
                    raise ValueError(
                        f"{self.codec_id}: {name} template missing {placeholder}"
                    )
        if self.kind is CodecKind.LOSSY:
            if "{quality}" not in self.encode_template:
                raise ValueError(f"{self.codec_id}: lossy encode template missing {{quality}}")
            if not self.quality_ladder:
                raise ValueError(f"{self.codec_id}: lossy spec needs a quality ladder")


@dataclass(frozen=True)
class ProbeResult:
    codec_id: str
    status: ProbeStatus
    detail: str = ""

    @property
    def available(self) -> bool:
        return self.status is ProbeStatus.AVAILABLE


def _search_path() -> str:
    prefix = os.environ.get(CODEC_PATH_ENV, "")
    base = os.environ.get("PATH", os.defpath)
    return f"{prefix}{os.pathsep}{base}" if prefix else base


def _executable_of(template: str) -> str:
    try:
        tokens = shlex.split(template)
    except ValueError as exc:
        raise ValueError(f"unparseable command template: {exc}") from exc
    if not tokens:
        raise ValueError("empty command template")
    return tokens[0]


def _write_image(image: TactileImage, path: Path, io_format: IOFormat):
    if io_format is IOFormat.PPM:
        write_ppm(image, path)
    else:
        path.write_bytes(image.pixels.tobytes())


def _read_image(path: Path, like: TactileImage, io_format: IOFormat) -> TactileImage:
    if io_format is IOFormat.PPM:
        return read_ppm(path)
    data = path.read_bytes()
    expected = like.sample_count
    if len(data) != expected:
        raise FormatError(
            f"raw reconstruction is {len(data)} bytes, expected {expected}"
        )
    pixels = np.frombuffer(data, dtype=np.uint8).reshape(
        like.height, like.width, like.channels
    )
    return TactileImage(pixels=pixels)


def _run(command: str, cwd: Path, timeout: float):
    env = dict(os.environ, PATH=_search_path())
    try:
        proc = subprocess.run(
            command,
            shell=True,
            cwd=cwd,
            env=env,
            capture_output=True,
            timeout=timeout,
        )
    except subprocess.TimeoutExpired as exc:
        raise CodecRunError(f"timed out after {timeout:.0f}s: {command}") from exc
    if proc.returncode != 0:
        output = (proc.stderr or proc.stdout or b"").decode("utf-8", "replace").strip()
        raise CodecRunError(
            f"command failed (exit {proc.returncode}): {command}\n{output[:2000]}"
        )


def run_external(
    spec: CodecSpec,
    image: TactileImage,
    quality: int | None = None,
    workdir: str | Path | None = None,
    timeout: float = DEFAULT_TIMEOUT_S,
) -> tuple[CompressedBlob, TactileImage]:
    """Encode (and decode) one image with an external codec.

    Returns the measured blob and the decoded reconstruction.  Lossless
    specs raise :class:`CodecIntegrityError` if the reconstruction is not
    bit-exact.
    """
    spec.validate()
    if spec.kind is CodecKind.LOSSY and quality is None:
        raise ValueError(f"{spec.codec_id}: lossy codec needs a quality value")

    scratch = tempfile.mkdtemp(prefix=f"{spec.codec_id}-", dir=workdir)
    scratch = Path(scratch)
    try:
        src = scratch / ("input.ppm" if spec.io_format is IOFormat.PPM else "input.raw")
        enc = scratch / "encoded.bin"
        dec = scratch / ("decoded.ppm" if spec.io_format is IOFormat.PPM else "decoded.raw")
        _write_image(image, src, spec.io_format)

        encode_cmd = spec.encode_template.format(
            input=src, output=enc, quality="" if quality is None else quality
        )
        _run(encode_cmd, scratch, timeout)
        if not enc.exists() or enc.stat().st_size == 0:
            raise CodecRunError(f"{spec.codec_id}: encode produced no output file")
        payload = enc.read_bytes()

        decode_cmd = spec.decode_template.format(
            input=enc, output=dec, quality="" if quality is None else quality
        )
        _run(decode_cmd, scratch, timeout)
        if not dec.exists():
            raise CodecRunError(f"{spec.codec_id}: decode produced no output file")
        recon = _read_image(dec, image, spec.io_format)

        if recon.pixels.shape != image.pixels.shape:
            raise CodecIntegrityError(
                f"{spec.codec_id}: reconstruction shape {recon.pixels.shape} "
                f"!= source {image.pixels.shape}"
            )
        if spec.kind is CodecKind.LOSSLESS and recon != image:
            raise CodecIntegrityError(
                f"{spec.codec_id}: lossless reconstruction differs from source"
            )
        blob = CompressedBlob(
            codec_id=spec.codec_id,
            width=image.width,
            height=image.height,
            channels=image.channels,
            payload=payload,
            quality=quality,
        )
        return blob, recon
    finally:
        shutil.rmtree(scratch, ignore_errors=True)


def probe(spec: CodecSpec, workdir: str | Path | None = None,
          timeout: float = 30.0) -> ProbeResult:
    """Check that a codec spec is well-formed and its tool round-trips a smoke image."""
    try:
        spec.validate()
        encode_exe = _executable_of(spec.encode_template)
        decode_exe = _executable_of(spec.decode_template)
    except ValueError as exc:
        return ProbeResult(spec.codec_id, ProbeStatus.SPEC_INVALID, str(exc))

    path = _search_path()
    for exe in {encode_exe, decode_exe}:
        if shutil.which(exe, path=path) is None:
            return ProbeResult(
                spec.codec_id, ProbeStatus.UNAVAILABLE, f"executable not found: {exe}"
            )

    smoke = TactileImage(
        np.tile(np.array([128, 128, 0], np.uint8), (2, 2, 1))
    )
    quality = spec.quality_ladder[0] if spec.kind is CodecKind.LOSSY else None
    try:
        run_external(spec, smoke, quality=quality, workdir=workdir, timeout=timeout)
    except (CodecRunError, CodecIntegrityError, FormatError) as exc:
        return ProbeResult(spec.codec_id, ProbeStatus.DEGRADED, str(exc))
    return ProbeResult(spec.codec_id, ProbeStatus.AVAILABLE)


def parse_codec_specs(text: str) -> list[CodecSpec]:
    """Parse the INI-style codec spec format; see the module docstring."""
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise FormatError(f"bad codec spec file: {exc}") from exc
    specs = []
    for section in parser.sections():
        entries = parser[section]
        try:
            kind = CodecKind(entries.get("kind", "lossless").strip().lower())
        except ValueError:
            raise FormatError(f"[{section}]: unknown kind {entries.get('kind')!r}") from None
        io_name = entries.get("io_format", "ppm").strip().lower()
        try:
            io_format = IOFormat(io_name)
        except ValueError:
            raise FormatError(f"[{section}]: unknown io_format {io_name!r}") from None
        ladder: tuple[int, ...] = ()
        if "quality_ladder" in entries:
            try:
                ladder = tuple(
                    int(tok) for tok in entries["quality_ladder"].replace(",", " ").split()
                )
            except ValueError:
                raise FormatError(f"[{section}]: bad quality ladder") from None
        spec = CodecSpec(
            codec_id=section,
            kind=kind,
            encode_template=entries.get("encode", ""),
            decode_template=entries.get("decode", ""),
            quality_ladder=ladder,
            io_format=io_format,
        )
        specs.append(spec)
    return specs


def load_codec_specs(path: str | Path | None = None) -> list[CodecSpec]:
    """Load codec specs from a file, or the bundled defaults when no path is given."""
    if path is None:
        text = (
            resources.files("taccompress").joinpath("data/external_codecs.spec").read_text()
        )
    else:
        text = Path(path).read_text()
    return parse_codec_specs(text)
