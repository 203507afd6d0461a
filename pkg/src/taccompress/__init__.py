"""taccompress: benchmark toolkit for multi-point tactile data compression.

The toolkit models the 1140-unit tactile topology of a four-finger dexterous
hand, synthesizes grasp traces, converts them losslessly to 8-bit RGB images
(units along the width, time along the height, force axes as channels), and
benchmarks image codecs on them: a built-in reference codec, external codecs
behind command templates, rate-distortion and Bjøntegaard metrics, and
downstream classification/clustering checks.
"""

__version__ = "0.1.0"

from .layout import (
    GraspPose,
    SensorLayout,
    SensorPosition,
    SensorSpec,
    FingerLayout,
    default_layout,
)
from .trace import GraspTrace, load_trace, save_trace
from .imaging import (
    TactileImage,
    image_to_trace,
    read_ppm,
    tile_ranges,
    trace_to_image,
    write_ppm,
)
from .simulate import ObjectProfile, PhasePlan, default_profiles, generate_trace
from .codec import (
    CompressedBlob,
    decode_lossless,
    decode_lossy,
    encode_lossless,
    encode_lossy,
    read_blob,
    write_blob,
)
from .adapters import CodecSpec, load_codec_specs, probe, run_external
from .metrics import RDCurve, RDPoint, bd_rate, bpss, compression_ratio, ms_ssim, psnr
from .analysis import (
    ClassifierKind,
    FeatureMatrix,
    accuracy,
    adjusted_rand_index,
    featurize,
    kmeans,
    predict,
    split,
    train_classifier,
    tsne_2d,
)
from .errors import (
    CodecError,
    CodecIntegrityError,
    CodecRunError,
    CodecUnavailableError,
    FormatError,
    TaccompressError,
)
