"""aerobust: corruption synthesis and robustness evaluation for aerial
object detection.

The package has three layers:

* pixel layer: :mod:`aerobust.raster`, :mod:`aerobust.corruptions`,
  :mod:`aerobust.clouds` synthesize corrupted variants of 8-bit RGB
  rasters deterministically.
* dataset layer: :mod:`aerobust.dota` reads and writes the plain-text
  annotation and detection formats and handles tiling of large scenes.
* evaluation layer: :mod:`aerobust.geometry` and
  :mod:`aerobust.metrics` score rotated-box detections and aggregate
  them into robustness summaries.

``aerobust.cli`` wires the layers into the ``aerobust`` command.
"""

__version__ = "0.1.0"

from .corruptions import CORRUPTION_CATEGORIES, CORRUPTION_KINDS, CorruptionSpec, corrupt, psnr
from .errors import (
    ConfigurationError,
    DecodeError,
    EmptyCloudError,
    IncompleteMatrixError,
    ParameterError,
    ParseError,
)
from .geometry import rotated_iou
from .metrics import (
    EvalMatrix,
    average_precision,
    category_rpc,
    mpc,
    rpc,
    rpc_clouds,
    severity_curve,
)
from .raster import derive_seed, rng_stream
from .schedule import SeveritySchedule, default_schedule, load_schedule

__all__ = [
    "__version__",
    "CORRUPTION_CATEGORIES",
    "CORRUPTION_KINDS",
    "CorruptionSpec",
    "corrupt",
    "psnr",
    "ConfigurationError",
    "DecodeError",
    "EmptyCloudError",
    "IncompleteMatrixError",
    "ParameterError",
    "ParseError",
    "rotated_iou",
    "EvalMatrix",
    "average_precision",
    "category_rpc",
    "mpc",
    "rpc",
    "rpc_clouds",
    "severity_curve",
    "derive_seed",
    "rng_stream",
    "SeveritySchedule",
    "default_schedule",
    "load_schedule",
]
