"""Scene-prior local contrast maps, supervision masks and detection evaluation
for infrared ship imagery."""

from ._kernels import DEFAULT_BACKEND, available_backends
from .core import (
    Annotation,
    BBox,
    DetectConfig,
    Detection,
    EncodedPrior,
    GradConfig,
    GrayImage,
    ScheduleConfig,
    SseConfig,
    ShipPriorError,
)
from .sse import sse_extract, sse_multi_scale, sse_single_scale

__version__ = "0.1.0"

__all__ = [
    "Annotation",
    "BBox",
    "DEFAULT_BACKEND",
    "DetectConfig",
    "Detection",
    "EncodedPrior",
    "GradConfig",
    "GrayImage",
    "ScheduleConfig",
    "SseConfig",
    "ShipPriorError",
    "available_backends",
    "sse_extract",
    "sse_multi_scale",
    "sse_single_scale",
]
