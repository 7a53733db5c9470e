"""Foundation-model bridge: feature export and promptable segmentation.

Talks to the core toolkit exclusively through its file contracts (RAF
arrays, prompt-exchange JSON, request directories); nothing here imports
the core package.
"""

from .config import FEATURE_MODELS, SEGMENTER_MODELS, AdapterConfig
from .errors import AdapterFailure, SchemaError, SetupError
from .features import export_features
from .segment import load_request, run_segmenter

__all__ = [
    "AdapterConfig",
    "AdapterFailure",
    "FEATURE_MODELS",
    "SEGMENTER_MODELS",
    "SchemaError",
    "SetupError",
    "export_features",
    "load_request",
    "run_segmenter",
]
