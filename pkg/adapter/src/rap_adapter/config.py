from __future__ import annotations

from dataclasses import dataclass

from .errors import SchemaError

# model id -> patch size of the feature grid
FEATURE_MODELS = {
    "dinov3-vit-l-16": 16,
    "hash-patch16": 16,  # dependency-free deterministic stand-in
}

SEGMENTER_MODELS = ("sam2-vit-h", "echo")


@dataclass
class AdapterConfig:
    feature_model_id: str = "hash-patch16"
    segmenter_model_id: str = "echo"
    device: str = "cpu"
    input_size: int = 512

    def __post_init__(self):
        if self.feature_model_id not in FEATURE_MODELS:
            raise SchemaError(
                f"unknown feature model {self.feature_model_id!r}; known: {sorted(FEATURE_MODELS)}"
            )
        if self.segmenter_model_id not in SEGMENTER_MODELS:
            raise SchemaError(
                f"unknown segmenter model {self.segmenter_model_id!r}; known: {sorted(SEGMENTER_MODELS)}"
            )
        patch = FEATURE_MODELS[self.feature_model_id]
        if self.input_size % patch != 0:
            raise SchemaError(
                f"input_size {self.input_size} is not a multiple of patch size {patch}"
            )

    @property
    def patch_size(self) -> int:
        return FEATURE_MODELS[self.feature_model_id]
