"""Estimator-style facade: fit a support archive, predict query masks.

Follows the scikit-learn parameter protocol (flat constructor params,
``get_params`` / ``set_params``, trailing-underscore fitted attributes) so
the segmenter drops into pipelines and grid searches without depending on
scikit-learn itself.
"""
from __future__ import annotations

import inspect

from .config import _KEYMAP, PipelineConfig, apply_overrides
from .pipeline import dice, run_pipeline
from .retrieval import SupportRecord, build_database, make_record


class ParamsMixin:
    """get_params / set_params over the constructor signature."""

    @classmethod
    def _param_names(cls):
        sig = inspect.signature(cls.__init__)
        return [name for name in sig.parameters if name != "self"]

    def get_params(self, deep: bool = True) -> dict:
        return {name: getattr(self, name) for name in self._param_names()}

    def set_params(self, **params):
        valid = set(self._param_names())
        for name, value in params.items():
            if name not in valid:
                raise ValueError(f"invalid parameter {name!r} for {type(self).__name__}")
            setattr(self, name, value)
        return self

    def __repr__(self):
        args = ", ".join(f"{k}={v!r}" for k, v in self.get_params().items())
        return f"{type(self).__name__}({args})"


class RapSegmenter(ParamsMixin):
    """Training-free few-shot segmenter with a fit/predict surface.

    ``fit`` ingests labeled supports (SupportRecord instances, dicts, or
    (id, image, mask, features) tuples) and builds the retrieval archive;
    ``predict`` segments a query image given its feature grid.
    """

    def __init__(
        self,
        retrieval_rank: int = 2,
        retrieval_use_masked: bool = True,
        style_enabled: bool = False,
        gating_clusters: int = 5,
        gating_keep: int = 3,
        gating_quantile: float = 0.9,
        edge_scales: tuple = (1.0, 2.0, 4.0, 8.0),
        edge_log_weight: float = 0.5,
        edge_grad_weight: float = 0.5,
        edge_keep_fraction: float = 0.10,
        chamfer_bins: int = 8,
        chamfer_template_points: int = 128,
        chamfer_scales: tuple = tuple(round(0.6 + 0.1 * i, 1) for i in range(9)),
        chamfer_rotations: tuple = (-20.0, -10.0, 0.0, 10.0, 20.0),
        chamfer_coarse_stride: int = 4,
        chamfer_fine_radius: int = 6,
        prompt_positives: int = 6,
        prompt_sectors: int = 8,
        prompt_band_min: float = 5.0,
        prompt_band_max: float = 40.0,
        prompt_margin: int = 5,
        ablation_ocm: bool = True,
        ablation_sg: bool = True,
        ablation_vp: bool = True,
        seed: int = 0,
        resize: int = 512,
        workers: int = 1,
        segmenter="fallback",
    ):
        self.retrieval_rank = retrieval_rank
        self.retrieval_use_masked = retrieval_use_masked
        self.style_enabled = style_enabled
        self.gating_clusters = gating_clusters
        self.gating_keep = gating_keep
        self.gating_quantile = gating_quantile
        self.edge_scales = edge_scales
        self.edge_log_weight = edge_log_weight
        self.edge_grad_weight = edge_grad_weight
        self.edge_keep_fraction = edge_keep_fraction
        self.chamfer_bins = chamfer_bins
        self.chamfer_template_points = chamfer_template_points
        self.chamfer_scales = chamfer_scales
        self.chamfer_rotations = chamfer_rotations
        self.chamfer_coarse_stride = chamfer_coarse_stride
        self.chamfer_fine_radius = chamfer_fine_radius
        self.prompt_positives = prompt_positives
        self.prompt_sectors = prompt_sectors
        self.prompt_band_min = prompt_band_min
        self.prompt_band_max = prompt_band_max
        self.prompt_margin = prompt_margin
        self.ablation_ocm = ablation_ocm
        self.ablation_sg = ablation_sg
        self.ablation_vp = ablation_vp
        self.seed = seed
        self.resize = resize
        self.workers = workers
        self.segmenter = segmenter

    def _config(self) -> PipelineConfig:
        overrides = {key: getattr(self, key.replace(".", "_")) for key in _KEYMAP}
        return apply_overrides(PipelineConfig(), overrides)

    def fit(self, supports, y=None):
        """Build the support database; y is accepted for API compatibility."""
        records = []
        for item in supports:
            if isinstance(item, SupportRecord):
                records.append(
                    item
                    if item.descriptor is not None
                    else make_record(item.id, item.image, item.mask, item.features)
                )
            elif isinstance(item, dict):
                records.append(
                    make_record(item["id"], item["image"], item["mask"], item["features"])
                )
            else:
                rid, image, mask, features = item
                records.append(make_record(rid, image, mask, features))
        self.database_ = build_database(records)
        self.feature_dim_ = self.database_.feature_dim
        return self

    def _check_fitted(self):
        if not hasattr(self, "database_"):
            raise RuntimeError("RapSegmenter is not fitted; call fit(supports) first")

    def predict(self, image, features):
        """Segment one query; returns a boolean mask at the image's resolution."""
        mask, _ = self.predict_trace(image, features)
        return mask

    def predict_trace(self, image, features):
        """Like predict, also returning the pipeline trace dict."""
        self._check_fitted()
        return run_pipeline(image, features, self.database_, self._config(), self.segmenter)

    def score(self, image, features, truth) -> float:
        """Dice percentage of the prediction against a reference mask."""
        return dice(self.predict(image, features), truth)
