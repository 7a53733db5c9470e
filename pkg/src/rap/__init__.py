"""Training-free few-shot segmentation toolkit.

Retrieve a morphologically compatible support from an archive, align its
mask onto the query with oriented chamfer matching under semantic gating,
convert the aligned pre-mask into point/box prompts, and hand them to a
promptable segmenter (built-in fallback or an external adapter).
"""

from .chamfer import (
    BoundaryTemplate,
    DirectionalDistanceField,
    SearchGrid,
    Transform2D,
    build_premask,
    chamfer_cost,
    directional_distance_transforms,
    extract_boundary_template,
    search_transform,
)
from .config import (
    AblationConfig,
    ChamferConfig,
    EdgeConfig,
    PipelineConfig,
    load_config,
)
from .edge import EdgeMap, EdgePixelSet, binarize_edges, edge_map
from .errors import RapError
from .estimator import RapSegmenter
from .gating import GatingConfig, RegionPrototypes, build_gating_mask, cluster_support, similarity_map
from .pipeline import EvalReport, dice, evaluate, run_adapt, run_pipeline
from .prompts import (
    PromptConfig,
    PromptSet,
    VoronoiPartition,
    build_prompt_set,
    fps_seeds,
    negative_points,
    positive_points,
    voronoi_partition,
)
from .retrieval import (
    RetrievalResult,
    SupportDatabase,
    SupportRecord,
    build_database,
    cosine_similarity,
    global_descriptor,
    load_database,
    make_record,
    masked_descriptor,
    retrieve,
    save_database,
)
from .segmenter import (
    SegmenterRequest,
    SegmenterResult,
    export_request,
    fallback_segment,
    import_result,
)
from .style import WaveletSubbands, dwt2, idwt2, style_adapt
from .synth import generate_benchmark

__version__ = "0.1.0"

__all__ = [
    "AblationConfig",
    "BoundaryTemplate",
    "ChamferConfig",
    "DirectionalDistanceField",
    "EdgeConfig",
    "EdgeMap",
    "EdgePixelSet",
    "EvalReport",
    "GatingConfig",
    "PipelineConfig",
    "PromptConfig",
    "PromptSet",
    "RapError",
    "RapSegmenter",
    "RegionPrototypes",
    "RetrievalResult",
    "SearchGrid",
    "SegmenterRequest",
    "SegmenterResult",
    "SupportDatabase",
    "SupportRecord",
    "Transform2D",
    "VoronoiPartition",
    "WaveletSubbands",
    "binarize_edges",
    "build_database",
    "build_gating_mask",
    "build_premask",
    "build_prompt_set",
    "chamfer_cost",
    "cluster_support",
    "cosine_similarity",
    "dice",
    "directional_distance_transforms",
    "dwt2",
    "edge_map",
    "evaluate",
    "export_request",
    "extract_boundary_template",
    "fallback_segment",
    "fps_seeds",
    "generate_benchmark",
    "global_descriptor",
    "idwt2",
    "import_result",
    "load_config",
    "load_database",
    "make_record",
    "masked_descriptor",
    "negative_points",
    "positive_points",
    "retrieve",
    "run_adapt",
    "run_pipeline",
    "save_database",
    "search_transform",
    "similarity_map",
    "style_adapt",
    "voronoi_partition",
]
