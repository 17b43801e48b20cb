"""Interactive dip-and-paint style transfer.

Dip a brush into any region of a style image, then paint onto the content
image; the painted extent grows by a similarity-guided diffusion
simulation, and the color transfer matches locally weighted feature
statistics.
"""

from .core import (
    Image,
    InteractionMask,
    Params,
    PenetrationMap,
    SimilarityMap,
    decode_png,
    downsample_area,
    encode_png,
    load_png,
    resample_bilinear,
    save_png,
)
from .container import (
    load_tensor_container,
    read_tensor_container,
    save_tensor_container,
    write_tensor_container,
)
from .errors import (
    ConfigurationError,
    ContainerFormatError,
    EmptySelectionError,
    NoBrushError,
    NothingToUndoError,
    ResourceLimitError,
    ScriptError,
    SolverError,
    StyleBrushError,
)
from .features import (
    AnalyticBackend,
    FeatureMap,
    FeaturePyramid,
    aggregate_similarity,
    extract_features,
    layer_similarity,
)
from .neural import NeuralBackend, identity_weights
from .diffusion import (
    DiffusionField,
    StencilSystem,
    assemble_system,
    cg_solve,
    diffusion_coefficients,
    init_penetration,
    normalize_penetration,
    run,
    step,
)
from .transfer import (
    StyleStats,
    classic_adain,
    dip,
    local_adain,
    mix_features,
    render,
    weighted_mean,
    weighted_std,
)
from .session import PaintFrame, Session, create_session

__version__ = "0.1.0"

__all__ = [
    "AnalyticBackend",
    "ConfigurationError",
    "ContainerFormatError",
    "DiffusionField",
    "EmptySelectionError",
    "FeatureMap",
    "FeaturePyramid",
    "Image",
    "InteractionMask",
    "NeuralBackend",
    "NoBrushError",
    "NothingToUndoError",
    "PaintFrame",
    "Params",
    "PenetrationMap",
    "ResourceLimitError",
    "ScriptError",
    "Session",
    "SimilarityMap",
    "SolverError",
    "StencilSystem",
    "StyleBrushError",
    "StyleStats",
    "aggregate_similarity",
    "assemble_system",
    "cg_solve",
    "classic_adain",
    "create_session",
    "decode_png",
    "diffusion_coefficients",
    "dip",
    "downsample_area",
    "encode_png",
    "extract_features",
    "identity_weights",
    "init_penetration",
    "layer_similarity",
    "load_png",
    "load_tensor_container",
    "local_adain",
    "mix_features",
    "normalize_penetration",
    "read_tensor_container",
    "render",
    "resample_bilinear",
    "run",
    "save_png",
    "save_tensor_container",
    "step",
    "weighted_mean",
    "weighted_std",
    "write_tensor_container",
]
