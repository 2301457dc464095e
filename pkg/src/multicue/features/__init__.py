from .cache import EmbeddingTable, read_cache, write_cache
from .fusion import (
    CueFusion,
    CueStack,
    FusionConfig,
    FusionMode,
    fuse,
    l2_normalize,
    lambda_grid,
    optimize_lambda,
)
from .providers import (
    REGION_KINDS,
    CueVector,
    SyntheticEmbedder,
    SyntheticEmbedderConfig,
    UnsupportedRegion,
    embed,
    embed_corpus,
    region_of,
    synthetic_embed,
)
from .rgb import RGBCropProvider, rgb_baseline_feature

__all__ = [
    "REGION_KINDS",
    "CueFusion",
    "CueStack",
    "CueVector",
    "EmbeddingTable",
    "FusionConfig",
    "FusionMode",
    "RGBCropProvider",
    "SyntheticEmbedder",
    "SyntheticEmbedderConfig",
    "UnsupportedRegion",
    "embed",
    "embed_corpus",
    "fuse",
    "l2_normalize",
    "lambda_grid",
    "optimize_lambda",
    "read_cache",
    "region_of",
    "rgb_baseline_feature",
    "synthetic_embed",
    "write_cache",
]
