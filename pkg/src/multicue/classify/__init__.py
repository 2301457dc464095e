from .baselines import ChanceClassifier, NearestNeighborClassifier
from .model_io import load_model, save_model
from .svm import (
    BACKGROUND,
    GalleryModel,
    OneVsRestLinearSVC,
    predict_closed,
    predict_open,
    score,
)

__all__ = [
    "BACKGROUND",
    "ChanceClassifier",
    "GalleryModel",
    "NearestNeighborClassifier",
    "OneVsRestLinearSVC",
    "load_model",
    "predict_closed",
    "predict_open",
    "save_model",
    "score",
]
