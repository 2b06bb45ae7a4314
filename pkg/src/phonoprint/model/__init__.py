from .graph import ModelGraph, model_forward, output_labels
from .weights import WeightStore, generate_weights, load_weights, save_weights

__all__ = [
    "ModelGraph",
    "WeightStore",
    "generate_weights",
    "load_weights",
    "model_forward",
    "output_labels",
    "save_weights",
]
