from .adam import AdamState, adam_step
from .gradcheck import gradient_check
from .model import ModelSpec, ModelWeights, forward, init_weights, predict_topk
from .train import TrainConfig, TrainHistory, train
from .weights_io import load_weights, save_weights

__all__ = [
    "AdamState",
    "adam_step",
    "gradient_check",
    "ModelSpec",
    "ModelWeights",
    "forward",
    "init_weights",
    "predict_topk",
    "TrainConfig",
    "TrainHistory",
    "train",
    "load_weights",
    "save_weights",
]
