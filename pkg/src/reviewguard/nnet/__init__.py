from .core import NumericsError, Param, assert_finite, glorot_uniform, sigmoid
from .gradcheck import grad_check
from .layers import LSTM, Conv1d, Dense, Dropout, MaxOverTime, ReLU
from .losses import softmax, softmax_cross_entropy
from .optim import SGD, Adam

__all__ = [
    "Adam",
    "Conv1d",
    "Dense",
    "Dropout",
    "LSTM",
    "MaxOverTime",
    "NumericsError",
    "Param",
    "ReLU",
    "SGD",
    "assert_finite",
    "glorot_uniform",
    "grad_check",
    "sigmoid",
    "softmax",
    "softmax_cross_entropy",
]
