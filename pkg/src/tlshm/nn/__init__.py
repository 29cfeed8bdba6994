from .spec import (Conv1d, Dense, Dropout, Flatten, MaxPool1d, NetworkSpec,
                   Relu, Residual, conv1d_out_len, pool1d_out_len)
from .network import Network
from .loss import softmax, softmax_cross_entropy
from .optim import Adam
from .augment import Batch, add_relative_noise, augment_gaussian
from .gradcheck import grad_check
from .train import predict_logits, train_network

__all__ = [
    "Adam", "Batch", "Conv1d", "Dense", "Dropout", "Flatten", "MaxPool1d",
    "Network", "NetworkSpec", "Relu", "Residual", "add_relative_noise",
    "augment_gaussian", "conv1d_out_len", "grad_check", "pool1d_out_len",
    "predict_logits", "softmax", "softmax_cross_entropy", "train_network",
]
