"""Graph-based dependency parsing with a four-directional Tensor-LSTM encoder.

The encoder maps a sentence to a matrix of edge scores that can be trained
against gold trees (cross-entropy) or directly against real-valued score
matrices (mean squared error), such as those projected from other languages.
"""
from .decoder import decode, heads_to_matrix, matrix_to_heads
from .encoder import LstmParams, ModelParams, build_edge_tensor, score_sentence
from .losses import cross_entropy_loss, mse_loss
from .model import ParserModel, load_model, save_model
from .projection import blankout, project, standardize, subsample
from .trainer import TrainConfig, evaluate_uas, train

__version__ = "0.1.0"

__all__ = ["decode", "heads_to_matrix", "matrix_to_heads", "LstmParams", "ModelParams",
           "build_edge_tensor", "score_sentence", "cross_entropy_loss", "mse_loss",
           "ParserModel", "load_model", "save_model", "blankout", "project", "standardize",
           "subsample", "TrainConfig", "evaluate_uas", "train"]
