"""Minimal reverse-mode autodiff with dense/LSTM layers and optimizers."""
from .autodiff import Tensor, backward, concat, stack
from .checkpoint import load_checkpoint, save_checkpoint
from .gradcheck import GradCheckReport, grad_check
from .layers import LSTM, MLP, Dense, LayerSpec, LSTMCell, Module, forward_dense, forward_lstm_cell
from .optim import OptimizerState, optimizer_step

__all__ = [
    "Tensor", "backward", "concat", "stack",
    "load_checkpoint", "save_checkpoint",
    "GradCheckReport", "grad_check",
    "LSTM", "MLP", "Dense", "LayerSpec", "LSTMCell", "Module", "forward_dense", "forward_lstm_cell",
    "OptimizerState", "optimizer_step",
]
