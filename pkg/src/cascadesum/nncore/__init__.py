"""Minimal dense-tensor core with reverse-mode gradients."""

from .checkpoint import load_checkpoint, save_checkpoint
from .gradcheck import GradCheckReport, grad_check, relative_error
from .module import Module
from .optim import Adam
from .tensor import (
    OPS,
    Parameter,
    Tensor,
    add,
    as_tensor,
    bce,
    concat,
    embedding,
    layer_norm,
    log,
    matmul,
    mean,
    mul,
    nll,
    no_grad,
    relu,
    reshape,
    sigmoid,
    slice_,
    softmax,
    sub,
    sum_,
    tanh,
    transpose,
)

__all__ = [
    "OPS", "Adam", "GradCheckReport", "Module", "Parameter", "Tensor",
    "add", "as_tensor", "bce", "concat", "embedding", "grad_check", "layer_norm",
    "load_checkpoint", "log", "matmul", "mean", "mul", "nll", "no_grad", "relative_error",
    "relu", "reshape", "save_checkpoint", "sigmoid", "slice_", "softmax", "sub", "sum_",
    "tanh", "transpose",
]
