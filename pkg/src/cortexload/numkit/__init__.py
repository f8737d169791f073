"""Minimal float64 tensor engine with reverse-mode differentiation."""

from .io import load_tensor, read_header, save_tensor
from .ops import (add, as_tensor, conv2d, gelu, layer_norm, linear, mean_pool_spatial, mul,
                  permute, reshape, scale_channels, softmax_cross_entropy, stochastic_depth,
                  tensor_sum)
from .tensor import CompGraph, Tensor, backward, grad_enabled, no_grad

__all__ = [
    "Tensor", "CompGraph", "backward", "no_grad", "grad_enabled",
    "add", "mul", "tensor_sum", "reshape", "permute", "scale_channels", "as_tensor",
    "conv2d", "layer_norm", "gelu", "linear", "mean_pool_spatial",
    "softmax_cross_entropy", "stochastic_depth",
    "save_tensor", "load_tensor", "read_header",
]
