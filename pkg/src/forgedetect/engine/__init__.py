from .tensor import (
    GraphError,
    ShapeError,
    Tensor,
    add,
    avg_pool2d,
    backward,
    bce,
    concat,
    conv2d,
    cross_entropy,
    global_avg_pool,
    layer_norm,
    matmul,
    mean_all,
    mul,
    narrow,
    relu,
    reshape,
    scale,
    sigmoid,
    softmax,
    sub,
    sum_all,
    topo_order,
    transpose2d,
    zero_grads,
)
from .adam import Adam, AdamState, adam_step
from .gradcheck import GradCheckReport, gradient_check
from .kernels import COMPILED

__all__ = [
    "Tensor", "ShapeError", "GraphError", "add", "sub", "mul", "scale",
    "matmul", "relu", "sigmoid", "softmax", "layer_norm", "reshape",
    "narrow", "concat", "sum_all", "mean_all", "conv2d", "avg_pool2d",
    "global_avg_pool", "bce", "cross_entropy", "backward", "topo_order",
    "transpose2d", "zero_grads", "Adam", "AdamState", "adam_step", "GradCheckReport",
    "gradient_check", "COMPILED",
]
