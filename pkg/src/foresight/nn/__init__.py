"""Dense numeric kernel: 2-D float64 tensors with reverse-mode autodiff."""

from .gradcheck import GradCheckReport, finite_diff_check
from .layers import (
    AttentionParams,
    FfnParams,
    GateParams,
    LstmParams,
    attention_params,
    causal_mask,
    ffn_block,
    ffn_params,
    gate_fusion,
    gate_params,
    identity_attention_params,
    linear,
    lstm_forward,
    lstm_params,
    luong_attention,
    masked_self_attention,
    mh_attention,
)
from .optim import AdamW, adamw_step
from .params import ParamStore
from .tensor import (
    Tensor,
    add,
    add_const,
    backward,
    concat_cols,
    concat_rows,
    exp,
    gather_rows,
    layer_norm,
    log,
    log_softmax_rows,
    matmul,
    mean_all,
    mul,
    relu,
    scale,
    sigmoid,
    slice_cols,
    slice_rows,
    softmax_rows,
    sub,
    sum_all,
    tanh,
    tensor,
    transpose,
)

__all__ = [
    "AdamW",
    "AttentionParams",
    "FfnParams",
    "GateParams",
    "GradCheckReport",
    "LstmParams",
    "ParamStore",
    "Tensor",
    "adamw_step",
    "add",
    "add_const",
    "attention_params",
    "backward",
    "causal_mask",
    "concat_cols",
    "concat_rows",
    "exp",
    "ffn_block",
    "ffn_params",
    "finite_diff_check",
    "gate_fusion",
    "gate_params",
    "gather_rows",
    "identity_attention_params",
    "layer_norm",
    "linear",
    "log",
    "log_softmax_rows",
    "lstm_forward",
    "lstm_params",
    "luong_attention",
    "masked_self_attention",
    "matmul",
    "mean_all",
    "mh_attention",
    "mul",
    "relu",
    "scale",
    "sigmoid",
    "slice_cols",
    "slice_rows",
    "softmax_rows",
    "sub",
    "sum_all",
    "tanh",
    "tensor",
    "transpose",
]
