"""Hand-rolled differentiable kernels shared by the learning modules."""

from .adam import AdamState, adam_step
from .checkpoint import load_checkpoint, save_checkpoint
from .lstm import (LstmParams, init_lstm, lstm_backward_seq, lstm_forward_seq,
                   lstm_step, lstm_step_backward, zero_like_grads)
from .mlp import MlpParams, init_mlp, mlp_backward, mlp_forward
from .sampling import (k_distinct_log_prob, k_distinct_log_prob_grad,
                       sample_k_distinct, top_k_distinct)
from .store import GlobalParamStore

__all__ = [
    "AdamState", "adam_step", "load_checkpoint", "save_checkpoint",
    "LstmParams", "init_lstm", "lstm_backward_seq", "lstm_forward_seq",
    "lstm_step", "lstm_step_backward", "zero_like_grads",
    "MlpParams", "init_mlp", "mlp_backward", "mlp_forward",
    "k_distinct_log_prob", "k_distinct_log_prob_grad", "sample_k_distinct",
    "top_k_distinct", "GlobalParamStore",
]
