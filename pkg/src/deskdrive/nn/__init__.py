from .tensor import Tensor, concat, gather_rows, no_nan_checks
from .params import ParamStore, save_checkpoint, load_checkpoint, checkpoint_hash
from .layers import Linear, LayerNorm, AttentionBlock, Mlp, EmbeddingTable
from .optim import adam_step
from .gradcheck import grad_check, registered_blocks

__all__ = [
    "Tensor", "concat", "gather_rows", "no_nan_checks",
    "ParamStore", "save_checkpoint", "load_checkpoint", "checkpoint_hash",
    "Linear", "LayerNorm", "AttentionBlock", "Mlp", "EmbeddingTable",
    "adam_step", "grad_check", "registered_blocks",
]
