from .tensor import (
    Tensor,
    Parameter,
    as_tensor,
    tensor,
    matmul,
    softmax_rows,
    cross_entropy,
    gather,
    rotate_pairs,
    layer_norm,
    no_grad,
    is_grad_enabled,
)
from .rng import Rng, derive_seed
from .gradcheck import grad_check
