"""
多头注意力层
"""
from typing import List, Optional

import numpy as np

from baselines.position import ShawRelative
from kit.constant import AttentionVariant, PosEncoding, Precision
from numerics.rng import Rng
from numerics.tensor import Parameter, Tensor
from rotary.encoder import RotaryEncoder, get_encoder, make_schedule
from .attention import AttentionSpec, linear_attention, rope_linear_attention, softmax_attention


INIT_SCALE: float = 0.02
SHAW_WINDOW: int = 16


class MultiHeadAttention:
    """
    Projects to heads, encodes positions per head and dispatches on the variant.

    Rotation uses the schedule of head_dim and is applied after W_q/W_k.
    Values are never rotated.
    """

    def __init__(
        self,
        spec: AttentionSpec,
        rng: Rng,
        precision: Precision = Precision.FP64,
        prefix: str = "attn",
        shaw_window: int = SHAW_WINDOW
    ) -> None:
        """"""
        self.spec: AttentionSpec = spec
        self.prefix: str = prefix

        dim: int = spec.model_dim
        self.w_q: Parameter = Parameter(rng.normal((dim, dim), INIT_SCALE, precision), f"{prefix}.w_q")
        self.w_k: Parameter = Parameter(rng.normal((dim, dim), INIT_SCALE, precision), f"{prefix}.w_k")
        self.w_v: Parameter = Parameter(rng.normal((dim, dim), INIT_SCALE, precision), f"{prefix}.w_v")
        self.w_o: Parameter = Parameter(rng.normal((dim, dim), INIT_SCALE, precision), f"{prefix}.w_o")

        self.encoder: Optional[RotaryEncoder] = None
        if spec.pos_encoding == PosEncoding.ROPE:
            self.encoder = get_encoder(make_schedule(spec.head_dim))

        self.shaw: Optional[ShawRelative] = None
        if spec.pos_encoding == PosEncoding.SHAW:
            self.shaw = ShawRelative(
                -shaw_window,
                shaw_window,
                spec.head_dim,
                rng,
                precision,
                name=f"{prefix}.shaw_keys"
            )

    def parameters(self) -> List[Parameter]:
        """"""
        params: List[Parameter] = [self.w_q, self.w_k, self.w_v, self.w_o]
        if self.shaw:
            params.append(self.shaw.key_embeddings)
        return params

    def _split(self, x: Tensor) -> Tensor:
        """
        [B, T, H*hd] -> [B, H, T, hd]
        """
        batch, seq, _ = x.shape
        return x.reshape(batch, seq, self.spec.heads, self.spec.head_dim).transpose(0, 2, 1, 3)

    def __call__(self, x: Tensor, positions: Optional[np.ndarray] = None) -> Tensor:
        """"""
        batch, seq, dim = x.shape
        if positions is None:
            positions = np.arange(seq)

        q: Tensor = self._split(x @ self.w_q)
        k: Tensor = self._split(x @ self.w_k)
        v: Tensor = self._split(x @ self.w_v)

        spec: AttentionSpec = self.spec
        if spec.variant == AttentionVariant.SOFTMAX:
            if self.encoder:
                q = self.encoder.rotate(q, positions)
                k = self.encoder.rotate(k, positions)

            bias: Optional[Tensor] = self.shaw.score_bias(q) if self.shaw else None
            heads: Tensor = softmax_attention(q, k, v, spec, bias=bias).output
        elif self.encoder:
            heads = rope_linear_attention(
                q, k, v, spec.feature_map, self.encoder, positions, spec.causal
            )
        else:
            heads = linear_attention(q, k, v, spec.feature_map, spec.causal)

        merged: Tensor = heads.transpose(0, 2, 1, 3).reshape(batch, seq, dim)
        return merged @ self.w_o
