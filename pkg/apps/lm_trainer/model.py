"""
字节级自回归语言模型
"""
from dataclasses import dataclass
from typing import Dict, List, Optional, Union

import numpy as np

from attention.attention import AttentionSpec
from attention.layer import MultiHeadAttention
from baselines.position import INIT_SCALE, LearnedAbsolute, SinusoidalTable, additive_inject
from kit.constant import PosEncoding, Precision
from kit.exception import DimensionError
from numerics.rng import Rng
from numerics.tensor import Parameter, Tensor, cross_entropy, gather, layer_norm
from .config import ModelConfig


def _ones(dim: int, precision: Precision, name: str) -> Parameter:
    """"""
    return Parameter(np.ones(dim), name, precision.dtype)


def _zeros(shape, precision: Precision, name: str) -> Parameter:
    """"""
    return Parameter(np.zeros(shape), name, precision.dtype)


@dataclass
class DecoderBlock:
    """
    Pre-norm residual block: attention then a GELU feed-forward layer.
    """

    attn: MultiHeadAttention
    ln1_gain: Parameter
    ln1_bias: Parameter
    ln2_gain: Parameter
    ln2_bias: Parameter
    ffn_in: Parameter
    ffn_in_bias: Parameter
    ffn_out: Parameter
    ffn_out_bias: Parameter

    @classmethod
    def create(cls, config: ModelConfig, rng: Rng, index: int) -> "DecoderBlock":
        """"""
        prefix: str = f"block{index}"
        precision: Precision = config.precision
        hidden: int = config.d_model * config.ffn_mult

        spec: AttentionSpec = AttentionSpec(
            heads=config.heads,
            head_dim=config.head_dim,
            variant=config.attention,
            pos_encoding=config.pos_encoding if config.pos_encoding in (PosEncoding.ROPE, PosEncoding.SHAW) else PosEncoding.NONE,
            causal=True
        )

        return cls(
            attn=MultiHeadAttention(spec, rng, precision, prefix=f"{prefix}.attn"),
            ln1_gain=_ones(config.d_model, precision, f"{prefix}.ln1.gain"),
            ln1_bias=_zeros(config.d_model, precision, f"{prefix}.ln1.bias"),
            ln2_gain=_ones(config.d_model, precision, f"{prefix}.ln2.gain"),
            ln2_bias=_zeros(config.d_model, precision, f"{prefix}.ln2.bias"),
            ffn_in=Parameter(rng.normal((config.d_model, hidden), INIT_SCALE, precision), f"{prefix}.ffn.w_in"),
            ffn_in_bias=_zeros(hidden, precision, f"{prefix}.ffn.b_in"),
            ffn_out=Parameter(rng.normal((hidden, config.d_model), INIT_SCALE, precision), f"{prefix}.ffn.w_out"),
            ffn_out_bias=_zeros(config.d_model, precision, f"{prefix}.ffn.b_out"),
        )

    def parameters(self) -> List[Parameter]:
        """"""
        return [
            *self.attn.parameters(),
            self.ln1_gain,
            self.ln1_bias,
            self.ln2_gain,
            self.ln2_bias,
            self.ffn_in,
            self.ffn_in_bias,
            self.ffn_out,
            self.ffn_out_bias,
        ]

    def __call__(self, x: Tensor) -> Tensor:
        """"""
        x = x + self.attn(layer_norm(x, self.ln1_gain, self.ln1_bias))
        hidden: Tensor = (layer_norm(x, self.ln2_gain, self.ln2_bias) @ self.ffn_in + self.ffn_in_bias).gelu()
        return x + (hidden @ self.ffn_out + self.ffn_out_bias)


class ByteLM:
    """
    Token embedding, position encoding of the configured variant, decoder
    blocks and an output head over 256 byte values.
    """

    def __init__(self, config: ModelConfig, rng: Rng) -> None:
        """"""
        self.config: ModelConfig = config
        precision: Precision = config.precision

        self.token_embedding: Parameter = Parameter(
            rng.normal((config.vocab, config.d_model), INIT_SCALE, precision), "tok_emb"
        )

        self.position: Optional[Union[SinusoidalTable, LearnedAbsolute]] = None
        if config.pos_encoding == PosEncoding.SINUSOIDAL:
            self.position = SinusoidalTable(config.d_model, config.context_len)
        elif config.pos_encoding == PosEncoding.LEARNED:
            self.position = LearnedAbsolute(
                config.context_len, config.d_model, rng, precision, name="pos_emb"
            )

        self.blocks: List[DecoderBlock] = [
            DecoderBlock.create(config, rng, index) for index in range(config.layers)
        ]

        self.final_gain: Parameter = _ones(config.d_model, precision, "ln_f.gain")
        self.final_bias: Parameter = _zeros(config.d_model, precision, "ln_f.bias")
        self.head: Parameter = Parameter(
            rng.normal((config.d_model, config.vocab), INIT_SCALE, precision), "head.w"
        )
        self.head_bias: Parameter = _zeros(config.vocab, precision, "head.b")

    def parameters(self) -> List[Parameter]:
        """
        Every trainable tensor in a fixed order.
        """
        params: List[Parameter] = [self.token_embedding]
        if isinstance(self.position, LearnedAbsolute):
            params.append(self.position.embeddings)
        for block in self.blocks:
            params.extend(block.parameters())
        params.extend([self.final_gain, self.final_bias, self.head, self.head_bias])
        return params

    def named_parameters(self) -> Dict[str, Parameter]:
        """"""
        return {param.name: param for param in self.parameters()}

    @property
    def parameter_count(self) -> int:
        """"""
        return int(sum(param.data.size for param in self.parameters()))

    def forward(self, tokens: np.ndarray) -> Tensor:
        """
        Logits of shape [batch * seq, vocab] for byte tokens [batch, seq].
        """
        tokens = np.asarray(tokens, dtype=np.int64)
        if tokens.ndim != 2:
            raise DimensionError(f"输入必须为[batch, seq]：{tokens.shape}")

        batch, seq = tokens.shape
        x: Tensor = gather(self.token_embedding, tokens)
        if self.position is not None:
            x = additive_inject(x, self.position)

        for block in self.blocks:
            x = block(x)

        x = layer_norm(x, self.final_gain, self.final_bias)
        logits: Tensor = x @ self.head + self.head_bias
        return logits.reshape(batch * seq, self.config.vocab)

    def loss(self, tokens: np.ndarray, targets: np.ndarray) -> Tensor:
        """
        Mean next-byte cross-entropy.
        """
        return cross_entropy(self.forward(tokens), np.asarray(targets).reshape(-1))

    def load_tensors(self, tensors: Dict[str, np.ndarray]) -> None:
        """
        Copy stored values into the parameters, names and shapes must match.
        """
        for name, param in self.named_parameters().items():
            if name not in tensors:
                raise DimensionError(f"缺少参数：{name}")
            value: np.ndarray = tensors[name]
            if value.shape != param.shape:
                raise DimensionError(f"参数{name}形状不符：{value.shape} / {param.shape}")
            param.data = np.array(value, dtype=param.dtype, copy=True)


def build_model(config: ModelConfig, rng: Rng) -> ByteLM:
    """"""
    return ByteLM(config, rng)
