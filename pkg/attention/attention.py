"""
注意力机制：softmax、一般相似度、线性注意力及其旋转编码版本
"""
from dataclasses import dataclass
from typing import Callable, Optional, Tuple, Union

import numpy as np

from kit.constant import AttentionVariant, FeatureMap, PosEncoding, VARIANT_FEATURE_MAP
from kit.exception import ConfigurationError, DimensionError, NumericError
from numerics.tensor import Tensor, as_tensor, matmul, softmax_rows
from rotary.encoder import RotaryEncoder, get_encoder, make_schedule


ArrayOrTensor = Union[np.ndarray, Tensor]
SimilarityFunc = Callable[[np.ndarray, np.ndarray], float]
FeaturePair = Tuple[Callable[[Tensor], Tensor], Callable[[Tensor], Tensor]]


@dataclass
class AttentionSpec:
    """
    Head layout, mechanism and position encoding of one attention layer.
    """

    heads: int
    head_dim: int
    variant: AttentionVariant = AttentionVariant.SOFTMAX
    pos_encoding: PosEncoding = PosEncoding.NONE
    causal: bool = False

    def __post_init__(self) -> None:
        """"""
        if self.heads < 1 or self.head_dim < 1:
            raise ConfigurationError(f"注意力头设置无效：{self.heads}x{self.head_dim}")
        if self.pos_encoding == PosEncoding.ROPE and self.head_dim % 2:
            raise ConfigurationError(f"旋转编码要求头维度为偶数：{self.head_dim}")
        if self.pos_encoding == PosEncoding.SHAW and self.variant != AttentionVariant.SOFTMAX:
            raise ConfigurationError("Shaw相对编码只能用于softmax注意力")

    @property
    def model_dim(self) -> int:
        """"""
        return self.heads * self.head_dim

    @property
    def feature_map(self) -> Optional[FeatureMap]:
        """"""
        return VARIANT_FEATURE_MAP.get(self.variant, None)


@dataclass
class AttentionOutput:
    """
    Attention result, weights kept for the softmax variant only.
    """

    output: Tensor
    weights: Optional[Tensor] = None


@dataclass
class WeightSignStats:
    """
    Sign statistics of rotary linear attention weights.
    """

    count: int
    negative_fraction: float
    min_weight: float
    mean_row_sum: float


def _check_qkv(q: Tensor, k: Tensor, v: Tensor) -> None:
    """"""
    if q.shape[-1] != k.shape[-1]:
        raise DimensionError(f"查询与键的维度不一致：{q.shape} / {k.shape}")
    if k.shape[-2] != v.shape[-2]:
        raise DimensionError(f"键与值的序列长度不一致：{k.shape} / {v.shape}")
    if q.shape[:-2] != k.shape[:-2] or k.shape[:-2] != v.shape[:-2]:
        raise DimensionError(f"批维不一致：{q.shape} / {k.shape} / {v.shape}")


def causal_mask(seq_q: int, seq_k: int) -> np.ndarray:
    """
    True where position m may attend to n (n <= m).
    """
    return np.tril(np.ones((seq_q, seq_k), dtype=bool))


def softmax_attention(
    q: ArrayOrTensor,
    k: ArrayOrTensor,
    v: ArrayOrTensor,
    spec: Optional[AttentionSpec] = None,
    causal: Optional[bool] = None,
    bias: Optional[Tensor] = None
) -> AttentionOutput:
    """
    softmax((q k^T + bias) / sqrt(d)) v over inputs of shape [..., seq, d].
    """
    q, k, v = as_tensor(q), as_tensor(k), as_tensor(v)
    _check_qkv(q, k, v)

    if causal is None:
        causal = spec.causal if spec else False

    scores: Tensor = matmul(q, k.T)
    if bias is not None:
        scores = scores + bias
    scores = scores * (1.0 / np.sqrt(q.shape[-1]))

    mask: Optional[np.ndarray] = causal_mask(q.shape[-2], k.shape[-2]) if causal else None
    weights: Tensor = softmax_rows(scores, mask)
    return AttentionOutput(output=matmul(weights, v), weights=weights)


def feature_maps(feature_map: FeatureMap) -> FeaturePair:
    """
    (phi, varphi) of a linear attention variant.
    """
    if feature_map == FeatureMap.ELU:
        def elu_plus_one(x: Tensor) -> Tensor:
            return x.elu(1.0) + 1.0
        return elu_plus_one, elu_plus_one

    if feature_map == FeatureMap.SOFTMAX_EXP:
        def exp(x: Tensor) -> Tensor:
            return x.exp()
        return softmax_rows, exp

    raise ConfigurationError(f"未知特征映射：{feature_map}")


def _denominator(fq: Tensor, fk: Tensor, causal: bool) -> Tensor:
    """
    sum_n phi(q_m)^T varphi(k_n), over n <= m when causal.
    """
    if causal:
        key_sum: Tensor = fk.cumsum(axis=-2)
    else:
        key_sum = fk.sum(axis=-2, keepdims=True)
    return (fq * key_sum).sum(axis=-1)


def _numerator(fq: Tensor, fk: Tensor, v: Tensor, causal: bool) -> Tensor:
    """
    sum_n (fq_m^T fk_n) v_n, keys and values grouped first.
    """
    if not causal:
        return matmul(fq, matmul(fk.T, v))

    # [..., seq, d, dv] running sums of fk_n v_n^T
    outer: Tensor = fk.reshape(*fk.shape, 1) * v.reshape(*v.shape[:-1], 1, v.shape[-1])
    running: Tensor = outer.cumsum(axis=-3)
    return (fq.reshape(*fq.shape, 1) * running).sum(axis=-2)


def _safe_divide(numerator: Tensor, denominator: Tensor) -> Tensor:
    """"""
    if np.any(denominator.data <= 0):
        raise NumericError("线性注意力分母为零或负数")
    return numerator / denominator.reshape(*denominator.shape, 1)


def linear_attention_denominator(
    q: ArrayOrTensor,
    k: ArrayOrTensor,
    feature_map: FeatureMap,
    causal: bool = False
) -> Tensor:
    """"""
    phi, varphi = feature_maps(feature_map)
    return _denominator(phi(as_tensor(q)), varphi(as_tensor(k)), causal)


def linear_attention(
    q: ArrayOrTensor,
    k: ArrayOrTensor,
    v: ArrayOrTensor,
    feature_map: FeatureMap,
    causal: bool = False,
    return_denominator: bool = False
) -> Union[Tensor, Tuple[Tensor, Tensor]]:
    """
    Linear-cost attention with non-negative feature maps.
    """
    q, k, v = as_tensor(q), as_tensor(k), as_tensor(v)
    _check_qkv(q, k, v)

    phi, varphi = feature_maps(feature_map)
    fq: Tensor = phi(q)
    fk: Tensor = varphi(k)

    denominator: Tensor = _denominator(fq, fk, causal)
    output: Tensor = _safe_divide(_numerator(fq, fk, v, causal), denominator)

    if return_denominator:
        return output, denominator
    return output


def rope_linear_attention(
    q: ArrayOrTensor,
    k: ArrayOrTensor,
    v: ArrayOrTensor,
    feature_map: FeatureMap,
    encoder: Optional[RotaryEncoder] = None,
    positions: Optional[np.ndarray] = None,
    causal: bool = False,
    return_denominator: bool = False
) -> Union[Tensor, Tuple[Tensor, Tensor]]:
    """
    Numerator uses rotated feature maps, the denominator stays unrotated.
    """
    q, k, v = as_tensor(q), as_tensor(k), as_tensor(v)
    _check_qkv(q, k, v)

    if encoder is None:
        encoder = get_encoder(make_schedule(q.shape[-1]))
    if positions is None:
        positions = np.arange(q.shape[-2])

    phi, varphi = feature_maps(feature_map)
    fq: Tensor = phi(q)
    fk: Tensor = varphi(k)

    numerator: Tensor = _numerator(
        encoder.rotate(fq, positions),
        encoder.rotate(fk, positions),
        v,
        causal
    )
    denominator: Tensor = _denominator(fq, fk, causal)
    output: Tensor = _safe_divide(numerator, denominator)

    if return_denominator:
        return output, denominator
    return output


def rope_linear_weight_stats(
    q: np.ndarray,
    k: np.ndarray,
    feature_map: FeatureMap,
    encoder: Optional[RotaryEncoder] = None,
    positions: Optional[np.ndarray] = None,
    causal: bool = False
) -> WeightSignStats:
    """
    Explicit weights of rotary linear attention for reporting sign statistics.
    """
    q, k = as_tensor(q), as_tensor(k)
    if encoder is None:
        encoder = get_encoder(make_schedule(q.shape[-1]))
    if positions is None:
        positions = np.arange(q.shape[-2])

    phi, varphi = feature_maps(feature_map)
    fq: Tensor = phi(q)
    fk: Tensor = varphi(k)

    rotated_q: np.ndarray = encoder.rotate(fq.data, positions)
    rotated_k: np.ndarray = encoder.rotate(fk.data, positions)
    raw: np.ndarray = rotated_q @ np.swapaxes(rotated_k, -1, -2)
    weights: np.ndarray = raw / _denominator(fq, fk, causal).data[..., None]

    if causal:
        keep: np.ndarray = np.broadcast_to(causal_mask(weights.shape[-2], weights.shape[-1]), weights.shape)
        selected: np.ndarray = weights[keep]
        weights = np.where(keep, weights, 0.0)
    else:
        selected = weights.ravel()

    return WeightSignStats(
        count=int(selected.size),
        negative_fraction=float(np.mean(selected < 0)),
        min_weight=float(selected.min()),
        mean_row_sum=float(weights.sum(axis=-1).mean())
    )


def linear_attention_direct(
    q: np.ndarray,
    k: np.ndarray,
    v: np.ndarray,
    feature_map: FeatureMap,
    causal: bool = False
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Quadratic double-loop evaluation, returns (output, denominator).
    """
    q, k, v = np.asarray(q), np.asarray(k), np.asarray(v)
    if q.ndim != 2:
        raise DimensionError(f"直接计算只支持二维输入：{q.shape}")

    phi, varphi = feature_maps(feature_map)
    fq: np.ndarray = phi(as_tensor(q)).data
    fk: np.ndarray = varphi(as_tensor(k)).data

    seq: int = q.shape[0]
    output: np.ndarray = np.zeros((seq, v.shape[1]))
    denominator: np.ndarray = np.zeros(seq)

    for m in range(seq):
        last: int = m + 1 if causal else k.shape[0]
        for n in range(last):
            weight: float = float(fq[m] @ fk[n])
            output[m] += weight * v[n]
            denominator[m] += weight
        output[m] /= denominator[m]

    return output, denominator


def similarity_attention(
    q: np.ndarray,
    k: np.ndarray,
    v: np.ndarray,
    sim: SimilarityFunc,
    causal: bool = False
) -> np.ndarray:
    """
    sum_n sim(q_m, k_n) v_n / sum_n sim(q_m, k_n).
    """
    q, k, v = np.asarray(q), np.asarray(k), np.asarray(v)
    if q.ndim != 2 or q.shape[1] != k.shape[1] or k.shape[0] != v.shape[0]:
        raise DimensionError(f"输入形状不匹配：{q.shape} / {k.shape} / {v.shape}")

    weights: np.ndarray = np.array(
        [[sim(q[m], k[n]) for n in range(k.shape[0])] for m in range(q.shape[0])],
        dtype=np.float64
    )
    if causal:
        weights = np.where(causal_mask(*weights.shape), weights, 0.0)

    totals: np.ndarray = weights.sum(axis=1, keepdims=True)
    if np.any(totals == 0):
        raise NumericError("相似度整行为零")

    return (weights @ v) / totals


def exp_similarity(dim: int) -> SimilarityFunc:
    """
    exp(q^T k / sqrt(d)), the choice of softmax attention.
    """
    scale: float = 1.0 / np.sqrt(dim)

    def sim(q: np.ndarray, k: np.ndarray) -> float:
        return float(np.exp(q @ k * scale))

    return sim
