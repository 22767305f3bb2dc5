from .attention import (
    AttentionSpec,
    AttentionOutput,
    WeightSignStats,
    softmax_attention,
    linear_attention,
    linear_attention_direct,
    linear_attention_denominator,
    rope_linear_attention,
    rope_linear_weight_stats,
    similarity_attention,
    exp_similarity,
    feature_maps,
    causal_mask,
)
from .layer import MultiHeadAttention
