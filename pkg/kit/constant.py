"""
枚举类型的常量
"""
from enum import Enum

import numpy as np


class Precision(Enum):
    """
    Floating point width of tensors.
    """
    FP32 = "32"
    FP64 = "64"

    @property
    def dtype(self) -> np.dtype:
        """"""
        if self is Precision.FP32:
            return np.dtype(np.float32)
        return np.dtype(np.float64)


class AttentionVariant(Enum):
    """
    Attention mechanism.
    """
    SOFTMAX = "softmax"
    LINEAR_ELU = "linear-elu"
    LINEAR_SOFTMAX = "linear-softmax"


class FeatureMap(Enum):
    """
    Non-negative feature map of linear attention.
    """
    ELU = "elu"
    SOFTMAX_EXP = "softmax-exp"


class PosEncoding(Enum):
    """
    Position encoding variant.
    """
    ROPE = "rope"
    SINUSOIDAL = "sinusoidal"
    LEARNED = "learned"
    SHAW = "shaw"
    NONE = "none"


class ExitCode:
    SUCCESS = 0
    CHECK_FAILED = 1
    USAGE_ERROR = 2


VARIANT_FEATURE_MAP = {
    AttentionVariant.LINEAR_ELU: FeatureMap.ELU,
    AttentionVariant.LINEAR_SOFTMAX: FeatureMap.SOFTMAX_EXP,
}
