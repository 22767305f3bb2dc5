"""
训练配置：模型结构与训练参数
"""
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

from kit.constant import AttentionVariant, PosEncoding, Precision
from kit.exception import ConfigurationError
from kit.setting import get_settings
from kit.utility import load_key_value


VOCAB_SIZE: int = 256


@dataclass
class ModelConfig:
    """
    Byte-level decoder layout.
    """

    d_model: int = 64
    heads: int = 4
    layers: int = 2
    context_len: int = 128
    attention: AttentionVariant = AttentionVariant.SOFTMAX
    pos_encoding: PosEncoding = PosEncoding.ROPE
    precision: Precision = Precision.FP32
    ffn_mult: int = 4
    vocab: int = VOCAB_SIZE

    def __post_init__(self) -> None:
        """"""
        if self.vocab != VOCAB_SIZE:
            raise ConfigurationError(f"字节级模型词表大小必须为{VOCAB_SIZE}：{self.vocab}")
        for name in ("d_model", "heads", "layers", "context_len", "ffn_mult"):
            if getattr(self, name) < 1:
                raise ConfigurationError(f"{name}必须为正整数：{getattr(self, name)}")
        if self.d_model % self.heads:
            raise ConfigurationError(f"d_model={self.d_model}不能被heads={self.heads}整除")
        if self.pos_encoding == PosEncoding.ROPE and self.head_dim % 2:
            raise ConfigurationError(f"旋转编码要求头维度为偶数：{self.head_dim}")
        if self.pos_encoding == PosEncoding.SINUSOIDAL and self.d_model % 2:
            raise ConfigurationError(f"正弦编码要求d_model为偶数：{self.d_model}")
        if self.pos_encoding == PosEncoding.SHAW and self.attention != AttentionVariant.SOFTMAX:
            raise ConfigurationError("Shaw相对编码只能用于softmax注意力")

    @property
    def head_dim(self) -> int:
        """"""
        return self.d_model // self.heads

    def to_dict(self) -> Dict[str, str]:
        """
        Flat text form, stored in checkpoints.
        """
        data: Dict[str, str] = {}
        for f in fields(self):
            value: Any = getattr(self, f.name)
            data[f.name] = value.value if hasattr(value, "value") else str(value)
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, str]) -> "ModelConfig":
        """"""
        kwargs: Dict[str, Any] = {}
        for f in fields(cls):
            if f.name in data:
                kwargs[f.name] = _convert(f.name, data[f.name], MODEL_TYPES[f.name])
        return cls(**kwargs)


@dataclass
class TrainConfig:
    """
    Optimization run parameters.
    """

    steps: int = 500
    batch_size: int = 16
    learning_rate: float = 1e-3
    seed: int = 42
    corpus_path: Optional[Path] = None
    metrics_path: Optional[Path] = None
    checkpoint_path: Optional[Path] = None
    resume_path: Optional[Path] = None
    eval_batches: int = 4
    show_progress: bool = True

    def __post_init__(self) -> None:
        """"""
        if self.steps < 1:
            raise ConfigurationError(f"训练步数必须为正整数：{self.steps}")
        if self.batch_size < 1:
            raise ConfigurationError(f"批大小必须为正整数：{self.batch_size}")
        if self.learning_rate <= 0:
            raise ConfigurationError(f"学习率必须大于0：{self.learning_rate}")
        if self.eval_batches < 0:
            raise ConfigurationError(f"验证批数不能为负：{self.eval_batches}")


def _parse_bool(text: str) -> bool:
    """"""
    lowered: str = str(text).strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ConfigurationError(f"无法解析布尔值：{text}")


MODEL_TYPES: Dict[str, Any] = {
    "d_model": int,
    "heads": int,
    "layers": int,
    "context_len": int,
    "attention": AttentionVariant,
    "pos_encoding": PosEncoding,
    "precision": Precision,
    "ffn_mult": int,
    "vocab": int,
}

TRAIN_TYPES: Dict[str, Any] = {
    "steps": int,
    "batch_size": int,
    "learning_rate": float,
    "seed": int,
    "corpus_path": Path,
    "metrics_path": Path,
    "checkpoint_path": Path,
    "resume_path": Path,
    "eval_batches": int,
    "show_progress": _parse_bool,
}


def _convert(key: str, value: Any, kind: Any) -> Any:
    """"""
    if value is None or isinstance(value, kind if isinstance(kind, type) else ()):
        return value
    try:
        return kind(value)
    except ValueError:
        raise ConfigurationError(f"配置项{key}的取值无效：{value}")


def build_configs(
    config_path: Optional[Path] = None,
    overrides: Optional[Dict[str, Any]] = None
) -> Tuple[ModelConfig, TrainConfig]:
    """
    Merge global defaults, a key=value file and inline overrides, later wins.
    """
    merged: Dict[str, Any] = dict(get_settings("train."))

    if config_path:
        merged.update(load_key_value(config_path))

    for key, value in (overrides or {}).items():
        if value is not None:
            merged[key] = value

    model_kwargs: Dict[str, Any] = {}
    train_kwargs: Dict[str, Any] = {}
    for key, value in merged.items():
        if key in MODEL_TYPES:
            model_kwargs[key] = _convert(key, value, MODEL_TYPES[key])
        elif key in TRAIN_TYPES:
            train_kwargs[key] = _convert(key, value, TRAIN_TYPES[key])
        else:
            raise ConfigurationError(f"未知配置项：{key}")

    return ModelConfig(**model_kwargs), TrainConfig(**train_kwargs)
