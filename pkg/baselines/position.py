"""
对照位置编码：正弦绝对、可训练绝对、Shaw截断相对
"""
from threading import Lock
from typing import Union

import numpy as np

from kit.constant import Precision
from kit.exception import ConfigurationError, DimensionError, LengthError
from numerics.rng import Rng
from numerics.tensor import Parameter, Tensor, as_tensor, gather


INIT_SCALE: float = 0.02

Encoding = Union["SinusoidalTable", "LearnedAbsolute", np.ndarray, Tensor]


def _check_even(dim: int) -> None:
    """"""
    if dim < 2 or dim % 2:
        raise ConfigurationError(f"正弦编码维度必须为正偶数：{dim}")


def _sinusoidal_rows(start: int, stop: int, dim: int) -> np.ndarray:
    """"""
    positions: np.ndarray = np.arange(start, stop, dtype=np.float64)[:, None]
    frequencies: np.ndarray = 1.0 / 10000.0 ** (2.0 * np.arange(dim // 2) / dim)
    angles: np.ndarray = positions * frequencies[None, :]

    rows: np.ndarray = np.empty((stop - start, dim))
    rows[:, 0::2] = np.sin(angles)
    rows[:, 1::2] = np.cos(angles)
    return rows


def sinusoidal_encoding(k: int, d: int) -> np.ndarray:
    """
    p_{k,2t} = sin(k / 10000^{2t/d}), p_{k,2t+1} = cos(k / 10000^{2t/d}).
    """
    _check_even(d)
    if k < 0:
        raise ConfigurationError(f"位置不能为负：{k}")
    return _sinusoidal_rows(k, k + 1, d)[0]


class SinusoidalTable:
    """
    Fixed sinusoidal table, extended on demand.
    """

    def __init__(self, dim: int, max_pos: int = 128) -> None:
        """"""
        _check_even(dim)
        self.dim: int = dim
        self._lock: Lock = Lock()
        self._table: np.ndarray = _sinusoidal_rows(0, max_pos, dim)

    @property
    def max_pos(self) -> int:
        """"""
        return self._table.shape[0]

    @property
    def table(self) -> np.ndarray:
        """"""
        return self._table

    def rows(self, seq_len: int) -> np.ndarray:
        """"""
        table: np.ndarray = self._table
        if seq_len > table.shape[0]:
            with self._lock:
                table = self._table
                if seq_len > table.shape[0]:
                    extra: np.ndarray = _sinusoidal_rows(table.shape[0], max(seq_len, 2 * table.shape[0]), self.dim)
                    table = np.concatenate([table, extra])
                    self._table = table
        return table[:seq_len]


class LearnedAbsolute:
    """
    Trainable absolute position vectors p_1..p_L.
    """

    def __init__(
        self,
        max_len: int,
        dim: int,
        rng: Rng,
        precision: Precision = Precision.FP64,
        name: str = "pos_embedding"
    ) -> None:
        """"""
        if max_len < 1 or dim < 1:
            raise ConfigurationError(f"可训练位置表尺寸无效：{max_len}x{dim}")

        self.max_len: int = max_len
        self.dim: int = dim
        self.embeddings: Parameter = Parameter(
            rng.normal((max_len, dim), INIT_SCALE, precision), name=name
        )

    def rows(self, seq_len: int) -> Tensor:
        """"""
        if seq_len > self.max_len:
            raise LengthError(f"序列长度{seq_len}超过可训练位置表长度{self.max_len}")
        return gather(self.embeddings, np.arange(seq_len))


def shaw_clip(m: int, n: int, r_min: int, r_max: int) -> int:
    """
    max(r_min, min(r_max, m - n)).
    """
    if r_min > r_max:
        raise ConfigurationError(f"截断区间无效：[{r_min}, {r_max}]")
    return max(r_min, min(r_max, m - n))


class ShawRelative:
    """
    Key-path clipped relative embeddings, one vector per clipped distance.
    """

    def __init__(
        self,
        r_min: int,
        r_max: int,
        dim: int,
        rng: Rng,
        precision: Precision = Precision.FP64,
        name: str = "shaw_keys"
    ) -> None:
        """"""
        if r_min > r_max:
            raise ConfigurationError(f"截断区间无效：[{r_min}, {r_max}]")

        self.r_min: int = r_min
        self.r_max: int = r_max
        self.dim: int = dim
        self.key_embeddings: Parameter = Parameter(
            rng.normal((r_max - r_min + 1, dim), INIT_SCALE, precision), name=name
        )

    def relative_index(self, seq_len: int) -> np.ndarray:
        """
        Row index of clip(m - n) for every (m, n).
        """
        offsets: np.ndarray = np.arange(seq_len)[:, None] - np.arange(seq_len)[None, :]
        return np.clip(offsets, self.r_min, self.r_max) - self.r_min

    def score_bias(self, q: Tensor) -> Tensor:
        """
        q_m^T p_{clip(m-n)} for q of shape [..., seq, d].
        """
        q = as_tensor(q)
        if q.shape[-1] != self.dim:
            raise DimensionError(f"查询维度{q.shape[-1]}与相对编码维度{self.dim}不符")

        seq_len: int = q.shape[-2]
        relative: Tensor = gather(self.key_embeddings, self.relative_index(seq_len))
        expanded: Tensor = q.reshape(*q.shape[:-1], 1, self.dim)
        return (expanded * relative).sum(axis=-1)


def _encoding_rows(encoding: Encoding, seq_len: int) -> Union[np.ndarray, Tensor]:
    """"""
    if isinstance(encoding, (SinusoidalTable, LearnedAbsolute)):
        return encoding.rows(seq_len)
    return encoding


def additive_inject(x: Union[np.ndarray, Tensor], encoding: Encoding) -> Union[np.ndarray, Tensor]:
    """
    x_i + p_i row by row; projection happens downstream.
    """
    seq_len: int = x.shape[-2]
    rows = _encoding_rows(encoding, seq_len)

    if tuple(rows.shape) != tuple(x.shape[-2:]):
        raise DimensionError(f"位置编码形状{rows.shape}与输入{x.shape}不符")

    if isinstance(x, Tensor) or isinstance(rows, Tensor):
        dtype = x.dtype
        if isinstance(rows, np.ndarray):
            rows = rows.astype(dtype)
        return as_tensor(x) + rows

    return np.asarray(x) + rows
