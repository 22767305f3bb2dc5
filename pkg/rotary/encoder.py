"""
旋转位置编码：频率表、稀疏与稠密旋转
"""
from dataclasses import dataclass
from functools import lru_cache
from threading import Lock
from typing import Tuple, Union

import numpy as np

from kit.exception import ConfigurationError, DimensionError
from numerics.tensor import Tensor, _pair_swap, rotate_pairs


BASE: float = 10000.0
INITIAL_HORIZON: int = 64

Positions = Union[int, np.integer, np.ndarray]


@dataclass(frozen=True)
class ThetaSchedule:
    """
    d/2 rotation frequencies of a d-dimensional rotary encoding.
    """

    dim: int
    thetas: Tuple[float, ...]

    def __post_init__(self) -> None:
        """"""
        if self.dim < 2 or self.dim % 2:
            raise ConfigurationError(f"旋转编码维度必须为正偶数：{self.dim}")
        if len(self.thetas) != self.dim // 2:
            raise ConfigurationError(f"频率个数{len(self.thetas)}与维度{self.dim}不符")
        if any(theta <= 0 for theta in self.thetas):
            raise ConfigurationError("旋转频率必须为正数")

    @property
    def frequencies(self) -> np.ndarray:
        """"""
        return np.array(self.thetas, dtype=np.float64)


def make_schedule(dim: int) -> ThetaSchedule:
    """
    theta_i = 10000^(-2(i-1)/d) for i = 1..d/2.
    """
    if not isinstance(dim, (int, np.integer)) or dim < 2 or dim % 2:
        raise ConfigurationError(f"旋转编码维度必须为不小于2的偶数：{dim}")

    exponents: np.ndarray = -2.0 * np.arange(dim // 2) / dim
    thetas: np.ndarray = BASE ** exponents
    return ThetaSchedule(dim=int(dim), thetas=tuple(float(t) for t in thetas))


def _pair_tables(thetas: np.ndarray, start: int, stop: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    cos/sin rows for positions [start, stop), each frequency repeated for its pair.
    """
    angles: np.ndarray = np.arange(start, stop, dtype=np.float64)[:, None] * thetas[None, :]
    return np.repeat(np.cos(angles), 2, axis=1), np.repeat(np.sin(angles), 2, axis=1)


class RotaryEncoder:
    """
    Applies R^d_{Theta,m} through cached cos/sin tables.

    Tables grow by doubling the horizon. The (cos, sin) pair is replaced in a
    single assignment, readers hold either the old or the new pair.
    """

    def __init__(self, schedule: ThetaSchedule, max_pos: int = INITIAL_HORIZON) -> None:
        """"""
        self.schedule: ThetaSchedule = schedule
        self._lock: Lock = Lock()
        self._tables: Tuple[np.ndarray, np.ndarray] = _pair_tables(
            schedule.frequencies, 0, max(int(max_pos), 1)
        )

    @property
    def dim(self) -> int:
        """"""
        return self.schedule.dim

    @property
    def max_pos(self) -> int:
        """"""
        return self._tables[0].shape[0]

    @property
    def cos_table(self) -> np.ndarray:
        """"""
        return self._tables[0]

    @property
    def sin_table(self) -> np.ndarray:
        """"""
        return self._tables[1]

    def ensure(self, horizon: int) -> Tuple[np.ndarray, np.ndarray]:
        """
        Tables covering positions [0, horizon).
        """
        tables: Tuple[np.ndarray, np.ndarray] = self._tables
        if tables[0].shape[0] >= horizon:
            return tables

        with self._lock:
            tables = self._tables
            current: int = tables[0].shape[0]
            if current >= horizon:
                return tables

            target: int = current
            while target < horizon:
                target *= 2

            cos_rows, sin_rows = _pair_tables(self.schedule.frequencies, current, target)
            tables = (
                np.concatenate([tables[0], cos_rows]),
                np.concatenate([tables[1], sin_rows])
            )
            self._tables = tables

        return tables

    def lookup(self, positions: Positions) -> Tuple[np.ndarray, np.ndarray]:
        """
        cos/sin rows for positions, negative ones via R_{-r} = R_r^T.
        """
        positions = np.asarray(positions)
        if not np.issubdtype(positions.dtype, np.integer):
            raise DimensionError(f"位置必须为整数：{positions.dtype}")

        magnitude: np.ndarray = np.abs(positions)
        horizon: int = int(magnitude.max()) + 1 if magnitude.size else 1
        cos_table, sin_table = self.ensure(horizon)

        cos: np.ndarray = cos_table[magnitude]
        sin: np.ndarray = sin_table[magnitude]
        sign: np.ndarray = np.where(positions < 0, -1.0, 1.0)[..., None]
        return cos, sin * sign

    def rotate(self, x: Union[np.ndarray, Tensor], positions: Positions) -> Union[np.ndarray, Tensor]:
        """
        Sparse realization x*cos + swap(x)*sin.

        positions is one integer or one integer per row of the second-to-last axis.
        """
        if x.shape[-1] != self.dim:
            raise DimensionError(f"最后一维{x.shape[-1]}与旋转维度{self.dim}不符")

        positions = np.asarray(positions)
        if positions.ndim == 1 and (len(x.shape) < 2 or x.shape[-2] != positions.shape[0]):
            raise DimensionError(f"位置个数{positions.shape[0]}与序列长度不符：{x.shape}")

        cos, sin = self.lookup(positions)

        if isinstance(x, Tensor):
            cos = cos.astype(x.dtype)
            sin = sin.astype(x.dtype)
            return x * cos + rotate_pairs(x) * sin

        x = np.asarray(x)
        return x * cos + _pair_swap(x) * sin


@lru_cache(maxsize=None)
def get_encoder(schedule: ThetaSchedule) -> RotaryEncoder:
    """
    Process-wide shared encoder of a schedule.
    """
    return RotaryEncoder(schedule)


def apply_rotary(
    enc: RotaryEncoder,
    x: Union[np.ndarray, Tensor],
    m: Positions
) -> Union[np.ndarray, Tensor]:
    """"""
    return enc.rotate(x, m)


def dense_rotation_matrix(schedule: ThetaSchedule, m: int) -> np.ndarray:
    """
    Explicit block-diagonal R^d_{Theta,m}.
    """
    angles: np.ndarray = m * schedule.frequencies
    cos: np.ndarray = np.cos(angles)
    sin: np.ndarray = np.sin(angles)

    matrix: np.ndarray = np.zeros((schedule.dim, schedule.dim))
    even: np.ndarray = np.arange(0, schedule.dim, 2)
    matrix[even, even] = cos
    matrix[even, even + 1] = -sin
    matrix[even + 1, even] = sin
    matrix[even + 1, even + 1] = cos
    return matrix


def dense_rotate(schedule: ThetaSchedule, x: np.ndarray, positions: np.ndarray) -> np.ndarray:
    """
    Rotate row i of x by R_{positions[i]} with full d x d matrices.
    """
    x = np.asarray(x)
    matrices: np.ndarray = np.stack([dense_rotation_matrix(schedule, int(m)) for m in positions])
    return np.einsum("sij,...sj->...si", matrices, x)

