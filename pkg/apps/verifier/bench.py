"""
稠密矩阵与稀疏实现的旋转编码耗时对比
"""
from time import perf_counter
from typing import Callable, List

import numpy as np

from kit.exception import ConfigurationError, NumericError
from kit.object import BenchResult
from numerics.rng import Rng
from rotary.encoder import RotaryEncoder, ThetaSchedule, dense_rotation_matrix, get_encoder, make_schedule


BENCH_TOLERANCE: float = 1e-12


def _median_time(func: Callable[[], np.ndarray], reps: int) -> float:
    """"""
    timings: List[float] = []
    for _ in range(reps):
        start: float = perf_counter()
        func()
        timings.append(perf_counter() - start)
    return float(np.median(timings))


def run_bench(dim: int, seq: int, reps: int, rng: Rng) -> BenchResult:
    """
    Rotate a [seq, dim] block both ways; outputs must agree within tolerance.
    """
    if reps < 1:
        raise ConfigurationError(f"重复次数必须为正整数：{reps}")
    if seq < 1:
        raise ConfigurationError(f"序列长度必须为正整数：{seq}")

    schedule: ThetaSchedule = make_schedule(dim)
    encoder: RotaryEncoder = get_encoder(schedule)
    encoder.ensure(seq)

    x: np.ndarray = rng.normal((seq, dim))
    positions: np.ndarray = np.arange(seq)

    def dense() -> np.ndarray:
        # one d x d matrix alive at a time
        return np.stack([dense_rotation_matrix(schedule, m) @ x[m] for m in range(seq)])

    def sparse() -> np.ndarray:
        return encoder.rotate(x, positions)

    max_abs_diff: float = float(np.abs(dense() - sparse()).max())
    if max_abs_diff >= BENCH_TOLERANCE:
        raise NumericError(f"稠密与稀疏结果不一致，最大差值{max_abs_diff:.3g}")

    return BenchResult(
        dim=dim,
        seq=seq,
        reps=reps,
        dense_median=_median_time(dense, reps),
        sparse_median=_median_time(sparse, reps),
        max_abs_diff=max_abs_diff
    )
