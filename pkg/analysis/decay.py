"""
远程衰减曲线
"""
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np
from pandas import DataFrame

from kit.exception import ConfigurationError
from rotary.encoder import ThetaSchedule, make_schedule
from .abel import pair_products, partial_sums


CSV_COLUMNS = ["distance", "mean_abs_S"]


@dataclass
class DecayCurve:
    """
    E(r) = mean_j |S_j(r)| with S_j(r) = sum_{i<j} e^{i r theta_i}.
    """

    dim: int
    distances: np.ndarray
    values: np.ndarray

    def windowed_means(self, width: int = 25, stop: int = 100) -> np.ndarray:
        """
        Means over [0, width), [width, 2*width), ... below stop.
        """
        count: int = min(stop, len(self.values)) // width
        return np.array([self.values[i * width:(i + 1) * width].mean() for i in range(count)])

    def is_windowed_decreasing(self, width: int = 25, stop: int = 100) -> bool:
        """"""
        means: np.ndarray = self.windowed_means(width, stop)
        return bool(len(means) > 1 and np.all(np.diff(means) < 0))

    def range_mean(self, start: int, end: int) -> float:
        """
        Mean of E(r) for start <= r <= end.
        """
        mask: np.ndarray = (self.distances >= start) & (self.distances <= end)
        return float(self.values[mask].mean())

    def to_dataframe(self) -> DataFrame:
        """"""
        return DataFrame({"distance": self.distances, "mean_abs_S": self.values})

    def save_csv(self, path: Union[str, Path]) -> Path:
        """"""
        path = Path(path)
        self.to_dataframe().to_csv(path, index=False, float_format="%.17g")
        return path


def decay_curve(d: int, max_distance: int) -> DecayCurve:
    """
    Direct complex summation for r = 0..max_distance.
    """
    if max_distance < 0:
        raise ConfigurationError(f"最大距离不能为负：{max_distance}")

    schedule: ThetaSchedule = make_schedule(d)
    distances: np.ndarray = np.arange(max_distance + 1)
    sums: np.ndarray = partial_sums(schedule, distances)[:, 1:]
    values: np.ndarray = np.abs(sums).mean(axis=1)
    return DecayCurve(dim=d, distances=distances, values=values)


@dataclass
class DecayBound:
    """
    Both sides of the decay inequality for one (q, k, r).
    """

    score: float
    abel_bound: float
    max_bound: float


def decay_bound(q: np.ndarray, k: np.ndarray, r: int, schedule: ThetaSchedule = None) -> DecayBound:
    """
    |sum h_i e^{i r theta_i}| against sum |S_{i+1}||h_{i+1}-h_i| and max|h_{i+1}-h_i| sum|S_{i+1}|.
    """
    q = np.asarray(q, dtype=np.float64)
    if schedule is None:
        schedule = make_schedule(q.shape[0])

    h: np.ndarray = pair_products(q, k)
    sums: np.ndarray = partial_sums(schedule, np.array([r]))[0]
    steps: np.ndarray = np.abs(np.diff(np.append(h, 0)))

    score: float = float(np.abs(np.sum(h * np.diff(sums))))
    abel_bound: float = float(np.sum(np.abs(sums[1:]) * steps))
    max_bound: float = float(steps.max() * np.abs(sums[1:]).sum())
    return DecayBound(score=score, abel_bound=abel_bound, max_bound=max_bound)
