"""
Abel变换恒等式与衰减上界校验
"""
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from kit.exception import DimensionError
from numerics.rng import Rng
from rotary.encoder import ThetaSchedule, make_schedule
from rotary.score import rope_score


BOUND_SLACK: float = 1e-12


@dataclass
class AbelCheckReport:
    """"""

    trials: int = 0
    max_identity_residual: float = 0.0
    bound_violations: int = 0
    max_score_residual: float = 0.0

    def merge(self, other: "AbelCheckReport") -> "AbelCheckReport":
        """"""
        return AbelCheckReport(
            trials=self.trials + other.trials,
            max_identity_residual=max(self.max_identity_residual, other.max_identity_residual),
            bound_violations=self.bound_violations + other.bound_violations,
            max_score_residual=max(self.max_score_residual, other.max_score_residual),
        )


def pair_products(q: np.ndarray, k: np.ndarray) -> np.ndarray:
    """
    h_i = q_[2i:2i+1] * conj(k_[2i:2i+1]) in complex form.
    """
    q = np.asarray(q, dtype=np.float64)
    k = np.asarray(k, dtype=np.float64)
    if q.shape != k.shape or q.ndim != 1 or q.shape[0] % 2:
        raise DimensionError(f"q与k必须为等长偶数维向量：{q.shape} / {k.shape}")

    q_complex: np.ndarray = q[0::2] + 1j * q[1::2]
    k_complex: np.ndarray = k[0::2] + 1j * k[1::2]
    return q_complex * np.conj(k_complex)


def partial_sums(schedule: ThetaSchedule, distances: np.ndarray) -> np.ndarray:
    """
    S_0..S_{d/2} per distance, S_0 = 0 and S_j = sum_{i<j} e^{i r theta_i}.
    """
    phases: np.ndarray = np.exp(1j * np.asarray(distances, dtype=np.float64)[:, None] * schedule.frequencies[None, :])
    zeros: np.ndarray = np.zeros((phases.shape[0], 1), dtype=np.complex128)
    return np.concatenate([zeros, np.cumsum(phases, axis=1)], axis=1)


def check_instance(q: np.ndarray, k: np.ndarray, m: int, n: int) -> Tuple[float, bool, float]:
    """
    (identity residual, bound violated, score residual) of one draw.
    """
    q = np.asarray(q, dtype=np.float64)
    schedule: ThetaSchedule = make_schedule(q.shape[0])

    h: np.ndarray = pair_products(q, k)
    sums: np.ndarray = partial_sums(schedule, np.array([m - n]))[0]

    # h_{d/2} = 0
    steps: np.ndarray = np.diff(np.append(h, 0))
    lhs: complex = np.sum(h * np.diff(sums))
    rhs: complex = -np.sum(sums[1:] * steps)
    residual: float = float(abs(lhs - rhs))

    chained: float = float(np.sum(np.abs(sums[1:]) * np.abs(steps)))
    loose: float = float(np.abs(steps).max() * np.abs(sums[1:]).sum())
    violated: bool = (
        abs(lhs) > chained * (1 + BOUND_SLACK) + BOUND_SLACK
        or chained > loose * (1 + BOUND_SLACK) + BOUND_SLACK
    )

    score_residual: float = abs(float(lhs.real) - rope_score(q, k, m, n, schedule))
    return residual, violated, score_residual


def abel_identity_check(
    q: Optional[np.ndarray],
    k: Optional[np.ndarray],
    m: int,
    n: int,
    rng: Optional[Rng] = None,
    trials: int = 0,
    max_position: int = 512
) -> AbelCheckReport:
    """
    Check the given (q, k, m, n) plus `trials` random draws of the same dimension.
    """
    report: AbelCheckReport = AbelCheckReport()
    dim: int = 0

    if q is not None and k is not None:
        residual, violated, score_residual = check_instance(q, k, m, n)
        report = report.merge(AbelCheckReport(1, residual, int(violated), score_residual))
        dim = len(q)

    if trials:
        if rng is None or not dim:
            raise DimensionError("随机校验需要rng以及确定维度的q、k")
        report = report.merge(run_abel_trials(rng, trials, (dim,), max_position))

    return report


def run_abel_trials(
    rng: Rng,
    trials: int,
    dims: Tuple[int, ...] = (4, 64, 128),
    max_position: int = 512
) -> AbelCheckReport:
    """
    `trials` random draws for every dimension.
    """
    report: AbelCheckReport = AbelCheckReport()

    for dim in dims:
        for _ in range(trials):
            q: np.ndarray = rng.normal(dim)
            k: np.ndarray = rng.normal(dim)
            m: int = rng.integers(0, max_position + 1)
            n: int = rng.integers(0, max_position + 1)

            residual, violated, score_residual = check_instance(q, k, m, n)
            report = report.merge(AbelCheckReport(1, residual, int(violated), score_residual))

    return report
