"""
二维推导的可执行校验
"""
from dataclasses import dataclass

import numpy as np

from numerics.rng import Rng
from rotary.encoder import ThetaSchedule, dense_rotation_matrix
from rotary.score import Complex2DPair


TWO_PI: float = 2 * np.pi
GRID_SIZE: int = 8
MIN_MODULUS: float = 1e-8


@dataclass
class DerivationReport:
    """
    Largest residual of every 2D derivation check.
    """

    trials: int = 0
    max_initial_residual: float = 0.0
    max_radial_residual: float = 0.0
    max_angle_residual: float = 0.0
    max_relative_residual: float = 0.0
    max_matrix_residual: float = 0.0

    initial_tolerance: float = 1e-12
    radial_tolerance: float = 1e-12
    angle_tolerance: float = 1e-10
    relative_tolerance: float = 1e-10

    @property
    def passed(self) -> bool:
        """"""
        return (
            self.max_initial_residual <= self.initial_tolerance
            and self.max_radial_residual <= self.radial_tolerance
            and self.max_angle_residual <= self.angle_tolerance
            and self.max_relative_residual <= self.relative_tolerance
            and self.max_matrix_residual <= self.radial_tolerance
        )


def accumulated_angle(m: int, theta: float) -> float:
    """
    phi(m) = m * theta (gamma = 0), reduced to [0, 2 pi).
    """
    return float(np.mod(m * theta, TWO_PI))


def wrap_angle(angle: float) -> float:
    """
    Representative of angle in (-pi, pi].
    """
    wrapped: float = float(np.mod(angle + np.pi, TWO_PI) - np.pi)
    return np.pi if wrapped == -np.pi else wrapped


def encode_2d(w: np.ndarray, x: np.ndarray, m: int, theta: float) -> Complex2DPair:
    """
    f(x, m) = (W x) e^{i m theta}.
    """
    projected: Complex2DPair = Complex2DPair.from_vector(np.asarray(w) @ np.asarray(x))
    return projected.rotate(m * theta)


def score_2d(query: Complex2DPair, key: Complex2DPair) -> float:
    """
    Re[q conj(k)], the inner product of the real views.
    """
    return float((query.as_complex() * np.conj(key.as_complex())).real)


def derivation_oracle_2d(rng: Rng, trials: int, max_position: int = 512) -> DerivationReport:
    """
    Initial condition, radial invariance, angular progression and relative form.
    """
    report: DerivationReport = DerivationReport(trials=trials)

    for _ in range(trials):
        w_q: np.ndarray = rng.normal((2, 2))
        w_k: np.ndarray = rng.normal((2, 2))
        x_q: np.ndarray = rng.normal(2)
        x_k: np.ndarray = rng.normal(2)
        theta: float = float(rng.uniform(0.01, np.pi))
        m: int = rng.integers(0, max_position + 1)

        origin: Complex2DPair = encode_2d(w_q, x_q, 0, theta)
        encoded: Complex2DPair = encode_2d(w_q, x_q, m, theta)

        # f_q(x, 0) == W_q x
        initial: float = float(np.abs(origin.to_vector() - w_q @ x_q).max())
        report.max_initial_residual = max(report.max_initial_residual, initial)

        radial: float = abs(encoded.modulus - origin.modulus)
        report.max_radial_residual = max(report.max_radial_residual, radial)

        if origin.modulus > MIN_MODULUS:
            progressed: float = wrap_angle(encoded.angle - origin.angle - m * theta)
            report.max_angle_residual = max(report.max_angle_residual, abs(progressed))

        schedule: ThetaSchedule = ThetaSchedule(dim=2, thetas=(theta,))
        matrix_form: np.ndarray = dense_rotation_matrix(schedule, m) @ (w_q @ x_q)
        matrix: float = float(np.abs(matrix_form - encoded.to_vector()).max())
        report.max_matrix_residual = max(report.max_matrix_residual, matrix)

        shift: int = rng.integers(1, max_position + 1)
        for a in range(GRID_SIZE):
            for b in range(GRID_SIZE):
                base: float = score_2d(encode_2d(w_q, x_q, a, theta), encode_2d(w_k, x_k, b, theta))
                moved: float = score_2d(
                    encode_2d(w_q, x_q, a + shift, theta),
                    encode_2d(w_k, x_k, b + shift, theta)
                )
                report.max_relative_residual = max(report.max_relative_residual, abs(base - moved))

    return report
