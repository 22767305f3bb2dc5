"""
相对位置打分与二维复数形式
"""
from dataclasses import dataclass

import numpy as np

from kit.exception import DimensionError
from .encoder import ThetaSchedule, get_encoder


def _as_vector(x: np.ndarray, dim: int, name: str) -> np.ndarray:
    """"""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (dim,):
        raise DimensionError(f"{name}的形状{x.shape}应为({dim},)")
    return x


def rope_score(q: np.ndarray, k: np.ndarray, m: int, n: int, schedule: ThetaSchedule) -> float:
    """
    <R_m q, R_n k> for already projected q and k.
    """
    q = _as_vector(q, schedule.dim, "q")
    k = _as_vector(k, schedule.dim, "k")

    encoder = get_encoder(schedule)
    return float(encoder.rotate(q, m) @ encoder.rotate(k, n))


def relative_rope_score(q: np.ndarray, k: np.ndarray, r: int, schedule: ThetaSchedule) -> float:
    """
    q^T R_r k, equal to rope_score(q, k, m, m + r).
    """
    q = _as_vector(q, schedule.dim, "q")
    k = _as_vector(k, schedule.dim, "k")
    return float(q @ get_encoder(schedule).rotate(k, r))


@dataclass
class Complex2DPair:
    """
    Complex view re + i*im of the 2D vector (re, im).
    """

    re: float
    im: float

    @classmethod
    def from_vector(cls, x: np.ndarray) -> "Complex2DPair":
        """"""
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (2,):
            raise DimensionError(f"二维向量的形状应为(2,)：{x.shape}")
        return cls(re=float(x[0]), im=float(x[1]))

    @classmethod
    def from_complex(cls, z: complex) -> "Complex2DPair":
        """"""
        return cls(re=float(z.real), im=float(z.imag))

    def to_vector(self) -> np.ndarray:
        """"""
        return np.array([self.re, self.im])

    def as_complex(self) -> complex:
        """"""
        return complex(self.re, self.im)

    def rotate(self, angle: float) -> "Complex2DPair":
        """
        Multiply by e^{i angle}.
        """
        return Complex2DPair.from_complex(self.as_complex() * np.exp(1j * angle))

    @property
    def modulus(self) -> float:
        """"""
        return float(np.hypot(self.re, self.im))

    @property
    def angle(self) -> float:
        """"""
        return float(np.arctan2(self.im, self.re))


def complex_rope_score_2d(q: Complex2DPair, k: Complex2DPair, m: int, n: int, theta: float) -> float:
    """
    Re[q conj(k) e^{i(m-n)theta}].
    """
    value: complex = q.as_complex() * np.conj(k.as_complex()) * np.exp(1j * (m - n) * theta)
    return float(value.real)
