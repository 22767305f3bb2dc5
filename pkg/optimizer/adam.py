"""
自适应矩估计优化器
"""
from typing import Dict, List, Sequence

import numpy as np

from kit.exception import ConfigurationError, NumericError
from numerics.tensor import Parameter


MOMENT_PREFIX: str = "adam."


class AdamOptimizer:
    """
    Adam with bias correction, beta1 = 0.9 and beta2 = 0.98 by default.
    """

    def __init__(
        self,
        params: Sequence[Parameter],
        learning_rate: float = 1e-3,
        beta1: float = 0.9,
        beta2: float = 0.98,
        eps: float = 1e-9
    ) -> None:
        """"""
        if learning_rate <= 0:
            raise ConfigurationError(f"学习率必须大于0：{learning_rate}")

        self.params: List[Parameter] = list(params)
        self.learning_rate: float = learning_rate
        self.beta1: float = beta1
        self.beta2: float = beta2
        self.eps: float = eps

        self.step_count: int = 0
        self.first: Dict[str, np.ndarray] = {p.name: np.zeros_like(p.data) for p in self.params}
        self.second: Dict[str, np.ndarray] = {p.name: np.zeros_like(p.data) for p in self.params}

    def zero_grad(self) -> None:
        """"""
        for param in self.params:
            param.zero_grad()

    def step(self) -> None:
        """
        Update every parameter in place from its current gradient.
        """
        self.step_count += 1
        correction1: float = 1 - self.beta1 ** self.step_count
        correction2: float = 1 - self.beta2 ** self.step_count

        for param in self.params:
            grad: np.ndarray = param.gradient
            if not np.all(np.isfinite(grad)):
                raise NumericError(f"参数{param.name}的梯度非有限")

            dtype: np.dtype = param.dtype
            first: np.ndarray = self.first[param.name]
            second: np.ndarray = self.second[param.name]

            first *= dtype.type(self.beta1)
            first += dtype.type(1 - self.beta1) * grad
            second *= dtype.type(self.beta2)
            second += dtype.type(1 - self.beta2) * grad * grad

            update: np.ndarray = (first / dtype.type(correction1)) / (
                np.sqrt(second / dtype.type(correction2)) + dtype.type(self.eps)
            )
            param.data -= dtype.type(self.learning_rate) * update

    def state_tensors(self) -> Dict[str, np.ndarray]:
        """
        Moments keyed as adam.m.<name> and adam.v.<name>.
        """
        tensors: Dict[str, np.ndarray] = {}
        for name, value in self.first.items():
            tensors[f"{MOMENT_PREFIX}m.{name}"] = value
        for name, value in self.second.items():
            tensors[f"{MOMENT_PREFIX}v.{name}"] = value
        return tensors

    def load_state_tensors(self, tensors: Dict[str, np.ndarray], step_count: int) -> None:
        """"""
        for name in self.first:
            self.first[name] = np.array(tensors[f"{MOMENT_PREFIX}m.{name}"], dtype=self.first[name].dtype)
            self.second[name] = np.array(tensors[f"{MOMENT_PREFIX}v.{name}"], dtype=self.second[name].dtype)
        self.step_count = step_count
