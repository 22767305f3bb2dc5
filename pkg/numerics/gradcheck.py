"""
有限差分梯度校验
"""
from typing import Callable, List, Sequence

import numpy as np

from kit.exception import ConfigurationError, NumericError
from .rng import Rng
from .tensor import Parameter, Tensor, no_grad


LossFunc = Callable[[], Tensor]


def grad_check(
    f: LossFunc,
    params: Sequence[Parameter],
    rng: Rng,
    samples: int = 20,
    step: float = 1e-5
) -> float:
    """
    Compare reverse-mode gradients against central finite differences.

    Returns max |g_ad - g_fd| / max(1, |g_ad|, |g_fd|) over randomly chosen
    parameter entries.
    """
    params = list(params)
    if not params:
        raise ConfigurationError("梯度校验需要至少一个参数")

    for param in params:
        if param.dtype != np.float64:
            raise ConfigurationError(f"梯度校验只能在64位精度下进行：{param.name}")
        param.zero_grad()

    loss: Tensor = f()
    loss.backward()
    analytic: List[np.ndarray] = [param.gradient.copy() for param in params]

    sizes: np.ndarray = np.array([param.data.size for param in params])
    offsets: np.ndarray = np.cumsum(sizes)

    max_error: float = 0.0
    for _ in range(samples):
        flat: int = rng.integers(0, int(offsets[-1]))
        which: int = int(np.searchsorted(offsets, flat, side="right"))
        index: int = flat - int(offsets[which] - sizes[which])
        param: Parameter = params[which]

        original: float = float(param.data.flat[index])
        with no_grad():
            param.data.flat[index] = original + step
            plus: float = f().item()
            param.data.flat[index] = original - step
            minus: float = f().item()
        param.data.flat[index] = original

        if not (np.isfinite(plus) and np.isfinite(minus)):
            raise NumericError(f"梯度校验中损失非有限：{param.name}")

        g_fd: float = (plus - minus) / (2 * step)
        g_ad: float = float(analytic[which].flat[index])
        error: float = abs(g_ad - g_fd) / max(1.0, abs(g_ad), abs(g_fd))
        max_error = max(max_error, error)

    return max_error
