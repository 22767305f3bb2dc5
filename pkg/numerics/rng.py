"""
可复现随机数

All stochastic code draws from an explicitly passed Rng. The algorithm is
numpy's PCG64 bit generator behind a Generator, seeded with a 64-bit integer.
"""
import json
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from kit.constant import Precision
from kit.exception import ConfigurationError


SEED_LIMIT: int = 2 ** 64

Shape = Union[int, Tuple[int, ...]]


def derive_seed(seed: int, *keys: int) -> int:
    """
    64-bit seed of an independent stream identified by keys.
    """
    sequence: np.random.SeedSequence = np.random.SeedSequence([seed, *keys])
    return int(sequence.generate_state(1, dtype=np.uint64)[0])


class Rng:
    """
    Seeded random stream, same seed gives the same samples everywhere.
    """

    def __init__(self, seed: int) -> None:
        """"""
        if not isinstance(seed, (int, np.integer)) or not 0 <= int(seed) < SEED_LIMIT:
            raise ConfigurationError(f"随机种子必须为64位无符号整数：{seed}")

        self.seed: int = int(seed)
        self._generator: np.random.Generator = np.random.Generator(np.random.PCG64(self.seed))

    @classmethod
    def for_step(cls, seed: int, step: int) -> "Rng":
        """
        Stream owned by one training step.
        """
        return cls(derive_seed(seed, step))

    def spawn(self, count: int) -> List["Rng"]:
        """
        Child streams derived from the master seed alone.

        Draws already taken from this stream do not affect them, so spawn
        returns the same children before and after sampling.
        """
        return [Rng(derive_seed(self.seed, index)) for index in range(count)]

    def normal(
        self,
        shape: Shape,
        scale: float = 1.0,
        precision: Precision = Precision.FP64
    ) -> np.ndarray:
        """"""
        sample: np.ndarray = self._generator.standard_normal(shape) * scale
        return sample.astype(precision.dtype)

    def uniform(self, low: float, high: float, shape: Optional[Shape] = None) -> Union[float, np.ndarray]:
        """"""
        return self._generator.uniform(low, high, shape)

    def integers(self, low: int, high: int, shape: Optional[Shape] = None) -> Union[int, np.ndarray]:
        """
        Integers in [low, high).
        """
        value = self._generator.integers(low, high, shape)
        if shape is None:
            return int(value)
        return value

    def choice(self, items: Sequence, size: int, replace: bool = False) -> np.ndarray:
        """"""
        return self._generator.choice(np.asarray(items), size=size, replace=replace)

    def get_state(self) -> str:
        """
        JSON text of the bit generator state.
        """
        return json.dumps(self._generator.bit_generator.state, sort_keys=True)

    def set_state(self, text: str) -> None:
        """"""
        self._generator.bit_generator.state = json.loads(text)
