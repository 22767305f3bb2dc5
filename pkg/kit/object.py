"""
框架中各种数据类型的建类管理
"""

from dataclasses import dataclass, field
from datetime import datetime
from logging import INFO


@dataclass
class BaseData:
    """
    Any data object needs a source name and should inherit base data.
    """

    source: str

    extra: dict = field(default=None, init=False)


@dataclass
class LogData(BaseData):
    """
    Log data is used for recording log messages in console or log files.
    """

    msg: str
    level: int = INFO

    def __post_init__(self) -> None:
        """"""
        self.time: datetime = datetime.now()


@dataclass
class StepData(BaseData):
    """
    Loss of one optimization step.
    """

    step: int
    loss: float


@dataclass
class SuiteResult:
    """
    Outcome of one verification suite.
    """

    name: str
    passed: bool
    trials: int = 0
    max_error: float = 0.0
    tolerance: float = 0.0
    elapsed: float = 0.0
    detail: str = ""


@dataclass
class BenchResult:
    """
    Timing of dense against sparse rotary application.
    """

    dim: int
    seq: int
    reps: int
    dense_median: float
    sparse_median: float
    max_abs_diff: float

    @property
    def speedup(self) -> float:
        """"""
        if not self.sparse_median:
            return float("inf")
        return self.dense_median / self.sparse_median
