"""
校验引擎：并行运行校验套件
"""
import traceback
from concurrent.futures import Future, ThreadPoolExecutor
from time import perf_counter
from typing import Dict, List, Optional, Sequence

from pandas import DataFrame

from event.engine import Event, EventEngine
from event.event import EventType
from kit.engine import BaseEngine, MainEngine
from kit.exception import ConfigurationError
from kit.object import BenchResult, SuiteResult
from kit.setting import SETTINGS
from kit.utility import get_thread_count
from numerics.rng import Rng, derive_seed
from .bench import run_bench
from .suites import SUITES, SuiteFunc


APP_NAME = "Verifier"


def run_suite(name: str, func: SuiteFunc, seed: int, index: int, trials: int, dims: Sequence[int]) -> SuiteResult:
    """
    Run one suite on its own stream; an exception counts as failure.
    """
    rng: Rng = Rng(derive_seed(seed, index))
    start: float = perf_counter()
    try:
        return func(rng, trials, dims)
    except Exception:
        return SuiteResult(
            name=name,
            passed=False,
            elapsed=perf_counter() - start,
            detail=traceback.format_exc()
        )


class VerifierEngine(BaseEngine):
    """
    Runs the registered suites on a thread pool.
    """

    def __init__(self, main_engine: MainEngine, event_engine: EventEngine) -> None:
        """"""
        super().__init__(main_engine, event_engine, APP_NAME)

        self.results: List[SuiteResult] = []

    def run_verification(
        self,
        seed: int,
        trials: Optional[int] = None,
        dims: Optional[Sequence[int]] = None,
        names: Optional[Sequence[str]] = None
    ) -> List[SuiteResult]:
        """
        Results come back in registry order whatever the completion order.
        """
        if trials is None:
            trials = SETTINGS["verify.trials"]
        if dims is None:
            dims = SETTINGS["verify.dims"]
        if trials < 1:
            raise ConfigurationError(f"试验次数必须为正整数：{trials}")
        for dim in dims:
            if dim < 2 or dim % 2:
                raise ConfigurationError(f"维度必须为不小于2的偶数：{dim}")

        selected: List[str] = list(names) if names else list(SUITES)
        for name in selected:
            if name not in SUITES:
                raise ConfigurationError(f"未知校验套件：{name}")

        # Streams are keyed by registry position so a subset reproduces the full run.
        order: Dict[str, int] = {name: index for index, name in enumerate(SUITES)}
        max_workers: Optional[int] = get_thread_count(SETTINGS["worker.threads"])

        self.write_log(f"开始校验，套件{len(selected)}个，种子{seed}，每维试验{trials}次")

        with ThreadPoolExecutor(max_workers=max_workers) as executor:
            futures: List[Future] = [
                executor.submit(run_suite, name, SUITES[name], seed, order[name], trials, list(dims))
                for name in selected
            ]
            self.results = [future.result() for future in futures]

        for result in self.results:
            verdict: str = "通过" if result.passed else "失败"
            self.write_log(
                f"{result.name}：{verdict}，最大误差{result.max_error:.3g}（容差{result.tolerance:.0e}），"
                f"耗时{result.elapsed:.2f}秒"
            )
            self.event_engine.put(Event(EventType.EVENT_VERIFY_SUITE, result))

        return self.results

    def run_bench(self, dim: int, seq: int, reps: int, seed: int) -> BenchResult:
        """"""
        result: BenchResult = run_bench(dim, seq, reps, Rng(seed))
        self.write_log(f"加速比：{result.speedup:.2f}")
        return result

    def get_result_df(self) -> DataFrame:
        """"""
        return DataFrame(
            [
                {
                    "suite": r.name,
                    "passed": r.passed,
                    "trials": r.trials,
                    "max_error": r.max_error,
                    "tolerance": r.tolerance,
                    "elapsed": r.elapsed,
                }
                for r in self.results
            ]
        )
