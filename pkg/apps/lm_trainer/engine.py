"""
语言模型训练引擎
"""
import traceback
from datetime import datetime
from pathlib import Path
from typing import Callable, Dict, List, Optional, TextIO

import numpy as np
from pandas import DataFrame
from tqdm import tqdm

from event.engine import Event, EventEngine
from event.event import EventType
from kit.engine import BaseEngine, MainEngine
from kit.exception import CheckpointError, LengthError, NumericError
from kit.object import StepData
from numerics.rng import Rng
from numerics.tensor import Tensor, no_grad
from optimizer.adam import AdamOptimizer
from .checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from .compare import ComparisonResult, compare_runs
from .config import ModelConfig, TrainConfig
from .corpus import BatchPrefetcher, Corpus, load_corpus, sequential_batches
from .model import ByteLM, build_model


APP_NAME = "LmTrainer"

METRICS_HEADER: str = "step,loss"


class TrainerEngine(BaseEngine):
    """
    Runs training jobs and reports through the event engine.
    """

    def __init__(self, main_engine: MainEngine, event_engine: EventEngine) -> None:
        """"""
        super().__init__(main_engine, event_engine, APP_NAME)

        self.training_engine: TrainingEngine = None
        self.result_losses: List[float] = []
        self.result_validation: Dict[int, float] = {}

    def init_engine(self) -> None:
        """"""
        self.write_log("初始化训练引擎")

        self.training_engine = TrainingEngine()
        # Redirect log from training engine outside.
        self.training_engine.output = self.write_log
        self.training_engine.callback = self.put_step_event

    def put_step_event(self, data: StepData) -> None:
        """"""
        self.event_engine.put(Event(EventType.EVENT_TRAIN_STEP, data))

    def run_training(self, model_config: ModelConfig, train_config: TrainConfig) -> List[float]:
        """
        Errors are logged with traceback and raised again to the caller.
        """
        if not self.training_engine:
            self.init_engine()

        engine: TrainingEngine = self.training_engine
        engine.clear_data()
        engine.set_parameters(model_config, train_config)

        try:
            engine.load_data()
            engine.build()
            self.result_losses = engine.run_training()
            self.result_validation = engine.evaluate()
        except Exception:
            self.write_log(f"训练失败，触发异常：\n{traceback.format_exc()}")
            raise

        self.event_engine.put(Event(EventType.EVENT_TRAIN_FINISHED, self.result_losses))
        return self.result_losses

    def compare(self, paths: List[Path]) -> ComparisonResult:
        """"""
        result: ComparisonResult = compare_runs(paths)
        self.write_log(f"收敛对比完成，AUC最低的变体：{result.best}")
        return result


class TrainingEngine:
    """
    Single-threaded optimizer loop over prefetched, step-seeded batches.
    """

    def __init__(self) -> None:
        """"""
        self.model_config: ModelConfig = None
        self.train_config: TrainConfig = None

        self.corpus: Corpus = None
        self.rng: Rng = None
        self.model: ByteLM = None
        self.optimizer: AdamOptimizer = None

        self.start_step: int = 0
        self.losses: List[float] = []
        self.validation: Dict[int, float] = {}

        self.callback: Optional[Callable[[StepData], None]] = None

    def clear_data(self) -> None:
        """"""
        self.corpus = None
        self.model = None
        self.optimizer = None
        self.start_step = 0
        self.losses = []
        self.validation = {}

    def set_parameters(self, model_config: ModelConfig, train_config: TrainConfig) -> None:
        """"""
        self.model_config = model_config
        self.train_config = train_config

    def load_data(self) -> None:
        """"""
        self.output(f"开始加载语料：{self.train_config.corpus_path}")
        self.corpus = load_corpus(self.train_config.corpus_path)
        self.output(
            f"语料加载完成，训练集{len(self.corpus.train)}字节，验证集{len(self.corpus.valid)}字节"
        )

    def build(self) -> None:
        """
        Fresh initialization from the seed, or state restored from a checkpoint.
        """
        config: TrainConfig = self.train_config
        self.rng = Rng(config.seed)
        self.model = build_model(self.model_config, self.rng)
        self.optimizer = AdamOptimizer(self.model.parameters(), config.learning_rate)

        self.output(
            f"模型构建完成：位置编码{self.model_config.pos_encoding.value}，"
            f"注意力{self.model_config.attention.value}，参数量{self.model.parameter_count}"
        )

        if config.resume_path:
            self.resume(config.resume_path)

    def resume(self, path: Path) -> None:
        """"""
        checkpoint: Checkpoint = load_checkpoint(path)
        if checkpoint.model_config != self.model_config:
            raise CheckpointError("检查点的模型配置与当前配置不一致")
        if checkpoint.seed != self.train_config.seed:
            raise CheckpointError(f"检查点种子{checkpoint.seed}与当前种子{self.train_config.seed}不一致")
        if checkpoint.step > self.train_config.steps:
            raise CheckpointError(f"检查点步数{checkpoint.step}超过目标步数{self.train_config.steps}")

        try:
            self.model.load_tensors(checkpoint.tensors)
            self.optimizer.load_state_tensors(checkpoint.tensors, checkpoint.step)
        except (KeyError, ValueError) as e:
            raise CheckpointError(f"检查点张量不完整：{e}")

        if checkpoint.rng_state:
            self.rng.set_state(checkpoint.rng_state)

        self.start_step = checkpoint.step
        self.output(f"从检查点恢复：{path}，第{checkpoint.step}步")

    def _open_metrics(self) -> Optional[TextIO]:
        """
        Resumed runs append to an existing file, fresh runs start a new one.
        """
        path: Optional[Path] = self.train_config.metrics_path
        if not path:
            return None

        path = Path(path)
        if self.start_step and path.exists():
            return open(path, mode="a", encoding="utf-8")

        f: TextIO = open(path, mode="w", encoding="utf-8")
        f.write(METRICS_HEADER + "\n")
        f.flush()
        return f

    def run_training(self) -> List[float]:
        """
        Every step's loss reaches the metrics file before the next step starts.
        """
        config: TrainConfig = self.train_config
        context_len: int = self.model_config.context_len

        self.output(f"开始训练，第{self.start_step}步至第{config.steps}步，种子{config.seed}")
        metrics: Optional[TextIO] = self._open_metrics()

        prefetcher: BatchPrefetcher = BatchPrefetcher(
            self.corpus.train,
            context_len,
            config.batch_size,
            config.seed,
            self.start_step,
            config.steps
        )

        try:
            with prefetcher:
                steps = range(self.start_step, config.steps)
                for step in tqdm(steps, desc="train", disable=not config.show_progress):
                    inputs, targets = prefetcher.get(step)

                    self.optimizer.zero_grad()
                    loss: Tensor = self.model.loss(inputs, targets)
                    value: float = loss.item()
                    if not np.isfinite(value):
                        raise NumericError(f"第{step}步损失非有限：{value}")

                    loss.backward()
                    self.optimizer.step()

                    self.losses.append(value)
                    if metrics:
                        metrics.write(f"{step},{value!r}\n")
                        metrics.flush()
                    if self.callback:
                        self.callback(StepData(source=APP_NAME, step=step, loss=value))
        except NumericError:
            self.output(f"训练发散，已记录{len(self.losses)}步指标")
            raise
        finally:
            if metrics:
                metrics.close()

        if config.checkpoint_path:
            self.save(config.checkpoint_path)

        if self.losses:
            self.output(f"训练完成，最终损失：{self.losses[-1]:.6f}")
        return self.losses

    def save(self, path: Path) -> None:
        """"""
        tensors: Dict[str, np.ndarray] = {
            name: param.data for name, param in self.model.named_parameters().items()
        }
        tensors.update(self.optimizer.state_tensors())

        checkpoint: Checkpoint = Checkpoint(
            model_config=self.model_config,
            step=self.optimizer.step_count,
            seed=self.train_config.seed,
            rng_state=self.rng.get_state(),
            tensors=tensors
        )
        save_checkpoint(path, checkpoint)
        self.output(f"检查点已保存：{path}")

    def validation_loss(self, context_len: int) -> float:
        """
        Mean loss over sequential validation windows, nan when the model
        cannot encode that length or no window fits.
        """
        losses: List[float] = []
        try:
            with no_grad():
                for inputs, targets in sequential_batches(
                    self.corpus.valid,
                    context_len,
                    self.train_config.batch_size,
                    self.train_config.eval_batches
                ):
                    losses.append(self.model.loss(inputs, targets).item())
        except LengthError as e:
            self.output(f"长度{context_len}无法评估：{e}")
            return float("nan")

        if not losses:
            return float("nan")
        return float(np.mean(losses))

    def evaluate(self) -> Dict[int, float]:
        """
        Validation loss at the trained context and at twice that length.
        """
        context_len: int = self.model_config.context_len
        self.validation = {}
        for length in (context_len, 2 * context_len):
            self.validation[length] = self.validation_loss(length)
            self.output(f"验证集损失（长度{length}）：{self.validation[length]:.6f}")
        return self.validation

    def get_result_df(self) -> DataFrame:
        """"""
        steps: np.ndarray = np.arange(self.start_step, self.start_step + len(self.losses))
        return DataFrame({"step": steps, "loss": self.losses})

    def output(self, msg) -> None:
        """
        Output message of training engine.
        """
        print(f"{datetime.now()}\t{msg}")
