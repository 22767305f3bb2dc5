"""
字节语料：加载、划分与按步取批
"""
from dataclasses import dataclass
from pathlib import Path
from queue import Empty, Full, Queue
from threading import Thread
from typing import Optional, Tuple

import numpy as np

from kit.exception import DataError
from numerics.rng import Rng


TRAIN_SHARE: Tuple[int, int] = (8, 10)

Batch = Tuple[np.ndarray, np.ndarray]


@dataclass
class Corpus:
    """
    Raw bytes split into a training prefix and a validation suffix.
    """

    path: Path
    train: np.ndarray
    valid: np.ndarray

    @property
    def size(self) -> int:
        """"""
        return len(self.train) + len(self.valid)


def load_corpus(path: Path) -> Corpus:
    """"""
    path = Path(path)
    if not path.is_file():
        raise DataError(f"语料文件不存在：{path}")

    data: np.ndarray = np.frombuffer(path.read_bytes(), dtype=np.uint8)
    if not data.size:
        raise DataError(f"语料文件为空：{path}")

    numerator, denominator = TRAIN_SHARE
    split: int = data.size * numerator // denominator
    return Corpus(path=path, train=data[:split], valid=data[split:])


def sample_batch(data: np.ndarray, context_len: int, batch_size: int, rng: Rng) -> Batch:
    """
    Random windows of context_len bytes and their next-byte targets.
    """
    if len(data) <= context_len:
        raise DataError(f"数据长度{len(data)}不足以切出长度{context_len}的窗口")

    starts: np.ndarray = rng.integers(0, len(data) - context_len, batch_size)
    offsets: np.ndarray = starts[:, None] + np.arange(context_len + 1)[None, :]
    windows: np.ndarray = data[offsets].astype(np.int64)
    return windows[:, :-1], windows[:, 1:]


def step_batch(data: np.ndarray, context_len: int, batch_size: int, seed: int, step: int) -> Batch:
    """
    Batch of one step, fixed by (seed, step) alone.
    """
    return sample_batch(data, context_len, batch_size, Rng.for_step(seed, step))


def sequential_batches(data: np.ndarray, context_len: int, batch_size: int, limit: int):
    """
    Non-overlapping windows from the start of data, at most limit batches.
    """
    window: int = context_len + 1
    count: int = len(data) // window
    if not count:
        return

    windows: np.ndarray = data[: count * window].reshape(count, window).astype(np.int64)
    for index, start in enumerate(range(0, count, batch_size)):
        if index >= limit:
            break
        chunk: np.ndarray = windows[start: start + batch_size]
        yield chunk[:, :-1], chunk[:, 1:]


class BatchPrefetcher:
    """
    Produces step batches on a background thread ahead of the optimizer.
    """

    def __init__(
        self,
        data: np.ndarray,
        context_len: int,
        batch_size: int,
        seed: int,
        start: int,
        stop: int,
        depth: int = 4
    ) -> None:
        """"""
        if len(data) <= context_len:
            raise DataError(f"数据长度{len(data)}不足以切出长度{context_len}的窗口")

        self.data: np.ndarray = data
        self.context_len: int = context_len
        self.batch_size: int = batch_size
        self.seed: int = seed
        self.start: int = start
        self.stop: int = stop

        self._queue: Queue = Queue(maxsize=depth)
        self._active: bool = False
        self._thread: Thread = Thread(target=self._run, daemon=True)

    def _run(self) -> None:
        """"""
        for step in range(self.start, self.stop):
            batch: Batch = step_batch(self.data, self.context_len, self.batch_size, self.seed, step)
            while self._active:
                try:
                    self._queue.put((step, batch), timeout=0.1)
                    break
                except Full:
                    continue
            if not self._active:
                return

    def begin(self) -> None:
        """"""
        self._active = True
        self._thread.start()

    def get(self, step: int) -> Batch:
        """"""
        produced, batch = self._queue.get()
        if produced != step:
            raise DataError(f"批次顺序错误：期望第{step}步，得到第{produced}步")
        return batch

    def close(self) -> None:
        """
        Stop the producer and drop any batches still queued.
        """
        self._active = False
        while True:
            try:
                self._queue.get_nowait()
            except Empty:
                break
        if self._thread.is_alive():
            self._thread.join()

    def __enter__(self) -> "BatchPrefetcher":
        """"""
        self.begin()
        return self

    def __exit__(self, *args) -> Optional[bool]:
        """"""
        self.close()
        return None
