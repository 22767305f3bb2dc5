import os
from pathlib import Path

import pytest

from apps.lm_trainer.config import ModelConfig, TrainConfig
from kit.constant import AttentionVariant, PosEncoding, Precision
from kit.setting import SETTINGS
from numerics.rng import Rng


SLOW_ENV: str = "ROPE_KIT_SLOW"

SAMPLE_TEXT: bytes = (
    b"The quick brown fox jumps over the lazy dog. "
    b"Rotary position embedding encodes absolute positions with rotations "
    b"and exposes relative positions in the attention score. "
)


def pytest_collection_modifyitems(config, items):
    if os.environ.get(SLOW_ENV) == "1":
        return
    skip_slow = pytest.mark.skip(reason=f"set {SLOW_ENV}=1 to run")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture(autouse=True)
def quiet_logging(monkeypatch):
    monkeypatch.setitem(SETTINGS, "log.console", False)
    monkeypatch.setitem(SETTINGS, "log.file", False)


@pytest.fixture
def rng() -> Rng:
    return Rng(42)


@pytest.fixture
def corpus_file(tmp_path) -> Path:
    path = tmp_path / "corpus.txt"
    path.write_bytes(SAMPLE_TEXT * 40)
    return path


@pytest.fixture
def tiny_model_config() -> ModelConfig:
    return ModelConfig(
        d_model=16,
        heads=2,
        layers=1,
        context_len=8,
        attention=AttentionVariant.SOFTMAX,
        pos_encoding=PosEncoding.ROPE,
        precision=Precision.FP64,
    )


@pytest.fixture
def tiny_train_config(corpus_file, tmp_path) -> TrainConfig:
    return TrainConfig(
        steps=6,
        batch_size=4,
        learning_rate=3e-3,
        seed=7,
        corpus_path=corpus_file,
        metrics_path=tmp_path / "metrics.csv",
        eval_batches=2,
        show_progress=False,
    )


@pytest.fixture(scope="session")
def large_corpus_file(tmp_path_factory) -> Path:
    path = tmp_path_factory.mktemp("corpus") / "large.txt"
    repeats = (1 << 20) // len(SAMPLE_TEXT) + 1
    path.write_bytes(SAMPLE_TEXT * repeats)
    return path
