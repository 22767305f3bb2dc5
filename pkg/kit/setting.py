"""
全局设定
"""

from logging import INFO
from typing import Dict, Any

from .utility import load_json

SETTINGS: Dict[str, Any] = {
    "log.active": True,
    "log.level": INFO,
    "log.console": True,
    "log.file": False,

    "verify.trials": 1000,
    "verify.dims": [2, 4, 64, 128],

    "decay.dim": 128,
    "decay.max_distance": 250,

    "bench.dim": 256,
    "bench.seq": 512,
    "bench.reps": 5,

    "train.d_model": 64,
    "train.heads": 4,
    "train.layers": 2,
    "train.context_len": 128,
    "train.batch_size": 16,
    "train.learning_rate": 1e-3,
    "train.steps": 500,

    "worker.threads": 0,
}

# Load global setting from json file.
SETTING_FILENAME: str = "rk_setting.json"
SETTINGS.update(load_json(SETTING_FILENAME))


def get_settings(prefix: str = "") -> Dict[str, Any]:
    prefix_length: int = len(prefix)
    return {k[prefix_length:]: v for k, v in SETTINGS.items() if k.startswith(prefix)}
