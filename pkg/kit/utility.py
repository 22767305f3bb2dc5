"""
General utility functions.
"""

import json
import os
from pathlib import Path
from typing import Dict, Optional, Tuple

from .exception import ConfigurationError, DataError


THREADS_ENV: str = "ROPE_KIT_THREADS"


def _get_run_dir(temp_name: str) -> Tuple[Path, Path]:
    """
    Get path where the kit is running in.
    """
    cwd: Path = Path.cwd()
    temp_path: Path = cwd.joinpath(temp_name)

    # If .rope_kit folder exists in current working directory,
    # then use it as running path.
    if temp_path.exists():
        return cwd, temp_path

    # Otherwise use home path of system.
    home_path: Path = Path.home()
    temp_path: Path = home_path.joinpath(temp_name)

    # Create .rope_kit folder under home path if not exist.
    if not temp_path.exists():
        temp_path.mkdir()

    return home_path, temp_path


RUN_DIR, TEMP_DIR = _get_run_dir(".rope_kit")


def get_file_path(filename: str) -> Path:
    """
    Get path for temp file with filename.
    """
    return TEMP_DIR.joinpath(filename)


def get_folder_path(folder_name: str) -> Path:
    """
    Get path for temp folder with folder name.
    """
    folder_path: Path = TEMP_DIR.joinpath(folder_name)
    if not folder_path.exists():
        folder_path.mkdir()
    return folder_path


def load_json(filename: str) -> dict:
    """
    Load data from json file in temp path.
    """
    filepath: Path = get_file_path(filename)

    if filepath.exists():
        with open(filepath, mode="r", encoding="UTF-8") as f:
            data: dict = json.load(f)
        return data
    else:
        save_json(filename, {})
        return {}


def save_json(filename: str, data: dict) -> None:
    """
    Save data into json file in temp path.
    """
    filepath: Path = get_file_path(filename)
    with open(filepath, mode="w+", encoding="UTF-8") as f:
        json.dump(
            data,
            f,
            indent=4,
            ensure_ascii=False
        )


def load_key_value(path: Path) -> Dict[str, str]:
    """
    Load flat key=value text. Blank lines and # comments are skipped.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"配置文件不存在：{path}")

    data: Dict[str, str] = {}
    with open(path, mode="r", encoding="UTF-8") as f:
        for number, raw in enumerate(f, start=1):
            line: str = raw.split("#", 1)[0].strip()
            if not line:
                continue

            if "=" not in line:
                raise ConfigurationError(f"{path}第{number}行缺少'='：{raw.strip()}")

            key, value = line.split("=", 1)
            data[key.strip()] = value.strip()

    return data


def get_thread_count(setting: Optional[int] = None) -> Optional[int]:
    """
    Worker thread cap, None means auto.
    """
    value: str = os.environ.get(THREADS_ENV, "")
    if value:
        try:
            count: int = int(value)
        except ValueError:
            raise ConfigurationError(f"{THREADS_ENV}必须为整数：{value}")
    else:
        count = setting or 0

    if count < 0:
        raise ConfigurationError(f"线程数不能为负：{count}")

    # 0则代表不限制
    if count == 0:
        return None
    return count
