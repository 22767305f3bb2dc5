"""
检查点的二进制格式

Layout, all integers little-endian:
    magic (8 bytes) | version u32 | header length u32 | header text (utf-8)
    tensor count u32 | tensors

Each tensor is: name length u16 | name | ndim u8 | dims u32 * ndim |
width u8 (32 or 64) | raw little-endian floats.
The header is key=value lines: model config, step, seed and rng state.
"""
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import BinaryIO, Dict

import numpy as np

from kit.exception import CheckpointError, ConfigurationError
from .config import ModelConfig


MAGIC: bytes = b"RKCKPT\r\n"
VERSION: int = 1

HEADER_STEP: str = "step"
HEADER_SEED: str = "seed"
HEADER_RNG: str = "rng_state"

WIDTH_DTYPES: Dict[int, str] = {
    32: "<f4",
    64: "<f8",
}


@dataclass
class Checkpoint:
    """
    Everything needed to continue a run bit-exactly.
    """

    model_config: ModelConfig
    step: int
    seed: int
    rng_state: str = ""
    tensors: Dict[str, np.ndarray] = field(default_factory=dict)
    version: int = VERSION


def _header_text(checkpoint: Checkpoint) -> str:
    """"""
    items: Dict[str, str] = checkpoint.model_config.to_dict()
    items[HEADER_STEP] = str(checkpoint.step)
    items[HEADER_SEED] = str(checkpoint.seed)
    items[HEADER_RNG] = checkpoint.rng_state
    return "\n".join(f"{key}={value}" for key, value in items.items())


def _write_tensor(f: BinaryIO, name: str, value: np.ndarray) -> None:
    """"""
    width: int = value.dtype.itemsize * 8
    if width not in WIDTH_DTYPES or not np.issubdtype(value.dtype, np.floating):
        raise CheckpointError(f"不支持的张量类型：{name} {value.dtype}")

    encoded: bytes = name.encode("utf-8")
    f.write(struct.pack("<H", len(encoded)))
    f.write(encoded)
    f.write(struct.pack("<B", value.ndim))
    f.write(struct.pack(f"<{value.ndim}I", *value.shape))
    f.write(struct.pack("<B", width))
    f.write(np.ascontiguousarray(value, dtype=WIDTH_DTYPES[width]).tobytes())


def save_checkpoint(path: Path, checkpoint: Checkpoint) -> None:
    """"""
    path = Path(path)
    header: bytes = _header_text(checkpoint).encode("utf-8")

    with open(path, mode="wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<II", checkpoint.version, len(header)))
        f.write(header)
        f.write(struct.pack("<I", len(checkpoint.tensors)))
        for name, value in checkpoint.tensors.items():
            _write_tensor(f, name, np.asarray(value))


class _Reader:
    """
    Bounds-checked cursor over checkpoint bytes.
    """

    def __init__(self, data: bytes, path: Path) -> None:
        """"""
        self.data: bytes = data
        self.path: Path = path
        self.offset: int = 0

    def take(self, size: int) -> bytes:
        """"""
        end: int = self.offset + size
        if end > len(self.data):
            raise CheckpointError(f"检查点文件被截断：{self.path}")
        chunk: bytes = self.data[self.offset: end]
        self.offset = end
        return chunk

    def unpack(self, fmt: str) -> tuple:
        """"""
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def load_checkpoint(path: Path) -> Checkpoint:
    """"""
    path = Path(path)
    if not path.is_file():
        raise CheckpointError(f"检查点文件不存在：{path}")

    reader: _Reader = _Reader(path.read_bytes(), path)
    if reader.take(len(MAGIC)) != MAGIC:
        raise CheckpointError(f"不是检查点文件：{path}")

    version, header_length = reader.unpack("<II")
    if version != VERSION:
        raise CheckpointError(f"不支持的检查点版本：{version}")

    try:
        header_text: str = reader.take(header_length).decode("utf-8")
    except UnicodeDecodeError:
        raise CheckpointError(f"检查点头部编码错误：{path}")

    header: Dict[str, str] = {}
    for line in header_text.splitlines():
        if "=" not in line:
            raise CheckpointError(f"检查点头部格式错误：{line}")
        key, value = line.split("=", 1)
        header[key] = value

    tensors: Dict[str, np.ndarray] = {}
    (count,) = reader.unpack("<I")
    for _ in range(count):
        (name_length,) = reader.unpack("<H")
        name: str = reader.take(name_length).decode("utf-8")
        (ndim,) = reader.unpack("<B")
        shape: tuple = reader.unpack(f"<{ndim}I")
        (width,) = reader.unpack("<B")
        if width not in WIDTH_DTYPES:
            raise CheckpointError(f"张量{name}的位宽无效：{width}")

        dtype: np.dtype = np.dtype(WIDTH_DTYPES[width])
        size: int = int(np.prod(shape, dtype=np.int64)) * dtype.itemsize
        tensors[name] = np.frombuffer(reader.take(size), dtype=dtype).reshape(shape).astype(dtype.newbyteorder("="))

    if reader.offset != len(reader.data):
        raise CheckpointError(f"检查点文件末尾有多余数据：{path}")

    try:
        model_config: ModelConfig = ModelConfig.from_dict(header)
        step: int = int(header[HEADER_STEP])
        seed: int = int(header[HEADER_SEED])
    except (KeyError, ValueError, ConfigurationError) as e:
        raise CheckpointError(f"检查点头部内容无效：{e}")

    return Checkpoint(
        model_config=model_config,
        step=step,
        seed=seed,
        rng_state=header.get(HEADER_RNG, ""),
        tensors=tensors,
        version=version
    )
