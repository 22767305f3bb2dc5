"""
多个训练指标文件的收敛对比
"""
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
from pandas import DataFrame

from kit.exception import ComparisonError, DataError


METRICS_COLUMNS: List[str] = ["step", "loss"]


@dataclass
class ComparisonResult:
    """
    Aligned loss curves of several runs.

    table has one loss column per run indexed by step, differences holds
    each run minus the first one.
    """

    table: DataFrame
    differences: DataFrame
    summary: DataFrame

    @property
    def best(self) -> str:
        """
        Label of the run with the lowest area under its loss curve.
        """
        return str(self.summary["auc"].idxmin())


def read_metrics(path: Path) -> DataFrame:
    """"""
    path = Path(path)
    if not path.is_file():
        raise DataError(f"指标文件不存在：{path}")

    try:
        df: DataFrame = pd.read_csv(path)
    except (pd.errors.EmptyDataError, pd.errors.ParserError) as e:
        raise ComparisonError(f"指标文件无法解析：{path}，{e}")

    if list(df.columns) != METRICS_COLUMNS:
        raise ComparisonError(f"指标文件表头应为step,loss：{path}")
    if df.empty:
        raise ComparisonError(f"指标文件没有数据行：{path}")
    return df


def loss_auc(steps: np.ndarray, losses: np.ndarray) -> float:
    """
    Trapezoid area under the loss curve.
    """
    steps = np.asarray(steps, dtype=np.float64)
    losses = np.asarray(losses, dtype=np.float64)
    if len(steps) < 2:
        return float(losses.sum()) if len(losses) else float("nan")
    return float(np.trapz(losses, steps))


def _labels(paths: Sequence[Path]) -> List[str]:
    """
    File stems, full paths when stems collide.
    """
    stems: List[str] = [Path(p).stem for p in paths]
    if len(set(stems)) == len(stems):
        return stems
    return [str(p) for p in paths]


def compare_runs(paths: Sequence[Path], labels: Optional[Sequence[str]] = None) -> ComparisonResult:
    """
    Align metrics files on step and summarize each curve.
    """
    if len(paths) < 2:
        raise ComparisonError(f"至少需要两个指标文件，实际为{len(paths)}个")

    if labels is None:
        labels = _labels(paths)
    elif len(labels) != len(paths) or len(set(labels)) != len(labels):
        raise ComparisonError("标签数量与文件数量不符或存在重复")

    frames: Dict[str, DataFrame] = {}
    reference: Optional[np.ndarray] = None
    for label, path in zip(labels, paths):
        df: DataFrame = read_metrics(path)
        steps: np.ndarray = df["step"].to_numpy()

        if reference is None:
            reference = steps
        elif len(steps) != len(reference) or np.any(steps != reference):
            raise ComparisonError(f"步数网格不一致：{path}")

        frames[label] = df

    table: DataFrame = DataFrame(
        {label: df["loss"].to_numpy() for label, df in frames.items()},
        index=pd.Index(reference, name="step")
    )
    differences: DataFrame = table.sub(table.iloc[:, 0], axis=0)

    summary: DataFrame = DataFrame(
        {
            "auc": [loss_auc(reference, table[label].to_numpy()) for label in table.columns],
            "final": [float(table[label].iloc[-1]) for label in table.columns],
            "min": [float(table[label].min()) for label in table.columns],
        },
        index=pd.Index(list(table.columns), name="variant")
    )

    return ComparisonResult(table=table, differences=differences, summary=summary)


def format_summary(result: ComparisonResult) -> str:
    """"""
    lines: List[str] = [f"{'variant':<24}{'auc':>16}{'final':>12}{'min':>12}"]
    for label, row in result.summary.iterrows():
        lines.append(f"{str(label):<24}{row['auc']:>16.6f}{row['final']:>12.6f}{row['min']:>12.6f}")
    lines.append(f"lowest auc: {result.best}")
    return "\n".join(lines)
