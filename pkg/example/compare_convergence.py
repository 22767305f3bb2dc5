import sys
from logging import INFO
from pathlib import Path
from typing import Dict, List, Tuple

from event.engine import EventEngine, Event
from event.event import EventType
from kit.engine import MainEngine
from kit.object import StepData
from kit.setting import SETTINGS
from apps.lm_trainer import LmTrainerApp, TrainerEngine, build_configs
from apps.lm_trainer.compare import ComparisonResult, format_summary


SETTINGS["log.active"] = True
SETTINGS["log.level"] = INFO
SETTINGS["log.console"] = True

# 语料路径由命令行给出
corpus_path: Path = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("corpus.txt")
output_path: Path = Path("convergence")
output_path.mkdir(exist_ok=True)

# 创建事件引擎与主引擎
event_engine = EventEngine()
main_engine = MainEngine(event_engine)
main_engine.write_log("主引擎创建成功")

# 添加训练应用
trainer: TrainerEngine = main_engine.add_app(LmTrainerApp)
trainer.init_engine()


# 注册事件

def show_step(event: Event):
    data: StepData = event.data
    if data.step % 50 == 0:
        main_engine.write_log(f"step {data.step}: loss {data.loss:.4f}")


event_engine.register(EventType.EVENT_TRAIN_STEP, show_step)


# 同一种子下依次训练各组合：softmax下比较位置编码，线性注意力下比较rope与无编码
runs: Dict[str, List[Tuple[str, str]]] = {
    "softmax": [("softmax", "rope"), ("softmax", "sinusoidal"), ("softmax", "learned")],
    "linear": [("linear-elu", "rope"), ("linear-elu", "none")],
}

for group, pairs in runs.items():
    metrics_paths: List[Path] = []
    for attention, encoding in pairs:
        metrics_path: Path = output_path.joinpath(f"{attention}_{encoding}.csv")
        model_config, train_config = build_configs(
            overrides={
                "attention": attention,
                "pos_encoding": encoding,
                "corpus_path": corpus_path,
                "metrics_path": metrics_path,
                "steps": 500,
                "seed": 42,
                "show_progress": False,
            }
        )
        trainer.run_training(model_config, train_config)
        metrics_paths.append(metrics_path)

    result: ComparisonResult = trainer.compare(metrics_paths)
    print(format_summary(result))
    result.table.to_csv(output_path.joinpath(f"aligned_{group}.csv"))

main_engine.close()
