from apps.baseapp import BaseApp
from .engine import APP_NAME, TrainerEngine, TrainingEngine
from .config import ModelConfig, TrainConfig, build_configs
from .compare import ComparisonResult, compare_runs


class LmTrainerApp(BaseApp):
    """"""

    app_name: str = APP_NAME
    display_name: str = "语言模型训练"
    engine_class: TrainerEngine = TrainerEngine
