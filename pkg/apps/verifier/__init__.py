from apps.baseapp import BaseApp
from .engine import APP_NAME, VerifierEngine
from .suites import SUITES


class VerifierApp(BaseApp):
    """"""

    app_name: str = APP_NAME
    display_name: str = "性质校验"
    engine_class: VerifierEngine = VerifierEngine
