from abc import ABC
from typing import Type, TYPE_CHECKING


if TYPE_CHECKING:
    from kit.engine import BaseEngine


class BaseApp(ABC):
    """
    Abstract class for app.
    """

    app_name: str = ""                          # Unique name used for creating engine
    display_name: str = ""                      # Name shown in logs
    engine_class: Type["BaseEngine"] = None     # App engine class
