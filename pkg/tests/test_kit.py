"""Event engine, main engine, settings helpers and the error hierarchy."""

import logging

import pytest

from apps.lm_trainer import LmTrainerApp
from apps.verifier import VerifierApp
from event.engine import Event, EventEngine
from event.event import EventType
from kit.engine import LOGGER_NAME, MainEngine
from kit.exception import (
    CheckpointError,
    ComparisonError,
    ConfigurationError,
    DataError,
    DimensionError,
    LengthError,
    NumericError,
    RopeKitError,
)
from kit.setting import SETTINGS, get_settings
from kit.utility import THREADS_ENV, get_thread_count, load_key_value


class TestEventEngine:

    def test_events_in_order(self):
        engine = EventEngine(timeout=0.01)
        seen = []
        engine.register("eTest", lambda event: seen.append(event.data))
        engine.start()
        for index in range(50):
            engine.put(Event("eTest", index))
        engine.stop()
        assert seen == list(range(50))

    def test_register_once(self):
        engine = EventEngine()
        seen = []

        def handler(event):
            seen.append(event.data)

        engine.register("eTest", handler)
        engine.register("eTest", handler)
        engine._process(Event("eTest", 1))
        engine.unregister("eTest", handler)
        engine._process(Event("eTest", 2))
        assert seen == [1]

    def test_dispatch_by_type_only(self):
        engine = EventEngine()
        seen = []
        engine.register("eTest", lambda event: seen.append(event.type))
        engine._process(Event("eOther", 1))
        engine._process(Event("eTest", 2))
        assert seen == ["eTest"]
        assert not hasattr(engine, "register_general")


class TestMainEngine:

    def test_add_app(self):
        main_engine = MainEngine(EventEngine())
        engine = main_engine.add_app(VerifierApp)
        assert main_engine.apps["Verifier"].display_name
        assert main_engine.get_engine("Verifier") is engine
        assert main_engine.get_engine("log") is not None
        main_engine.close()

    def test_missing_engine(self):
        main_engine = MainEngine(EventEngine())
        assert main_engine.get_engine("absent") is None
        main_engine.close()

    def test_app_metadata(self):
        for app_class in (VerifierApp, LmTrainerApp):
            assert app_class.app_name and app_class.display_name
            assert app_class.engine_class is not None
            assert not hasattr(app_class, "app_module")
            assert not hasattr(app_class, "app_path")

    def test_log_reaches_logger(self, caplog):
        main_engine = MainEngine(EventEngine())
        with caplog.at_level(logging.INFO, logger=LOGGER_NAME):
            main_engine.write_log("hello", "test")
            main_engine.close()
        assert "[test] hello" in caplog.text


class TestSettings:

    def test_prefix(self):
        train = get_settings("train.")
        assert train["d_model"] == SETTINGS["train.d_model"]
        assert all("." not in key for key in train)

    def test_key_value_file(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("# comment\n\nsteps = 10\ncorpus_path=a=b.txt  # trailing\n")
        assert load_key_value(path) == {"steps": "10", "corpus_path": "a=b.txt"}

    def test_key_value_missing_equals(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("steps 10\n")
        with pytest.raises(ConfigurationError):
            load_key_value(path)

    def test_key_value_missing_file(self, tmp_path):
        with pytest.raises(DataError):
            load_key_value(tmp_path / "absent.cfg")

    def test_thread_count(self, monkeypatch):
        monkeypatch.delenv(THREADS_ENV, raising=False)
        assert get_thread_count(0) is None
        assert get_thread_count(3) == 3
        monkeypatch.setenv(THREADS_ENV, "2")
        assert get_thread_count(8) == 2

    @pytest.mark.parametrize("value", ["-1", "two"])
    def test_bad_thread_count(self, monkeypatch, value):
        monkeypatch.setenv(THREADS_ENV, value)
        with pytest.raises(ConfigurationError):
            get_thread_count()


@pytest.mark.parametrize(
    "error,parents",
    [
        (DimensionError, (RopeKitError, ValueError)),
        (LengthError, (DimensionError,)),
        (ConfigurationError, (RopeKitError, ValueError)),
        (NumericError, (RopeKitError, ArithmeticError)),
        (CheckpointError, (DataError, RopeKitError)),
        (ComparisonError, (RopeKitError,)),
    ],
)
def test_error_hierarchy(error, parents):
    assert all(issubclass(error, parent) for parent in parents)


def test_event_types_are_distinct():
    names = [EventType.EVENT_LOG, EventType.EVENT_TRAIN_STEP, EventType.EVENT_TRAIN_FINISHED, EventType.EVENT_VERIFY_SUITE]
    assert len(set(names)) == len(names)
