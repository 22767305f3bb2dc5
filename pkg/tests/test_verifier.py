"""Verification suites, the parallel verifier engine and the rotation benchmark."""

import pytest

from apps.verifier import VerifierApp
from apps.verifier import bench
from apps.verifier.bench import run_bench
from apps.verifier.engine import run_suite
from apps.verifier.suites import SUITES
from event.engine import EventEngine
from event.event import EventType
from kit.engine import MainEngine
from kit.exception import ConfigurationError
from numerics import Rng
from rotary.encoder import dense_rotation_matrix


DIMS = [2, 4, 8]


@pytest.fixture
def main_engine():
    engine = MainEngine(EventEngine())
    yield engine
    engine.close()


@pytest.fixture
def verifier(main_engine):
    return main_engine.add_app(VerifierApp)


@pytest.mark.parametrize("name", list(SUITES))
def test_suite_passes(name):
    result = run_suite(name, SUITES[name], seed=42, index=0, trials=10, dims=DIMS)
    assert result.name == name
    assert result.passed, result.detail
    assert result.max_error <= result.tolerance


def test_results_in_registry_order(verifier):
    results = verifier.run_verification(seed=1, trials=5, dims=DIMS)
    assert [r.name for r in results] == list(SUITES)
    assert all(r.passed for r in results)


def test_same_seed_same_errors(verifier):
    names = ["shift_invariance", "abel", "derivation_2d"]
    first = [r.max_error for r in verifier.run_verification(seed=3, trials=20, dims=DIMS, names=names)]
    second = [r.max_error for r in verifier.run_verification(seed=3, trials=20, dims=DIMS, names=names)]
    assert first == second


def test_subset_matches_full_run(verifier):
    full = {r.name: r.max_error for r in verifier.run_verification(seed=5, trials=4, dims=DIMS)}
    subset = verifier.run_verification(seed=5, trials=4, dims=DIMS, names=["orthogonality"])
    assert subset[0].max_error == full["orthogonality"]


def test_failing_suite_is_reported(verifier, monkeypatch):
    def broken(rng, trials, dims):
        raise RuntimeError("injected")

    monkeypatch.setitem(SUITES, "decay", broken)
    results = verifier.run_verification(seed=42, trials=3, dims=DIMS, names=["decay", "orthogonality"])

    assert not results[0].passed
    assert "injected" in results[0].detail
    assert results[1].passed


def test_suite_events(main_engine, verifier):
    seen = []
    main_engine.event_engine.register(EventType.EVENT_VERIFY_SUITE, lambda event: seen.append(event.data.name))
    verifier.run_verification(seed=42, trials=3, dims=DIMS, names=["abel", "decay"])
    main_engine.event_engine.stop()
    assert seen == ["abel", "decay"]


@pytest.mark.parametrize("dims", [[3], [0], [4, 7]])
def test_bad_dimensions(verifier, dims):
    with pytest.raises(ConfigurationError):
        verifier.run_verification(seed=42, trials=3, dims=dims)


def test_bad_trials(verifier):
    with pytest.raises(ConfigurationError):
        verifier.run_verification(seed=42, trials=0, dims=DIMS)


def test_unknown_suite(verifier):
    with pytest.raises(ConfigurationError):
        verifier.run_verification(seed=42, trials=3, dims=DIMS, names=["nonexistent"])


def test_result_frame(verifier):
    verifier.run_verification(seed=42, trials=3, dims=DIMS, names=["orthogonality", "decay"])
    df = verifier.get_result_df()
    assert list(df["suite"]) == ["orthogonality", "decay"]
    assert df["passed"].all()


class TestBench:

    def test_agreement(self):
        result = run_bench(16, 32, 2, Rng(0))
        assert result.max_abs_diff < 1e-12
        assert result.dense_median > 0
        assert result.sparse_median > 0
        assert result.speedup > 0

    def test_dense_builds_matrix_per_row(self, monkeypatch):
        shapes = []

        def tracked(schedule, m):
            matrix = dense_rotation_matrix(schedule, m)
            shapes.append(matrix.shape)
            return matrix

        monkeypatch.setattr(bench, "dense_rotation_matrix", tracked)
        result = run_bench(8, 12, 3, Rng(1))
        assert result.max_abs_diff < 1e-12
        assert len(shapes) == 12 * (1 + 3)
        assert set(shapes) == {(8, 8)}

    @pytest.mark.parametrize("seq,reps", [(8, 0), (0, 2)])
    def test_bad_arguments(self, seq, reps):
        with pytest.raises(ConfigurationError):
            run_bench(8, seq, reps, Rng(0))

    def test_odd_dimension(self):
        with pytest.raises(ConfigurationError):
            run_bench(7, 8, 1, Rng(0))

    def test_through_engine(self, verifier):
        result = verifier.run_bench(8, 16, 1, seed=3)
        assert result.dim == 8
        assert result.seq == 16
