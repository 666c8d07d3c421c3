import pytest

from cyclic_engine.cyclic_homology import hochschild_homology, random_chain
from cyclic_engine.options import (
    check_tensor_budget,
    current_engine_options,
    default_engine_options,
    engine_options,
    resolve_engine_options,
)
from cyclic_engine.validation import CyclicEngineValidationError, ResourceCapError


def test_defaults():
    options = resolve_engine_options()
    assert options["tensor_cap"] == 2_000_000
    assert options == default_engine_options


def test_explicit_overrides_beat_environment(monkeypatch):
    monkeypatch.setenv("CYCLIC_ENGINE_TENSOR_CAP", "500")
    monkeypatch.setenv("CYCLIC_ENGINE_SEED", "7")
    assert resolve_engine_options()["tensor_cap"] == 500
    assert resolve_engine_options()["seed"] == 7
    assert resolve_engine_options(tensor_cap=900)["tensor_cap"] == 900
    assert resolve_engine_options(tensor_cap=None)["tensor_cap"] == 500


def test_bad_environment_value(monkeypatch):
    monkeypatch.setenv("CYCLIC_ENGINE_MAX_PAGES", "many")
    with pytest.raises(CyclicEngineValidationError, match="CYCLIC_ENGINE_MAX_PAGES"):
        resolve_engine_options()


def test_unknown_and_non_positive_options():
    with pytest.raises(CyclicEngineValidationError, match="Unknown engine option"):
        resolve_engine_options(speed=3)
    with pytest.raises(CyclicEngineValidationError, match="must be positive"):
        resolve_engine_options(tensor_cap=0)


def test_tensor_budget():
    check_tensor_budget(10, cap=10)
    with pytest.raises(ResourceCapError, match="above the cap of 10"):
        check_tensor_budget(11, cap=10, what="CC_3")


def test_environment_reaches_budget_checks(monkeypatch):
    monkeypatch.setenv("CYCLIC_ENGINE_TENSOR_CAP", "10")
    monkeypatch.setenv("CYCLIC_ENGINE_MAX_PAGES", "3")
    assert current_engine_options()["max_pages"] == 3
    with pytest.raises(ResourceCapError, match="above the cap of 10"):
        check_tensor_budget(11)


def test_installed_options_win_inside_the_block(monkeypatch, rng, dual, m2):
    monkeypatch.setenv("CYCLIC_ENGINE_TENSOR_CAP", "10")
    with engine_options(resolve_engine_options(tensor_cap=1_000, random_terms=1)) as options:
        assert current_engine_options() is options
        check_tensor_budget(11)
        assert len(random_chain(dual, 2, rng).coefficients) == 1
    assert current_engine_options()["random_terms"] == default_engine_options["random_terms"]

    with engine_options(resolve_engine_options(tensor_cap=10)):
        with pytest.raises(ResourceCapError, match=r"CC_1\(M_2"):
            hochschild_homology(m2, 3)
    monkeypatch.delenv("CYCLIC_ENGINE_TENSOR_CAP")
    assert hochschild_homology(m2, 3).certified_dims()[0] == 1
