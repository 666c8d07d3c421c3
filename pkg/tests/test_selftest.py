from cyclic_engine.cli_io import RunConfig, run_command
from cyclic_engine.selftest import run_selftest

from .conftest import TEST_SEED, slow


def test_selftest_properties_hold():
    results = run_selftest(TEST_SEED, samples=2)
    names = [r.name for r in results]
    assert "homotopy formula along a path of connections" in names
    assert set(results[0].model_dump()) == {"name", "checked", "failures"}
    assert len(names) == len(set(names))
    for result in results:
        assert result.checked > 0, result.name
        assert result.failures == 0, result.name


@slow
def test_selftest_command_with_another_seed():
    report = run_command(RunConfig(command="selftest", seed=7, samples=5))
    assert report.properties
    assert report.failures == 0
