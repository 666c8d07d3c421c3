import os
import pathlib
import random

import pytest

from cyclic_engine.algebra_model import (
    dual_numbers,
    ground_field,
    matrix_algebra,
    split_numbers,
)
from cyclic_engine.twisted_cdga import s2xs3_model, s3_model, t3_model

FIXTURES_DIR = pathlib.Path(__file__).parent.parent / "cyclic_engine" / "fixtures"

M2_FIXTURE = FIXTURES_DIR / "m2.json"
DUAL_NUMBERS_FIXTURE = FIXTURES_DIR / "dual_numbers.json"
S3_FIXTURE = FIXTURES_DIR / "s3.json"
BOUNDARY_4SIMPLEX_COCYCLE_FIXTURE = FIXTURES_DIR / "boundary_4simplex_cocycle.json"

TEST_SEED = 20240917

SLOW_TESTS_ENABLED = os.getenv("CYCLIC_ENGINE_SLOW_TESTS") == "1"
slow = pytest.mark.skipif(not SLOW_TESTS_ENABLED, reason="set CYCLIC_ENGINE_SLOW_TESTS=1 to run")


@pytest.fixture
def rng() -> random.Random:
    return random.Random(TEST_SEED)


@pytest.fixture(scope="session")
def field():
    return ground_field()


@pytest.fixture(scope="session")
def dual():
    return dual_numbers()


@pytest.fixture(scope="session")
def split():
    return split_numbers()


@pytest.fixture(scope="session")
def m2():
    return matrix_algebra(ground_field(), 2)


@pytest.fixture(scope="session")
def m2_dual():
    return matrix_algebra(dual_numbers(), 2)


@pytest.fixture(scope="session")
def s3():
    return s3_model()


@pytest.fixture(scope="session")
def s2xs3():
    return s2xs3_model()


@pytest.fixture(scope="session")
def t3():
    return t3_model()
