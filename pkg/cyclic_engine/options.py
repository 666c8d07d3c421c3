import os
from contextlib import contextmanager
from contextvars import ContextVar
from typing import Iterator, TypedDict

from cyclic_engine.validation import CyclicEngineValidationError, ResourceCapError


class EngineOptions(TypedDict, total=False):
    tensor_cap: int
    max_pages: int
    u_window_cap: int
    random_terms: int
    seed: int


default_engine_options: EngineOptions = {
    #
    # max number of coordinates of a single tensor space (dim Ã · dim A^k) we agree to build
    "tensor_cap": 2_000_000,
    #
    # spectral sequences are computed through this page at most
    "max_pages": 12,
    #
    # largest power of u a character or gauge series may reach before we give up
    "u_window_cap": 64,
    #
    # number of basis tensors in a randomly generated chain
    "random_terms": 4,
    #
    # seed used by randomized property runs when none is given
    "seed": 20240917,
}
"""Default limits and knobs used by every computation in the engine.

    Override per call with `resolve_engine_options(tensor_cap=...)`, for a block with
    `engine_options(...)`, or through the
    environment (`CYCLIC_ENGINE_TENSOR_CAP`, `CYCLIC_ENGINE_MAX_PAGES`, `CYCLIC_ENGINE_SEED`).
    """

_ENV_OVERRIDES: dict[str, str] = {
    "tensor_cap": "CYCLIC_ENGINE_TENSOR_CAP",
    "max_pages": "CYCLIC_ENGINE_MAX_PAGES",
    "seed": "CYCLIC_ENGINE_SEED",
}


def resolve_engine_options(**overrides: int | None) -> EngineOptions:
    """Layers defaults < environment < explicit overrides and validates the result."""
    resolved: EngineOptions = dict(default_engine_options)  # type: ignore[assignment]

    for key, env_name in _ENV_OVERRIDES.items():
        raw = os.getenv(env_name)
        if raw is None or raw == "":
            continue
        try:
            resolved[key] = int(raw)  # type: ignore[literal-required]
        except ValueError:
            raise CyclicEngineValidationError(
                f"Environment variable `{env_name}` must be an integer, got `{raw}`."
            )

    for key, value in overrides.items():
        if key not in default_engine_options:
            raise CyclicEngineValidationError(f"Unknown engine option `{key}`.")
        if value is not None:
            resolved[key] = value  # type: ignore[literal-required]

    errors = [
        f"Engine option `{key}` must be positive, got {value}."
        for key, value in resolved.items()
        if key != "seed" and value <= 0  # type: ignore[operator]
    ]
    if errors:
        raise CyclicEngineValidationError(
            f"Invalid engine options: {errors}", error_msgs=errors
        )
    return resolved


_active_options: ContextVar[EngineOptions | None] = ContextVar("cyclic_engine_options", default=None)


@contextmanager
def engine_options(options: EngineOptions) -> Iterator[EngineOptions]:
    """Installs `options` as the limits read by every computation run inside the block."""
    token = _active_options.set(options)
    try:
        yield options
    finally:
        _active_options.reset(token)


def current_engine_options() -> EngineOptions:
    """Options installed by `engine_options`, otherwise defaults layered with the environment."""
    active = _active_options.get()
    return active if active is not None else resolve_engine_options()


def check_tensor_budget(coordinates: int, cap: int | None = None, what: str = "tensor space") -> None:
    """Refuses to build a space with more coordinates than the configured cap."""
    if cap is None:
        cap = current_engine_options()["tensor_cap"]
    if coordinates > cap:
        raise ResourceCapError(
            f"{what} has {coordinates} coordinates, above the cap of {cap}. Raise `--cap` to proceed."
        )
