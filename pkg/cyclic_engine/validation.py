from typing import Any, Callable


class CyclicEngineValidationError(Exception):
    """Base class for all cyclic_engine validation errors."""

    def __init__(self, message: str, error_msgs: list[str] = []):
        if not error_msgs:
            error_msgs = [message]

        self.error_msgs = error_msgs
        super().__init__(message)


class ResourceCapError(CyclicEngineValidationError):
    """Raised when a computation would exceed a configured resource cap."""


class _BaseValidator:
    """Collection of validation utilities shared by every checked domain object.

    Subclasses add methods named `_validate_<something>(self, subject) -> list[str]`.
    Each returns human readable error messages (empty when the check passes).
    Validators run in name order so reports are reproducible.
    """

    validation_fn_prefix = "_validate_"

    @staticmethod
    def get_subject_name() -> str:
        """Must be implemented in subclass before use. Names the kind of object being validated in error messages."""
        raise NotImplementedError

    def _collect_validators(self) -> list[Callable[[Any], list[str]]]:
        validators = [
            getattr(self, method_name)
            for method_name in sorted(dir(self))
            if method_name.startswith(self.validation_fn_prefix)
        ]

        if not validators:
            raise CyclicEngineValidationError(
                f"No validators found in {self.__class__.__name__}. Please add a validator method that begins with `{self.validation_fn_prefix}`."
            )
        return validators

    def collect_errors(self, subject: Any, stop_at_first: bool = False) -> list[str]:
        """Runs all validators and returns their messages instead of raising."""
        errors: list[str] = []

        for validator in self._collect_validators():
            validator_errors = validator(subject)

            # add context to errors and add them to the total errors list
            errors.extend(
                [
                    f"{e} |Reported via {self.__class__.__name__}.{validator.__name__}()"
                    for e in validator_errors
                ]
            )
            if stop_at_first and errors:
                break

        return errors

    def run_validators(self, subject: Any) -> None:
        """Runs all validators on the subject, raising once with every error found."""
        errors = self.collect_errors(subject)

        if errors:
            raise CyclicEngineValidationError(
                f"Validation Errors found in {self.get_subject_name()}: {errors}",
                error_msgs=errors,
            )


class ValidationReport:
    """Outcome of a non-raising validation: `ok` plus the collected messages."""

    __slots__ = ("errors",)

    def __init__(self, errors: list[str]):
        self.errors = errors

    @property
    def ok(self) -> bool:
        return not self.errors

    @property
    def first(self) -> str | None:
        return self.errors[0] if self.errors else None

    def raise_if_failed(self, subject_name: str) -> None:
        if self.errors:
            raise CyclicEngineValidationError(
                f"Validation Errors found in {subject_name}: {self.errors}",
                error_msgs=self.errors,
            )

    def __repr__(self) -> str:
        return f"ValidationReport(ok={self.ok}, errors={self.errors!r})"
