import pytest

from cyclic_engine.validation import (
    CyclicEngineValidationError,
    ResourceCapError,
    ValidationReport,
    _BaseValidator,
)


class BadValidatorMissingSubjectName(_BaseValidator):
    def _validate_anything(self, subject: int) -> list[str]:
        return [] if subject >= 0 else ["negative"]


class ValidatorWithoutChecks(_BaseValidator):
    @staticmethod
    def get_subject_name() -> str:
        return "nothing"


class PositiveEvenValidators(_BaseValidator):
    @staticmethod
    def get_subject_name() -> str:
        return "positive even number"

    def _validate_positive(self, subject: int) -> list[str]:
        return [] if subject > 0 else [f"{subject} is not positive."]

    def _validate_even(self, subject: int) -> list[str]:
        return [] if subject % 2 == 0 else [f"{subject} is odd."]


def test_error_always_carries_messages():
    err = CyclicEngineValidationError("boom")
    assert err.error_msgs == ["boom"]

    err = CyclicEngineValidationError("summary", error_msgs=["a", "b"])
    assert err.error_msgs == ["a", "b"]


def test_resource_cap_error_is_a_validation_error():
    assert issubclass(ResourceCapError, CyclicEngineValidationError)


def test_validators_pass_silently_on_good_subject():
    PositiveEvenValidators().run_validators(4)


def test_all_errors_are_raised_together_with_origin():
    with pytest.raises(CyclicEngineValidationError, match="positive even number") as exc_info:
        PositiveEvenValidators().run_validators(-3)

    msgs = exc_info.value.error_msgs
    assert len(msgs) == 2
    # validators run in name order
    assert msgs[0].startswith("-3 is odd.")
    assert "|Reported via PositiveEvenValidators._validate_even()" in msgs[0]
    assert msgs[1].startswith("-3 is not positive.")


def test_collect_errors_can_stop_at_first():
    errors = PositiveEvenValidators().collect_errors(-3, stop_at_first=True)
    assert len(errors) == 1


def test_validator_subclass_fails_when_subject_name_isnt_set():
    with pytest.raises(NotImplementedError):
        BadValidatorMissingSubjectName().run_validators(-1)


def test_validator_without_checks_is_rejected():
    with pytest.raises(CyclicEngineValidationError, match="No validators found"):
        ValidatorWithoutChecks().run_validators(1)


def test_validation_report():
    report = ValidationReport(PositiveEvenValidators().collect_errors(3))
    assert not report.ok
    assert report.first is not None and report.first.startswith("3 is odd.")
    with pytest.raises(CyclicEngineValidationError):
        report.raise_if_failed("number")

    assert ValidationReport([]).ok
    ValidationReport([]).raise_if_failed("number")
