import pytest

from cyclic_engine.algebra_model import (
    build_algebra,
    kaehler_differentials,
    matrix_algebra,
    nonunital_nilpotent,
    product_algebra,
    truncated_polynomial,
    unitization,
    validate_algebra,
)
from cyclic_engine.validation import CyclicEngineValidationError


def test_builtin_algebras_validate(field, dual, split, m2, m2_dual):
    for A in (field, dual, split, m2, m2_dual):
        report = validate_algebra(A)
        assert report.ok, report.errors


def test_dual_and_split_products(dual, split):
    assert dual.multiply({1: 1}, {1: 1}) == {}
    assert split.multiply({1: 1}, {1: 1}) == {0: 1}
    assert dual.is_commutative and split.is_commutative
    assert dual.nilpotent_basis == (1,)


def test_matrix_algebra_layout(m2, m2_dual):
    assert m2.dim == 4
    assert m2.labels == ("E11", "E12", "E21", "E22")
    assert m2.unit == {0: 1, 3: 1}
    assert not m2.is_commutative
    # E12 E21 = E11, E21 E12 = E22
    assert m2.product(1, 2) == {0: 1}
    assert m2.product(2, 1) == {3: 1}
    assert m2.product(1, 1) == {}

    assert m2_dual.dim == 8
    assert m2_dual.decode_matrix_index(5) == (1, 0, 1)
    assert m2_dual.labels[5] == "E21*x"


def test_matrix_algebra_rejects_bad_size(field):
    with pytest.raises(CyclicEngineValidationError, match="at least 1"):
        matrix_algebra(field, 0)
    with pytest.raises(CyclicEngineValidationError, match="not built as a matrix algebra"):
        field.decode_matrix_index(0)


def test_associativity_failure_names_the_triple():
    broken = build_algebra(["a", "b"], {(0, 0): {1: 1}, (1, 0): {0: 1}}, name="broken")
    report = validate_algebra(broken)
    assert not report.ok
    assert "(a, a, a)" in report.first


def test_bad_unit_is_reported():
    A = build_algebra(["1", "x"], {(0, 0): {0: 1}, (0, 1): {1: 1}, (1, 0): {1: 1}}, unit={1: 1})
    assert "not a two-sided unit" in validate_algebra(A).first


def test_truncated_polynomial_requires_monic_modulus():
    with pytest.raises(CyclicEngineValidationError, match="monic"):
        truncated_polynomial([1, 2])
    cubic = truncated_polynomial([0, 0, 0, 1])
    assert cubic.dim == 3
    assert cubic.multiply({1: 1}, {2: 1}) == {}
    assert cubic.multiply({1: 1}, {1: 1}) == {2: 1}


def test_unitization_and_products(field):
    nil = nonunital_nilpotent()
    assert not nil.is_unital
    unital = unitization(nil)
    assert unital.unit == {1: 1}
    assert validate_algebra(unital).ok

    pair = product_algebra(field, field)
    assert pair.dim == 2
    assert pair.unit == {0: 1, 1: 1}
    assert pair.multiply({0: 1}, {1: 1}) == {}
    assert validate_algebra(pair).ok


def test_kaehler_dimensions(field, dual, split):
    assert kaehler_differentials(dual, 0).dim == 2
    assert kaehler_differentials(dual, 1).dim == 1
    assert kaehler_differentials(dual, 2).dim == 0
    assert kaehler_differentials(field, 1).dim == 0
    assert kaehler_differentials(split, 1).dim == 0


def test_kaehler_relations_on_dual_numbers(dual):
    omega = kaehler_differentials(dual, 1)
    dx = omega.element({0: 1}, [1])
    assert not omega.is_zero(dx)
    assert omega.describe(dx) == "1*1 dx"
    # x dx = d(x^2) / 2 = 0
    assert omega.is_zero(omega.element({1: 1}, [1]))
    assert omega.is_zero(omega.element({0: 1}, [0]))


def test_kaehler_needs_commutative_unital_algebra(m2):
    with pytest.raises(CyclicEngineValidationError, match="commutative"):
        kaehler_differentials(m2, 1)
    with pytest.raises(CyclicEngineValidationError, match="unital"):
        kaehler_differentials(nonunital_nilpotent(), 1)
