from fractions import Fraction

import pytest

from cyclic_engine.chern import (
    IdempotentPair,
    InvertibleElement,
    MatrixOverAlgebra,
    chain_algebra,
    chern_even,
    chern_even_invariance,
    chern_odd,
    connection_fixture,
    constant_path,
    homotopy_check,
    hkr_map,
    hkr_trace_comparison,
    jlo_chain_map_check,
    jlo_character,
    linear_path,
    nilpotent_inverse,
    random_conjugate_pair,
    random_unipotent,
    simplex_integral,
    trace_pattern,
    validate_connection,
    validate_idempotent_pair,
    validate_invertible,
)
from cyclic_engine.cyclic_homology import TensorChain, random_chain
from cyclic_engine.twisted_cdga import dual_numbers_de_rham
from cyclic_engine.validation import CyclicEngineValidationError

from .conftest import slow


def _e11(A, n=2):
    return MatrixOverAlgebra.scalar(A, [[int(i == j == 0) for j in range(n)] for i in range(n)])


def test_nilpotent_inverse(dual):
    X = MatrixOverAlgebra.elementary(dual, 2, 0, 1, {1: 1}) + MatrixOverAlgebra.elementary(dual, 2, 1, 1, {1: 3})
    identity = MatrixOverAlgebra.identity(dual, 2)
    inverse = nilpotent_inverse(X)
    assert (identity + X) @ inverse == identity
    assert inverse @ (identity + X) == identity


def test_random_generators_are_valid(rng, dual):
    for _ in range(5):
        assert validate_invertible(random_unipotent(dual, 2, rng)).ok
        assert validate_idempotent_pair(random_conjugate_pair(dual, 2, rng)).ok


def test_invalid_inputs_are_reported(dual):
    E11 = _e11(dual)
    report = validate_idempotent_pair(IdempotentPair(E11.scale(2), E11))
    assert report.errors[0] == "P is not idempotent."

    identity = MatrixOverAlgebra.identity(dual, 2)
    report = validate_invertible(InvertibleElement(identity, identity.scale(2)))
    assert "stored inverse" in report.first
    with pytest.raises(CyclicEngineValidationError, match="invertible element"):
        chern_odd(InvertibleElement(identity, identity.scale(2)), 3)


def test_trace_pattern(dual):
    identity = MatrixOverAlgebra.identity(dual, 2)
    assert trace_pattern([identity]) == {(dual.dim,): 2}
    X = MatrixOverAlgebra.elementary(dual, 2, 0, 1, {1: 1})
    Y = MatrixOverAlgebra.elementary(dual, 2, 1, 0, {0: 1})
    # tr(X (x) Y) picks up the cycle 0 -> 1 -> 0 once
    assert trace_pattern([X, Y]) == {(1, 0): 1}
    assert trace_pattern([X, X]) == {}


def test_even_character_is_closed(rng, dual):
    for _ in range(3):
        pair = random_conjugate_pair(dual, 2, rng)
        ch = chern_even(pair, 4)
        assert ch.is_closed()
        assert ch.component(0).coefficients == trace_pattern([pair.P - pair.Q])


def test_trivial_pair_has_zero_character(dual):
    E11 = _e11(dual)
    ch = chern_even(IdempotentPair(E11, E11), 4)
    assert all(c.is_zero() for c in ch.components.values())


def test_odd_character_is_closed_and_records_first_leg(rng, dual):
    for _ in range(3):
        ch = chern_odd(random_unipotent(dual, 2, rng), 5)
        assert ch.is_closed()
        assert ch.substitutions[0] == "first leg U^-1 in place of U^-1 - 1"


def test_even_character_changes_by_a_boundary_under_conjugation(rng, dual):
    pair = random_conjugate_pair(dual, 2, rng)
    V = random_unipotent(dual, 2, rng)
    conjugated = IdempotentPair(V.U @ pair.P @ V.U_inv, pair.Q)
    witness = chern_even_invariance(pair, conjugated, 2)
    assert witness.exact
    assert witness.unknowns > 0


def test_hkr_map(dual, m2):
    chain = TensorChain.basis(dual, (dual.dim, 1))
    module, image = hkr_map(chain)
    assert module.describe(image) == "1*1 dx"
    _, boundary_image = hkr_map(TensorChain.basis(dual, (1, 1)))
    assert not boundary_image
    with pytest.raises(CyclicEngineValidationError, match="commutative"):
        hkr_map(TensorChain.basis(m2, (0, 1)))


def test_simplex_integral():
    assert simplex_integral([0]) == 1
    assert simplex_integral([0, 0]) == 1
    assert simplex_integral([1, 0]) == Fraction(1, 2)
    assert simplex_integral([0, 0, 0]) == Fraction(1, 2)
    assert simplex_integral([1, 1, 0]) == Fraction(1, 24)


def test_connection_fixture_is_valid(rng):
    datum = connection_fixture(rng)
    assert validate_connection(datum).ok
    assert datum.twist == datum.algebra.element({"z": -1})


def test_jlo_character_is_a_chain_map(rng):
    datum = connection_fixture(rng)
    A = chain_algebra(datum)
    chains = [random_chain(A, rng.randint(0, 3), rng) for _ in range(8)]
    check = jlo_chain_map_check(datum, chains)
    assert check.checked == 8
    assert check.holds, check.max_discrepancy


def test_jlo_rejects_chains_over_other_algebras(rng, dual):
    datum = connection_fixture(rng)
    with pytest.raises(CyclicEngineValidationError, match="is not M_2"):
        jlo_character(datum, TensorChain.basis(dual, (0,)))


def test_trivial_connection_reduces_to_hkr(rng, m2_dual):
    chains = [random_chain(m2_dual, rng.randint(0, 2), rng) for _ in range(6)]
    assert hkr_trace_comparison(dual_numbers_de_rham(), 2, chains).holds


def test_homotopy_formula_along_paths(rng):
    datum = connection_fixture(rng)
    A = chain_algebra(datum)
    chains = [random_chain(A, rng.randint(0, 2), rng) for _ in range(4)]
    check = homotopy_check(linear_path(datum, rng), chains)
    assert check.holds, check.max_discrepancy

    beta = datum.algebra.element({"y": 1})
    assert homotopy_check(constant_path(datum, beta), chains[:2]).holds


@slow
def test_characters_at_full_scale(rng, dual):
    for _ in range(20):
        assert chern_even(random_conjugate_pair(dual, 2, rng), 4).is_closed()
        assert chern_odd(random_unipotent(dual, 2, rng), 5).is_closed()

    datum = connection_fixture(rng)
    A = chain_algebra(datum)
    jlo = jlo_chain_map_check(datum, [random_chain(A, rng.randint(0, 3), rng) for _ in range(50)])
    assert jlo.checked == 50
    assert jlo.holds, jlo.max_discrepancy

    homotopy = homotopy_check(linear_path(datum, rng), [random_chain(A, rng.randint(0, 2), rng) for _ in range(20)])
    assert homotopy.checked == 20
    assert homotopy.holds, homotopy.max_discrepancy
