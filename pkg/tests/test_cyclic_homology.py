import pytest

from cyclic_engine.algebra_model import (
    ground_field,
    matrix_algebra,
    nonunital_nilpotent,
    product_algebra,
    truncated_polynomial,
)
from cyclic_engine.chain_complex import cone_quasi_iso_test, validate_chain_map
from cyclic_engine.cyclic_homology import (
    TensorChain,
    apply_b,
    apply_B,
    bar_acyclicity_probe,
    cyclic_homology,
    generalized_trace,
    hochschild_homology,
    inclusion_map,
    periodic_cyclic_homology,
    product_additivity_check,
    random_chain,
    trace_chain_map,
)
from cyclic_engine.oracles import dense_hochschild_dims
from cyclic_engine.validation import CyclicEngineValidationError, ResourceCapError

from .conftest import slow


def test_operator_identities_on_random_chains(rng, dual, m2):
    for A in (dual, m2):
        for k in range(0, 4):
            x = random_chain(A, k, rng)
            assert apply_b(apply_b(x)).is_zero()
            assert apply_B(apply_B(x)).is_zero()
            assert (apply_b(apply_B(x)) + apply_B(apply_b(x))).is_zero()


def test_b_on_a_matrix_commutator(m2):
    # b(E12 (x) E21) = E12 E21 - E21 E12 = E11 - E22
    chain = TensorChain.basis(m2, (1, 2))
    assert apply_b(chain).coefficients == {(0,): 1, (3,): -1}
    assert apply_b(TensorChain.basis(m2, (0,))).is_zero()


def test_B_vanishes_on_unit_led_chains(dual):
    unit_led = TensorChain.basis(dual, (dual.dim, 1))
    assert apply_B(unit_led).is_zero()
    assert unit_led.describe() == "1*1(x)x"
    assert apply_B(TensorChain.basis(dual, (1,))).coefficients == {(dual.dim, 1): 1}


def test_tensor_legs_are_checked(dual):
    with pytest.raises(CyclicEngineValidationError, match="out of range"):
        TensorChain.basis(dual, (dual.dim,))
    with pytest.raises(CyclicEngineValidationError, match="Cannot combine"):
        TensorChain.basis(dual, (0,)) + TensorChain.basis(dual, (0, 1))


def test_hochschild_of_ground_field_and_matrices(field, m2):
    assert hochschild_homology(field, 5).certified_dims() == {0: 1, 1: 0, 2: 0, 3: 0, 4: 0}
    assert hochschild_homology(m2, 5).certified_dims() == {0: 1, 1: 0, 2: 0, 3: 0, 4: 0}


@slow
def test_hochschild_of_three_by_three_matrices():
    m3 = matrix_algebra(ground_field(), 3)
    assert hochschild_homology(m3, 5).certified_dims() == {0: 1, 1: 0, 2: 0, 3: 0, 4: 0}


def test_dual_numbers_agree_with_dense_oracle(dual):
    expected = {0: 2, 1: 1, 2: 1, 3: 1, 4: 1}
    assert hochschild_homology(dual, 5).certified_dims() == expected
    assert dense_hochschild_dims(dual, 5) == expected


def test_top_degree_is_not_certified(field):
    table = hochschild_homology(field, 3)
    assert not table.certified[3]
    assert 3 not in table.certified_dims()


def test_cyclic_homology_of_ground_field(field):
    dims = cyclic_homology(field, 9).certified_dims()
    assert dims == {n: 1 if n % 2 == 0 else 0 for n in range(9)}


def test_cyclic_homology_is_matrix_stable(field, m2):
    assert cyclic_homology(m2, 4).certified_dims() == cyclic_homology(field, 4).certified_dims()


def test_periodic_cyclic_homology_stabilizes(field, split):
    hp = periodic_cyclic_homology(field, 4)
    assert hp.stabilized
    assert set(hp.runs) == {4, 6}
    assert (hp.even, hp.odd) == (1, 0)

    hp = periodic_cyclic_homology(split, 2)
    assert (hp.even, hp.odd) == (2, 0)


def test_periodic_cyclic_homology_ignores_nilpotent_extensions(dual):
    # HC of the dual numbers grows with the degree, but S kills the nilpotent part
    for A in (dual, truncated_polynomial([0, 0, 0, 1])):
        hp = periodic_cyclic_homology(A, 4)
        assert hp.stabilized
        assert (hp.even, hp.odd) == (1, 0)
    assert cyclic_homology(dual, 5).certified_dims()[2] > 1

    hp = periodic_cyclic_homology(nonunital_nilpotent(), 4)
    assert hp.stabilized
    assert (hp.even, hp.odd) == (0, 0)


def test_zero_chains_combine_across_degrees(field):
    x = TensorChain.basis(field, (0,))
    assert apply_b(x).is_zero()
    total = apply_b(apply_B(x)) + apply_B(apply_b(x))
    assert total.is_zero()
    assert apply_B(x) - TensorChain.zero(field, 0) == apply_B(x)


def test_trace_inverts_inclusion(rng, dual):
    for k in range(4):
        x = random_chain(dual, k, rng)
        assert generalized_trace(inclusion_map(x, 2)) == x


def test_trace_on_basis_tensors(m2):
    # tr(E12 (x) E21) = 1 (x) 1, while E12 (x) E12 does not close up
    assert generalized_trace(TensorChain.basis(m2, (1, 2))).coefficients == {(0, 0): 1}
    assert generalized_trace(TensorChain.basis(m2, (1, 1))).is_zero()
    with pytest.raises(CyclicEngineValidationError, match="matrix algebra"):
        generalized_trace(TensorChain.basis(ground_field(), (0,)))


def test_trace_chain_map_is_a_quasi_isomorphism(m2):
    f = trace_chain_map(m2, 3)
    assert validate_chain_map(f).ok
    assert cone_quasi_iso_test(f).quasi_iso


def test_bar_complex_exactness(field):
    assert bar_acyclicity_probe(field, 4).all_exact
    assert not bar_acyclicity_probe(nonunital_nilpotent(), 4).all_exact


def test_hochschild_is_additive_on_products(field, dual):
    assert product_additivity_check(field, dual, product_algebra(field, dual), 3)


def test_tensor_cap_is_enforced(m2):
    with pytest.raises(ResourceCapError):
        hochschild_homology(m2, 4, cap=10)


@slow
def test_operator_identities_at_full_scale(rng, field, dual, split, m2, m2_dual):
    for A in (field, dual, split, m2, m2_dual):
        for _ in range(100):
            x = random_chain(A, rng.randint(0, 6), rng)
            assert apply_b(apply_b(x)).is_zero()
            assert apply_B(apply_B(x)).is_zero()
            assert (apply_b(apply_B(x)) + apply_B(apply_b(x))).is_zero()


@slow
def test_trace_over_matrices_of_dual_numbers_is_a_quasi_isomorphism(m2_dual):
    f = trace_chain_map(m2_dual, 3)
    assert validate_chain_map(f).ok
    assert cone_quasi_iso_test(f).quasi_iso
