import pytest

from cyclic_engine.dixmier_douady import (
    MonomialUnitary,
    Nerve,
    NerveValidators,
    ProjectiveCocycle,
    boundary_of_simplex,
    check_pu_cocycle,
    class_compare,
    class_coordinates,
    clock,
    clock_shift_triangle,
    coboundary_cocycle,
    coboundary_matrix,
    dd_cocycle,
    epsilon_from_lifts,
    epsilon_is_coboundary,
    heisenberg_torus_cocycle,
    random_coboundary_shift,
    random_relift,
    rp2_six_vertex,
    shift,
    suspension,
    torsion_bound_check,
    torsion_epsilon,
    torus_grid,
)
from cyclic_engine.validation import CyclicEngineValidationError

from .conftest import slow


def _f_vector(nerve: Nerve) -> list[int]:
    return [len(nerve.of_dim(q)) for q in range(nerve.dimension + 1)]


def test_nerve_builders():
    assert _f_vector(boundary_of_simplex(4)) == [5, 10, 10, 5]
    assert _f_vector(torus_grid(3)) == [9, 27, 18]
    assert _f_vector(rp2_six_vertex()) == [6, 15, 10]
    assert _f_vector(suspension(rp2_six_vertex())) == [8, 27, 40, 20]
    with pytest.raises(CyclicEngineValidationError, match="m >= 3"):
        torus_grid(2)


def test_nerve_validation():
    with pytest.raises(CyclicEngineValidationError, match="outside"):
        Nerve.from_maximal(3, [(0, 1, 3)])
    errors = NerveValidators().collect_errors(Nerve(3, frozenset({(0, 1, 2)})))
    assert errors[0].startswith("Face (1, 2) of simplex (0, 1, 2) is missing.")
    errors = NerveValidators().collect_errors(Nerve(2, frozenset({(0,), (1,), (1, 0)})))
    assert errors[0].startswith("Simplex (1, 0) is not strictly increasing.")


def test_coboundary_squares_to_zero():
    for nerve in (boundary_of_simplex(4), suspension(rp2_six_vertex())):
        for q in (0, 1, 2):
            square = coboundary_matrix(nerve, q + 1).matmul(coboundary_matrix(nerve, q))
            assert all(v == 0 for row in square.to_dense() for v in row)


def test_monomial_unitaries():
    C, S = clock(3), shift(3)
    assert C.power(3) == MonomialUnitary.identity(3, 3)
    assert S.power(-1) == S.inverse()
    assert (C @ S @ (S @ C).inverse()).scalar_exponent() == 1
    assert C.scalar_exponent() is None
    assert C.scaled(2).canonical() == C
    with pytest.raises(CyclicEngineValidationError, match="not a permutation"):
        MonomialUnitary(3, (0, 0, 1), (0, 0, 0))


def test_clock_shift_triangle_epsilon():
    g = clock_shift_triangle(3)
    assert check_pu_cocycle(g).ok
    assert epsilon_from_lifts(g) == {(0, 1, 2): 1}


def test_broken_projective_cocycles_are_reported():
    triangle = Nerve.from_maximal(3, [(0, 1, 2)])
    identity = MonomialUnitary.identity(3, 3)

    missing = ProjectiveCocycle(3, 3, triangle, {(0, 1): identity, (1, 2): identity})
    assert "has no transition unitary" in check_pu_cocycle(missing).first

    non_scalar = ProjectiveCocycle(3, 3, triangle, {(0, 1): clock(3), (1, 2): identity, (0, 2): identity})
    report = check_pu_cocycle(non_scalar)
    assert "non-scalar" in report.first
    with pytest.raises(CyclicEngineValidationError, match="non-scalar"):
        epsilon_from_lifts(non_scalar)


def test_heisenberg_torus_is_not_liftable(rng):
    g = heisenberg_torus_cocycle(3)
    assert check_pu_cocycle(g).ok
    epsilon = epsilon_from_lifts(g)
    assert not epsilon_is_coboundary(g.nerve, epsilon, 3)

    relifted = epsilon_from_lifts(g, random_relift(rng, 3))
    difference = {s: (relifted[s] - epsilon[s]) % 3 for s in g.nerve.of_dim(2)}
    assert epsilon_is_coboundary(g.nerve, difference, 3)


def test_coboundary_cocycle_is_liftable_with_zero_class():
    nerve = boundary_of_simplex(4)
    C, S = clock(2), shift(2)
    labels = {0: C, 1: S, 2: C @ S, 3: MonomialUnitary.identity(2, 2), 4: S @ C}
    g = coboundary_cocycle(nerve, labels)
    assert check_pu_cocycle(g).ok
    epsilon = epsilon_from_lifts(g)
    assert epsilon_is_coboundary(nerve, epsilon, 2)
    assert class_coordinates(nerve, dd_cocycle(nerve, epsilon, 2)).is_zero()


def test_dd_cocycle_rejects_non_cocycles():
    nerve = boundary_of_simplex(4)
    with pytest.raises(CyclicEngineValidationError, match="not a cocycle mod 2"):
        dd_cocycle(nerve, {(0, 1, 2): 1}, 2)


def test_fundamental_class_of_boundary_simplex():
    nerve = boundary_of_simplex(4)
    generator = {(0, 1, 2, 3): 1}
    assert class_compare(generator, {(0, 1, 2, 4): -1}, nerve).equal
    comparison = class_compare(generator, {(0, 1, 2, 4): 1}, nerve)
    assert not comparison.equal
    assert not comparison.first.is_zero()
    assert not torsion_bound_check(nerve, generator, 2)
    with pytest.raises(CyclicEngineValidationError, match="no torsion"):
        torsion_epsilon(nerve, 2)


def test_torsion_class_on_suspended_projective_plane(rng):
    nerve = suspension(rp2_six_vertex())
    epsilon = torsion_epsilon(nerve, 2)
    n = dd_cocycle(nerve, epsilon, 2)

    coordinates = class_coordinates(nerve, n)
    assert coordinates.torsion == ((1, 2),)
    assert coordinates.free == ()

    comparison = class_compare(n, {}, nerve)
    assert not comparison.equal
    assert 2 in comparison.invariant_factors
    assert torsion_bound_check(nerve, n, 2)

    for _ in range(3):
        shifted = dd_cocycle(nerve, random_coboundary_shift(nerve, epsilon, 2, rng), 2)
        assert class_compare(shifted, n, nerve).equal


def test_class_compare_validates_inputs():
    nerve = boundary_of_simplex(4)
    with pytest.raises(CyclicEngineValidationError, match="not a 3-simplex"):
        class_compare({(0, 1, 2): 1}, {}, nerve)


@slow
def test_class_is_independent_of_lifts_and_shifts(rng):
    g = heisenberg_torus_cocycle(3)
    base = dd_cocycle(g.nerve, epsilon_from_lifts(g), 3)
    for _ in range(10):
        relifted = dd_cocycle(g.nerve, epsilon_from_lifts(g, random_relift(rng, 3)), 3)
        assert class_compare(relifted, base, g.nerve).equal

    nerve = suspension(rp2_six_vertex())
    epsilon = torsion_epsilon(nerve, 2)
    n = dd_cocycle(nerve, epsilon, 2)
    for _ in range(10):
        shifted = dd_cocycle(nerve, random_coboundary_shift(nerve, epsilon, 2, rng), 2)
        assert class_compare(shifted, n, nerve).equal
