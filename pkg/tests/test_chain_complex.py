import pytest

from cyclic_engine.chain_complex import (
    ChainComplex,
    ChainMap,
    DoubleComplex,
    column_filtration,
    cone_quasi_iso_test,
    homology_dims,
    identity_map,
    mapping_cone,
    spectral_sequence_pages,
    stabilization_page,
    total_complex,
    validate_chain_map,
    validate_complex,
)
from cyclic_engine.exact_linalg import SparseRationalMatrix
from cyclic_engine.validation import CyclicEngineValidationError


def _circle() -> ChainComplex:
    # three vertices, edges 01, 12, 02
    d1 = SparseRationalMatrix.from_columns(3, [{0: -1, 1: 1}, {1: -1, 2: 1}, {0: -1, 2: 1}])
    return ChainComplex(dims={0: 3, 1: 3}, differentials={1: d1}, name="circle")


def _one() -> SparseRationalMatrix:
    return SparseRationalMatrix.identity(1)


def _square(horizontal: bool = True, vertical: bool = True, anticommuting: bool = False) -> DoubleComplex:
    keys = [(0, 0), (1, 0), (0, 1), (1, 1)]
    return DoubleComplex(
        dims={k: 1 for k in keys},
        horizontal={(1, q): _one() for q in (0, 1)} if horizontal else {},
        vertical={(p, 1): _one() for p in (0, 1)} if vertical else {},
        anticommuting=anticommuting,
    )


def test_circle_homology():
    table = homology_dims(_circle())
    assert table.dims == {0: 1, 1: 1}
    assert table.certified_dims() == {0: 1, 1: 1}


def test_open_window_edges_are_not_certified():
    C = ChainComplex(dims={0: 1, 1: 1, 2: 1}, open_below=True, open_above=True)
    table = homology_dims(C)
    assert table.certified_dims() == {1: 1}
    assert not C.is_certified(0)
    assert not C.is_genuine(3)


def test_nonzero_square_is_rejected():
    C = ChainComplex(dims={0: 1, 1: 1, 2: 1}, differentials={1: _one(), 2: _one()})
    report = validate_complex(C)
    assert not report.ok
    assert "d_1 d_2 is nonzero" in report.first
    with pytest.raises(CyclicEngineValidationError, match="d_1 d_2 is nonzero"):
        homology_dims(C)


def test_differential_shape_mismatch_is_reported():
    C = ChainComplex(dims={0: 2, 1: 1}, differentials={1: SparseRationalMatrix.identity(1)})
    assert "shape" in validate_complex(C).first


def test_identity_cone_is_acyclic():
    verdict = cone_quasi_iso_test(identity_map(_circle()))
    assert verdict.quasi_iso
    assert verdict.nonzero_degrees == ()


def test_zero_map_cone_carries_both_homologies():
    circle = _circle()
    zero = ChainMap(circle, circle, {})
    cone = mapping_cone(zero)
    assert cone.dims == {0: 3, 1: 6, 2: 3}

    verdict = cone_quasi_iso_test(zero)
    assert not verdict
    assert verdict.cone_homology.dims == {0: 1, 1: 2, 2: 1}
    assert verdict.nonzero_degrees == (0, 1, 2)


def test_non_chain_map_fails_validation():
    circle = _circle()
    f = ChainMap(circle, circle, {0: SparseRationalMatrix.identity(3)})
    report = validate_chain_map(f)
    assert not report.ok
    assert "degree 1" in report.first
    with pytest.raises(CyclicEngineValidationError, match="chain map"):
        cone_quasi_iso_test(f)


def test_total_complex_of_commuting_square():
    total = total_complex(_square())
    assert total.dims == {0: 1, 1: 2, 2: 1}
    assert homology_dims(total).dims == {0: 0, 1: 0, 2: 0}


def test_commuting_square_is_not_anticommuting():
    with pytest.raises(CyclicEngineValidationError, match="anticommute"):
        total_complex(_square(anticommuting=True))


def test_spectral_sequence_with_vertical_isomorphisms_dies_at_first_page():
    F = column_filtration(_square())
    pages = spectral_sequence_pages(F, 2)
    assert pages[0].total_dims() == {0: 1, 1: 2, 2: 1}
    assert all(v == 0 for v in pages[1].dims.values())
    assert stabilization_page(F) == 2


def test_spectral_sequence_with_horizontal_isomorphisms_dies_at_second_page():
    F = column_filtration(_square(vertical=False))
    pages = spectral_sequence_pages(F, 2)
    E1 = pages[1]
    assert E1.total_dims() == {0: 1, 1: 2, 2: 1}
    assert E1.dims[(1, 1)] == 1
    assert not E1.differentials[(1, 1)].is_zero()
    assert all(v == 0 for v in pages[2].dims.values())
    limit = homology_dims(F.complex).dims
    assert all(v == 0 for v in limit.values())
