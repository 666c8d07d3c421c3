from fractions import Fraction

import pytest

from cyclic_engine.chain_complex import cone_quasi_iso_test, validate_chain_map
from cyclic_engine.twisted_cdga import (
    CylinderModel,
    acyclic_pair,
    build_cdga,
    cup_with_twist_check,
    degree_zero_algebra,
    dual_numbers_de_rham,
    exponential_series,
    gauge_transform,
    tensor_product,
    twisted_cohomology,
    twisted_complex,
    u_filtration_spectral_sequence,
    untwisted_cohomology,
    validate_cdga,
    validate_twist,
)
from cyclic_engine.options import engine_options, resolve_engine_options
from cyclic_engine.validation import CyclicEngineValidationError, ResourceCapError


def test_builtin_models_validate(s3, s2xs3, t3):
    for model in (s3, s2xs3, t3, acyclic_pair(), dual_numbers_de_rham()):
        report = validate_cdga(model)
        assert report.ok, report.errors


def test_exterior_model_layout_and_signs(t3):
    assert t3.labels == ("1", "e1", "e2", "e3", "e1e2", "e1e3", "e2e3", "e1e2e3")
    e1, e2 = t3.element({"e1": 1}), t3.element({"e2": 1})
    assert t3.multiply(e1, e2) == t3.element({"e1e2": 1})
    assert t3.multiply(e2, e1) == t3.element({"e1e2": -1})
    assert t3.multiply(e1, e1) == {}


def test_unknown_label_and_mixed_degree(t3):
    with pytest.raises(CyclicEngineValidationError, match="Unknown basis labels"):
        t3.element({"e4": 1})
    with pytest.raises(CyclicEngineValidationError, match="mixes form degrees"):
        t3.element_degree(t3.element({"1": 1, "e1": 1}))


def test_bad_tables_are_rejected():
    with pytest.raises(CyclicEngineValidationError, match="wrong degree"):
        build_cdga(["1", "a"], [0, 2], {(0, 0): {0: 1}, (0, 1): {1: 1}, (1, 0): {1: 1}, (1, 1): {1: 1}})
    with pytest.raises(CyclicEngineValidationError, match="d\\^2 is not zero"):
        build_cdga(
            ["1", "a", "b", "c"],
            [0, 1, 2, 3],
            {(0, i): {i: 1} for i in range(4)} | {(i, 0): {i: 1} for i in range(1, 4)},
            {1: {2: 1}, 2: {3: 1}},
        )


def test_untwisted_cohomology(s3, s2xs3, t3):
    assert untwisted_cohomology(s3) == {0: 1, 1: 0, 2: 0, 3: 1}
    assert untwisted_cohomology(t3) == {0: 1, 1: 3, 2: 3, 3: 1}
    assert untwisted_cohomology(s2xs3) == {0: 1, 1: 0, 2: 1, 3: 1, 4: 0, 5: 1}
    assert untwisted_cohomology(acyclic_pair()) == {0: 1, 1: 0, 2: 0, 3: 0}


def test_twisted_cohomology_of_spheres_vanishes(s3, s2xs3):
    for model, label in ((s3, "x3"), (s2xs3, "b3")):
        result = twisted_cohomology(model, model.element({label: 1}), 6)
        certified = result.certified_dims()
        assert set(certified) == {1, 2, 3, 4, 5}
        assert all(v == 0 for v in certified.values())
        assert result.stabilized
        assert not result.certified[0] and not result.certified[6]


def test_zero_twist_recovers_parity_cohomology(s3):
    certified = twisted_cohomology(s3, {}, 6).certified_dims()
    assert certified == {n: 1 for n in range(1, 6)}


def test_torus_with_volume_twist(t3):
    certified = twisted_cohomology(t3, t3.element({"e1e2e3": 1}), 6).certified_dims()
    assert certified == {n: 3 for n in range(1, 6)}


def test_twist_and_window_are_checked(s3):
    pair = acyclic_pair()
    with pytest.raises(CyclicEngineValidationError, match="not a 3-form"):
        validate_twist(pair, pair.element({"y": 1}))
    with pytest.raises(CyclicEngineValidationError, match="at least 2"):
        twisted_complex(s3, s3.element({"x3": 1}), 1)


def test_gauge_transform_moves_twist_by_exact_form(s3):
    model = tensor_product(s3, acyclic_pair())
    assert validate_cdga(model).ok
    c = model.element({"x3": 1})
    beta = model.element({"y": 1})
    assert exponential_series(model, beta) == [model.unit_element, beta]

    f = gauge_transform(model, c, beta, 6)
    assert f.target.name.endswith(model.describe(model.element({"z": 1, "x3": 1})))
    assert validate_chain_map(f).ok
    assert cone_quasi_iso_test(f).quasi_iso


def test_gauge_element_must_be_even(t3):
    with pytest.raises(CyclicEngineValidationError, match="even degree"):
        exponential_series(t3, t3.element({"e1": 1}))


def test_third_differential_is_cup_with_twist(s2xs3):
    c = s2xs3.element({"b3": 1})
    ss = u_filtration_spectral_sequence(s2xs3, c, 6)
    assert ss.page_dims(2)[(2, 2)] == 1
    assert ss.page_dims(4) == {}

    cup = cup_with_twist_check(ss)
    assert cup.agrees
    assert cup.checked > 0

    twisted = twisted_cohomology(s2xs3, c, 6).certified_dims()
    limit = ss.e_infinity_totals()
    assert {n: limit[n] for n in twisted} == twisted


def test_degree_zero_algebra_of_dual_forms():
    A = degree_zero_algebra(dual_numbers_de_rham())
    assert A.labels == ("1", "x")
    assert A.multiply({1: 1}, {1: 1}) == {}
    assert A.unit == {0: 1}


def test_cylinder_homotopy_formula(s3):
    cylinder = CylinderModel(s3)
    t = cylinder.t_power(1)
    assert cylinder.differential(t) == {(0, 0, 1): 1}
    assert cylinder.restrict(cylinder.t_power(2), Fraction(1, 2)) == {0: Fraction(1, 4)}

    # restrict_1 - restrict_0 = d(integral) + integral(d) on t x3
    x = cylinder.t_power(1, s3.element({"x3": 1}))
    difference = cylinder.restrict(x, 1) - cylinder.restrict(x, 0)
    homotopy = s3.differential(cylinder.fiber_integral(x)) + cylinder.fiber_integral(cylinder.differential(x))
    assert difference == homotopy == s3.element({"x3": 1})


def test_page_cap_comes_from_the_environment(monkeypatch, s2xs3):
    c = s2xs3.element({"b3": 1})
    monkeypatch.setenv("CYCLIC_ENGINE_MAX_PAGES", "3")
    with pytest.raises(ResourceCapError, match="page cap of 3"):
        u_filtration_spectral_sequence(s2xs3, c, 6, pages=5)

    with engine_options(resolve_engine_options(max_pages=5)):
        assert len(u_filtration_spectral_sequence(s2xs3, c, 6, pages=5).pages) >= 6
    assert len(u_filtration_spectral_sequence(s2xs3, c, 6, pages=5, max_pages=8).pages) >= 6


def test_series_cap_comes_from_engine_options(s3):
    model = tensor_product(s3, acyclic_pair())
    beta = model.element({"y": 1})
    with engine_options(resolve_engine_options(u_window_cap=1)):
        with pytest.raises(ResourceCapError, match="below u\\^1"):
            exponential_series(model, beta)
        with pytest.raises(ResourceCapError, match="below u\\^1"):
            gauge_transform(model, model.element({"x3": 1}), beta, 6)
    assert len(exponential_series(model, beta, cap=2)) == 2
