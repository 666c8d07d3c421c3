"""Seeded property suite run by the `selftest` subcommand.

Every property reports how many instances it checked and how many failed, so a
report is a tally rather than a pass/fail bit.
"""

import logging
import random
from typing import Callable

from pydantic import BaseModel

from cyclic_engine.algebra_model import (
    dual_numbers,
    ground_field,
    matrix_algebra,
    split_numbers,
)
from cyclic_engine.chain_complex import cone_quasi_iso_test, validate_chain_map
from cyclic_engine.chern import (
    chain_algebra,
    chern_even,
    chern_odd,
    connection_fixture,
    hkr_map,
    homotopy_check,
    hkr_trace_comparison,
    jlo_chain_map_check,
    linear_path,
    random_conjugate_pair,
    random_unipotent,
)
from cyclic_engine.cyclic_homology import (
    apply_B,
    apply_b,
    cyclic_homology,
    generalized_trace,
    hochschild_homology,
    inclusion_map,
    periodic_cyclic_homology,
    random_chain,
    trace_chain_map,
)
from cyclic_engine.dixmier_douady import (
    class_compare,
    clock_shift_triangle,
    dd_cocycle,
    epsilon_from_lifts,
    epsilon_is_coboundary,
    heisenberg_torus_cocycle,
    random_coboundary_shift,
    random_relift,
    rp2_six_vertex,
    suspension,
    torsion_epsilon,
)
from cyclic_engine.oracles import dense_hochschild_dims
from cyclic_engine.twisted_cdga import (
    cup_with_twist_check,
    dual_numbers_de_rham,
    gauge_transform,
    random_element,
    s2xs3_model,
    s3_model,
    t3_model,
    twisted_cohomology,
    u_filtration_spectral_sequence,
)

logger = logging.getLogger(__name__)


class PropertyResult(BaseModel):
    name: str
    checked: int
    failures: int


_PROPERTIES: list[tuple[str, Callable[[random.Random, int], tuple[int, int]]]] = []


def _property(name: str):
    def register(fn: Callable[[random.Random, int], tuple[int, int]]):
        _PROPERTIES.append((name, fn))
        return fn

    return register


@_property("b^2 = 0, B^2 = 0, bB + Bb = 0")
def _operator_identities(rng: random.Random, samples: int) -> tuple[int, int]:
    algebras = [
        ground_field(),
        dual_numbers(),
        split_numbers(),
        matrix_algebra(ground_field(), 2),
        matrix_algebra(dual_numbers(), 2),
    ]
    checked = failures = 0
    for A in algebras:
        for _ in range(samples):
            x = random_chain(A, rng.randint(0, 6), rng)
            ok = apply_b(apply_b(x)).is_zero()
            ok &= apply_B(apply_B(x)).is_zero()
            ok &= (apply_b(apply_B(x)) + apply_B(apply_b(x))).is_zero()
            checked += 1
            failures += not ok
    return checked, failures


@_property("HH(M_2(C)) is C in degree 0 only")
def _matrix_hochschild(rng: random.Random, samples: int) -> tuple[int, int]:
    dims = hochschild_homology(matrix_algebra(ground_field(), 2), 4).certified_dims()
    return len(dims), sum(v != (1 if k == 0 else 0) for k, v in dims.items())


@_property("HC(C) and HP(C)")
def _ground_field_cyclic(rng: random.Random, samples: int) -> tuple[int, int]:
    dims = cyclic_homology(ground_field(), 6).certified_dims()
    failures = sum(v != (1 if k % 2 == 0 else 0) for k, v in dims.items())
    hp = periodic_cyclic_homology(ground_field(), 2)
    failures += not (hp.stabilized and hp.even == 1 and hp.odd == 0)
    return len(dims) + 1, failures


@_property("trace after inclusion is the identity")
def _trace_inclusion(rng: random.Random, samples: int) -> tuple[int, int]:
    checked = failures = 0
    for A in (ground_field(), dual_numbers()):
        for _ in range(samples):
            x = random_chain(A, rng.randint(0, 4), rng)
            checked += 1
            failures += generalized_trace(inclusion_map(x, 2)) != x
    return checked, failures


@_property("generalized trace is a quasi-isomorphism")
def _trace_quasi_iso(rng: random.Random, samples: int) -> tuple[int, int]:
    f = trace_chain_map(matrix_algebra(ground_field(), 2), 3)
    return 1, int(not validate_chain_map(f).ok or not cone_quasi_iso_test(f).quasi_iso)


@_property("dual numbers HH against the dense oracle")
def _dense_oracle(rng: random.Random, samples: int) -> tuple[int, int]:
    sparse = hochschild_homology(dual_numbers(), 4).certified_dims()
    dense = dense_hochschild_dims(dual_numbers(), 4)
    return len(dense), sum(sparse.get(k) != v for k, v in dense.items())


@_property("HKR vanishes on boundaries")
def _hkr_boundaries(rng: random.Random, samples: int) -> tuple[int, int]:
    failures = 0
    for _ in range(samples):
        x = random_chain(dual_numbers(), rng.randint(1, 3), rng)
        _, image = hkr_map(apply_b(x))
        failures += bool(image)
    return samples, failures


@_property("twisted cohomology of S^3 and S^2 x S^3 vanishes")
def _twisted_vanishing(rng: random.Random, samples: int) -> tuple[int, int]:
    cases = [(s3_model(), "x3", 1), (s2xs3_model(), "b3", 1), (s2xs3_model(), "b3", 2)]
    checked = failures = 0
    for model, label, k in cases:
        dims = twisted_cohomology(model, model.element({label: k}), 6).certified_dims()
        checked += len(dims)
        failures += sum(bool(v) for v in dims.values())
    return checked, failures


@_property("gauge transform is a quasi-isomorphism")
def _gauge_invariance(rng: random.Random, samples: int) -> tuple[int, int]:
    model = t3_model()
    c = model.element({"e1e2e3": 1})
    failures = 0
    for _ in range(samples):
        f = gauge_transform(model, c, random_element(model, 2, rng), 6)
        failures += not validate_chain_map(f).ok or not cone_quasi_iso_test(f).quasi_iso
    return samples, failures


@_property("third differential is cup product with the twist")
def _spectral_sequence(rng: random.Random, samples: int) -> tuple[int, int]:
    model = s2xs3_model()
    c = model.element({"b3": 1})
    ss = u_filtration_spectral_sequence(model, c, 6)
    cup = cup_with_twist_check(ss)
    twisted = twisted_cohomology(model, c, 6).certified_dims()
    limit = ss.e_infinity_totals()
    mismatched = sum(limit.get(n) != v for n, v in twisted.items() if ss.certified_degree(n))
    return cup.checked + 1, len(cup.mismatches) + int(mismatched > 0)


@_property("Chern characters are (b + uB)-closed")
def _chern_closedness(rng: random.Random, samples: int) -> tuple[int, int]:
    A = dual_numbers()
    failures = 0
    for _ in range(samples):
        failures += not chern_even(random_conjugate_pair(A, 2, rng), 4).is_closed()
        failures += not chern_odd(random_unipotent(A, 2, rng), 5).is_closed()
    return 2 * samples, failures


@_property("JLO character is a chain map")
def _jlo(rng: random.Random, samples: int) -> tuple[int, int]:
    datum = connection_fixture(rng)
    A = chain_algebra(datum)
    chains = [random_chain(A, rng.randint(0, 3), rng) for _ in range(samples)]
    check = jlo_chain_map_check(datum, chains)

    model = dual_numbers_de_rham()
    MA = matrix_algebra(dual_numbers(), 2)
    reduction = hkr_trace_comparison(model, 2, [random_chain(MA, rng.randint(0, 2), rng) for _ in range(samples)])
    return check.checked + reduction.checked, check.failures + reduction.failures


@_property("homotopy formula along a path of connections")
def _homotopy(rng: random.Random, samples: int) -> tuple[int, int]:
    datum = connection_fixture(rng)
    A = chain_algebra(datum)
    chains = [random_chain(A, rng.randint(0, 2), rng) for _ in range(samples)]
    check = homotopy_check(linear_path(datum, rng), chains)
    return check.checked, check.failures


@_property("Dixmier-Douady class")
def _dixmier_douady(rng: random.Random, samples: int) -> tuple[int, int]:
    checked = failures = 0

    triangle = clock_shift_triangle(3)
    checked += 1
    failures += epsilon_from_lifts(triangle) != {(0, 1, 2): 1}

    heisenberg = heisenberg_torus_cocycle(3)
    checked += 1
    failures += epsilon_is_coboundary(heisenberg.nerve, epsilon_from_lifts(heisenberg), 3)

    nerve = suspension(rp2_six_vertex())
    epsilon = torsion_epsilon(nerve, 2)
    n = dd_cocycle(nerve, epsilon, 2)
    checked += 1
    failures += class_compare(n, {}, nerve).equal
    for _ in range(samples):
        shifted = dd_cocycle(nerve, random_coboundary_shift(nerve, epsilon, 2, rng), 2)
        relifted = dd_cocycle(heisenberg.nerve, epsilon_from_lifts(heisenberg, random_relift(rng, 3)), 3)
        base = dd_cocycle(heisenberg.nerve, epsilon_from_lifts(heisenberg), 3)
        checked += 2
        failures += not class_compare(shifted, n, nerve).equal
        failures += not class_compare(relifted, base, heisenberg.nerve).equal
    return checked, failures


def run_selftest(seed: int, samples: int = 5) -> list[PropertyResult]:
    """Runs every property with its own generator seeded from `seed`."""
    results = []
    for position, (name, check) in enumerate(_PROPERTIES):
        rng = random.Random(f"{seed}:{position}")
        checked, failures = check(rng, samples)
        logger.info("selftest %s: %d checked, %d failed", name, checked, failures)
        results.append(PropertyResult(name=name, checked=checked, failures=failures))
    return results
