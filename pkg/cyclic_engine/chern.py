"""Chern characters of idempotents and invertibles, the HKR map and the JLO-type character.

Matrices over the unitization Ã store the adjoined unit under key `A.dim`. Character
chains are written straight into the reduced complex of A: the first leg keeps its
unit component and later legs drop it.
"""

import itertools
import logging
import random
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cache, cached_property
from math import factorial
from typing import Hashable, Mapping, Sequence

from cyclic_engine.algebra_model import FDAlgebra, KaehlerModule, kaehler_differentials, matrix_algebra
from cyclic_engine.cyclic_homology import (
    B_matrix,
    TensorChain,
    apply_B,
    apply_b,
    b_matrix,
    chain_vector,
    generalized_trace,
    tensor_space_dim,
)
from cyclic_engine.exact_linalg import SparseRationalMatrix, SparseRow, solve_linear
from cyclic_engine.options import current_engine_options
from cyclic_engine.twisted_cdga import (
    CDGAModel,
    CylinderModel,
    GradedAlgebra,
    acyclic_pair,
    degree_zero_algebra,
    random_element,
    t3_model,
    tensor_product,
)
from cyclic_engine.validation import (
    CyclicEngineValidationError,
    ResourceCapError,
    ValidationReport,
    _BaseValidator,
)

logger = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# matrices over the unitization


def _tilde_product(A: FDAlgebra, x: Mapping[int, Fraction], y: Mapping[int, Fraction]) -> SparseRow:
    unit = A.dim
    out = SparseRow()
    for i, a in x.items():
        for j, b in y.items():
            if i == unit:
                out.iadd_coef(a * b, {j: 1})
            elif j == unit:
                out.iadd_coef(a * b, {i: 1})
            else:
                out.iadd_coef(a * b, A.product(i, j))
    return out


@dataclass(frozen=True, eq=False)
class MatrixOverAlgebra:
    """n x n matrix with entries in Ã, stored sparsely by (row, column)."""

    algebra: FDAlgebra
    n: int
    entries: dict[tuple[int, int], SparseRow] = field(default_factory=dict)

    @classmethod
    def zero(cls, A: FDAlgebra, n: int) -> "MatrixOverAlgebra":
        return cls(A, n, {})

    @classmethod
    def scalar(cls, A: FDAlgebra, dense: Sequence[Sequence[int | Fraction]]) -> "MatrixOverAlgebra":
        """Matrix of multiples of the adjoined unit."""
        entries = {
            (i, j): SparseRow({A.dim: v})
            for i, row in enumerate(dense)
            for j, v in enumerate(row)
            if v
        }
        return cls(A, len(dense), entries)

    @classmethod
    def identity(cls, A: FDAlgebra, n: int) -> "MatrixOverAlgebra":
        return cls.scalar(A, [[int(i == j) for j in range(n)] for i in range(n)])

    @classmethod
    def elementary(cls, A: FDAlgebra, n: int, i: int, j: int, element: Mapping[int, int | Fraction]) -> "MatrixOverAlgebra":
        return cls(A, n, {(i, j): SparseRow(element)} if element else {})

    def entry(self, i: int, j: int) -> SparseRow:
        return self.entries.get((i, j)) or SparseRow()

    def _combine(self, other: "MatrixOverAlgebra", coef: int | Fraction) -> "MatrixOverAlgebra":
        if self.n != other.n or self.algebra is not other.algebra:
            raise CyclicEngineValidationError("Matrices over different algebras or sizes cannot be combined.")
        entries = {key: SparseRow(v) for key, v in self.entries.items()}
        for key, v in other.entries.items():
            entries.setdefault(key, SparseRow()).iadd_coef(coef, v)
        return MatrixOverAlgebra(self.algebra, self.n, {k: v for k, v in entries.items() if v})

    def __add__(self, other: "MatrixOverAlgebra") -> "MatrixOverAlgebra":
        return self._combine(other, 1)

    def __sub__(self, other: "MatrixOverAlgebra") -> "MatrixOverAlgebra":
        return self._combine(other, -1)

    def scale(self, coef: int | Fraction) -> "MatrixOverAlgebra":
        if coef == 0:
            return MatrixOverAlgebra.zero(self.algebra, self.n)
        return MatrixOverAlgebra(self.algebra, self.n, {k: v * coef for k, v in self.entries.items()})

    def __matmul__(self, other: "MatrixOverAlgebra") -> "MatrixOverAlgebra":
        if self.n != other.n:
            raise CyclicEngineValidationError("Matrix sizes do not match.")
        by_row: dict[int, list[tuple[int, SparseRow]]] = {}
        for (j, l), v in other.entries.items():
            by_row.setdefault(j, []).append((l, v))
        entries: dict[tuple[int, int], SparseRow] = {}
        for (i, j), v in self.entries.items():
            for l, w in by_row.get(j, []):
                entries.setdefault((i, l), SparseRow()).iadd_coef(1, _tilde_product(self.algebra, v, w))
        return MatrixOverAlgebra(self.algebra, self.n, {k: v for k, v in entries.items() if v})

    def minus_scalar(self, value: int | Fraction) -> "MatrixOverAlgebra":
        return self - MatrixOverAlgebra.identity(self.algebra, self.n).scale(value)

    def unit_part(self) -> list[list[Fraction]]:
        unit = self.algebra.dim
        return [[self.entry(i, j)[unit] for j in range(self.n)] for i in range(self.n)]

    def is_nonunital(self) -> bool:
        return all(self.algebra.dim not in v for v in self.entries.values())

    def is_zero(self) -> bool:
        return not self.entries

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, MatrixOverAlgebra):
            return NotImplemented
        return self.n == other.n and (self - other).is_zero()

    def describe(self) -> str:
        labels = list(self.algebra.labels) + ["1"]
        cells = []
        for (i, j), v in sorted(self.entries.items()):
            text = " + ".join(f"{c}*{labels[k]}" for k, c in sorted(v.items()))
            cells.append(f"[{i},{j}]: {text}")
        return "; ".join(cells) or "0"


def nilpotent_inverse(X: MatrixOverAlgebra) -> MatrixOverAlgebra:
    """(1 + X)^-1 as the terminating series sum (-X)^m."""
    result = MatrixOverAlgebra.identity(X.algebra, X.n)
    power = MatrixOverAlgebra.identity(X.algebra, X.n)
    cap = current_engine_options()["u_window_cap"]
    for m in range(1, cap + 1):
        power = power @ X.scale(-1)
        if power.is_zero():
            return result
        result = result + power
    raise ResourceCapError(f"Series for (1 + X)^-1 did not terminate within {cap} terms.")


@dataclass(frozen=True, eq=False)
class IdempotentPair:
    P: MatrixOverAlgebra
    Q: MatrixOverAlgebra


def validate_idempotent_pair(pair: IdempotentPair) -> ValidationReport:
    errors = []
    if pair.P.n != pair.Q.n or pair.P.algebra is not pair.Q.algebra:
        errors.append("P and Q must be matrices of the same size over the same algebra.")
        return ValidationReport(errors)
    if pair.P @ pair.P != pair.P:
        errors.append("P is not idempotent.")
    if pair.Q @ pair.Q != pair.Q:
        errors.append("Q is not idempotent.")
    if not (pair.P - pair.Q).is_nonunital():
        errors.append("P - Q has a component along the adjoined unit.")
    return ValidationReport(errors)


@dataclass(frozen=True, eq=False)
class InvertibleElement:
    U: MatrixOverAlgebra
    U_inv: MatrixOverAlgebra


def validate_invertible(u: InvertibleElement) -> ValidationReport:
    errors = []
    identity = MatrixOverAlgebra.identity(u.U.algebra, u.U.n)
    if u.U @ u.U_inv != identity or u.U_inv @ u.U != identity:
        errors.append("U times its stored inverse is not the identity.")
    if not u.U.minus_scalar(1).is_nonunital():
        errors.append("U - 1 has a component along the adjoined unit.")
    return ValidationReport(errors)


def _random_element(A: FDAlgebra, rng: random.Random, basis: Sequence[int] | None = None) -> SparseRow:
    basis = range(A.dim) if basis is None else basis
    return SparseRow((a, rng.randint(-2, 2)) for a in basis)


def _random_triangular(A: FDAlgebra, n: int, rng: random.Random, upper: bool) -> MatrixOverAlgebra:
    entries = {}
    for i, j in itertools.product(range(n), repeat=2):
        if (i < j) if upper else (i > j):
            element = _random_element(A, rng)
            if element:
                entries[(i, j)] = element
    return MatrixOverAlgebra(A, n, entries)


def random_unipotent(A: FDAlgebra, n: int, rng: random.Random) -> InvertibleElement:
    """(1 + X)(1 + Y)(1 + eD) with X strictly upper, Y strictly lower over A and e^2 = 0."""
    factors = [_random_triangular(A, n, rng, upper=True), _random_triangular(A, n, rng, upper=False)]
    if A.nilpotent_basis:
        e = rng.choice(A.nilpotent_basis)
        diagonal = {(i, i): SparseRow({e: rng.randint(-2, 2)}) for i in range(n)}
        factors.append(MatrixOverAlgebra(A, n, {k: v for k, v in diagonal.items() if v}))

    identity = MatrixOverAlgebra.identity(A, n)
    U, U_inv = identity, identity
    for X in factors:
        U = U @ (identity + X)
        U_inv = nilpotent_inverse(X) @ U_inv
    return InvertibleElement(U, U_inv)


def random_conjugate_pair(A: FDAlgebra, n: int, rng: random.Random) -> IdempotentPair:
    """P = V E_11 V^-1 against Q = E_11 for a random unipotent V."""
    E11 = MatrixOverAlgebra.scalar(A, [[int(i == j == 0) for j in range(n)] for i in range(n)])
    V = random_unipotent(A, n, rng)
    return IdempotentPair(V.U @ E11 @ V.U_inv, E11)


def conjugate_pair(pair: IdempotentPair, V: InvertibleElement) -> IdempotentPair:
    return IdempotentPair(V.U @ pair.P @ V.U_inv, pair.Q)


# ---------------------------------------------------------------------------
# characters in the (b, B) complex


@dataclass(frozen=True, eq=False)
class ULaurentChain:
    """sum_j u^j x_j with x_j of tensor degree 2j + parity."""

    algebra: FDAlgebra
    parity: int
    components: dict[int, TensorChain]
    substitutions: tuple[str, ...] = ()

    def component(self, j: int) -> TensorChain:
        return self.components.get(j) or TensorChain.zero(self.algebra, 2 * j + self.parity)

    def boundary(self) -> dict[int, TensorChain]:
        """(b + uB) of the chain, component by component, for u-powers inside the window."""
        out = {}
        for j in sorted(self.components):
            degree = 2 * j + self.parity - 1
            if degree < 0:
                continue
            total = apply_b(self.component(j))
            if j - 1 in self.components:
                total = total + apply_B(self.component(j - 1))
            out[j] = total
        return out

    def is_closed(self) -> bool:
        return all(c.is_zero() for c in self.boundary().values())

    def __sub__(self, other: "ULaurentChain") -> "ULaurentChain":
        keys = set(self.components) | set(other.components)
        return ULaurentChain(
            self.algebra, self.parity, {j: self.component(j) - other.component(j) for j in sorted(keys)}
        )


def trace_pattern(legs: Sequence[MatrixOverAlgebra]) -> SparseRow:
    """tr(X_0 (x) X_1 (x) ... (x) X_k) as tensors of the reduced complex of A."""
    A = legs[0].algebra
    unit = A.dim
    out = SparseRow()
    if len(legs) == 1:
        for i in range(legs[0].n):
            for a, v in legs[0].entry(i, i).items():
                out.iadd_coef(v, {(a,): 1})
        return out

    for i0 in range(legs[0].n):
        states: dict[tuple[int, tuple[int, ...]], Fraction] = {}
        for (i, j), entry in legs[0].entries.items():
            if i != i0:
                continue
            for a, v in entry.items():
                states[(j, (a,))] = states.get((j, (a,)), Fraction(0)) + v
        for leg in legs[1:]:
            nxt: dict[tuple[int, tuple[int, ...]], Fraction] = {}
            for (i, j), entry in leg.entries.items():
                for (row, prefix), v in states.items():
                    if row != i:
                        continue
                    for a, w in entry.items():
                        if a == unit:
                            continue
                        key = (j, prefix + (a,))
                        nxt[key] = nxt.get(key, Fraction(0)) + v * w
            states = {k: v for k, v in nxt.items() if v}
        for (row, tensor), v in states.items():
            if row == i0:
                out.iadd_coef(v, {tensor: 1})
    return out


def _restore_closedness(
    algebra: FDAlgebra, parity: int, components: dict[int, TensorChain]
) -> tuple[dict[int, TensorChain], list[str]]:
    """Rescales components one u-power at a time so that b x_j = -B x_{j-1}, when a rescaling can do it."""
    notes = []
    fixed: dict[int, TensorChain] = {}
    for j in sorted(components):
        x = components[j]
        previous = fixed.get(j - 1)
        if previous is None:
            fixed[j] = x
            continue
        bx = apply_b(x)
        target = apply_B(previous).scale(-1)
        if bx == target or bx.is_zero():
            fixed[j] = x
            continue
        key = next(iter(bx.coefficients))
        factor = target.coefficients[key] / bx.coefficients[key]
        if factor == 0 or bx.scale(factor) != target:
            fixed[j] = x
            continue
        fixed[j] = x.scale(factor)
        notes.append(f"u^{j}: printed coefficient multiplied by {factor}")
    return fixed, notes


def chern_even(pair: IdempotentPair, max_deg: int) -> ULaurentChain:
    """tr(P - Q) + sum_n (-u)^n (2n)!/n! tr((P - 1/2) (x) P^(x)2n) - (same for Q)."""
    validate_idempotent_pair(pair).raise_if_failed("idempotent pair")
    A = pair.P.algebra
    components: dict[int, TensorChain] = {}
    degree0 = trace_pattern([pair.P - pair.Q])
    if A.dim in {t[0] for t in degree0}:
        raise CyclicEngineValidationError("tr(P - Q) has a component along the adjoined unit.")
    components[0] = TensorChain(A, 0, degree0)

    P_half, Q_half = pair.P.minus_scalar(Fraction(1, 2)), pair.Q.minus_scalar(Fraction(1, 2))
    for n in range(1, max_deg // 2 + 1):
        coef = Fraction((-1) ** n * factorial(2 * n), factorial(n))
        pattern = trace_pattern([P_half] + [pair.P] * (2 * n)) - trace_pattern([Q_half] + [pair.Q] * (2 * n))
        components[n] = TensorChain(A, 2 * n, pattern * coef)

    components, notes = _restore_closedness(A, 0, components)
    return ULaurentChain(A, 0, components, tuple(notes))


def chern_odd(u_elt: InvertibleElement, max_deg: int) -> ULaurentChain:
    """sum_n u^n n! tr(U^-1 (x) (U - 1) (x) (U^-1 - 1) (x) ... (x) (U - 1)) with 2n + 2 legs."""
    validate_invertible(u_elt).raise_if_failed("invertible element")
    A = u_elt.U.algebra
    U_minus, U_inv_minus = u_elt.U.minus_scalar(1), u_elt.U_inv.minus_scalar(1)
    components: dict[int, TensorChain] = {}
    for n in range((max_deg - 1) // 2 + 1):
        legs = [u_elt.U_inv] + [U_minus if i % 2 else U_inv_minus for i in range(1, 2 * n + 2)]
        components[n] = TensorChain(A, 2 * n + 1, trace_pattern(legs) * factorial(n))

    components, notes = _restore_closedness(A, 1, components)
    notes = ["first leg U^-1 in place of U^-1 - 1"] + notes
    return ULaurentChain(A, 1, components, tuple(notes))


@dataclass(frozen=True)
class InvarianceWitness:
    exact: bool
    unknowns: int
    equations: int


def chern_even_invariance(first: IdempotentPair, second: IdempotentPair, max_deg: int) -> InvarianceWitness:
    """Solves (b + uB) y = ch(second) - ch(first) with y_j of tensor degree 2j + 1 for u^0..u^N."""
    difference = chern_even(second, max_deg) - chern_even(first, max_deg)
    A = difference.algebra
    top = max_deg // 2

    col_offsets, offset = {}, 0
    for j in range(top + 1):
        col_offsets[j] = offset
        offset += tensor_space_dim(A, 2 * j + 1)
    row_offsets, rows = {}, 0
    for j in range(top + 1):
        row_offsets[j] = rows
        rows += tensor_space_dim(A, 2 * j)

    data: dict[int, SparseRow] = {}

    def place(m: SparseRationalMatrix, row_off: int, col_off: int) -> None:
        for r, row in m.row_data.items():
            data.setdefault(row_off + r, SparseRow()).iadd_coef(1, {col_off + c: v for c, v in row.items()})

    for j in range(top + 1):
        place(b_matrix(A, 2 * j + 1), row_offsets[j], col_offsets[j])
        if j >= 1:
            place(B_matrix(A, 2 * j - 1), row_offsets[j], col_offsets[j - 1])
    system = SparseRationalMatrix(rows, offset, {r: v for r, v in data.items() if v})

    rhs = SparseRow()
    for j in range(top + 1):
        rhs.iadd_coef(1, {row_offsets[j] + i: v for i, v in chain_vector(difference.component(j)).items()})
    solution = solve_linear(system, rhs)
    logger.info("Invariance system %dx%d solvable=%s", rows, offset, solution is not None)
    return InvarianceWitness(exact=solution is not None, unknowns=offset, equations=rows)


# ---------------------------------------------------------------------------
# HKR


@cache
def _kaehler(A: FDAlgebra, k: int) -> KaehlerModule:
    return kaehler_differentials(A, k)


def hkr_map(c: TensorChain) -> tuple[KaehlerModule, SparseRow]:
    """a_0 (x) ... (x) a_k -> (1/k!) a_0 da_1 ... da_k, in normal form."""
    A = c.algebra
    if not A.is_commutative:
        raise CyclicEngineValidationError(f"The HKR map needs a commutative algebra; `{A.name}` is not.")
    module = _kaehler(A, c.degree)
    out = SparseRow()
    for tensor, v in c.coefficients.items():
        head = A.unit if tensor[0] == A.dim else SparseRow({tensor[0]: 1})
        out.iadd_coef(Fraction(v, factorial(c.degree)), module.element(head, tensor[1:]))
    return module, module.normal_form(out)


def kaehler_to_forms(
    module: KaehlerModule, vector: Mapping[int, Fraction], model: CDGAModel, zero_keys: Sequence[int]
) -> SparseRow:
    """e_a de_l1 ... de_lk -> e_a d(e_l1) ... d(e_lk) in a model whose degree 0 part is the algebra."""
    out = SparseRow()
    for g, v in vector.items():
        a, wedge = module.generators[g]
        form = SparseRow({zero_keys[a]: 1})
        for l in wedge:
            form = model.multiply(form, model.differential({zero_keys[l]: 1}))
        out.iadd_coef(v, form)
    return out


# ---------------------------------------------------------------------------
# matrix-valued forms and connections


FormMatrix = SparseRow  # keys (row, column, form key)


def fm_mul(G: GradedAlgebra, X: Mapping, Y: Mapping) -> SparseRow:
    by_row: dict[int, list[tuple[int, Hashable, Fraction]]] = {}
    for (j, l, key), w in Y.items():
        by_row.setdefault(j, []).append((l, key, w))
    out = SparseRow()
    for (i, j, key), v in X.items():
        for l, key2, w in by_row.get(j, []):
            for k, p in G.multiply({key: 1}, {key2: 1}).items():
                out.iadd_coef(v * w * p, {(i, l, k): 1})
    return out


def fm_d(G: GradedAlgebra, X: Mapping) -> SparseRow:
    out = SparseRow()
    for (i, j, key), v in X.items():
        for k, p in G.differential({key: 1}).items():
            out.iadd_coef(v * p, {(i, j, k): 1})
    return out


def fm_scalar(x: Mapping, n: int) -> SparseRow:
    return SparseRow(((i, i, key), v) for i in range(n) for key, v in x.items())


def fm_trace(X: Mapping) -> SparseRow:
    out = SparseRow()
    for (i, j, key), v in X.items():
        if i == j:
            out.iadd_coef(v, {key: 1})
    return out


def fm_sign_twisted(G: GradedAlgebra, X: Mapping) -> SparseRow:
    """X with each term multiplied by (-1)^(its form degree)."""
    return SparseRow(((i, j, key), -v if G.degree(key) % 2 else v) for (i, j, key), v in X.items())


@dataclass(frozen=True, eq=False)
class ConnectionDatum:
    """theta: n x n matrix of 1-forms, phi: central 2-form.

    F = d theta + theta^2 + phi and the twist is c = -d phi.
    """

    algebra: GradedAlgebra
    n: int
    theta: SparseRow
    phi: SparseRow
    zero_keys: tuple[Hashable, ...]
    name: str = ""

    @cached_property
    def curvature(self) -> SparseRow:
        G = self.algebra
        return fm_d(G, self.theta) + fm_mul(G, self.theta, self.theta) + fm_scalar(self.phi, self.n)

    @cached_property
    def twist(self) -> SparseRow:
        return self.algebra.differential(self.phi) * -1

    @cached_property
    def identity(self) -> SparseRow:
        return fm_scalar(self.algebra.unit_element, self.n)

    def covariant(self, w: Mapping) -> SparseRow:
        """dw + theta w - (-1)^|w| w theta, termwise."""
        G = self.algebra
        return fm_d(G, w) + fm_mul(G, self.theta, w) - fm_mul(G, fm_sign_twisted(G, w), self.theta)

    def leg(self, matrix_alg: FDAlgebra, index: int) -> SparseRow:
        if index == matrix_alg.dim:
            return self.identity
        i, j, a = matrix_alg.decode_matrix_index(index)
        return SparseRow({(i, j, self.zero_keys[a]): 1})


class ConnectionValidators(_BaseValidator):
    """Checks the connection axioms on every basis matrix E_ij (x) e of a finite model."""

    @staticmethod
    def get_subject_name() -> str:
        return "connection datum"

    @staticmethod
    def _basis(datum: ConnectionDatum) -> list[SparseRow]:
        if not isinstance(datum.algebra, CDGAModel):
            return []
        return [
            SparseRow({(i, j, e): 1})
            for i in range(datum.n)
            for j in range(datum.n)
            for e in range(datum.algebra.dim)
        ]

    def _validate_form_degrees(self, datum: ConnectionDatum) -> list[str]:
        G = datum.algebra
        errors = []
        if any(G.degree(key) != 1 for (_, _, key) in datum.theta):
            errors.append("theta has an entry that is not a 1-form.")
        if any(G.degree(key) != 2 for key in datum.phi):
            errors.append("phi is not a 2-form.")
        return errors

    def _validate_curvature_identity(self, datum: ConnectionDatum) -> list[str]:
        G, F = datum.algebra, datum.curvature
        for w in self._basis(datum):
            commutator = fm_mul(G, F, w) - fm_mul(G, w, F)
            if datum.covariant(datum.covariant(w)) != commutator:
                return [f"nabla^2 differs from [F, -] on {sorted(w)[0]}."]
        return []

    def _validate_twist_identity(self, datum: ConnectionDatum) -> list[str]:
        G, F = datum.algebra, datum.curvature
        for w in self._basis(datum):
            left = datum.covariant(fm_mul(G, F, w))
            right = fm_mul(G, F, datum.covariant(w)) - fm_mul(G, fm_scalar(datum.twist, datum.n), w)
            if left != right:
                return [f"nabla(F w) differs from F nabla(w) - c w on {sorted(w)[0]}."]
        return []

    def _validate_trace_compatibility(self, datum: ConnectionDatum) -> list[str]:
        G = datum.algebra
        for w in self._basis(datum):
            if fm_trace(datum.covariant(w)) != G.differential(fm_trace(w)):
                return [f"tr(nabla w) differs from d tr(w) on {sorted(w)[0]}."]
        return []


def validate_connection(datum: ConnectionDatum) -> ValidationReport:
    return ValidationReport(ConnectionValidators().collect_errors(datum))


def model_connection(
    model: CDGAModel, n: int, theta: Mapping | None = None, phi: Mapping | None = None, name: str = ""
) -> ConnectionDatum:
    datum = ConnectionDatum(
        algebra=model,
        n=n,
        theta=SparseRow(theta or {}),
        phi=SparseRow(phi or {}),
        zero_keys=tuple(model.basis_in_degree(0)),
        name=name or f"connection on M_{n}({model.name})",
    )
    ConnectionValidators().run_validators(datum)
    return datum


def random_theta(model: CDGAModel, n: int, rng: random.Random) -> SparseRow:
    theta = SparseRow()
    for i, j in itertools.product(range(n), repeat=2):
        for key, v in random_element(model, 1, rng).items():
            theta[(i, j, key)] = v
    return theta


def connection_fixture(rng: random.Random, n: int = 2) -> ConnectionDatum:
    """M_n over T^3 (x) {1, y, z} with random theta, phi = y and twist -z."""
    model = tensor_product(t3_model(), acyclic_pair(), name="T^3 x acyclic(y, z)")
    return model_connection(model, n, random_theta(model, n, rng), model.element({"y": 1}))


def chain_algebra(datum: ConnectionDatum) -> FDAlgebra:
    """M_n of the degree 0 part, the algebra JLO chains live over."""
    if not isinstance(datum.algebra, CDGAModel):
        raise CyclicEngineValidationError("Chain algebra is only defined for finite models.")
    return matrix_algebra(degree_zero_algebra(datum.algebra), datum.n)


# ---------------------------------------------------------------------------
# JLO-type character


def simplex_integral(exponents: Sequence[int]) -> Fraction:
    """Integral of s_0^m_0 ... s_k^m_k over the standard k-simplex: prod m_i! / (k + sum m_i)!."""
    k = len(exponents) - 1
    numerator = 1
    for m in exponents:
        numerator *= factorial(m)
    return Fraction(numerator, factorial(k + sum(exponents)))


def _jlo_weight(k: int, M: int) -> Fraction:
    # each split m of M contributes simplex_integral(m) / prod m_i!, which is 1 / (k + M)!
    return simplex_integral([M] + [0] * k) / factorial(M)


def _insert_curvature(datum: ConnectionDatum, partial: dict[int, SparseRow]) -> dict[int, SparseRow]:
    G, F = datum.algebra, datum.curvature
    cap = current_engine_options()["u_window_cap"]
    out: dict[int, SparseRow] = {}
    for M, X in partial.items():
        power, m = X, 0
        while power:
            if M + m > cap:
                raise ResourceCapError(f"Curvature powers exceed the u-window cap of {cap}.")
            out.setdefault(M + m, SparseRow()).iadd_coef(1, power)
            power = fm_mul(G, power, F)
            m += 1
    return {M: X for M, X in out.items() if X}


def _check_chain_algebra(datum: ConnectionDatum, A: FDAlgebra) -> None:
    if A.matrix_size != datum.n or A.matrix_base is None or A.matrix_base.dim != len(datum.zero_keys):
        raise CyclicEngineValidationError(
            f"Chain algebra {A.name} is not M_{datum.n} of the degree 0 forms of the datum."
        )


def jlo_character(datum: ConnectionDatum, x: TensorChain) -> SparseRow:
    """Ch(x) as a u-form chain keyed (u-power, form key).

    Ch_k(a_0..a_k) = sum_M (-u)^M / (k + M)! sum_{|m| = M} tr(a_0 F^m_0 nabla a_1 F^m_1 ... nabla a_k F^m_k).
    """
    _check_chain_algebra(datum, x.algebra)
    k = x.degree
    out = SparseRow()
    for tensor, coef in x.coefficients.items():
        partial = {0: datum.leg(x.algebra, tensor[0])}
        for index in tensor[1:]:
            partial = _insert_curvature(datum, partial)
            leg = datum.covariant(datum.leg(x.algebra, index))
            partial = {M: fm_mul(datum.algebra, X, leg) for M, X in partial.items()}
        partial = _insert_curvature(datum, partial)
        for M, X in partial.items():
            weight = coef * (-1) ** M * _jlo_weight(k, M)
            for key, v in fm_trace(X).items():
                out.iadd_coef(weight * v, {(M, key): 1})
    return out


def shift_u(chain: Mapping, by: int) -> SparseRow:
    return SparseRow(((j + by, key), v) for (j, key), v in chain.items())


def twisted_apply(G: GradedAlgebra, c: Mapping, chain: Mapping) -> SparseRow:
    """(u d - u^2 c) on a u-form chain."""
    out = SparseRow()
    for (j, key), v in chain.items():
        for k, p in G.differential({key: 1}).items():
            out.iadd_coef(v * p, {(j + 1, k): 1})
        for k, p in G.multiply(c, {key: 1}).items():
            out.iadd_coef(-v * p, {(j + 2, k): 1})
    return out


@dataclass(frozen=True)
class IdentityCheck:
    """Exact evaluation of an identity on sample chains."""

    checked: int
    failures: int
    max_discrepancy: Fraction
    reduced_failures: int = 0

    @property
    def holds(self) -> bool:
        return self.failures == 0 and self.reduced_failures == 0


def jlo_chain_map_check(datum: ConnectionDatum, chains: Sequence[TensorChain]) -> IdentityCheck:
    """Ch((b + uB) x) against (u d - u^2 c) Ch(x)."""
    failures, worst = 0, Fraction(0)
    for x in chains:
        left = jlo_character(datum, apply_b(x)) + shift_u(jlo_character(datum, apply_B(x)), 1)
        right = twisted_apply(datum.algebra, datum.twist, jlo_character(datum, x))
        gap = left - right
        if gap:
            failures += 1
            worst = max(worst, gap.max_abs())
    logger.info("JLO chain map identity: %d chains, %d failures", len(chains), failures)
    return IdentityCheck(checked=len(chains), failures=failures, max_discrepancy=worst)


def hkr_trace_comparison(model: CDGAModel, n: int, chains: Sequence[TensorChain]) -> IdentityCheck:
    """With theta = phi = 0, Ch(x) equals the HKR map of the generalized trace of x."""
    datum = model_connection(model, n)
    zero_keys = list(datum.zero_keys)
    failures, worst = 0, Fraction(0)
    for x in chains:
        character = jlo_character(datum, x)
        if any(j != 0 for j, _ in character):
            failures += 1
            continue
        module, phi = hkr_map(generalized_trace(x))
        expected = kaehler_to_forms(module, phi, model, zero_keys)
        gap = SparseRow((key, v) for (_, key), v in character.items()) - expected
        if gap:
            failures += 1
            worst = max(worst, gap.max_abs())
    return IdentityCheck(checked=len(chains), failures=failures, max_discrepancy=worst)


# ---------------------------------------------------------------------------
# homotopy along a path of connections


@dataclass(frozen=True, eq=False)
class ConnectionPath:
    """theta_t = theta + t alpha and phi_t = phi - beta_t with beta_t = sum_a t^a beta[a], a >= 1."""

    base: ConnectionDatum
    alpha: SparseRow
    beta: dict[int, SparseRow]

    def __post_init__(self) -> None:
        if not isinstance(self.base.algebra, CDGAModel):
            raise CyclicEngineValidationError("A connection path starts from a finite model.")
        if any(a < 1 for a in self.beta):
            raise CyclicEngineValidationError("beta_t must vanish at t = 0.")

    @property
    def model(self) -> CDGAModel:
        return self.base.algebra  # type: ignore[return-value]

    @cached_property
    def beta_end(self) -> SparseRow:
        total = SparseRow()
        for b in self.beta.values():
            total += b
        return total

    @cached_property
    def endpoint(self) -> ConnectionDatum:
        return model_connection(
            self.model, self.base.n, self.base.theta + self.alpha, self.base.phi - self.beta_end
        )

    @cached_property
    def cylinder(self) -> CylinderModel:
        return CylinderModel(self.model)

    @cached_property
    def beta_t(self) -> SparseRow:
        out = SparseRow()
        for a, b in self.beta.items():
            out += self.cylinder.t_power(a, b)
        return out

    @cached_property
    def cylinder_datum(self) -> ConnectionDatum:
        C = self.cylinder
        theta = SparseRow(((i, j, (key, 0, 0)), v) for (i, j, key), v in self.base.theta.items())
        theta += SparseRow(((i, j, (key, 1, 0)), v) for (i, j, key), v in self.alpha.items())
        phi = C.include(self.base.phi) - self.beta_t
        return ConnectionDatum(
            algebra=C,
            n=self.base.n,
            theta=theta,
            phi=phi,
            zero_keys=tuple((key, 0, 0) for key in self.base.zero_keys),
            name=f"{self.base.name} x [0, 1]",
        )


def _gauge_series(G: GradedAlgebra, beta: Mapping, sign: int) -> list[SparseRow]:
    """Terms (sign beta)^m / m! of e^{sign u beta}."""
    terms = [G.unit_element]
    power = G.unit_element
    cap = current_engine_options()["u_window_cap"]
    for m in range(1, cap + 1):
        power = G.multiply(power, beta)
        if not power:
            return terms
        terms.append(power * Fraction(sign**m, factorial(m)))
    raise ResourceCapError(f"e^(u beta) did not terminate below u^{cap}.")


def _multiply_series(G: GradedAlgebra, series: Sequence[SparseRow], chain: Mapping) -> SparseRow:
    out = SparseRow()
    for m, term in enumerate(series):
        for (j, key), v in chain.items():
            for k, p in G.multiply(term, {key: 1}).items():
                out.iadd_coef(v * p, {(j + m, k): 1})
    return out


def homotopy_operator(path: ConnectionPath, x: TensorChain) -> SparseRow:
    """K(x) = u^-1 times the fiber integral of e^{-u beta_t} Ch(x) over the cylinder."""
    C = path.cylinder
    lifted = jlo_character(path.cylinder_datum, x)
    gauged = _multiply_series(C, _gauge_series(C, path.beta_t, -1), lifted)
    out = SparseRow()
    for (j, key), v in gauged.items():
        if key[2] != 1:
            continue
        if j < 1:
            raise CyclicEngineValidationError("A dt term appeared without a power of u.")
        for k, p in C.fiber_integral({key: 1}).items():
            out.iadd_coef(v * p, {(j - 1, k): 1})
    return out


def homotopy_check(path: ConnectionPath, chains: Sequence[TensorChain]) -> IdentityCheck:
    """e^{-u beta_1} Ch(nabla_1) - Ch(nabla_0) against K (b + uB) + (u d - u^2 c) K.

    Also counts chains where the u^0 components disagree.
    """
    model, base, end = path.model, path.base, path.endpoint
    series = _gauge_series(model, path.beta_end, -1)
    failures, reduced_failures, worst = 0, 0, Fraction(0)
    for x in chains:
        left = _multiply_series(model, series, jlo_character(end, x)) - jlo_character(base, x)
        right = (
            homotopy_operator(path, apply_b(x))
            + shift_u(homotopy_operator(path, apply_B(x)), 1)
            + twisted_apply(model, base.twist, homotopy_operator(path, x))
        )
        gap = left - right
        if gap:
            failures += 1
            worst = max(worst, gap.max_abs())
        if any(j == 0 for j, _ in gap):
            reduced_failures += 1
    logger.info("Homotopy identity: %d chains, %d failures", len(chains), failures)
    return IdentityCheck(
        checked=len(chains), failures=failures, max_discrepancy=worst, reduced_failures=reduced_failures
    )


def linear_path(base: ConnectionDatum, rng: random.Random) -> ConnectionPath:
    """Random alpha and beta_t = t beta with beta a random 2-form."""
    model = base.algebra
    assert isinstance(model, CDGAModel)
    return ConnectionPath(base, random_theta(model, base.n, rng), {1: random_element(model, 2, rng)})


def constant_path(base: ConnectionDatum, beta: Mapping) -> ConnectionPath:
    return ConnectionPath(base, SparseRow(), {1: SparseRow(beta)})
