"""Finite-dimensional associative algebras given by structure constants."""

import itertools
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Mapping, Sequence

from cyclic_engine.exact_linalg import EchelonBasis, SparseRow
from cyclic_engine.validation import (
    CyclicEngineValidationError,
    ValidationReport,
    _BaseValidator,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class FDAlgebra:
    """Algebra with basis e_0..e_{dim-1} and products e_i e_j = structure[(i, j)].

    Algebras built by `matrix_algebra` remember their base algebra and size; the
    basis element E_ij (x) e_a then has index (i * n + j) * dim(base) + a.
    """

    dim: int
    labels: tuple[str, ...]
    structure: dict[tuple[int, int], SparseRow] = field(default_factory=dict)
    unit: SparseRow | None = None
    matrix_size: int | None = None
    matrix_base: "FDAlgebra | None" = None
    name: str = ""

    def product(self, i: int, j: int) -> SparseRow:
        return self.structure.get((i, j)) or _EMPTY

    def multiply(self, x: Mapping[int, Fraction], y: Mapping[int, Fraction]) -> SparseRow:
        out = SparseRow()
        for i, a in x.items():
            for j, b in y.items():
                prod = self.structure.get((i, j))
                if prod:
                    out.iadd_coef(a * b, prod)
        return out

    @property
    def is_unital(self) -> bool:
        return self.unit is not None

    @cached_property
    def is_commutative(self) -> bool:
        return all(
            self.product(i, j) == self.product(j, i)
            for i in range(self.dim)
            for j in range(i + 1, self.dim)
        )

    @cached_property
    def nilpotent_basis(self) -> tuple[int, ...]:
        """Basis elements squaring to zero."""
        return tuple(i for i in range(self.dim) if not self.product(i, i))

    def basis_vector(self, i: int) -> SparseRow:
        return SparseRow({i: 1})

    def decode_matrix_index(self, index: int) -> tuple[int, int, int]:
        if self.matrix_size is None or self.matrix_base is None:
            raise CyclicEngineValidationError(
                f"Algebra `{self.name or 'unnamed'}` was not built as a matrix algebra."
            )
        n, base_dim = self.matrix_size, self.matrix_base.dim
        block, a = divmod(index, base_dim)
        i, j = divmod(block, n)
        return i, j, a

    def __repr__(self) -> str:
        return f"FDAlgebra({self.name or 'unnamed'}, dim={self.dim})"


_EMPTY = SparseRow()


class AlgebraValidators(_BaseValidator):
    @staticmethod
    def get_subject_name() -> str:
        return "algebra"

    def _validate_labels_and_indices(self, A: FDAlgebra) -> list[str]:
        errors = []
        if len(A.labels) != A.dim:
            errors.append(f"Algebra has {len(A.labels)} labels for dimension {A.dim}.")
        for (i, j), prod in sorted(A.structure.items()):
            if not (0 <= i < A.dim and 0 <= j < A.dim):
                errors.append(f"Product entry ({i}, {j}) is out of range.")
            bad = [k for k in prod if not (isinstance(k, int) and 0 <= k < A.dim)]
            if bad:
                errors.append(f"Product e_{i} e_{j} refers to basis indices {bad} out of range.")
        return errors

    def _validate_associativity(self, A: FDAlgebra) -> list[str]:
        for i, j, k in itertools.product(range(A.dim), repeat=3):
            left = A.multiply(A.product(i, j), {k: Fraction(1)})
            right = A.multiply({i: Fraction(1)}, A.product(j, k))
            if left != right:
                return [
                    f"Associativity fails on the triple ({A.labels[i]}, {A.labels[j]}, {A.labels[k]}) "
                    f"= basis indices ({i}, {j}, {k})."
                ]
        return []

    def _validate_unit(self, A: FDAlgebra) -> list[str]:
        if A.unit is None:
            return []
        for i in range(A.dim):
            e = {i: Fraction(1)}
            if A.multiply(A.unit, e) != e or A.multiply(e, A.unit) != e:
                return [f"Declared unit is not a two-sided unit on basis element {A.labels[i]}."]
        return []


def validate_algebra(A: FDAlgebra) -> ValidationReport:
    return ValidationReport(AlgebraValidators().collect_errors(A))


def build_algebra(
    labels: Sequence[str],
    products: Mapping[tuple[int, int], Mapping[int, Fraction | int]],
    unit: Mapping[int, Fraction | int] | None = None,
    name: str = "",
) -> FDAlgebra:
    structure = {}
    for key, prod in products.items():
        row = SparseRow(prod)
        if row:
            structure[key] = row
    return FDAlgebra(
        dim=len(labels),
        labels=tuple(labels),
        structure=structure,
        unit=SparseRow(unit) if unit is not None else None,
        name=name,
    )


# ---------------------------------------------------------------------------
# builders


def ground_field() -> FDAlgebra:
    return build_algebra(["1"], {(0, 0): {0: 1}}, unit={0: 1}, name="C")


def zero_algebra() -> FDAlgebra:
    return build_algebra([], {}, name="0")


def truncated_polynomial(
    modulus: Sequence[int | Fraction], variable: str = "x", name: str | None = None
) -> FDAlgebra:
    """C[x]/(f) for monic f given by coefficients, lowest degree first."""
    degree = len(modulus) - 1
    if degree < 1 or modulus[-1] != 1:
        raise CyclicEngineValidationError("Modulus must be a monic polynomial of degree >= 1.")

    # x^m reduced mod f, for m < 2 * degree
    powers: list[SparseRow] = [SparseRow({m: 1}) for m in range(degree)]
    for m in range(degree, 2 * degree - 1):
        prev = powers[m - 1]
        shifted = SparseRow()
        for k, v in prev.items():
            if k + 1 < degree:
                shifted.iadd_coef(v, {k + 1: 1})
            else:
                shifted.iadd_coef(-v, {t: modulus[t] for t in range(degree)})
        powers.append(shifted)

    labels = ["1"] + [variable if m == 1 else f"{variable}^{m}" for m in range(1, degree)]
    products = {(i, j): powers[i + j] for i in range(degree) for j in range(degree)}
    if name is None:
        terms = " + ".join(f"{c}*{variable}^{t}" for t, c in enumerate(modulus) if c)
        name = f"C[{variable}]/({terms})"
    return build_algebra(labels, products, unit={0: 1}, name=name)


def dual_numbers() -> FDAlgebra:
    return truncated_polynomial([0, 0, 1], name="C[x]/(x^2)")


def split_numbers() -> FDAlgebra:
    """C[x]/(x^2 - 1), isomorphic to C x C."""
    return truncated_polynomial([-1, 0, 1], name="C[x]/(x^2 - 1)")


def nonunital_nilpotent(dim: int = 1) -> FDAlgebra:
    """span{x_1..x_dim} with all products zero."""
    return build_algebra([f"x{i + 1}" if dim > 1 else "x" for i in range(dim)], {}, name="span{x}")


def product_algebra(A1: FDAlgebra, A2: FDAlgebra) -> FDAlgebra:
    products: dict[tuple[int, int], SparseRow] = dict(A1.structure)
    offset = A1.dim
    for (i, j), prod in A2.structure.items():
        products[(i + offset, j + offset)] = SparseRow((k + offset, v) for k, v in prod.items())
    unit = None
    if A1.unit is not None and A2.unit is not None:
        unit = SparseRow(A1.unit) + SparseRow((k + offset, v) for k, v in A2.unit.items())
    labels = [f"({label},0)" for label in A1.labels] + [f"(0,{label})" for label in A2.labels]
    return build_algebra(labels, products, unit=unit, name=f"{A1.name} x {A2.name}")


def unitization(A: FDAlgebra) -> FDAlgebra:
    """A + C.1 with (a, s)(b, t) = (ab + sb + ta, st); the new unit has index dim(A)."""
    one = A.dim
    products: dict[tuple[int, int], SparseRow] = dict(A.structure)
    for i in range(A.dim):
        products[(one, i)] = SparseRow({i: 1})
        products[(i, one)] = SparseRow({i: 1})
    products[(one, one)] = SparseRow({one: 1})
    return build_algebra(
        list(A.labels) + ["1~"], products, unit={one: 1}, name=f"unitization({A.name})"
    )


def _matrix_label(i: int, j: int, label: str, base_dim: int) -> str:
    if base_dim == 1 and label == "1":
        return f"E{i + 1}{j + 1}"
    return f"E{i + 1}{j + 1}*{label}"


def matrix_algebra(A: FDAlgebra, n: int) -> FDAlgebra:
    """M_n(A) with E_ij E_kl = delta_jk E_il."""
    if n < 1:
        raise CyclicEngineValidationError(f"Matrix size must be at least 1, got {n}.")
    d = A.dim

    def index(i: int, j: int, a: int) -> int:
        return (i * n + j) * d + a

    if n == 1:
        labels = list(A.labels)
        products = dict(A.structure)
    else:
        labels = [_matrix_label(i, j, A.labels[a], d) for i in range(n) for j in range(n) for a in range(d)]
        products = {}
        for (a, b), prod in A.structure.items():
            for i, j, l in itertools.product(range(n), repeat=3):
                products[(index(i, j, a), index(j, l, b))] = SparseRow(
                    (index(i, l, c), v) for c, v in prod.items()
                )

    unit = None
    if A.unit is not None:
        unit = SparseRow((index(i, i, a), v) for i in range(n) for a, v in A.unit.items())

    structure = {key: prod for key, prod in products.items() if prod}
    return FDAlgebra(
        dim=n * n * d,
        labels=tuple(labels),
        structure=structure,
        unit=unit,
        matrix_size=n,
        matrix_base=A,
        name=A.name if n == 1 else f"M_{n}({A.name})",
    )


# ---------------------------------------------------------------------------
# Kaehler differentials


@dataclass(eq=False)
class KaehlerModule:
    """Omega^k of a commutative algebra, presented by generators e_a de_L with L a sorted k-subset.

    Elements are `SparseRow`s over generator indices; `basis` lists the generators
    left free by the relation echelon form.
    """

    base: FDAlgebra
    k: int
    generators: list[tuple[int, tuple[int, ...]]]
    relations: EchelonBasis

    @cached_property
    def generator_index(self) -> dict[tuple[int, tuple[int, ...]], int]:
        return {g: i for i, g in enumerate(self.generators)}

    @cached_property
    def basis(self) -> list[int]:
        pivots = set(self.relations.pivots)
        return [i for i in range(len(self.generators)) if i not in pivots]

    @property
    def dim(self) -> int:
        return len(self.basis)

    def element(self, coefficient: Mapping[int, Fraction], wedge: Sequence[int]) -> SparseRow:
        """coefficient * de_{wedge[0]} ^ ... ^ de_{wedge[-1]} in generator coordinates."""
        sign, ordered = _sort_wedge(wedge)
        if sign == 0:
            return SparseRow()
        out = SparseRow()
        for a, v in coefficient.items():
            out[self.generator_index[(a, ordered)]] = sign * v
        return out

    def normal_form(self, vector: Mapping[int, Fraction]) -> SparseRow:
        return self.relations.reduce(vector)

    def coordinates(self, vector: Mapping[int, Fraction]) -> list[Fraction]:
        reduced = self.normal_form(vector)
        return [reduced[i] for i in self.basis]

    def is_zero(self, vector: Mapping[int, Fraction]) -> bool:
        return not self.normal_form(vector)

    def describe(self, vector: Mapping[int, Fraction]) -> str:
        terms = []
        for i, v in sorted(self.normal_form(vector).items()):
            a, wedge = self.generators[i]
            diffs = "".join(f" d{self.base.labels[w]}" for w in wedge)
            terms.append(f"{v}*{self.base.labels[a]}{diffs}")
        return " + ".join(terms) or "0"


def _sort_wedge(wedge: Sequence[int]) -> tuple[int, tuple[int, ...]]:
    """Sign and sorted order of de_{w_1} ^ ... ^ de_{w_k}; sign 0 if an index repeats."""
    if len(set(wedge)) != len(wedge):
        return 0, ()
    items = list(wedge)
    sign = 1
    for i in range(len(items)):
        for j in range(len(items) - 1 - i):
            if items[j] > items[j + 1]:
                items[j], items[j + 1] = items[j + 1], items[j]
                sign = -sign
    return sign, tuple(items)


def kaehler_differentials(A: FDAlgebra, k: int) -> KaehlerModule:
    """Omega^k_A = Lambda^k_A(I/I^2) from the Leibniz, unit and alternation relations."""
    if not A.is_commutative:
        raise CyclicEngineValidationError(
            f"Kaehler differentials need a commutative algebra; `{A.name}` is not commutative."
        )
    if A.unit is None:
        raise CyclicEngineValidationError(f"Kaehler differentials need a unital algebra; `{A.name}` has no unit.")

    d = A.dim
    subsets = list(itertools.combinations(range(d), k))
    generators = [(a, L) for a in range(d) for L in subsets]
    module = KaehlerModule(base=A, k=k, generators=generators, relations=EchelonBasis())
    if k == 0:
        return module

    def term(coefficient: Mapping[int, Fraction], l: int, rest: tuple[int, ...]) -> SparseRow:
        return module.element(coefficient, (l,) + rest)

    relation_count = 0
    for rest in itertools.combinations(range(d), k - 1):
        for b in range(d):
            e_b = SparseRow({b: 1})
            for i in range(d):
                for j in range(i, d):
                    rel = SparseRow()
                    for l, c in A.product(i, j).items():
                        rel.iadd_coef(c, term(e_b, l, rest))
                    rel.iadd_coef(-1, term(A.multiply(e_b, {i: Fraction(1)}), j, rest))
                    rel.iadd_coef(-1, term(A.multiply(e_b, {j: Fraction(1)}), i, rest))
                    if rel:
                        module.relations.add(rel)
                        relation_count += 1
            unit_rel = SparseRow()
            for m, u in A.unit.items():
                unit_rel.iadd_coef(u, term(e_b, m, rest))
            if unit_rel:
                module.relations.add(unit_rel)
                relation_count += 1

    logger.info(
        "Omega^%d of %s: %d generators, %d relations, dimension %d",
        k,
        A.name,
        len(generators),
        relation_count,
        module.dim,
    )
    return module
