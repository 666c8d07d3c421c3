"""The reduced (b, B) complex and Hochschild, cyclic and periodic cyclic homology.

Chains of degree k >= 1 live in Ã (x) A^(x)k where the first leg may be the adjoined
unit, encoded as the index `algebra.dim`. Degree 0 chains live in A.
"""

import itertools
import logging
import random
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cache
from typing import Iterable, Mapping

from cyclic_engine.algebra_model import FDAlgebra, matrix_algebra
from cyclic_engine.chain_complex import ChainComplex, ChainMap, HomologyTable, homology_dims
from cyclic_engine.exact_linalg import SparseRationalMatrix, SparseRow, kernel_basis, rank
from cyclic_engine.options import check_tensor_budget, current_engine_options
from cyclic_engine.validation import CyclicEngineValidationError

logger = logging.getLogger(__name__)

Tensor = tuple[int, ...]


@dataclass(frozen=True, eq=False)
class TensorChain:
    algebra: FDAlgebra
    degree: int
    coefficients: SparseRow = field(default_factory=SparseRow)

    def __post_init__(self) -> None:
        unit = self.algebra.dim
        for tensor in self.coefficients:
            if len(tensor) != self.degree + 1:
                raise CyclicEngineValidationError(
                    f"Tensor {tensor} has length {len(tensor)} in a degree {self.degree} chain."
                )
            first_bound = unit + 1 if self.degree > 0 else unit
            if not 0 <= tensor[0] < first_bound or any(not 0 <= x < unit for x in tensor[1:]):
                raise CyclicEngineValidationError(f"Tensor {tensor} has a leg out of range.")

    @classmethod
    def zero(cls, algebra: FDAlgebra, degree: int) -> "TensorChain":
        return cls(algebra, degree, SparseRow())

    @classmethod
    def basis(cls, algebra: FDAlgebra, tensor: Tensor, coef: int | Fraction = 1) -> "TensorChain":
        return cls(algebra, len(tensor) - 1, SparseRow({tuple(tensor): coef}))

    @property
    def unit_index(self) -> int:
        return self.algebra.dim

    def is_zero(self) -> bool:
        return not self.coefficients

    def _check_compatible(self, other: "TensorChain") -> None:
        if self.algebra.dim != other.algebra.dim or self.degree != other.degree:
            raise CyclicEngineValidationError(
                f"Cannot combine chains of degree {self.degree} and {other.degree}."
            )

    def __add__(self, other: "TensorChain") -> "TensorChain":
        if other.is_zero() and self.algebra.dim == other.algebra.dim:
            return self
        if self.is_zero() and self.algebra.dim == other.algebra.dim:
            return other
        self._check_compatible(other)
        return TensorChain(self.algebra, self.degree, self.coefficients + other.coefficients)

    def __sub__(self, other: "TensorChain") -> "TensorChain":
        return self + other.scale(-1)

    def scale(self, coef: int | Fraction) -> "TensorChain":
        return TensorChain(self.algebra, self.degree, self.coefficients * coef)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, TensorChain):
            return NotImplemented
        return (
            self.algebra.dim == other.algebra.dim
            and self.degree == other.degree
            and self.coefficients == other.coefficients
        )

    def describe(self) -> str:
        labels = list(self.algebra.labels) + ["1"]
        terms = [
            f"{v}*" + "(x)".join(labels[x] for x in tensor)
            for tensor, v in sorted(self.coefficients.items())
        ]
        return " + ".join(terms) or "0"


# ---------------------------------------------------------------------------
# b and B on basis tensors


def _left_product(A: FDAlgebra, x0: int, a: int) -> Mapping[int, Fraction]:
    """x0 * a for x0 in Ã and a in A."""
    if x0 == A.dim:
        return {a: Fraction(1)}
    return A.product(x0, a)


def _right_product(A: FDAlgebra, a: int, x0: int) -> Mapping[int, Fraction]:
    if x0 == A.dim:
        return {a: Fraction(1)}
    return A.product(a, x0)


def b_on_tensor(A: FDAlgebra, t: Tensor) -> SparseRow:
    k = len(t) - 1
    out = SparseRow()
    if k == 0:
        return out
    for p, v in _left_product(A, t[0], t[1]).items():
        out.iadd_coef(v, {(p,) + t[2:]: 1})
    for i in range(1, k):
        sign = -1 if i % 2 else 1
        for p, v in A.product(t[i], t[i + 1]).items():
            out.iadd_coef(sign * v, {t[:i] + (p,) + t[i + 2 :]: 1})
    sign = -1 if k % 2 else 1
    for p, v in _right_product(A, t[k], t[0]).items():
        out.iadd_coef(sign * v, {(p,) + t[1:k]: 1})
    return out


def B_on_tensor(A: FDAlgebra, t: Tensor) -> SparseRow:
    """Sum over cyclic rotations of a_0 .. a_k with sign (-1)^(ik), prefixed by the unit."""
    unit = A.dim
    if t[0] == unit:
        return SparseRow()
    k = len(t) - 1
    out = SparseRow()
    for i in range(k + 1):
        sign = -1 if (i * k) % 2 else 1
        out.iadd_coef(sign, {(unit,) + t[i:] + t[:i]: 1})
    return out


def _apply(op, c: TensorChain, degree: int) -> TensorChain:
    out = SparseRow()
    for t, v in c.coefficients.items():
        out.iadd_coef(v, op(c.algebra, t))
    return TensorChain(c.algebra, degree, out)


def apply_b(c: TensorChain) -> TensorChain:
    """b lowers the degree by one; on CC_0 it is the zero chain, which adds to chains of any degree."""
    if c.degree == 0:
        return TensorChain.zero(c.algebra, 0)
    return _apply(b_on_tensor, c, c.degree - 1)


def apply_B(c: TensorChain) -> TensorChain:
    return _apply(B_on_tensor, c, c.degree + 1)


# ---------------------------------------------------------------------------
# tensor bases and matrices


def tensor_space_dim(A: FDAlgebra, k: int) -> int:
    return A.dim if k == 0 else (A.dim + 1) * A.dim**k


def tensor_index(A: FDAlgebra, t: Tensor) -> int:
    index = t[0]
    for x in t[1:]:
        index = index * A.dim + x
    return index


def tensors(A: FDAlgebra, k: int) -> Iterable[Tensor]:
    """Basis tensors of CC_k in index order."""
    if k == 0:
        return ((a,) for a in range(A.dim))
    return itertools.product(range(A.dim + 1), *([range(A.dim)] * k))


def chain_vector(c: TensorChain) -> SparseRow:
    return SparseRow((tensor_index(c.algebra, t), v) for t, v in c.coefficients.items())


def b_matrix(A: FDAlgebra, k: int, cap: int | None = None) -> SparseRationalMatrix:
    """Matrix of b : CC_k -> CC_{k-1}."""
    check_tensor_budget(tensor_space_dim(A, k), cap, what=f"CC_{k}({A.name})")
    return _b_matrix(A, k)


@cache
def _b_matrix(A: FDAlgebra, k: int) -> SparseRationalMatrix:
    rows = tensor_space_dim(A, k - 1)
    columns = []
    for t in tensors(A, k):
        image = b_on_tensor(A, t)
        columns.append({tensor_index(A, s): v for s, v in image.items()})
    return SparseRationalMatrix.from_columns(rows, columns)


def B_matrix(A: FDAlgebra, k: int, cap: int | None = None) -> SparseRationalMatrix:
    """Matrix of B : CC_k -> CC_{k+1}."""
    check_tensor_budget(tensor_space_dim(A, k + 1), cap, what=f"CC_{k + 1}({A.name})")
    return _B_matrix(A, k)


@cache
def _B_matrix(A: FDAlgebra, k: int) -> SparseRationalMatrix:
    rows = tensor_space_dim(A, k + 1)
    columns = []
    for t in tensors(A, k):
        image = B_on_tensor(A, t)
        columns.append({tensor_index(A, s): v for s, v in image.items()})
    return SparseRationalMatrix.from_columns(rows, columns)


def random_chain(A: FDAlgebra, k: int, rng: random.Random, terms: int | None = None) -> TensorChain:
    terms = terms or current_engine_options()["random_terms"]
    if A.dim == 0:
        return TensorChain.zero(A, k)
    coefficients = SparseRow()
    for _ in range(terms):
        first = rng.randrange(A.dim + 1 if k > 0 else A.dim)
        tensor = (first,) + tuple(rng.randrange(A.dim) for _ in range(k))
        coefficients.iadd_coef(rng.choice([-3, -2, -1, 1, 2, 3]), {tensor: 1})
    return TensorChain(A, k, coefficients)


# ---------------------------------------------------------------------------
# complexes


def hochschild_complex(A: FDAlgebra, max_deg: int, cap: int | None = None) -> ChainComplex:
    dims = {k: tensor_space_dim(A, k) for k in range(max_deg + 1)}
    differentials = {k: b_matrix(A, k, cap) for k in range(1, max_deg + 1)}
    return ChainComplex(dims, differentials, open_above=True, name=f"CC({A.name})")


def hochschild_homology(A: FDAlgebra, max_deg: int, cap: int | None = None) -> HomologyTable:
    """HH_k for k <= max_deg; the top degree is not certified."""
    return homology_dims(hochschild_complex(A, max_deg, cap))


def _assemble(
    rows: int, cols: int, blocks: Iterable[tuple[int, int, SparseRationalMatrix]]
) -> SparseRationalMatrix:
    data: dict[int, SparseRow] = {}
    for row_off, col_off, m in blocks:
        for r, row in m.row_data.items():
            target = data.setdefault(row_off + r, SparseRow())
            target.iadd_coef(1, {col_off + c: v for c, v in row.items()})
    return SparseRationalMatrix(rows, cols, {r: v for r, v in data.items() if v})


def _cyclic_layout(A: FDAlgebra, max_deg: int) -> tuple[dict[int, dict[int, int]], dict[int, int]]:
    """Offset of the CC_{n-2m} u^-m block inside total degree n, and the total dimensions."""
    layout: dict[int, dict[int, int]] = {}
    dims = {}
    for n in range(max_deg + 1):
        offset = 0
        layout[n] = {}
        for m in range(n // 2 + 1):
            layout[n][m] = offset
            offset += tensor_space_dim(A, n - 2 * m)
        dims[n] = offset
    return layout, dims


def cyclic_complex(A: FDAlgebra, max_deg: int, cap: int | None = None) -> ChainComplex:
    """(CC (x) C[u^-1], b + uB) in total degrees 0..max_deg.

    Total degree n holds CC_{n-2m} u^{-m} for 0 <= m <= n/2, ordered by m.
    """
    layout, dims = _cyclic_layout(A, max_deg)
    differentials = {}
    for n in range(1, max_deg + 1):
        blocks = []
        for m, col_off in layout[n].items():
            k = n - 2 * m
            if k >= 1:
                blocks.append((layout[n - 1][m], col_off, b_matrix(A, k, cap)))
            if m >= 1:
                blocks.append((layout[n - 1][m - 1], col_off, B_matrix(A, k, cap)))
        differentials[n] = _assemble(dims[n - 1], dims[n], blocks)
    return ChainComplex(dims, differentials, open_above=True, name=f"CC({A.name})[u^-1]")


def cyclic_homology(A: FDAlgebra, max_deg: int, cap: int | None = None) -> HomologyTable:
    return homology_dims(cyclic_complex(A, max_deg, cap))


def periodicity_operator(A: FDAlgebra, x: Mapping[int, Fraction], n: int, steps: int = 1) -> SparseRow:
    """S^steps on a vector of total degree n: multiplication by u, which drops the u^0 block."""
    layout, _ = _cyclic_layout(A, n)
    out = SparseRow()
    for m, offset in layout[n].items():
        if m < steps:
            continue
        width = tensor_space_dim(A, n - 2 * m)
        target = layout[n - 2 * steps][m - steps]
        out.iadd_coef(1, {target + i - offset: v for i, v in x.items() if offset <= i < offset + width})
    return out


def stable_image_dim(C: ChainComplex, A: FDAlgebra, base: int, steps: int) -> int:
    """dim of the image of S^steps : HC_{base + 2 steps} -> HC_base."""
    top = base + 2 * steps
    cycles = kernel_basis(C.differential(top)) if top > 0 else [SparseRow({i: 1}) for i in range(C.dim(0))]
    boundaries = C.differential(base + 1).columns()
    images = [periodicity_operator(A, z, top, steps) for z in cycles]
    rows = C.dim(base)
    return rank(SparseRationalMatrix.from_columns(rows, boundaries + images)) - rank(
        SparseRationalMatrix.from_columns(rows, boundaries)
    )


@dataclass(frozen=True)
class PeriodicResult:
    """HP_even / HP_odd as stable images of S, with the two cutoff runs backing them.

    `runs[cutoff]` holds the images of S^m in HC_0 and HC_1 from the highest HC within
    the cutoff; the result is certified when consecutive powers of S give the same image.
    """

    runs: dict[int, tuple[int, int]]
    stabilized: bool

    @property
    def even(self) -> int | None:
        return next(iter(self.runs.values()))[0] if self.stabilized else None

    @property
    def odd(self) -> int | None:
        return next(iter(self.runs.values()))[1] if self.stabilized else None


def periodic_cyclic_homology(A: FDAlgebra, max_tensor_deg: int, cap: int | None = None) -> PeriodicResult:
    if max_tensor_deg < 2:
        raise CyclicEngineValidationError(f"HP needs a tensor cutoff of at least 2, got {max_tensor_deg}.")
    top = max_tensor_deg + 2
    C = cyclic_complex(A, top, cap)
    runs = {}
    for cutoff in (max_tensor_deg, top):
        runs[cutoff] = (
            stable_image_dim(C, A, 0, cutoff // 2),
            stable_image_dim(C, A, 1, (cutoff - 1) // 2),
        )
    stabilized = len(set(runs.values())) == 1
    logger.info("HP(%s) stable images of S per cutoff %s, stabilized=%s", A.name, runs, stabilized)
    return PeriodicResult(runs=runs, stabilized=stabilized)


# ---------------------------------------------------------------------------
# trace and inclusion


def trace_on_tensor(MA: FDAlgebra, t: Tensor) -> Tensor | None:
    """Generalized trace of a basis tensor over M_n(A); None when the indices do not close up."""
    base = MA.matrix_base
    assert base is not None
    legs = [MA.decode_matrix_index(x) for x in t[1:]]
    if len(t) > 1:
        for (_, j, _), (i_next, _, _) in zip(legs, legs[1:]):
            if j != i_next:
                return None
    if t[0] == MA.dim and len(t) > 1:
        if legs[-1][1] != legs[0][0]:
            return None
        return (base.dim,) + tuple(a for _, _, a in legs)
    i0, j0, a0 = MA.decode_matrix_index(t[0])
    if not legs:
        return (a0,) if i0 == j0 else None
    if j0 != legs[0][0] or legs[-1][1] != i0:
        return None
    return (a0,) + tuple(a for _, _, a in legs)


def generalized_trace(c: TensorChain) -> TensorChain:
    MA = c.algebra
    if MA.matrix_base is None or MA.matrix_size is None:
        raise CyclicEngineValidationError(
            f"Generalized trace needs a chain over a matrix algebra, got {MA.name or 'unnamed'}."
        )
    out = SparseRow()
    for t, v in c.coefficients.items():
        image = trace_on_tensor(MA, t)
        if image is not None:
            out.iadd_coef(v, {image: 1})
    return TensorChain(MA.matrix_base, c.degree, out)


def inclusion_map(c: TensorChain, n: int, target: FDAlgebra | None = None) -> TensorChain:
    """Each leg a becomes a E_11; the adjoined unit stays the unit."""
    A = c.algebra
    target = target or matrix_algebra(A, n)
    if target.matrix_base is None or target.matrix_base.dim != A.dim:
        raise CyclicEngineValidationError("Target matrix algebra does not match the chain's algebra.")
    unit = A.dim
    out = SparseRow()
    for t, v in c.coefficients.items():
        # E_11 (x) e_a has index a
        image = tuple(target.dim if x == unit else x for x in t)
        out.iadd_coef(v, {image: 1})
    return TensorChain(target, c.degree, out)


def trace_chain_map(
    MA: FDAlgebra, source_deg: int, target_deg: int | None = None, cap: int | None = None
) -> ChainMap:
    """The generalized trace CC(M_n(A)) -> CC(A) as a chain map of Hochschild complexes."""
    base = MA.matrix_base
    if base is None:
        raise CyclicEngineValidationError("Trace chain map needs a matrix algebra.")
    target_deg = source_deg + 1 if target_deg is None else target_deg
    source = hochschild_complex(MA, source_deg, cap)
    target = hochschild_complex(base, target_deg, cap)
    components = {}
    for k in range(min(source_deg, target_deg) + 1):
        columns = []
        for t in tensors(MA, k):
            image = trace_on_tensor(MA, t)
            columns.append({tensor_index(base, image): Fraction(1)} if image is not None else {})
        components[k] = SparseRationalMatrix.from_columns(target.dim(k), columns)
    return ChainMap(source, target, components)


# ---------------------------------------------------------------------------
# bar complex


def bar_complex(A: FDAlgebra, max_deg: int, cap: int | None = None) -> ChainComplex:
    """A^(x)k in degree k >= 1 with b'(a_1..a_k) = sum_i (-1)^(i-1) (.. a_i a_{i+1} ..)."""
    dims = {k: A.dim**k for k in range(1, max_deg + 1)}
    differentials = {}
    for k in range(2, max_deg + 1):
        check_tensor_budget(dims[k], cap, what=f"Bar_{k}({A.name})")
        columns = []
        for t in itertools.product(range(A.dim), repeat=k):
            image = SparseRow()
            for i in range(k - 1):
                sign = -1 if i % 2 else 1
                for p, v in A.product(t[i], t[i + 1]).items():
                    s = t[:i] + (p,) + t[i + 2 :]
                    image.iadd_coef(sign * v, {_flat(A.dim, s): 1})
            columns.append(image)
        differentials[k] = SparseRationalMatrix.from_columns(dims[k - 1], columns)
    return ChainComplex(dims, differentials, open_above=True, name=f"Bar({A.name})")


def _flat(base: int, t: Tensor) -> int:
    index = 0
    for x in t:
        index = index * base + x
    return index


@dataclass(frozen=True)
class BarProbe:
    homology: HomologyTable
    exact: dict[int, bool]

    @property
    def all_exact(self) -> bool:
        return all(self.exact.values())


def bar_acyclicity_probe(A: FDAlgebra, max_deg: int, cap: int | None = None) -> BarProbe:
    table = homology_dims(bar_complex(A, max_deg, cap))
    exact = {k: table.dims[k] == 0 for k in range(1, max_deg) if table.certified[k]}
    if not A.is_unital and all(exact.values()):
        logger.info("Bar complex of non-unital %s is exact in degrees %s", A.name, sorted(exact))
    return BarProbe(homology=table, exact=exact)


def product_additivity_check(A1: FDAlgebra, A2: FDAlgebra, product: FDAlgebra, max_deg: int) -> bool:
    """HH of a product algebra is the sum of the factors' HH in every certified degree."""
    whole = hochschild_homology(product, max_deg).certified_dims()
    first = hochschild_homology(A1, max_deg).certified_dims()
    second = hochschild_homology(A2, max_deg).certified_dims()
    return all(whole[k] == first[k] + second[k] for k in whole)
