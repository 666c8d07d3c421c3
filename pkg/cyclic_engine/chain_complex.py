"""Bounded chain complexes, chain maps, cones, double complexes and spectral sequences."""

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Mapping

from cyclic_engine.exact_linalg import (
    QuotientBasis,
    SparseRationalMatrix,
    SparseRow,
    rank,
    rank_and_kernel,
)
from cyclic_engine.validation import (
    CyclicEngineValidationError,
    ValidationReport,
    _BaseValidator,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class ChainComplex:
    """Finite window of a chain complex with degree -1 differentials.

    `differentials[k]` maps C_k to C_{k-1}. A window edge that is `open` stands for
    a complex that continues beyond it, so homology there is not certified.
    """

    dims: dict[int, int]
    differentials: dict[int, SparseRationalMatrix] = field(default_factory=dict)
    open_below: bool = False
    open_above: bool = False
    basis_labels: dict[int, list[str]] | None = None
    uncertified: frozenset[int] = frozenset()
    name: str = ""

    @property
    def degree_window(self) -> tuple[int, int]:
        return (min(self.dims), max(self.dims))

    @property
    def degrees(self) -> range:
        lo, hi = self.degree_window
        return range(lo, hi + 1)

    def dim(self, k: int) -> int:
        return self.dims.get(k, 0)

    def differential(self, k: int) -> SparseRationalMatrix:
        stored = self.differentials.get(k)
        if stored is not None:
            return stored
        return SparseRationalMatrix.zero(self.dim(k - 1), self.dim(k))

    def is_certified(self, k: int) -> bool:
        lo, hi = self.degree_window
        if k in self.uncertified:
            return False
        if self.open_below and k == lo:
            return False
        if self.open_above and k == hi:
            return False
        return lo <= k <= hi

    def is_genuine(self, k: int) -> bool:
        """Whether C_k (with its outgoing differential) is the true component of the full complex."""
        lo, hi = self.degree_window
        if k < lo:
            return not self.open_below
        if k > hi:
            return not self.open_above
        return True


class ChainComplexValidators(_BaseValidator):
    @staticmethod
    def get_subject_name() -> str:
        return "chain complex"

    def _validate_window_is_contiguous(self, C: ChainComplex) -> list[str]:
        if not C.dims:
            return ["Complex has no components."]
        lo, hi = C.degree_window
        missing = [k for k in range(lo, hi + 1) if k not in C.dims]
        return [f"Degree {k} missing from window [{lo}, {hi}]." for k in missing]

    def _validate_differential_shapes(self, C: ChainComplex) -> list[str]:
        errors = []
        for k, d in sorted(C.differentials.items()):
            if k not in C.dims:
                errors.append(f"Differential d_{k} given but C_{k} is not in the window.")
                continue
            expected = (C.dim(k - 1), C.dim(k))
            if d.shape != expected:
                errors.append(f"Differential d_{k} has shape {d.shape}, expected {expected}.")
            if k - 1 not in C.dims and not d.is_zero():
                errors.append(f"Differential d_{k} leaves the window but is nonzero.")
        return errors

    def _validate_square_is_zero(self, C: ChainComplex) -> list[str]:
        errors = []
        for k in sorted(C.differentials):
            if k - 1 not in C.differentials or k not in C.dims:
                continue
            outer, inner = C.differentials[k - 1], C.differentials[k]
            if outer.cols != inner.rows:
                continue
            square = outer.matmul(inner)
            if not square.is_zero():
                (r, c), v = min(square.entries.items())
                errors.append(
                    f"d_{k - 1} d_{k} is nonzero: entry ({r}, {c}) = {v}."
                )
        return errors


def validate_complex(C: ChainComplex) -> ValidationReport:
    return ValidationReport(ChainComplexValidators().collect_errors(C))


@dataclass(frozen=True)
class HomologyTable:
    dims: dict[int, int]
    certified: dict[int, bool]

    def certified_dims(self) -> dict[int, int]:
        return {k: v for k, v in self.dims.items() if self.certified[k]}

    def __getitem__(self, k: int) -> int:
        return self.dims[k]


def differential_ranks(C: ChainComplex) -> dict[int, int]:
    ranks = {}
    for k in C.degrees:
        d = C.differentials.get(k)
        ranks[k] = rank(d) if d is not None and not d.is_zero() else 0
        if d is not None:
            logger.info(
                "  %s: d_%d is %dx%d with rank %d", C.name or "complex", k, d.rows, d.cols, ranks[k]
            )
    return ranks


def homology_dims(C: ChainComplex) -> HomologyTable:
    """dim H_k = dim C_k - rank d_k - rank d_{k+1} for every degree of the window."""
    validate_complex(C).raise_if_failed(ChainComplexValidators.get_subject_name())
    ranks = differential_ranks(C)
    dims = {k: C.dim(k) - ranks.get(k, 0) - ranks.get(k + 1, 0) for k in C.degrees}
    return HomologyTable(dims=dims, certified={k: C.is_certified(k) for k in C.degrees})


# ---------------------------------------------------------------------------
# chain maps and cones


@dataclass(frozen=True, eq=False)
class ChainMap:
    source: ChainComplex
    target: ChainComplex
    components: dict[int, SparseRationalMatrix]

    def component(self, k: int) -> SparseRationalMatrix:
        stored = self.components.get(k)
        if stored is not None:
            return stored
        return SparseRationalMatrix.zero(self.target.dim(k), self.source.dim(k))


class ChainMapValidators(_BaseValidator):
    @staticmethod
    def get_subject_name() -> str:
        return "chain map"

    def _validate_component_shapes(self, f: ChainMap) -> list[str]:
        errors = []
        for k, m in sorted(f.components.items()):
            expected = (f.target.dim(k), f.source.dim(k))
            if m.shape != expected:
                errors.append(f"Component f_{k} has shape {m.shape}, expected {expected}.")
        return errors

    def _validate_commutes_with_differentials(self, f: ChainMap) -> list[str]:
        errors = []
        for k in f.source.degrees:
            if k not in f.target.dims or k - 1 not in f.source.dims or k - 1 not in f.target.dims:
                continue
            left = f.component(k - 1).matmul(f.source.differential(k))
            right = f.target.differential(k).matmul(f.component(k))
            if left != right:
                diff = left.add(right, -1)
                (r, c), v = min(diff.entries.items())
                errors.append(f"f d != d f in degree {k}: entry ({r}, {c}) differs by {v}.")
        return errors


def validate_chain_map(f: ChainMap) -> ValidationReport:
    return ValidationReport(ChainMapValidators().collect_errors(f))


def identity_map(C: ChainComplex) -> ChainMap:
    return ChainMap(C, C, {k: SparseRationalMatrix.identity(C.dim(k)) for k in C.degrees})


def _block(
    rows: tuple[int, int], cols: tuple[int, int], blocks: Mapping[tuple[int, int], SparseRationalMatrix]
) -> SparseRationalMatrix:
    """Assembles a 2x2 block matrix with the given row and column block sizes."""
    row_off = (0, rows[0])
    col_off = (0, cols[0])
    data: dict[int, SparseRow] = {}
    for (bi, bj), m in blocks.items():
        for r, row in m.row_data.items():
            target = data.setdefault(row_off[bi] + r, SparseRow())
            for c, v in row.items():
                target[col_off[bj] + c] = v
    return SparseRationalMatrix(sum(rows), sum(cols), data)


def mapping_cone(f: ChainMap) -> ChainComplex:
    """cone_n = A_{n-1} + B_n with d(a, b) = (-da, db - fa)."""
    A, B = f.source, f.target
    lo = min(A.degree_window[0] + 1, B.degree_window[0])
    hi = max(A.degree_window[1] + 1, B.degree_window[1])
    dims = {n: A.dim(n - 1) + B.dim(n) for n in range(lo, hi + 1)}

    differentials = {}
    for n in range(lo + 1, hi + 1):
        blocks = {
            (0, 0): A.differential(n - 1).scale(-1),
            (1, 0): f.component(n - 1).scale(-1),
            (1, 1): B.differential(n),
        }
        differentials[n] = _block((A.dim(n - 2), B.dim(n - 1)), (A.dim(n - 1), B.dim(n)), blocks)

    uncertified = frozenset(
        n
        for n in range(lo, hi + 1)
        if not all(A.is_genuine(k) for k in (n - 2, n - 1, n))
        or not all(B.is_genuine(k) for k in (n - 1, n, n + 1))
    )
    return ChainComplex(
        dims=dims,
        differentials=differentials,
        uncertified=uncertified,
        name=f"cone({A.name or 'source'} -> {B.name or 'target'})",
    )


@dataclass(frozen=True)
class ConeVerdict:
    quasi_iso: bool
    certified_degrees: tuple[int, ...]
    nonzero_degrees: tuple[int, ...]
    cone_homology: HomologyTable

    def __bool__(self) -> bool:
        return self.quasi_iso


def cone_quasi_iso_test(f: ChainMap) -> ConeVerdict:
    """True iff the mapping cone has zero homology in every certified degree."""
    validate_chain_map(f).raise_if_failed(ChainMapValidators.get_subject_name())
    cone = mapping_cone(f)
    table = homology_dims(cone)
    certified = tuple(k for k in cone.degrees if cone.is_certified(k))
    if not certified:
        raise CyclicEngineValidationError(
            f"Window of {cone.name} is too small to certify any degree."
        )
    nonzero = tuple(k for k in certified if table.dims[k])
    logger.info("%s: certified degrees %s, nonzero homology in %s", cone.name, certified, nonzero)
    return ConeVerdict(
        quasi_iso=not nonzero,
        certified_degrees=certified,
        nonzero_degrees=nonzero,
        cone_homology=table,
    )


# ---------------------------------------------------------------------------
# double complexes


@dataclass(frozen=True, eq=False)
class DoubleComplex:
    """Bigraded components with horizontal (p -> p-1) and vertical (q -> q-1) differentials.

    With `anticommuting=False` the squares commute and the total complex inserts
    the sign (-1)^q in front of the horizontal differential.
    """

    dims: dict[tuple[int, int], int]
    horizontal: dict[tuple[int, int], SparseRationalMatrix] = field(default_factory=dict)
    vertical: dict[tuple[int, int], SparseRationalMatrix] = field(default_factory=dict)
    anticommuting: bool = True

    def dim(self, p: int, q: int) -> int:
        return self.dims.get((p, q), 0)

    def d_h(self, p: int, q: int) -> SparseRationalMatrix:
        stored = self.horizontal.get((p, q))
        return stored if stored is not None else SparseRationalMatrix.zero(self.dim(p - 1, q), self.dim(p, q))

    def d_v(self, p: int, q: int) -> SparseRationalMatrix:
        stored = self.vertical.get((p, q))
        return stored if stored is not None else SparseRationalMatrix.zero(self.dim(p, q - 1), self.dim(p, q))

    @cached_property
    def total_degrees(self) -> range:
        totals = [p + q for p, q in self.dims]
        return range(min(totals), max(totals) + 1)


class DoubleComplexValidators(_BaseValidator):
    @staticmethod
    def get_subject_name() -> str:
        return "double complex"

    def _validate_shapes(self, D: DoubleComplex) -> list[str]:
        errors = []
        for (p, q), m in sorted(D.horizontal.items()):
            if m.shape != (D.dim(p - 1, q), D.dim(p, q)):
                errors.append(f"Horizontal differential at ({p}, {q}) has shape {m.shape}.")
        for (p, q), m in sorted(D.vertical.items()):
            if m.shape != (D.dim(p, q - 1), D.dim(p, q)):
                errors.append(f"Vertical differential at ({p}, {q}) has shape {m.shape}.")
        return errors

    def _validate_differentials_square_to_zero(self, D: DoubleComplex) -> list[str]:
        errors = []
        for p, q in sorted(D.dims):
            if not D.d_h(p - 1, q).matmul(D.d_h(p, q)).is_zero():
                errors.append(f"d_h squared is nonzero at ({p}, {q}).")
            if not D.d_v(p, q - 1).matmul(D.d_v(p, q)).is_zero():
                errors.append(f"d_v squared is nonzero at ({p}, {q}).")
        return errors

    def _validate_squares(self, D: DoubleComplex) -> list[str]:
        errors = []
        sign = 1 if D.anticommuting else -1
        for p, q in sorted(D.dims):
            hv = D.d_h(p, q - 1).matmul(D.d_v(p, q))
            vh = D.d_v(p - 1, q).matmul(D.d_h(p, q))
            if not hv.add(vh, sign).is_zero():
                kind = "anticommute" if D.anticommuting else "commute"
                errors.append(f"Differentials do not {kind} at ({p}, {q}).")
        return errors


def validate_double_complex(D: DoubleComplex) -> ValidationReport:
    return ValidationReport(DoubleComplexValidators().collect_errors(D))


def _total_layout(D: DoubleComplex) -> dict[int, list[tuple[int, int, int]]]:
    """Per total degree: (p, q, offset) blocks ordered by p."""
    layout: dict[int, list[tuple[int, int, int]]] = {}
    for n in D.total_degrees:
        offset = 0
        blocks = []
        for p, q in sorted(k for k in D.dims if sum(k) == n):
            blocks.append((p, q, offset))
            offset += D.dim(p, q)
        layout[n] = blocks
    return layout


def total_complex(D: DoubleComplex) -> ChainComplex:
    validate_double_complex(D).raise_if_failed(DoubleComplexValidators.get_subject_name())
    layout = _total_layout(D)
    dims = {n: sum(D.dim(p, q) for p, q, _ in blocks) for n, blocks in layout.items()}

    differentials = {}
    for n in D.total_degrees:
        if n - 1 not in layout:
            continue
        target_offsets = {(p, q): off for p, q, off in layout[n - 1]}
        data: dict[int, SparseRow] = {}

        def place(m: SparseRationalMatrix, row_off: int, col_off: int, sign: int) -> None:
            for r, row in m.row_data.items():
                target = data.setdefault(row_off + r, SparseRow())
                target.iadd_coef(sign, {col_off + c: v for c, v in row.items()})

        for p, q, col_off in layout[n]:
            if (p, q - 1) in target_offsets:
                place(D.d_v(p, q), target_offsets[(p, q - 1)], col_off, 1)
            if (p - 1, q) in target_offsets:
                sign = 1 if D.anticommuting else (-1) ** (q % 2)
                place(D.d_h(p, q), target_offsets[(p - 1, q)], col_off, sign)
        differentials[n] = SparseRationalMatrix(dims[n - 1], dims[n], {r: v for r, v in data.items() if v})

    total = ChainComplex(dims=dims, differentials=differentials, name="total complex")
    validate_complex(total).raise_if_failed(ChainComplexValidators.get_subject_name())
    return total


# ---------------------------------------------------------------------------
# filtered complexes and spectral sequences


@dataclass(frozen=True, eq=False)
class FilteredComplex:
    """A complex with an increasing filtration: basis element i of C_n sits in F_{levels[n][i]}.

    The differential never raises the level.
    """

    complex: ChainComplex
    levels: dict[int, list[int]]

    @cached_property
    def level_range(self) -> tuple[int, int]:
        values = [lv for lvs in self.levels.values() for lv in lvs]
        if not values:
            return (0, 0)
        return (min(values), max(values))


class FilteredComplexValidators(_BaseValidator):
    @staticmethod
    def get_subject_name() -> str:
        return "filtered complex"

    def _validate_level_lengths(self, F: FilteredComplex) -> list[str]:
        return [
            f"Degree {n} has {len(F.levels.get(n, []))} levels for {F.complex.dim(n)} basis elements."
            for n in F.complex.degrees
            if len(F.levels.get(n, [])) != F.complex.dim(n)
        ]

    def _validate_differential_preserves_filtration(self, F: FilteredComplex) -> list[str]:
        errors = []
        for n, d in sorted(F.complex.differentials.items()):
            if n - 1 not in F.levels or n not in F.levels:
                continue
            for (r, c) in sorted(d.entries):
                if F.levels[n - 1][r] > F.levels[n][c]:
                    errors.append(
                        f"d_{n} raises the filtration level of basis element {c} "
                        f"({F.levels[n][c]} -> {F.levels[n - 1][r]})."
                    )
                    break
        return errors


def column_filtration(D: DoubleComplex) -> FilteredComplex:
    """Total complex of D filtered by column index p."""
    total = total_complex(D)
    levels = {}
    for n, blocks in _total_layout(D).items():
        levels[n] = [p for p, q, _ in blocks for _ in range(D.dim(p, q))]
    return FilteredComplex(total, levels)


@dataclass(eq=False)
class SpectralPage:
    """Page E_r: dims keyed (p, n) with p the filtration level and n the total degree.

    `differentials[(p, n)]` is d_r : E_{p,n} -> E_{p-r,n-1} in the page bases.
    """

    r: int
    dims: dict[tuple[int, int], int]
    differentials: dict[tuple[int, int], SparseRationalMatrix]
    _bases: dict[tuple[int, int], QuotientBasis] = field(default_factory=dict, repr=False)

    def representatives(self, key: tuple[int, int]) -> list[SparseRow]:
        return self._bases[key].representatives if key in self._bases else []

    def coordinates(self, key: tuple[int, int], vector: Mapping[int, Fraction]) -> list[Fraction] | None:
        """Coordinates of a vector of Z^r_{p,n} in the page basis of E^r_{p,n}."""
        if key not in self._bases:
            return [] if not vector else None
        return self._bases[key].coordinates(vector)

    def total_dims(self) -> dict[int, int]:
        out: dict[int, int] = {}
        for (p, n), v in self.dims.items():
            out[n] = out.get(n, 0) + v
        return out


class _Subquotients:
    """Z^r_{p,n} spans of a filtered complex, cached per (r, p, n)."""

    def __init__(self, F: FilteredComplex):
        self.F = F
        self.C = F.complex
        self._cache: dict[tuple[int, int, int], list[SparseRow]] = {}

    def filtered_indices(self, p: int, n: int) -> list[int]:
        return [i for i, lv in enumerate(self.F.levels.get(n, [])) if lv <= p]

    def Z(self, r: int, p: int, n: int) -> list[SparseRow]:
        key = (r, p, n)
        if key in self._cache:
            return self._cache[key]
        cols = self.filtered_indices(p, n)
        if r < 0 or not cols:
            result = [SparseRow({i: 1}) for i in cols]
        else:
            rows = [i for i, lv in enumerate(self.F.levels.get(n - 1, [])) if lv > p - r]
            sub = self.C.differential(n).submatrix(rows, cols)
            _, kernel = rank_and_kernel(sub)
            result = [SparseRow((cols[j], v) for j, v in vec.items()) for vec in kernel]
        self._cache[key] = result
        return result

    def B(self, r: int, p: int, n: int) -> list[SparseRow]:
        d = self.C.differential(n + 1)
        boundaries = [d.matvec(z) for z in self.Z(r - 1, p + r - 1, n + 1)] if n + 1 in self.C.dims else []
        return self.Z(r - 1, p - 1, n) + [b for b in boundaries if b]


def spectral_sequence_pages(F: FilteredComplex, r_max: int) -> list[SpectralPage]:
    """Pages E_0 .. E_{r_max} from explicit Z/B subquotient bases."""
    FilteredComplexValidators().run_validators(F)
    validate_complex(F.complex).raise_if_failed(ChainComplexValidators.get_subject_name())
    spans = _Subquotients(F)
    lo, hi = F.level_range
    C = F.complex

    pages = []
    for r in range(r_max + 1):
        bases: dict[tuple[int, int], QuotientBasis] = {}
        for n in C.degrees:
            for p in range(lo, hi + 1):
                bases[(p, n)] = QuotientBasis(spans.B(r, p, n), spans.Z(r, p, n), C.dim(n))
        differentials = {}
        for (p, n), basis in bases.items():
            target = bases.get((p - r, n - 1))
            if target is None or not len(basis):
                continue
            d = C.differential(n)
            columns = []
            for rep in basis.representatives:
                coords = target.coordinates(d.matvec(rep))
                if coords is None:
                    raise CyclicEngineValidationError(
                        f"Boundary of a page representative at ({p}, {n}) left Z^{r}_{p - r},{n - 1}."
                    )
                columns.append({i: v for i, v in enumerate(coords) if v})
            differentials[(p, n)] = SparseRationalMatrix.from_columns(len(target), columns)
        page = SpectralPage(
            r=r,
            dims={key: len(b) for key, b in bases.items()},
            differentials=differentials,
            _bases=bases,
        )
        logger.info("E_%d total dims %s", r, page.total_dims())
        pages.append(page)
    return pages


def stabilization_page(F: FilteredComplex) -> int:
    """Index r from which every page equals E_infinity."""
    lo, hi = F.level_range
    return hi - lo + 1
