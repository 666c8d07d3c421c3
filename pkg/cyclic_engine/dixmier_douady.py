"""Projective cocycles on finite nerves and their integral degree 3 classes.

Unitaries are monomial matrices with N-th roots of unity as entries, stored as a
permutation and an exponent vector, so every computation here is exact integer work.
"""

import itertools
import logging
import random
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Iterable, Mapping, Sequence

from cyclic_engine.exact_linalg import IntegerMatrix, SmithForm, smith_normal_form, solve_integral
from cyclic_engine.validation import (
    CyclicEngineValidationError,
    ValidationReport,
    _BaseValidator,
)

logger = logging.getLogger(__name__)

Simplex = tuple[int, ...]
Edge = tuple[int, int]


# ---------------------------------------------------------------------------
# nerves


@dataclass(frozen=True, eq=False)
class Nerve:
    vertex_count: int
    simplices: frozenset[Simplex]
    name: str = ""

    @classmethod
    def from_maximal(cls, vertex_count: int, maximal: Iterable[Sequence[int]], name: str = "") -> "Nerve":
        faces: set[Simplex] = set()
        for simplex in maximal:
            ordered = tuple(sorted(simplex))
            for r in range(1, len(ordered) + 1):
                faces.update(itertools.combinations(ordered, r))
        nerve = cls(vertex_count, frozenset(faces), name)
        NerveValidators().run_validators(nerve)
        return nerve

    @cached_property
    def _by_dim(self) -> dict[int, list[Simplex]]:
        out: dict[int, list[Simplex]] = {}
        for s in self.simplices:
            out.setdefault(len(s) - 1, []).append(s)
        return {q: sorted(v) for q, v in out.items()}

    def of_dim(self, q: int) -> list[Simplex]:
        return self._by_dim.get(q, [])

    @property
    def dimension(self) -> int:
        return max(self._by_dim, default=-1)

    def __repr__(self) -> str:
        counts = [len(self.of_dim(q)) for q in range(self.dimension + 1)]
        return f"Nerve({self.name or 'unnamed'}, f-vector={counts})"


class NerveValidators(_BaseValidator):
    @staticmethod
    def get_subject_name() -> str:
        return "nerve"

    def _validate_vertices_in_range(self, nerve: Nerve) -> list[str]:
        bad = sorted(s for s in nerve.simplices if any(not 0 <= v < nerve.vertex_count for v in s))
        return [f"Simplex {bad[0]} uses a vertex outside 0..{nerve.vertex_count - 1}."] if bad else []

    def _validate_increasing_vertices(self, nerve: Nerve) -> list[str]:
        bad = sorted(s for s in nerve.simplices if list(s) != sorted(set(s)) or not s)
        return [f"Simplex {bad[0]} is not strictly increasing."] if bad else []

    def _validate_face_closure(self, nerve: Nerve) -> list[str]:
        for s in sorted(nerve.simplices):
            for i in range(len(s)):
                face = s[:i] + s[i + 1 :]
                if face and face not in nerve.simplices:
                    return [f"Face {face} of simplex {s} is missing."]
        return []


def boundary_of_simplex(d: int) -> Nerve:
    """The boundary of the d-simplex: all proper faces on d + 1 vertices."""
    return Nerve.from_maximal(d + 1, itertools.combinations(range(d + 1), d), name=f"boundary of simplex {d}")


def torus_grid(m: int) -> Nerve:
    """m x m grid on the torus, each square cut along its diagonal; vertex (a, b) has index a*m + b."""
    if m < 3:
        raise CyclicEngineValidationError(f"A torus grid needs m >= 3, got {m}.")

    def v(a: int, b: int) -> int:
        return (a % m) * m + (b % m)

    triangles = []
    for a, b in itertools.product(range(m), repeat=2):
        triangles.append((v(a, b), v(a + 1, b), v(a + 1, b + 1)))
        triangles.append((v(a, b), v(a, b + 1), v(a + 1, b + 1)))
    return Nerve.from_maximal(m * m, triangles, name=f"torus grid {m}x{m}")


def rp2_six_vertex() -> Nerve:
    triangles = [
        (1, 2, 3), (1, 3, 4), (1, 4, 5), (1, 5, 6), (1, 6, 2),
        (2, 3, 5), (3, 4, 6), (4, 5, 2), (5, 6, 3), (6, 2, 4),
    ]  # fmt: skip
    return Nerve.from_maximal(6, [tuple(v - 1 for v in t) for t in triangles], name="RP^2 (6 vertices)")


def suspension(nerve: Nerve) -> Nerve:
    """Cone the nerve from two new vertices."""
    top, bottom = nerve.vertex_count, nerve.vertex_count + 1
    maximal = [s + (apex,) for s in nerve.simplices for apex in (top, bottom)]
    return Nerve.from_maximal(nerve.vertex_count + 2, maximal, name=f"suspension of {nerve.name}")


# ---------------------------------------------------------------------------
# integral cochains


Cochain = dict[Simplex, int]


def coboundary_matrix(nerve: Nerve, q: int) -> IntegerMatrix:
    """delta : C^q -> C^{q+1}, rows indexed by (q+1)-simplices and columns by q-simplices."""
    columns = {s: j for j, s in enumerate(nerve.of_dim(q))}
    rows = nerve.of_dim(q + 1)
    entries = {}
    for r, s in enumerate(rows):
        for i in range(len(s)):
            entries[(r, columns[s[:i] + s[i + 1 :]])] = -1 if i % 2 else 1
    return IntegerMatrix(len(rows), len(columns), entries)


def coboundary(nerve: Nerve, f: Mapping[Simplex, int], q: int, modulus: int | None = None) -> Cochain:
    out = {}
    for s in nerve.of_dim(q + 1):
        value = sum((-1 if i % 2 else 1) * f.get(s[:i] + s[i + 1 :], 0) for i in range(len(s)))
        out[s] = value % modulus if modulus else value
    return out


def _vector(nerve: Nerve, f: Mapping[Simplex, int], q: int) -> list[int]:
    return [f.get(s, 0) for s in nerve.of_dim(q)]


# ---------------------------------------------------------------------------
# monomial unitaries


@dataclass(frozen=True)
class MonomialUnitary:
    """M[perm[j], j] = zeta^exps[j] with zeta a primitive N-th root of unity."""

    N: int
    perm: tuple[int, ...]
    exps: tuple[int, ...]

    def __post_init__(self) -> None:
        if sorted(self.perm) != list(range(len(self.perm))) or len(self.exps) != len(self.perm):
            raise CyclicEngineValidationError(f"{self.perm} is not a permutation matching its exponents.")
        object.__setattr__(self, "exps", tuple(e % self.N for e in self.exps))

    @classmethod
    def identity(cls, N: int, n: int) -> "MonomialUnitary":
        return cls(N, tuple(range(n)), (0,) * n)

    @property
    def size(self) -> int:
        return len(self.perm)

    def __matmul__(self, other: "MonomialUnitary") -> "MonomialUnitary":
        if self.N != other.N or self.size != other.size:
            raise CyclicEngineValidationError("Monomial unitaries of different shapes cannot be multiplied.")
        perm = tuple(self.perm[other.perm[j]] for j in range(self.size))
        exps = tuple(other.exps[j] + self.exps[other.perm[j]] for j in range(self.size))
        return MonomialUnitary(self.N, perm, exps)

    def inverse(self) -> "MonomialUnitary":
        perm = [0] * self.size
        exps = [0] * self.size
        for j, p in enumerate(self.perm):
            perm[p] = j
            exps[p] = -self.exps[j]
        return MonomialUnitary(self.N, tuple(perm), tuple(exps))

    def power(self, k: int) -> "MonomialUnitary":
        base = self if k >= 0 else self.inverse()
        out = MonomialUnitary.identity(self.N, self.size)
        for _ in range(abs(k)):
            out = out @ base
        return out

    def scaled(self, k: int) -> "MonomialUnitary":
        return MonomialUnitary(self.N, self.perm, tuple(e + k for e in self.exps))

    def scalar_exponent(self) -> int | None:
        """k when the matrix is zeta^k times the identity."""
        if self.perm != tuple(range(self.size)) or len(set(self.exps)) != 1:
            return None
        return self.exps[0]

    def canonical(self) -> "MonomialUnitary":
        """The representative of the projective class whose first column entry has exponent 0."""
        return self.scaled(-self.exps[0])


def clock(N: int) -> MonomialUnitary:
    return MonomialUnitary(N, tuple(range(N)), tuple(range(N)))


def shift(N: int) -> MonomialUnitary:
    return MonomialUnitary(N, tuple((j + 1) % N for j in range(N)), (0,) * N)


# ---------------------------------------------------------------------------
# projective cocycles


@dataclass(frozen=True, eq=False)
class ProjectiveCocycle:
    """g_ij for every edge i < j of the nerve, up to scalars; g_ji is the inverse."""

    N: int
    n: int
    nerve: Nerve
    edges: dict[Edge, MonomialUnitary] = field(default_factory=dict)

    def g(self, i: int, j: int) -> MonomialUnitary:
        if i < j:
            return self.edges[(i, j)]
        return self.edges[(j, i)].inverse()


class ProjectiveCocycleValidators(_BaseValidator):
    @staticmethod
    def get_subject_name() -> str:
        return "projective cocycle"

    def _validate_edges_match_nerve(self, g: ProjectiveCocycle) -> list[str]:
        nerve_edges = set(g.nerve.of_dim(1))
        errors = []
        missing = sorted(nerve_edges - set(g.edges))
        if missing:
            errors.append(f"Edge {missing[0]} has no transition unitary.")
        extra = sorted(set(g.edges) - nerve_edges)
        if extra:
            errors.append(f"Edge {extra[0]} is not in the nerve.")
        shapes = sorted(e for e, u in g.edges.items() if u.N != g.N or u.size != g.n)
        if shapes:
            errors.append(f"Edge {shapes[0]} carries a unitary of the wrong size or root order.")
        return errors

    def _validate_triangle_condition(self, g: ProjectiveCocycle) -> list[str]:
        for i, j, k in g.nerve.of_dim(2):
            if not {(i, j), (j, k), (i, k)} <= set(g.edges):
                continue
            if (g.g(i, k).inverse() @ g.g(i, j) @ g.g(j, k)).scalar_exponent() is None:
                return [f"g_ij g_jk differs from g_ik by a non-scalar on triangle {(i, j, k)}."]
        return []


def check_pu_cocycle(g: ProjectiveCocycle) -> ValidationReport:
    return ValidationReport(ProjectiveCocycleValidators().collect_errors(g, stop_at_first=True))


def trivial_cocycle(nerve: Nerve, N: int, n: int) -> ProjectiveCocycle:
    identity = MonomialUnitary.identity(N, n)
    return ProjectiveCocycle(N, n, nerve, {e: identity for e in nerve.of_dim(1)})  # type: ignore[misc]


def coboundary_cocycle(nerve: Nerve, vertex_labels: Mapping[int, MonomialUnitary]) -> ProjectiveCocycle:
    """g_ij = h_i^-1 h_j, which lifts to an honest unitary cocycle."""
    sample = next(iter(vertex_labels.values()))
    edges = {(i, j): vertex_labels[i].inverse() @ vertex_labels[j] for i, j in nerve.of_dim(1)}  # type: ignore[misc]
    return ProjectiveCocycle(sample.N, sample.size, nerve, edges)


def clock_shift_triangle(N: int) -> ProjectiveCocycle:
    """One triangle with g_01 = C, g_12 = S and g_02 = CS."""
    C, S = clock(N), shift(N)
    return ProjectiveCocycle(N, N, Nerve.from_maximal(3, [(0, 1, 2)], name="triangle"), {(0, 1): C, (1, 2): S, (0, 2): C @ S})


def heisenberg_torus_cocycle(N: int, m: int = 3) -> ProjectiveCocycle:
    """g = C^a S^b on the torus grid, where (a, b) counts seam crossings of the edge."""
    nerve = torus_grid(m)
    C, S = clock(N), shift(N)

    def crossing(x: int, y: int) -> int:
        if y - x == -(m - 1):
            return 1
        if y - x == m - 1:
            return -1
        return 0

    edges = {}
    for v, w in nerve.of_dim(1):  # type: ignore[misc]
        (a1, b1), (a2, b2) = divmod(v, m), divmod(w, m)
        edges[(v, w)] = C.power(crossing(a1, a2)) @ S.power(crossing(b1, b2))
    return ProjectiveCocycle(N, N, nerve, edges)


# ---------------------------------------------------------------------------
# lifts, epsilon and the integral 3-cocycle


LiftRule = Callable[[Edge, MonomialUnitary], MonomialUnitary]


def canonical_lift(edge: Edge, unitary: MonomialUnitary) -> MonomialUnitary:
    return unitary.canonical()


def random_relift(rng: random.Random, N: int) -> LiftRule:
    """A lift rule multiplying the canonical lift of each edge by its own random root of unity."""
    chosen: dict[Edge, int] = {}

    def rule(edge: Edge, unitary: MonomialUnitary) -> MonomialUnitary:
        if edge not in chosen:
            chosen[edge] = rng.randrange(N)
        return unitary.canonical().scaled(chosen[edge])

    return rule


def epsilon_from_lifts(g: ProjectiveCocycle, lift_rule: LiftRule = canonical_lift) -> Cochain:
    """epsilon_ijk with lift(g_ij) lift(g_jk) = lift(g_ik) zeta^epsilon_ijk, as exponents mod N."""
    check_pu_cocycle(g).raise_if_failed(ProjectiveCocycleValidators.get_subject_name())
    lifts = {e: lift_rule(e, g.edges[e]) for e in sorted(g.edges)}
    epsilon = {}
    for i, j, k in g.nerve.of_dim(2):
        value = (lifts[(i, k)].inverse() @ lifts[(i, j)] @ lifts[(j, k)]).scalar_exponent()
        if value is None:
            raise CyclicEngineValidationError(f"Lifted product on triangle {(i, j, k)} is not a scalar.")
        epsilon[(i, j, k)] = value
    bad = [s for s, v in coboundary(g.nerve, epsilon, 2, modulus=g.N).items() if v]
    if bad:
        raise CyclicEngineValidationError(f"epsilon is not a cocycle mod {g.N} on {bad[0]}.")
    return epsilon


def random_coboundary_shift(nerve: Nerve, epsilon: Mapping[Simplex, int], N: int, rng: random.Random) -> Cochain:
    """epsilon + delta(f) mod N for a random Z/N 1-cochain f."""
    f = {e: rng.randrange(N) for e in nerve.of_dim(1)}
    shift_by = coboundary(nerve, f, 1)
    return {s: (epsilon.get(s, 0) + shift_by[s]) % N for s in nerve.of_dim(2)}


def dd_cocycle(nerve: Nerve, epsilon: Mapping[Simplex, int], N: int) -> Cochain:
    """n_ijkl = w_jkl - w_ikl + w_ijl - w_ijk with w = epsilon / N taken in [0, 1)."""
    normalized = {s: epsilon.get(s, 0) % N for s in nerve.of_dim(2)}
    n = {}
    for s, value in coboundary(nerve, normalized, 2).items():
        if value % N:
            raise CyclicEngineValidationError(f"epsilon is not a cocycle mod {N} on {s}.")
        n[s] = value // N
    bad = [s for s, v in coboundary(nerve, n, 3).items() if v]
    if bad:
        raise CyclicEngineValidationError(f"delta n is not zero on {bad[0]}.")
    return n


def epsilon_is_coboundary(nerve: Nerve, epsilon: Mapping[Simplex, int], N: int) -> bool:
    """Whether epsilon = delta f mod N for some Z/N 1-cochain f, i.e. whether the lifts can be fixed."""
    delta = coboundary_matrix(nerve, 1)
    rows = delta.rows
    entries = dict(delta.entries)
    for r in range(rows):
        entries[(r, delta.cols + r)] = N
    augmented = IntegerMatrix(rows, delta.cols + rows, entries)
    return solve_integral(augmented, _vector(nerve, epsilon, 2)) is not None


def torsion_epsilon(nerve: Nerve, N: int) -> Cochain:
    """A Z/N 2-cocycle whose integral class is a nonzero torsion element of order dividing N."""
    snf = smith_normal_form(coboundary_matrix(nerve, 2))
    for i, d in enumerate(snf.invariant_factors):
        if d > 1 and N % d == 0:
            w = [0] * snf.V.cols
            w[i] = N // d
            x = snf.V.matvec(w)
            return {s: x[pos] % N for pos, s in enumerate(nerve.of_dim(2))}
    raise CyclicEngineValidationError(f"{nerve.name} has no torsion in degree 3 of order dividing {N}.")


# ---------------------------------------------------------------------------
# classes in H^3


@dataclass(frozen=True)
class ClassCoordinates:
    torsion: tuple[tuple[int, int], ...]  # (value, order)
    free: tuple[int, ...]

    def is_zero(self) -> bool:
        return all(v == 0 for v, _ in self.torsion) and all(v == 0 for v in self.free)


@dataclass(frozen=True)
class ClassComparison:
    equal: bool
    first: ClassCoordinates
    second: ClassCoordinates
    invariant_factors: tuple[int, ...]


def _degree3_snf(nerve: Nerve) -> SmithForm:
    snf = smith_normal_form(coboundary_matrix(nerve, 2))
    # fix the sign of each free row so coordinates do not depend on elimination order
    U = snf.U.to_dense()
    for i in range(snf.rank, len(U)):
        first = next((v for v in U[i] if v), 0)
        if first < 0:
            U[i] = [-v for v in U[i]]
    return SmithForm(snf.D, IntegerMatrix.from_dense(U), snf.V, snf.invariant_factors)


def class_coordinates(nerve: Nerve, n: Mapping[Simplex, int], snf: SmithForm | None = None) -> ClassCoordinates:
    snf = snf or _degree3_snf(nerve)
    y = snf.U.matvec(_vector(nerve, n, 3))
    torsion = tuple((y[i] % d, d) for i, d in enumerate(snf.invariant_factors) if d > 1)
    return ClassCoordinates(torsion=torsion, free=tuple(y[snf.rank :]))


def validate_three_cocycle(nerve: Nerve, n: Mapping[Simplex, int]) -> None:
    unknown = sorted(s for s in n if s not in nerve.simplices or len(s) != 4)
    if unknown:
        raise CyclicEngineValidationError(f"{unknown[0]} is not a 3-simplex of {nerve.name}.")
    bad = [s for s, v in coboundary(nerve, n, 3).items() if v]
    if bad:
        raise CyclicEngineValidationError(f"Not a cocycle: delta n is nonzero on {bad[0]}.")


def class_compare(n1: Mapping[Simplex, int], n2: Mapping[Simplex, int], nerve: Nerve) -> ClassComparison:
    """Decides whether n1 - n2 is an integral coboundary and reports both classes."""
    validate_three_cocycle(nerve, n1)
    validate_three_cocycle(nerve, n2)
    snf = _degree3_snf(nerve)
    difference = [a - b for a, b in zip(_vector(nerve, n1, 3), _vector(nerve, n2, 3))]
    equal = solve_integral(coboundary_matrix(nerve, 2), difference, snf) is not None
    result = ClassComparison(
        equal=equal,
        first=class_coordinates(nerve, n1, snf),
        second=class_coordinates(nerve, n2, snf),
        invariant_factors=snf.invariant_factors,
    )
    logger.info("Class comparison on %s: equal=%s (%s vs %s)", nerve.name, equal, result.first, result.second)
    return result


def torsion_bound_check(nerve: Nerve, n: Mapping[Simplex, int], N: int) -> bool:
    """N n is an integral coboundary."""
    scaled = {s: N * v for s, v in n.items()}
    return class_compare(scaled, {}, nerve).equal
