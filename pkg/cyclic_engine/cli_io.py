"""Command line surface: JSON input schemas, subcommand dispatch and reports.

Rationals in every input file are written as `[index, numerator, denominator]` triples.
Bare fixture names such as `m2.json` resolve against the bundled fixtures directory
when no such file exists on disk.
"""

import argparse
import json
import logging
import os
import random
import sys
import time
from fractions import Fraction
from importlib import metadata, resources
from pathlib import Path
from typing import Any, Callable, Literal

from pydantic import BaseModel, ConfigDict, Field, InstanceOf, ValidationError, model_validator

from cyclic_engine.algebra_model import (
    AlgebraValidators,
    FDAlgebra,
    build_algebra,
    kaehler_differentials,
    matrix_algebra,
    validate_algebra,
)
from cyclic_engine.chern import (
    chern_even,
    chern_even_invariance,
    chern_odd,
    chain_algebra,
    conjugate_pair,
    connection_fixture,
    hkr_trace_comparison,
    homotopy_check,
    jlo_chain_map_check,
    linear_path,
    random_conjugate_pair,
    random_unipotent,
    trace_pattern,
)
from cyclic_engine.cyclic_homology import (
    cyclic_homology,
    hochschild_homology,
    periodic_cyclic_homology,
    random_chain,
)
from cyclic_engine.dixmier_douady import (
    ClassCoordinates,
    MonomialUnitary,
    Nerve,
    ProjectiveCocycle,
    ProjectiveCocycleValidators,
    check_pu_cocycle,
    class_compare,
    coboundary,
    dd_cocycle,
    epsilon_from_lifts,
    epsilon_is_coboundary,
    random_relift,
    suspension,
    torsion_bound_check,
    torsion_epsilon,
)
from cyclic_engine.exact_linalg import SparseRow
from cyclic_engine.options import default_engine_options, engine_options, resolve_engine_options
from cyclic_engine.selftest import run_selftest
from cyclic_engine.twisted_cdga import (
    CDGAModel,
    build_cdga,
    cup_with_twist_check,
    degree_zero_algebra,
    dual_numbers_de_rham,
    exterior_model,
    twisted_cohomology,
    u_filtration_spectral_sequence,
    untwisted_cohomology,
    validate_twist,
)
from cyclic_engine.validation import CyclicEngineValidationError, ResourceCapError

logger = logging.getLogger(__name__)

FIXTURES_PACKAGE = "cyclic_engine"
FIXTURES_DIR = "fixtures"

COMMANDS = ("hh", "hc", "hp", "twisted", "ss", "chern", "jlo", "homotopy", "dd", "class-compare", "selftest")


# ---------------------------------------------------------------------------
# input schemas


RationalTerm = tuple[int, int, int]


def _as_row(terms: list[RationalTerm]) -> SparseRow:
    row = SparseRow()
    for index, num, den in terms:
        row.iadd_coef(Fraction(num, den), {index: 1})
    return row


def _check_denominators(terms: list[RationalTerm]) -> None:
    if any(den <= 0 for _, _, den in terms):
        raise ValueError("denominators must be positive")


class _Schema(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class AlgebraSpec(_Schema):
    """Structure constants of a finite-dimensional algebra, optionally taken as n x n matrices."""

    name: str = ""
    labels: list[str] = Field(min_length=1)
    unit: list[RationalTerm] | None = None
    products: list[tuple[int, int, list[RationalTerm]]] = Field(default_factory=list)
    matrix_size: int = Field(default=1, ge=1)

    @model_validator(mode="after")
    def _indices_in_range(self) -> "AlgebraSpec":
        dim = len(self.labels)
        for i, j, terms in self.products:
            _check_denominators(terms)
            if not (0 <= i < dim and 0 <= j < dim) or any(not 0 <= k < dim for k, _, _ in terms):
                raise ValueError(f"product entry ({i}, {j}) refers to a basis index outside 0..{dim - 1}")
        if self.unit is not None:
            _check_denominators(self.unit)
        return self

    def build(self) -> FDAlgebra:
        products = {(i, j): _as_row(terms) for i, j, terms in self.products}
        unit = _as_row(self.unit) if self.unit is not None else None
        base = build_algebra(self.labels, products, unit, name=self.name)
        validate_algebra(base).raise_if_failed(AlgebraValidators.get_subject_name())
        return matrix_algebra(base, self.matrix_size) if self.matrix_size > 1 else base


class CDGASpec(_Schema):
    """Either exterior generators with degrees, or an explicit basis with product and differential tables."""

    name: str = ""
    generators: list[tuple[str, int]] | None = None
    labels: list[str] | None = None
    degrees: list[int] | None = None
    unit: int = 0
    products: list[tuple[int, int, list[RationalTerm]]] = Field(default_factory=list)
    differential: list[tuple[int, list[RationalTerm]]] = Field(default_factory=list)
    twist: list[tuple[str, int, int]] = Field(default_factory=list)

    @model_validator(mode="after")
    def _one_presentation(self) -> "CDGASpec":
        if (self.generators is None) == (self.labels is None):
            raise ValueError("give exactly one of `generators` or `labels`")
        if self.labels is not None and (self.degrees is None or len(self.degrees) != len(self.labels)):
            raise ValueError("`degrees` must list one degree per label")
        for _, _, terms in self.products:
            _check_denominators(terms)
        for _, terms in self.differential:
            _check_denominators(terms)
        if any(den <= 0 for _, _, den in self.twist):
            raise ValueError("denominators must be positive")
        return self

    def build(self) -> CDGAModel:
        if self.generators is not None:
            return exterior_model(self.generators, name=self.name)
        assert self.labels is not None and self.degrees is not None
        return build_cdga(
            self.labels,
            self.degrees,
            {(i, j): _as_row(terms) for i, j, terms in self.products},
            {i: _as_row(terms) for i, terms in self.differential},
            unit=self.unit,
            name=self.name,
        )

    def default_twist(self, model: CDGAModel) -> SparseRow:
        return _element(model, {label: Fraction(num, den) for label, num, den in self.twist})


class NerveSpec(_Schema):
    name: str = ""
    vertices: int = Field(ge=1)
    maximal_simplices: list[list[int]]
    suspensions: int = Field(default=0, ge=0)

    def build(self) -> Nerve:
        nerve = Nerve.from_maximal(self.vertices, self.maximal_simplices, name=self.name)
        for _ in range(self.suspensions):
            nerve = suspension(nerve)
        return nerve


class CocycleSpec(_Schema):
    """Transition unitaries [i, j, permutation, exponents] with i < j on the edges of the nerve."""

    N: int = Field(ge=1)
    n: int = Field(ge=1)
    nerve: NerveSpec
    edges: list[tuple[int, int, list[int], list[int]]]

    def build(self) -> ProjectiveCocycle:
        nerve = self.nerve.build()
        edges = {(i, j): MonomialUnitary(self.N, tuple(perm), tuple(exps)) for i, j, perm, exps in self.edges}
        g = ProjectiveCocycle(self.N, self.n, nerve, edges)
        check_pu_cocycle(g).raise_if_failed(ProjectiveCocycleValidators.get_subject_name())
        return g


class CochainSpec(_Schema):
    """Integral 3-cochain given by its values on 3-simplices."""

    nerve: NerveSpec
    values: list[tuple[list[int], int]]

    def build(self) -> tuple[Nerve, dict[tuple[int, ...], int]]:
        return self.nerve.build(), {tuple(s): v for s, v in self.values}


def _element(model: CDGAModel, terms: dict[str, Fraction]) -> SparseRow:
    unknown = sorted(set(terms) - set(model.label_index))
    if unknown:
        raise CyclicEngineValidationError(f"`{unknown[0]}` is not a basis label of {model.name or 'the model'}.")
    return model.element(terms)


def parse_twist(model: CDGAModel, text: str) -> SparseRow:
    """`x3`, `2*b3`, `-1/2*a2b3 + x3` style sums of basis labels; `0` is the zero twist."""
    terms: dict[str, Fraction] = {}
    for raw in text.replace("-", "+-").split("+"):
        part = raw.strip()
        if not part or part == "0":
            continue
        if "*" in part:
            coef, label = part.split("*", 1)
        elif part.startswith("-"):
            coef, label = "-1", part[1:]
        else:
            coef, label = "1", part
        try:
            value = Fraction(coef.replace(" ", ""))
        except ValueError:
            raise CyclicEngineValidationError(f"Cannot read the coefficient of `{part}` in twist `{text}`.")
        label = label.strip()
        terms[label] = terms.get(label, Fraction(0)) + value
    return _element(model, terms)


# ---------------------------------------------------------------------------
# loading


def resolve_path(name: str) -> Path:
    path = Path(name)
    if path.exists():
        return path
    bundled = resources.files(FIXTURES_PACKAGE) / FIXTURES_DIR / name
    if bundled.is_file():
        return Path(str(bundled))
    raise CyclicEngineValidationError(f"Input file `{name}` does not exist and is not a bundled fixture.")


def _read_json(name: str) -> dict[str, Any]:
    path = resolve_path(name)
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise CyclicEngineValidationError(f"{path}: not readable ({exc}).")
    except json.JSONDecodeError as exc:
        raise CyclicEngineValidationError(f"{path}: invalid JSON ({exc}).")
    if not isinstance(payload, dict):
        raise CyclicEngineValidationError(f"{path}: must contain a JSON object.")
    return payload


def _load(name: str, schema: type[_Schema]) -> Any:
    payload = _read_json(name)
    try:
        return schema.model_validate(payload)
    except ValidationError as exc:
        errors = [f"{name}: {'.'.join(str(p) for p in e['loc']) or '<root>'}: {e['msg']}" for e in exc.errors()]
        raise CyclicEngineValidationError(f"Schema violation in {name}: {errors[0]}", error_msgs=errors)


def load_algebra(name: str) -> FDAlgebra:
    return _load(name, AlgebraSpec).build()


def load_cdga(name: str) -> tuple[CDGAModel, SparseRow]:
    spec: CDGASpec = _load(name, CDGASpec)
    model = spec.build()
    return model, spec.default_twist(model)


def load_nerve(name: str) -> Nerve:
    return _load(name, NerveSpec).build()


def load_cocycle(name: str) -> ProjectiveCocycle:
    return _load(name, CocycleSpec).build()


def load_three_cochain(name: str) -> tuple[Nerve, dict[tuple[int, ...], int]]:
    """An integral 3-cocycle, either written out or as the class of a projective cocycle."""
    if "edges" in _read_json(name):
        g = load_cocycle(name)
        return g.nerve, dd_cocycle(g.nerve, epsilon_from_lifts(g), g.N)
    return _load(name, CochainSpec).build()


class ParsedInputs(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    algebra: InstanceOf[FDAlgebra] | None = None
    cdga: InstanceOf[CDGAModel] | None = None
    twist: InstanceOf[SparseRow] | None = None
    cocycle: InstanceOf[ProjectiveCocycle] | None = None
    nerve: InstanceOf[Nerve] | None = None


# ---------------------------------------------------------------------------
# configuration and reports


class RunConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    command: Literal[
        "hh", "hc", "hp", "twisted", "ss", "chern", "jlo", "homotopy", "dd", "class-compare", "selftest"
    ]
    algebra: str | None = None
    cdga: str | None = None
    twist: str | None = None
    cocycle: str | None = None
    nerve: str | None = None
    first: str | None = None
    second: str | None = None
    torsion: int | None = Field(default=None, ge=2)
    max_degree: int = Field(default=4, ge=1)
    window: int = Field(default=6, ge=2)
    pages: int | None = Field(default=None, ge=1)
    samples: int = Field(default=10, ge=1)
    matrix_size: int = Field(default=2, ge=1)
    seed: int = default_engine_options["seed"]
    cap: int | None = Field(default=None, ge=1)
    out: str | None = None
    format: Literal["json", "text"] = "json"
    record_timing: bool = False


class TableRow(BaseModel):
    table: str
    degree: int
    dim: int | None
    certified: bool
    form_degree: int | None = None


class PropertyTally(BaseModel):
    name: str
    checked: int
    failures: int


class ClassRecord(BaseModel):
    name: str
    torsion: list[tuple[int, int]]
    free: list[int]

    @classmethod
    def from_coordinates(cls, name: str, coordinates: ClassCoordinates) -> "ClassRecord":
        return cls(name=name, torsion=list(coordinates.torsion), free=list(coordinates.free))


class Report(BaseModel):
    tool: str = "cyclic_engine"
    version: str
    config: RunConfig
    tables: list[TableRow] = Field(default_factory=list)
    properties: list[PropertyTally] = Field(default_factory=list)
    classes: list[ClassRecord] = Field(default_factory=list)
    flags: dict[str, bool] = Field(default_factory=dict)
    notes: list[str] = Field(default_factory=list)
    timing_seconds: float | None = None

    @property
    def failures(self) -> int:
        return sum(p.failures for p in self.properties)

    def add_table(self, table: str, dims: dict[int, int], certified: dict[int, bool] | bool = True) -> None:
        for degree, dim in sorted(dims.items()):
            flag = certified if isinstance(certified, bool) else certified[degree]
            self.tables.append(TableRow(table=table, degree=degree, dim=dim, certified=flag))

    def tally(self, name: str, checked: int, failures: int) -> None:
        self.properties.append(PropertyTally(name=name, checked=checked, failures=failures))


def _version() -> str:
    try:
        return metadata.version("cyclic_engine")
    except metadata.PackageNotFoundError:
        return "0.0.0+local"


# ---------------------------------------------------------------------------
# commands


Handler = Callable[[RunConfig, ParsedInputs, Report, random.Random], None]
_HANDLERS: dict[str, Handler] = {}


def command(name: str) -> Callable[[Handler], Handler]:
    def register(fn: Handler) -> Handler:
        _HANDLERS[name] = fn
        return fn

    return register


def _require(value: Any, flag: str, cfg: RunConfig) -> Any:
    if value is None:
        raise CyclicEngineValidationError(f"`{cfg.command}` needs `{flag}`.")
    return value


@command("hh")
def _run_hh(cfg: RunConfig, inputs: ParsedInputs, report: Report, rng: random.Random) -> None:
    A: FDAlgebra = _require(inputs.algebra, "--algebra", cfg)
    table = hochschild_homology(A, cfg.max_degree, cfg.cap)
    report.add_table("HH", table.dims, table.certified)
    if A.is_commutative and A.unit is not None:
        report.add_table("Omega", {k: kaehler_differentials(A, k).dim for k in range(cfg.max_degree)})


@command("hc")
def _run_hc(cfg: RunConfig, inputs: ParsedInputs, report: Report, rng: random.Random) -> None:
    table = cyclic_homology(_require(inputs.algebra, "--algebra", cfg), cfg.max_degree, cfg.cap)
    report.add_table("HC", table.dims, table.certified)


@command("hp")
def _run_hp(cfg: RunConfig, inputs: ParsedInputs, report: Report, rng: random.Random) -> None:
    result = periodic_cyclic_homology(_require(inputs.algebra, "--algebra", cfg), cfg.max_degree, cfg.cap)
    for parity, name in ((0, "even"), (1, "odd")):
        value = result.even if parity == 0 else result.odd
        report.tables.append(TableRow(table="HP", degree=parity, dim=value, certified=result.stabilized))
        for cutoff, dims in sorted(result.runs.items()):
            report.notes.append(f"HP_{name} at tensor cutoff {cutoff}: {dims[parity]}")
    report.flags["stabilized"] = result.stabilized


@command("twisted")
def _run_twisted(cfg: RunConfig, inputs: ParsedInputs, report: Report, rng: random.Random) -> None:
    model: CDGAModel = _require(inputs.cdga, "--cdga", cfg)
    c = inputs.twist if inputs.twist is not None else SparseRow()
    result = twisted_cohomology(model, c, cfg.window)
    report.add_table("H_twisted", result.dims, result.certified)
    report.add_table("H_untwisted", untwisted_cohomology(model))
    report.flags["stabilized"] = result.stabilized
    report.notes.append(f"twist {model.describe(c) if c else '0'}; windows {result.windows}")


@command("ss")
def _run_ss(cfg: RunConfig, inputs: ParsedInputs, report: Report, rng: random.Random) -> None:
    model: CDGAModel = _require(inputs.cdga, "--cdga", cfg)
    c = inputs.twist if inputs.twist is not None else SparseRow()
    ss = u_filtration_spectral_sequence(model, c, cfg.window, cfg.pages)
    for r in range(2, len(ss.pages)):
        for (q, n), dim in sorted(ss.page_dims(r).items()):
            report.tables.append(TableRow(table=f"E{r}", degree=n, dim=dim, certified=True, form_degree=q))
    cup = cup_with_twist_check(ss)
    report.tally("third differential is minus cup product with the twist", cup.checked, len(cup.mismatches))
    twisted = twisted_cohomology(model, c, cfg.window).certified_dims()
    limit = ss.e_infinity_totals()
    report.flags["e_infinity_matches_twisted"] = all(limit.get(n) == v for n, v in twisted.items() if n in limit)


@command("chern")
def _run_chern(cfg: RunConfig, inputs: ParsedInputs, report: Report, rng: random.Random) -> None:
    A: FDAlgebra = _require(inputs.algebra, "--algebra", cfg)
    n = cfg.matrix_size
    closed_even = closed_odd = degree0 = invariant = 0
    notes: set[str] = set()
    for sample in range(cfg.samples):
        pair = random_conjugate_pair(A, n, rng)
        even = chern_even(pair, cfg.max_degree)
        closed_even += not even.is_closed()
        degree0 += even.component(0).coefficients != trace_pattern([pair.P - pair.Q])
        odd = chern_odd(random_unipotent(A, n, rng), cfg.max_degree + 1)
        closed_odd += not odd.is_closed()
        notes.update(f"even: {s}" for s in even.substitutions)
        notes.update(f"odd: {s}" for s in odd.substitutions)
        if sample < 2:
            moved = conjugate_pair(pair, random_unipotent(A, n, rng))
            invariant += not chern_even_invariance(pair, moved, cfg.max_degree).exact
    report.tally("even character is (b + uB)-closed", cfg.samples, closed_even)
    report.tally("odd character is (b + uB)-closed", cfg.samples, closed_odd)
    report.tally("degree 0 of the even character is tr(P - Q)", cfg.samples, degree0)
    report.tally("conjugation changes the even character by a boundary", min(cfg.samples, 2), invariant)
    report.notes.extend(sorted(notes))


def _chains(A: FDAlgebra, cfg: RunConfig, rng: random.Random, top: int) -> list:
    return [random_chain(A, sample % (top + 1), rng) for sample in range(cfg.samples)]


@command("jlo")
def _run_jlo(cfg: RunConfig, inputs: ParsedInputs, report: Report, rng: random.Random) -> None:
    datum = connection_fixture(rng, cfg.matrix_size)
    A = chain_algebra(datum)
    check = jlo_chain_map_check(datum, _chains(A, cfg, rng, min(cfg.max_degree, 3)))
    report.tally("Ch((b + uB) x) = (u d - u^2 c) Ch(x)", check.checked, check.failures)

    model = dual_numbers_de_rham()
    MA = matrix_algebra(degree_zero_algebra(model), cfg.matrix_size)
    reduction = hkr_trace_comparison(model, cfg.matrix_size, _chains(MA, cfg, rng, min(cfg.max_degree, 2)))
    report.tally("trivial connection reduces to HKR of the trace", reduction.checked, reduction.failures)
    report.notes.append(f"connection datum {datum.name}")


@command("homotopy")
def _run_homotopy(cfg: RunConfig, inputs: ParsedInputs, report: Report, rng: random.Random) -> None:
    datum = connection_fixture(rng, cfg.matrix_size)
    path = linear_path(datum, rng)
    A = chain_algebra(datum)
    check = homotopy_check(path, _chains(A, cfg, rng, min(cfg.max_degree, 2)))
    report.tally("e^(-u beta) Ch(nabla_1) - Ch(nabla_0) = K(b + uB) + (u d - u^2 c) K", check.checked, check.failures)
    report.tally("u^0 reduction of the homotopy formula", check.checked, check.reduced_failures)


@command("dd")
def _run_dd(cfg: RunConfig, inputs: ParsedInputs, report: Report, rng: random.Random) -> None:
    g = inputs.cocycle
    if g is not None:
        nerve, N = g.nerve, g.N
        epsilon = epsilon_from_lifts(g)
    elif inputs.nerve is not None and cfg.torsion is not None:
        nerve, N = inputs.nerve, cfg.torsion
        epsilon = torsion_epsilon(nerve, N)
        report.notes.append(f"epsilon synthesized from torsion of order dividing {N}")
    else:
        raise CyclicEngineValidationError("`dd` needs `--cocycle`, or `--nerve` together with `--torsion`.")

    n = dd_cocycle(nerve, epsilon, N)
    report.flags["delta_epsilon_zero_mod_N"] = not any(coboundary(nerve, epsilon, 2, modulus=N).values())
    report.flags["delta_n_zero"] = not any(coboundary(nerve, n, 3).values())
    report.flags["liftable"] = epsilon_is_coboundary(nerve, epsilon, N)

    comparison = class_compare(n, {}, nerve)
    report.classes.append(ClassRecord.from_coordinates("DD", comparison.first))
    report.flags["class_is_zero"] = comparison.equal
    report.notes.append(f"invariant factors of delta_2 on {nerve.name}: {list(comparison.invariant_factors)}")
    report.tally("N times the class is zero", 1, int(not torsion_bound_check(nerve, n, N)))
    if g is not None:
        failures = 0
        for _ in range(cfg.samples):
            other = dd_cocycle(nerve, epsilon_from_lifts(g, random_relift(rng, N)), N)
            failures += not class_compare(other, n, nerve).equal
        report.tally("class is independent of the lifts", cfg.samples, failures)


@command("class-compare")
def _run_class_compare(cfg: RunConfig, inputs: ParsedInputs, report: Report, rng: random.Random) -> None:
    nerve1, n1 = load_three_cochain(_require(cfg.first, "--first", cfg))
    nerve2, n2 = load_three_cochain(_require(cfg.second, "--second", cfg))
    if nerve1.vertex_count != nerve2.vertex_count or nerve1.simplices != nerve2.simplices:
        raise CyclicEngineValidationError("The two cochains live on different nerves.")
    comparison = class_compare(n1, n2, nerve1)
    report.classes.append(ClassRecord.from_coordinates("first", comparison.first))
    report.classes.append(ClassRecord.from_coordinates("second", comparison.second))
    report.flags["equal"] = comparison.equal


@command("selftest")
def _run_selftest(cfg: RunConfig, inputs: ParsedInputs, report: Report, rng: random.Random) -> None:
    for result in run_selftest(cfg.seed, cfg.samples):
        report.tally(result.name, result.checked, result.failures)


def parse_inputs(cfg: RunConfig) -> ParsedInputs:
    """Loads and validates every input file the configuration names."""
    cdga, twist = (None, None)
    if cfg.cdga is not None:
        cdga, twist = load_cdga(cfg.cdga)
        if cfg.twist is not None:
            twist = parse_twist(cdga, cfg.twist)
        validate_twist(cdga, twist)
    return ParsedInputs(
        algebra=load_algebra(cfg.algebra) if cfg.algebra is not None else None,
        cdga=cdga,
        twist=twist,
        cocycle=load_cocycle(cfg.cocycle) if cfg.cocycle is not None else None,
        nerve=load_nerve(cfg.nerve) if cfg.nerve is not None else None,
    )


def run_command(cfg: RunConfig, inputs: ParsedInputs | None = None) -> Report:
    report = Report(version=_version(), config=cfg)
    started = time.perf_counter()
    with engine_options(resolve_engine_options(tensor_cap=cfg.cap, seed=cfg.seed)):
        inputs = inputs if inputs is not None else parse_inputs(cfg)
        _HANDLERS[cfg.command](cfg, inputs, report, random.Random(cfg.seed))
    if cfg.record_timing:
        report.timing_seconds = round(time.perf_counter() - started, 3)
    logger.info("%s finished: %d table rows, %d property failures", cfg.command, len(report.tables), report.failures)
    return report


# ---------------------------------------------------------------------------
# rendering


def canonical_json(report: Report) -> str:
    return json.dumps(report.model_dump(mode="json"), sort_keys=True, indent=2, ensure_ascii=False)


def render_text(report: Report) -> str:
    lines = [f"{report.tool} {report.version}: {report.config.command} (seed {report.config.seed})"]
    tables: dict[str, list[TableRow]] = {}
    for row in report.tables:
        tables.setdefault(row.table, []).append(row)
    for name, rows in tables.items():
        lines.append("")
        lines.append(f"{name}:")
        for row in rows:
            where = f"{row.degree}" if row.form_degree is None else f"{row.degree} (form degree {row.form_degree})"
            value = "?" if row.dim is None else str(row.dim)
            lines.append(f"  {where:<22} {value:>6}  {'certified' if row.certified else 'uncertified'}")
    if report.properties:
        lines.append("")
        lines.append("properties:")
        for p in report.properties:
            lines.append(f"  {p.name}: {p.checked - p.failures}/{p.checked} passed")
    for record in report.classes:
        lines.append("")
        lines.append(f"class {record.name}: torsion {record.torsion}, free {record.free}")
    if report.flags:
        lines.append("")
        lines.extend(f"{key}: {value}" for key, value in sorted(report.flags.items()))
    if report.notes:
        lines.append("")
        lines.extend(f"note: {note}" for note in report.notes)
    if report.timing_seconds is not None:
        lines.append(f"elapsed: {report.timing_seconds}s")
    return "\n".join(lines) + "\n"


def emit_report(report: Report, fmt: Literal["json", "text"] = "json", out: str | Path | None = None) -> str:
    payload = canonical_json(report) + "\n" if fmt == "json" else render_text(report)
    if out is not None:
        path = Path(out)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(payload, encoding="utf-8")
    return payload


def load_report(path: str | Path) -> Report:
    return Report.model_validate_json(Path(path).read_text(encoding="utf-8"))


# ---------------------------------------------------------------------------
# entry point


def _parse_args(argv: list[str] | None = None) -> argparse.Namespace:
    parser = argparse.ArgumentParser(
        prog="cyclic-engine",
        description="Exact Hochschild, cyclic and twisted cohomology computations on finite models.",
    )
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--algebra")
    parser.add_argument("--cdga")
    parser.add_argument("--twist")
    parser.add_argument("--cocycle")
    parser.add_argument("--nerve")
    parser.add_argument("--torsion", type=int)
    parser.add_argument("--first")
    parser.add_argument("--second")
    parser.add_argument("--max-degree", dest="max_degree", type=int, default=4)
    parser.add_argument("--window", type=int, default=6)
    parser.add_argument("--pages", type=int)
    parser.add_argument("--samples", type=int, default=10)
    parser.add_argument("--matrix-size", dest="matrix_size", type=int, default=2)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--cap", type=int)
    parser.add_argument("--out")
    parser.add_argument("--format", choices=("json", "text"), default="json")
    parser.add_argument("--record-timing", dest="record_timing", action="store_true")
    parser.add_argument(
        "--log-level",
        dest="log_level",
        default=os.getenv("CYCLIC_ENGINE_LOG_LEVEL", "WARNING"),
        choices=("DEBUG", "INFO", "WARNING", "ERROR"),
    )
    return parser.parse_args(argv)


def main(argv: list[str] | None = None) -> int:
    args = _parse_args(argv)
    logging.basicConfig(
        level=args.log_level, stream=sys.stderr, format="%(asctime)s %(name)s %(levelname)s %(message)s"
    )
    try:
        options = resolve_engine_options(seed=args.seed, tensor_cap=args.cap)
        settings = {k: v for k, v in vars(args).items() if k != "log_level"}
        settings.update(seed=options["seed"], cap=options["tensor_cap"])
        cfg = RunConfig.model_validate(settings)
        report = run_command(cfg)
    except ResourceCapError as exc:
        print(f"resource cap: {exc}", file=sys.stderr)
        return 2
    except ValidationError as exc:
        for error in exc.errors():
            print(f"invalid option {'.'.join(str(p) for p in error['loc'])}: {error['msg']}", file=sys.stderr)
        return 1
    except CyclicEngineValidationError as exc:
        for message in exc.error_msgs:
            print(f"error: {message}", file=sys.stderr)
        return 1

    payload = emit_report(report, cfg.format, cfg.out)
    if cfg.out is None:
        sys.stdout.write(payload)
    return 1 if report.failures else 0


if __name__ == "__main__":
    raise SystemExit(main())
