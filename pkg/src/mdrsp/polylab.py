"""
Polyhedral lab for tiny instances.

Enumerates every feasible incidence vector of a (u, n) instance shape, computes
exact affine ranks over the rationals, and checks dimension, validity and
facet claims on the enumerated sample.  ``brute_force_opt`` is the exact
optimum oracle used to test the branch-and-cut solver.
"""

from dataclasses import asdict, dataclass, field
from itertools import chain, combinations, permutations, product
from logging import getLogger
from math import comb
from typing import Callable, Iterable, Iterator, Sequence

import numpy as np
from sympy import Matrix, QQ
from sympy.polys.matrices import DomainMatrix

from .cuts import CutFamily, instantiate
from .instance import (CLASS_I, CLASS_II, ALPHAS, IncidenceVector, Instance, Ring, Solution, VariableLayout,
                       solution_cost, to_incidence, variable_layout)
from .logger import enter_exit_logger
from .lp import Row, Sense
from .search import SolverParams, branch_and_cut

logger = getLogger('mdrsp.polylab')

MAX_ENUM_CUSTOMERS = 6
MAX_ENUM_DEPOTS = 3
MAX_ENUM_VECTORS = 500_000
MAX_ORACLE_CUSTOMERS = 10
RANK_CHUNK = 64
TIE_TOLERANCE = 1e-9
MAX_TIED_CANDIDATES = 4096


class EnumerationLimitError(ValueError):
    """raised when an enumeration would exceed the configured size guards"""


# ---------------------------------------------------------------------------
# enumeration
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class PolytopeSample:
    """every feasible incidence vector of shape (u, n), one per row of ``matrix``"""
    n_customers: int
    n_depots: int
    matrix: np.ndarray

    @property
    def layout(self) -> VariableLayout:
        """column layout of the sample"""
        return variable_layout(self.n_customers, self.n_depots)

    @property
    def m(self) -> int:
        """number of columns"""
        return self.matrix.shape[1]

    def __len__(self) -> int:
        return self.matrix.shape[0]

    @property
    def vectors(self) -> list[IncidenceVector]:
        """the sample as incidence vectors"""
        layout = self.layout
        result = []
        for row in self.matrix:
            values = row.astype(np.int64)
            values.setflags(write=False)
            result.append(IncidenceVector(layout, values))
        return result


def _set_partitions(items: Sequence[int]) -> Iterator[list[tuple[int, ...]]]:
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for size in range(len(rest) + 1):
        for others in combinations(rest, size):
            block = (first,) + others
            remaining = [v for v in rest if v not in others]
            for partition in _set_partitions(remaining):
                yield [block] + partition


def _cycles(depot: int, block: tuple[int, ...]) -> Iterator[Ring]:
    """every distinct ring (as an edge set) through ``depot`` and ``block``"""
    if len(block) <= 2:
        yield Ring(depot, block)
        return
    for order in permutations(block):
        if order[0] < order[-1]:
            yield Ring(depot, order)


def _ring_structures(depot: int, members: Sequence[int]) -> list[list[Ring]]:
    structures = []
    for partition in _set_partitions(list(members)):
        for rings in product(*(list(_cycles(depot, block)) for block in partition)):
            structures.append(list(rings))
    return structures


def iter_feasible(n_customers: int, n_depots: int) -> Iterator[np.ndarray]:
    """
    Every feasible incidence vector under the MIP semantics: each customer is
    on a ring of some depot or assigned to a ring customer or a depot; each
    depot's ring customers are split into one or more rings; degenerate
    rings included.  Vectors are int8 rows.
    """
    layout = variable_layout(n_customers, n_depots)
    customers = list(layout.customers)
    depots = list(layout.depots)
    depot_rows = [layout.y(r, r) for r in depots]

    for labels in product(range(n_depots + 1), repeat=n_customers):
        groups = {r: [t for t in customers if labels[t] == r - n_customers + 1] for r in depots}
        on_ring = [t for t in customers if labels[t] > 0]
        off_ring = [t for t in customers if labels[t] == 0]
        targets = on_ring + depots

        base = np.zeros(layout.n_columns, dtype=np.int8)
        base[depot_rows] = 1
        for t in on_ring:
            base[layout.y(t, t)] = 1

        per_depot = [_ring_structures(r, groups[r]) for r in depots]
        for structure in product(*per_depot):
            routed = base.copy()
            for ring in chain.from_iterable(structure):
                for i, j in ring.edges():
                    routed[layout.x(i, j)] += 1
            for choice in product(targets, repeat=len(off_ring)):
                vector = routed.copy()
                for i, j in zip(off_ring, choice):
                    vector[layout.y(i, j)] = 1
                yield vector


def enumerate_feasible(n_customers: int, n_depots: int, max_vectors: int = MAX_ENUM_VECTORS) -> PolytopeSample:
    """
    All feasible incidence vectors of shape (u, n), deduplicated.

    :raises EnumerationLimitError: u > 6, n > 3 or more than ``max_vectors`` vectors
    """
    if n_customers < 1 or n_depots < 1:
        raise EnumerationLimitError('need at least one customer and one depot')
    if n_customers > MAX_ENUM_CUSTOMERS or n_depots > MAX_ENUM_DEPOTS:
        raise EnumerationLimitError(
            f'enumeration limited to u <= {MAX_ENUM_CUSTOMERS}, n <= {MAX_ENUM_DEPOTS}; '
            f'got u={n_customers}, n={n_depots}')
    seen: set[bytes] = set()
    rows = []
    for vector in iter_feasible(n_customers, n_depots):
        key = vector.tobytes()
        if key in seen:
            continue
        seen.add(key)
        rows.append(vector)
        if len(rows) > max_vectors:
            raise EnumerationLimitError(f'more than {max_vectors} feasible vectors for u={n_customers}, n={n_depots}')
    matrix = np.array(rows, dtype=np.int8)
    logger.debug(f'enumerated {len(rows)} feasible vectors for u={n_customers}, n={n_depots}')
    return PolytopeSample(n_customers, n_depots, matrix)


# ---------------------------------------------------------------------------
# exact rank
# ---------------------------------------------------------------------------

def _independent_rows(rows: list[list[int]]) -> list[list[int]]:
    """maximal independent subset of ``rows``, earlier rows preferred"""
    transposed = DomainMatrix.from_Matrix(Matrix(rows).T).convert_to(QQ)
    _, pivots = transposed.rref()
    return [rows[p] for p in pivots]


def affine_rank(vectors: Iterable[Sequence[int]] | np.ndarray, target: int | None = None) -> int:
    """
    Affine rank of a nonempty set of integer vectors by exact rational
    elimination on the differences to the first vector.  Stops early once
    ``target`` is reached.
    """
    vectors = iter(np.asarray(v, dtype=np.int64) for v in vectors)
    try:
        origin = next(vectors)
    except StopIteration:
        raise ValueError('affine rank of an empty set') from None

    basis: list[list[int]] = []
    chunk: list[list[int]] = []

    def flush() -> None:
        nonlocal basis
        if chunk:
            basis = _independent_rows(basis + chunk)
            chunk.clear()

    for vector in vectors:
        difference = vector - origin
        if not difference.any():
            continue
        chunk.append([int(v) for v in difference])
        if len(chunk) >= RANK_CHUNK:
            flush()
            if target is not None and len(basis) >= target:
                return len(basis)
    flush()
    return len(basis)


def _shuffled(matrix: np.ndarray, seed: int = 0) -> np.ndarray:
    """rows in a fixed pseudo-random order (ranks saturate faster than in enumeration order)"""
    order = np.random.default_rng(seed).permutation(matrix.shape[0])
    return matrix[order]


def dimension_formula(n_customers: int, n_depots: int) -> int:
    """C(u,2) + u^2 + 2u(n-1)"""
    return comb(n_customers, 2) + n_customers ** 2 + 2 * n_customers * (n_depots - 1)


def equality_count(n_customers: int, n_depots: int) -> int:
    """2u + n + nu linearly independent equalities satisfied by every solution"""
    return 2 * n_customers + n_depots + n_depots * n_customers


# ---------------------------------------------------------------------------
# inequalities
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class InequalitySpec:
    """a labelled inequality; ``row`` is in the LP row form"""
    label: str
    row: Row
    kind: str = 'row'

    @classmethod
    def from_witness(cls, layout: VariableLayout, family: CutFamily, witness: tuple) -> 'InequalitySpec':
        """the cut family row defined by ``witness``"""
        row, canonical = instantiate(layout, family, witness)
        return cls(f'{family.value} {canonical}', row, family.value)

    def slack(self, matrix: np.ndarray) -> np.ndarray:
        """per-vector slack (negative means violated)"""
        activity = np.zeros(matrix.shape[0])
        for column, value in self.row.coefficients:
            activity += value * matrix[:, column]
        if self.row.sense is Sense.LE:
            return self.row.rhs - activity
        if self.row.sense is Sense.GE:
            return activity - self.row.rhs
        return -np.abs(activity - self.row.rhs)


def nonnegativity(layout: VariableLayout, i: int, j: int) -> InequalitySpec:
    """x_ij >= 0"""
    return InequalitySpec(f'x[{i},{j}] >= 0', Row.build({layout.x(i, j): 1.0}, Sense.GE, 0.0), 'bound')


def edge_upper_bound(layout: VariableLayout, i: int, j: int) -> InequalitySpec:
    """x_ij <= 1 between customers, x_ij <= 2 between a depot and a customer"""
    bound = 2.0 if layout.is_depot(max(i, j)) else 1.0
    return InequalitySpec(f'x[{i},{j}] <= {bound:g}', Row.build({layout.x(i, j): 1.0}, Sense.LE, bound), 'bound')


def depot_link(layout: VariableLayout, depot: int, t: int) -> InequalitySpec:
    """x_dt <= 2 y_tt"""
    return InequalitySpec(f'x[{depot},{t}] <= 2 y[{t},{t}]',
                          Row.build({layout.x(depot, t): 1.0, layout.y(t, t): -2.0}, Sense.LE, 0.0), 'link')


def inside_subtour_form(layout: VariableLayout, side: Sequence[int], i: int) -> InequalitySpec:
    """x(gamma(S)) <= sum_{v in S} y_vv - sum_{j in S} y_ij, the inside form of the subtour cut"""
    coefficients: dict[int, float] = {}
    for a, b in combinations(sorted(side), 2):
        coefficients[layout.x(a, b)] = coefficients.get(layout.x(a, b), 0.0) + 1.0
    for v in side:
        coefficients[layout.y(v, v)] = coefficients.get(layout.y(v, v), 0.0) - 1.0
    for j in side:
        coefficients[layout.y(i, j)] = coefficients.get(layout.y(i, j), 0.0) + 1.0
    return InequalitySpec(f'gamma-form {tuple(sorted(side))} {i}', Row.build(coefficients, Sense.LE, 0.0),
                          'gamma-form')


def _subsets(items: Sequence[int], min_size: int = 1) -> Iterator[tuple[int, ...]]:
    for size in range(min_size, len(items) + 1):
        yield from combinations(items, size)


def instantiations(layout: VariableLayout, family: CutFamily) -> Iterator[tuple]:
    """every witness of ``family`` on the layout's shape"""
    customers = list(layout.customers)
    depots = list(layout.depots)
    proper_depot_sets = [s for s in _subsets(depots) if len(s) < len(depots)]

    if family is CutFamily.PAIR:
        yield from permutations(customers, 2)
    elif family is CutFamily.SEC:
        for side in _subsets(customers):
            for i in side:
                yield side, i
    elif family is CutFamily.PEC2:
        for j, k in permutations(customers, 2):
            for subset in proper_depot_sets:
                yield j, k, subset
    elif family is CutFamily.PEC:
        for j, k in combinations(customers, 2):
            others = [t for t in customers if t not in (j, k)]
            for side in _subsets(others):
                for a in side:
                    for subset in proper_depot_sets:
                        yield j, k, a, side, subset
    elif family is CutFamily.TWO_MATCH:
        for handle in _subsets(customers, 2):
            outside = [t for t in customers if t not in handle]
            for size in range(3, min(len(handle), len(outside)) + 1, 2):
                for inner in combinations(handle, size):
                    for outer in permutations(outside, size):
                        teeth = tuple(zip(inner, outer))
                        yield handle, teeth
    elif family is CutFamily.ODD_HOLE:
        for i, j, k in permutations(customers, 3):
            if i == min(i, j, k):
                yield i, j, k
    elif family is CutFamily.SSP_SEC:
        for side in _subsets(customers, 3):
            for i, j, k in permutations(side, 3):
                if i == min(i, j, k):
                    yield side, i, j, k


def all_inequalities(layout: VariableLayout) -> Iterator[InequalitySpec]:
    """every cut family instantiation plus the linking rows and the inside form of the subtour cuts"""
    for family in CutFamily:
        for witness in instantiations(layout, family):
            yield InequalitySpec.from_witness(layout, family, witness)
    for r in layout.depots:
        for t in layout.customers:
            yield depot_link(layout, r, t)
    for side in _subsets(list(layout.customers)):
        for i in side:
            yield inside_subtour_form(layout, side, i)


# ---------------------------------------------------------------------------
# checks
# ---------------------------------------------------------------------------

@dataclass
class ValidityResult:
    """outcome of a validity check; ``counterexample`` is the first violating vector"""
    label: str
    passed: bool
    checked: int
    counterexample: list[int] | None = None


def verify_valid(spec: InequalitySpec, sample: PolytopeSample, tolerance: float = 1e-9) -> ValidityResult:
    """True iff every vector of the sample satisfies ``spec``"""
    slack = spec.slack(sample.matrix)
    failing = np.flatnonzero(slack < -tolerance)
    counterexample = [int(v) for v in sample.matrix[failing[0]]] if failing.size else None
    return ValidityResult(spec.label, failing.size == 0, len(sample), counterexample)


@dataclass
class ValiditySuite:
    """counts of a validity run per family label"""
    n_customers: int
    n_depots: int
    checked: dict[str, int] = field(default_factory=dict)
    failures: list[ValidityResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        """True when nothing failed"""
        return not self.failures


def validity_suite(n_customers: int, n_depots: int, sample: PolytopeSample | None = None) -> ValiditySuite:
    """every inequality of ``all_inequalities`` against every feasible vector"""
    sample = sample or enumerate_feasible(n_customers, n_depots)
    suite = ValiditySuite(n_customers, n_depots)
    for spec in all_inequalities(sample.layout):
        suite.checked[spec.kind] = suite.checked.get(spec.kind, 0) + 1
        result = verify_valid(spec, sample)
        if not result.passed:
            suite.failures.append(result)
    logger.info(f'validity u={n_customers} n={n_depots}: {sum(suite.checked.values())} inequalities, '
                f'{len(suite.failures)} failures')
    return suite


@dataclass
class SubtourFormResult:
    """outcome of the subtour-cut equivalence check"""
    checked: int
    mismatches: list[tuple] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        """True when both forms agree everywhere"""
        return not self.mismatches


def verify_subtour_forms(sample: PolytopeSample) -> SubtourFormResult:
    """for every (S, i) and every vector: the cut form holds iff the inside form holds"""
    layout = sample.layout
    result = SubtourFormResult(0)
    for side in _subsets(list(layout.customers)):
        for i in side:
            outer = InequalitySpec.from_witness(layout, CutFamily.SEC, (side, i)).slack(sample.matrix) >= -1e-9
            inner = inside_subtour_form(layout, side, i).slack(sample.matrix) >= -1e-9
            result.checked += 1
            if not np.array_equal(outer, inner):
                result.mismatches.append((side, i))
    return result


@dataclass
class DimensionReport:
    """measured against formula dimension"""
    n_customers: int
    n_depots: int
    m: int
    dim_formula: int
    dim_measured: int
    vectors: int

    @property
    def passed(self) -> bool:
        """True when measured and formula dimension agree"""
        return self.dim_measured == self.dim_formula

    def to_dict(self) -> dict:
        """JSON form"""
        return {'u': self.n_customers, 'n': self.n_depots, 'm': self.m, 'dim_formula': self.dim_formula,
                'dim_measured': self.dim_measured, 'vectors': self.vectors, 'pass': self.passed}


@enter_exit_logger('mdrsp.polylab')
def verify_dimension(n_customers: int, n_depots: int, sample: PolytopeSample | None = None) -> DimensionReport:
    """affine rank of all feasible vectors against C(u,2) + u^2 + 2u(n-1)"""
    sample = sample or enumerate_feasible(n_customers, n_depots)
    formula = dimension_formula(n_customers, n_depots)
    measured = affine_rank(_shuffled(sample.matrix), target=formula)
    if measured != formula:
        logger.warning(f'dimension mismatch at u={n_customers}, n={n_depots}: measured {measured}, formula {formula}')
    return DimensionReport(n_customers, n_depots, sample.m, formula, measured, len(sample))


@dataclass
class FacetReport:
    """rank of the tight face against dim - 1"""
    label: str
    n_customers: int
    n_depots: int
    valid: bool
    tight: int
    face_rank: int
    target: int
    note: str = ''

    @property
    def passed(self) -> bool:
        """True when the inequality is valid and its face has rank dim - 1"""
        return self.valid and self.face_rank == self.target

    def to_dict(self) -> dict:
        """JSON form"""
        report = asdict(self)
        report['pass'] = self.passed
        return report


def verify_facet(spec: InequalitySpec, sample: PolytopeSample, note: str = '') -> FacetReport:
    """
    Rank of the vectors tight at ``spec`` compared with dim(P) - 1.  An
    inequality tight nowhere gets face rank 0.
    """
    target = dimension_formula(sample.n_customers, sample.n_depots) - 1
    valid = verify_valid(spec, sample).passed
    tight_rows = sample.matrix[np.abs(spec.slack(sample.matrix)) <= 1e-9]
    face_rank = affine_rank(_shuffled(tight_rows), target=target + 1) if len(tight_rows) else 0
    return FacetReport(spec.label, sample.n_customers, sample.n_depots, valid, len(tight_rows), face_rank, target,
                       note)


@dataclass(frozen=True)
class FacetCheck:
    """a named facet claim: the inequality to build, its smallest size and the expected verdict"""
    name: str
    build: Callable[[VariableLayout], InequalitySpec]
    n_customers: int
    n_depots: int
    expected: bool
    note: str = ''
    slow: bool = False


def _first_depot(layout: VariableLayout) -> int:
    return layout.n_customers


FACET_CHECKS = {
    'prop2': FacetCheck('prop2', lambda layout: nonnegativity(layout, 0, 1), 4, 2, True,
                        'x_e >= 0 on a customer edge; requires |T| >= 4'),
    'prop3': FacetCheck('prop3', lambda layout: InequalitySpec.from_witness(layout, CutFamily.SEC, ((0, 1), 0)),
                        4, 2, True, 'subtour cut with |S| = 2'),
    'prop4': FacetCheck('prop4', lambda layout: InequalitySpec.from_witness(
        layout, CutFamily.PEC2, (0, 1, (_first_depot(layout),))), 4, 2, True, "two-customer path cut, D' = {r1}"),
    'prop5': FacetCheck('prop5', lambda layout: InequalitySpec.from_witness(
        layout, CutFamily.TWO_MATCH, ((0, 1, 2), ((0, 3), (1, 4), (2, 5)))), 6, 2, True,
        '2-matching cut with three teeth; requires |T| >= 6', slow=True),
    'remark1-edge': FacetCheck('remark1-edge', lambda layout: edge_upper_bound(layout, 0, 1), 4, 2, False,
                               'x_ij <= 1 is dominated by the pair cut'),
    'remark1-depot': FacetCheck('remark1-depot', lambda layout: edge_upper_bound(layout, 0, _first_depot(layout)),
                                4, 2, False, 'x_dj <= 2 is dominated by x_dj <= 2 y_jj'),
    'remark2': FacetCheck('remark2', lambda layout: InequalitySpec.from_witness(layout, CutFamily.SEC, ((0,), 0)),
                          4, 2, False, 'subtour cut with |S| = 1 is the degree equation'),
}


@enter_exit_logger('mdrsp.polylab')
def run_facet_check(name: str, n_customers: int | None = None, n_depots: int | None = None,
                    sample: PolytopeSample | None = None) -> FacetReport:
    """
    Run a named facet claim, by default at its smallest size.

    :raises KeyError: unknown check name
    """
    check = FACET_CHECKS[name]
    u = n_customers if n_customers is not None else check.n_customers
    n = n_depots if n_depots is not None else check.n_depots
    sample = sample or enumerate_feasible(u, n)
    return verify_facet(check.build(sample.layout), sample, check.note)


# ---------------------------------------------------------------------------
# brute-force optimum
# ---------------------------------------------------------------------------

def _held_karp(inst: Instance, depot: int) -> np.ndarray:
    """cheapest ring through ``depot`` for every nonempty customer subset (bitmask index)"""
    u = inst.n_customers
    size = 1 << u
    paths = np.full((size, u), np.inf)
    for t in range(u):
        paths[1 << t, t] = inst.c(depot, t)
    for mask in range(1, size):
        for last in range(u):
            cost = paths[mask, last]
            if not np.isfinite(cost):
                continue
            for nxt in range(u):
                if mask & (1 << nxt):
                    continue
                extended = mask | (1 << nxt)
                candidate = cost + inst.c(last, nxt)
                if candidate < paths[extended, nxt]:
                    paths[extended, nxt] = candidate
    rings = np.full(size, np.inf)
    for mask in range(1, size):
        rings[mask] = min(paths[mask, t] + inst.c(t, depot) for t in range(u) if mask & (1 << t))
    return rings


def _tied(value: float, best: float) -> bool:
    return value <= best + TIE_TOLERANCE * max(1.0, abs(best))


def _tied_ring_orders(inst: Instance, depot: int, members: list[int]) -> list[tuple[int, ...]]:
    """every cheapest visiting order of a small customer set, one orientation each"""
    if len(members) <= 2:
        return [tuple(members)]
    costed = []
    for order in permutations(members):
        if order[0] > order[-1]:
            continue
        tour = (depot,) + order
        costed.append((sum(inst.c(tour[k], tour[(k + 1) % len(tour)]) for k in range(len(tour))), order))
    best = min(cost for cost, _ in costed)
    return [order for cost, order in costed if _tied(cost, best)]


def _tied_splits(mask: int, split: np.ndarray, block_cost: np.ndarray) -> Iterator[list[int]]:
    """every split of ``mask`` into ring blocks whose cost ties ``split[mask]``"""
    if mask == 0:
        yield []
        return
    low = mask & -mask
    rest = mask ^ low
    sub = rest
    while True:
        block = sub | low
        if _tied(block_cost[block] + split[mask ^ block], split[mask]):
            for tail in _tied_splits(mask ^ block, split, block_cost):
                yield [block] + tail
        if sub == 0:
            break
        sub = (sub - 1) & rest


def _lex_smallest(layout: VariableLayout, ring_options: list[list[Ring]],
                  star_options: dict[int, list[int]]) -> tuple[tuple[int, ...], Solution]:
    """
    The lexicographically smallest incidence vector over every combination of
    the options, with its solution.  Each ring block and each star writes its
    own columns, so every part is settled on its own with the others held.
    """
    rings = [options[0] for options in ring_options]
    stars = {i: options[0] for i, options in star_options.items()}

    def key(chosen_rings, chosen_stars) -> tuple[int, ...]:
        return tuple(to_incidence(layout, Solution(tuple(chosen_rings), chosen_stars)).values.tolist())

    for b, options in enumerate(ring_options):
        rings[b] = min(options, key=lambda ring: key(rings[:b] + [ring] + rings[b + 1:], stars))  # pylint: disable=cell-var-from-loop
    for i, options in star_options.items():
        stars[i] = min(options, key=lambda target: key(rings, {**stars, i: target}))  # pylint: disable=cell-var-from-loop
    return key(rings, stars), Solution(tuple(sorted(rings, key=lambda ring: (ring.depot, ring.customers))), stars)


@enter_exit_logger('mdrsp.polylab')
def brute_force_opt(inst: Instance) -> Solution:
    """
    Exact optimum by enumeration of the ring customer set.  For each set the
    cheapest split into rings (any depot, any number of rings per depot)
    comes from a subset dynamic program over Held-Karp ring costs, and every
    other customer takes its cheapest ring customer or depot.

    Among optima tied within a relative 1e-9, the one with the lexicographically
    smallest incidence vector is returned, so the answer does not depend on the
    enumeration order.  At most ``MAX_TIED_CANDIDATES`` ring splits are compared.

    :raises EnumerationLimitError: more than 10 customers
    """
    u = inst.n_customers
    if u > MAX_ORACLE_CUSTOMERS:
        raise EnumerationLimitError(f'brute force limited to {MAX_ORACLE_CUSTOMERS} customers, got {u}')
    size = 1 << u
    per_depot = {r: _held_karp(inst, r) for r in inst.depots}
    depots = list(inst.depots)
    block_cost = np.full(size, np.inf)
    for mask in range(1, size):
        block_cost[mask] = min(per_depot[r][mask] for r in depots)

    # cheapest split of each set into rings
    split = np.full(size, np.inf)
    split[0] = 0.0
    for mask in range(1, size):
        low = mask & -mask
        rest = mask ^ low
        sub = rest
        while True:
            block = sub | low
            split[mask] = min(split[mask], block_cost[block] + split[mask ^ block])
            if sub == 0:
                break
            sub = (sub - 1) & rest

    fixed = sum(inst.d(r, r) for r in depots)
    totals = np.empty(size)
    for mask in range(size):
        ring = [t for t in range(u) if mask & (1 << t)]
        targets = ring + depots
        totals[mask] = split[mask] + fixed + sum(inst.d(t, t) for t in ring) + sum(
            min(inst.d(i, k) for k in targets) for i in range(u) if not mask & (1 << i))
    best_total = float(totals.min())

    best_key, best_solution, compared = None, None, 0
    for mask in (m for m in range(size) if _tied(totals[m], best_total)):
        ring = [t for t in range(u) if mask & (1 << t)]
        targets = ring + depots
        star_options = {}
        for i in range(u):
            if not mask & (1 << i):
                cheapest = min(inst.d(i, k) for k in targets)
                star_options[i] = [k for k in targets if _tied(inst.d(i, k), cheapest)]
        for blocks in _tied_splits(mask, split, block_cost):
            ring_options = []
            for block in blocks:
                members = [t for t in range(u) if block & (1 << t)]
                ring_options.append([Ring(r, order) for r in depots if _tied(per_depot[r][block], block_cost[block])
                                     for order in _tied_ring_orders(inst, r, members)])
            key, solution = _lex_smallest(inst.layout, ring_options, star_options)
            if best_key is None or key < best_key:
                best_key, best_solution = key, solution
            compared += 1
            if compared >= MAX_TIED_CANDIDATES:
                break
        if compared >= MAX_TIED_CANDIDATES:
            logger.debug(f'{inst.name}: tie-break stopped after {compared} ring splits')
            break

    logger.debug(f'brute force optimum of {inst.name}: {solution_cost(inst, best_solution):.10g}')
    return best_solution


# ---------------------------------------------------------------------------
# oracle suite
# ---------------------------------------------------------------------------

def oracle_instance(seed: int) -> Instance:
    """
    A small seeded instance: u in 4..8, n in {2, 3}, classes alternating with
    alpha cycling over 3, 5, 7, 9 for class II.
    """
    rng = np.random.default_rng(seed)
    u = 4 + seed % 5
    n = 2 + (seed // 5) % 2
    class_tag = CLASS_I if seed % 2 == 0 else CLASS_II
    alpha = ALPHAS[(seed // 2) % len(ALPHAS)] if class_tag == CLASS_II else None
    customers = np.round(rng.uniform(0, 100, size=(u, 2)), 3)
    depots = np.round(rng.uniform(0, 100, size=(n, 2)), 3)
    return Instance.from_coordinates(customers, depots, class_tag, alpha, name=f'oracle-{seed}', seed=seed)


@dataclass
class OracleCase:
    """solver against brute force on one seeded instance"""
    seed: int
    n_customers: int
    n_depots: int
    class_tag: str
    alpha: int | None
    oracle: float
    solver: float
    termination: str

    @property
    def matched(self) -> bool:
        """True when the solver proved the oracle optimum"""
        return self.termination == 'optimal' and abs(self.solver - self.oracle) <= 1e-6 * max(1.0, abs(self.oracle))


@enter_exit_logger('mdrsp.polylab')
def oracle_suite(seeds: Iterable[int], params=None) -> list[OracleCase]:
    """branch-and-cut against brute force on ``oracle_instance(seed)`` for every seed"""
    params = params or SolverParams()
    cases = []
    for seed in seeds:
        inst = oracle_instance(seed)
        oracle = solution_cost(inst, brute_force_opt(inst))
        report = branch_and_cut(inst, params)
        case = OracleCase(seed, inst.n_customers, inst.n_depots, inst.class_tag, inst.alpha, oracle, report.ub,
                          report.termination.value)
        if not case.matched:
            logger.warning(f'oracle mismatch on seed {seed}: solver {case.solver:.10g}, oracle {oracle:.10g}')
        cases.append(case)
    return cases


# ---------------------------------------------------------------------------
# JSON reports shared by the command line and the service
# ---------------------------------------------------------------------------

def facet_check_report(name: str, n_customers: int | None = None, n_depots: int | None = None) -> dict:
    """
    ``run_facet_check`` as a JSON report.  ``pass`` is True when the verdict
    matches the claim (facet for propositions, non-facet for remarks); below
    the claim's minimum size it is always False.

    :raises KeyError: unknown check name
    """
    check = FACET_CHECKS[name]
    report = run_facet_check(name, n_customers, n_depots).to_dict()
    report['check'] = name
    report['facet'] = report.pop('pass')
    report['expected'] = check.expected
    report['pass'] = report['facet'] == check.expected
    if report['n_customers'] < check.n_customers:
        report['pass'] = False
        report['note'] = f'requires |T| >= {check.n_customers}'
    return report


def validity_report(n_customers: int, n_depots: int) -> dict:
    """``validity_suite`` plus the subtour-cut equivalence check as a JSON report"""
    sample = enumerate_feasible(n_customers, n_depots)
    suite = validity_suite(n_customers, n_depots, sample)
    forms = verify_subtour_forms(sample)
    return {'u': n_customers, 'n': n_depots, 'vectors': len(sample), 'checked': dict(suite.checked),
            'failures': [asdict(failure) for failure in suite.failures],
            'subtour_forms_checked': forms.checked, 'subtour_form_mismatches': [list(m) for m in forms.mismatches],
            'pass': suite.passed and forms.passed}


def oracle_report(n_seeds: int, params=None) -> dict:
    """``oracle_suite`` over seeds 0..n_seeds-1 as a JSON report"""
    cases = oracle_suite(range(n_seeds), params)
    matched = sum(case.matched for case in cases)
    return {'seeds': n_seeds, 'matched': matched,
            'cases': [dict(asdict(case), matched=case.matched) for case in cases],
            'pass': matched == len(cases)}


def lab_report(mode: str, **arguments) -> dict:
    """
    Dispatch a lab run by mode name: ``dim`` (u, n), ``validity`` (u, n),
    ``facets`` (name, optional u and n) or ``oracle`` (seeds).

    :raises ValueError: unknown mode or missing arguments
    """
    try:
        if mode == 'dim':
            return verify_dimension(int(arguments['u']), int(arguments['n'])).to_dict()
        if mode == 'validity':
            return validity_report(int(arguments['u']), int(arguments['n']))
        if mode == 'facets':
            u, n = arguments.get('u'), arguments.get('n')
            if arguments['name'] not in FACET_CHECKS:
                raise ValueError(f'unknown facet check {arguments["name"]!r}, '
                                 f'expected one of {", ".join(FACET_CHECKS)}')
            return facet_check_report(arguments['name'], None if u is None else int(u),
                                      None if n is None else int(n))
        if mode == 'oracle':
            return oracle_report(int(arguments['seeds']))
    except KeyError as err:
        raise ValueError(f'lab mode {mode!r} needs argument {err}') from None
    raise ValueError(f'unknown lab mode {mode!r}, expected dim, validity, facets or oracle')
