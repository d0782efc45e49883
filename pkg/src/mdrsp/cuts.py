"""
Separation of the MDRSP cutting planes.

Every separator works on a :class:`FractionalPoint` and returns
:class:`Cut` objects.  A cut is always built by :func:`instantiate` from its
witness (the combinatorial data that defines it), so re-instantiating a cut
from its witness reproduces exactly the same row.

Families and their witnesses:

=========== ============================== =============================================
family      witness                        row
=========== ============================== =============================================
PAIR        (i, j)                         x_ij - y_jj + y_ij <= 0
SEC         (S, i)                         x(delta(S)) - 2 sum_{j in S} y_ij >= 0
PEC2        (j, k, D')                     x(D':j) + 3 x_jk + x(k:D-D') - 2 y_jj - 2 y_kk <= 0
PEC         (j, k, a, S, D')               x(D':j) + 2 x(gamma(S+jk)) + x(k:D-D')
                                           - 2 sum y_vv + sum_{b in S} y_ab <= 0
TWO_MATCH   (H, teeth)                     x(gamma(H)) + x(teeth) - sum_{H} y_ii <= (|teeth|-1)/2
ODD_HOLE    (i, j, k)                      y_ij + y_jk + y_ki <= 1
SSP_SEC     (S, i, j, k)                   x(delta(S)) - 2 (y_ij + y_jk + y_ki) >= 0
=========== ============================== =============================================
"""

from dataclasses import dataclass
from enum import Enum
from itertools import combinations, permutations
from logging import getLogger
from typing import Iterable

import numpy as np

from .graph import CapGraph, connected_components, min_st_cut
from .instance import VariableLayout
from .lp import Row, Sense

logger = getLogger('mdrsp.cuts')

EPS_SUPPORT = 1e-6
EPS_CUT = 1e-4
TOOTH_TOLERANCE = 1e-6

DEPOTS = 'depots'
SOURCE = 'source'
SINK = 'sink'


class CutFamily(Enum):
    """cut families, valued by their short names"""
    PAIR = 'pair'
    SEC = 'sec'
    PEC2 = 'pec2'
    PEC = 'pec'
    TWO_MATCH = '2mat'
    ODD_HOLE = 'odd-hole'
    SSP_SEC = 'ssp-sec'


# per-round caps (most violated first); PAIR is uncapped
ROUND_LIMITS = {
    CutFamily.SEC: 50,
    CutFamily.PEC: 50,
    CutFamily.TWO_MATCH: 30,
}


@dataclass(frozen=True, eq=False)
class FractionalPoint:
    """an LP point read through the variable layout"""
    layout: VariableLayout
    values: np.ndarray
    eps_support: float = EPS_SUPPORT

    def x(self, i: int, j: int) -> float:
        """x*_ij (0 for pairs without an edge variable)"""
        if not self.layout.has_x(i, j):
            return 0.0
        return float(self.values[self.layout.x(i, j)])

    def y(self, i: int, j: int) -> float:
        """y*_ij (0 for pairs without an arc variable)"""
        if not self.layout.has_y(i, j):
            return 0.0
        return float(self.values[self.layout.y(i, j)])

    def depot_degree(self, t: int) -> float:
        """x*(D : {t})"""
        return sum(self.x(t, r) for r in self.layout.depots)

    def support_vertices(self) -> list[int]:
        """V*: vertices with y*_ii above the support threshold, depots always included"""
        customers = [t for t in self.layout.customers if self.y(t, t) > self.eps_support]
        return customers + list(self.layout.depots)

    def is_integral(self, tolerance: float = 1e-6) -> bool:
        """True when every column is within ``tolerance`` of an integer"""
        return bool(np.all(np.abs(self.values - np.round(self.values)) <= tolerance))


@dataclass(frozen=True)
class Cut:
    """a violated inequality with the witness that generated it"""
    family: CutFamily
    coefficients: tuple[tuple[int, float], ...]
    sense: Sense
    rhs: float
    witness: tuple
    violation: float

    @property
    def key(self) -> tuple:
        """duplicate-suppression key"""
        return self.family, self.witness

    def row(self) -> Row:
        """the cut as an LP row"""
        return Row(self.coefficients, self.sense, self.rhs, f'{self.family.value}{list(self.witness)}')

    @property
    def count_key(self) -> str:
        """report column: SECs on two customers are counted with the pair cuts"""
        if self.family is CutFamily.PAIR or (self.family is CutFamily.SEC and len(self.witness[0]) == 2):
            return 'pair'
        if self.family in (CutFamily.PEC2, CutFamily.PEC):
            return 'pec'
        return self.family.value


# ---------------------------------------------------------------------------
# witnesses -> rows
# ---------------------------------------------------------------------------

def _delta(layout: VariableLayout, side: Iterable[int]) -> list[int]:
    """x columns of the edges with exactly one endpoint in the customer set ``side``"""
    side = set(side)
    outside = [v for v in list(layout.customers) + list(layout.depots) if v not in side]
    return [layout.x(i, j) for i in sorted(side) for j in outside]


def _gamma(layout: VariableLayout, side: Iterable[int]) -> list[int]:
    """x columns of the edges inside the customer set ``side``"""
    return [layout.x(i, j) for i, j in combinations(sorted(side), 2)]


def instantiate(layout: VariableLayout, family: CutFamily, witness: tuple) -> tuple[Row, tuple]:
    """
    Build the row defined by ``witness`` and return it with the canonical
    form of the witness.

    :raises ValueError: for a malformed witness
    """
    coefficients: dict[int, float] = {}

    def add(column: int, value: float) -> None:
        coefficients[column] = coefficients.get(column, 0.0) + value

    depots = list(layout.depots)

    if family is CutFamily.PAIR:
        i, j = witness
        add(layout.x(i, j), 1.0)
        add(layout.y(j, j), -1.0)
        add(layout.y(i, j), 1.0)
        canonical = (i, j)
        sense, rhs = Sense.LE, 0.0

    elif family is CutFamily.SEC:
        side, i = witness
        side = tuple(sorted(side))
        if i not in side:
            raise ValueError(f'SEC witness: {i} is not in {side}')
        for column in _delta(layout, side):
            add(column, 1.0)
        for j in side:
            add(layout.y(i, j), -2.0)
        canonical = (side, i)
        sense, rhs = Sense.GE, 0.0

    elif family is CutFamily.PEC2:
        j, k, subset = witness
        subset = tuple(sorted(subset))
        _check_depot_subset(layout, subset)
        for d in subset:
            add(layout.x(j, d), 1.0)
        add(layout.x(j, k), 3.0)
        for d in depots:
            if d not in subset:
                add(layout.x(k, d), 1.0)
        add(layout.y(j, j), -2.0)
        add(layout.y(k, k), -2.0)
        canonical = (j, k, subset)
        sense, rhs = Sense.LE, 0.0

    elif family is CutFamily.PEC:
        j, k, a, side, subset = witness
        side = tuple(sorted(side))
        subset = tuple(sorted(subset))
        _check_depot_subset(layout, subset)
        if a not in side or j in side or k in side:
            raise ValueError(f'PEC witness: need a in S and j, k outside S, got {witness}')
        closed = set(side) | {j, k}
        for d in subset:
            add(layout.x(j, d), 1.0)
        for column in _gamma(layout, closed):
            add(column, 2.0)
        for d in depots:
            if d not in subset:
                add(layout.x(k, d), 1.0)
        for v in closed:
            add(layout.y(v, v), -2.0)
        for b in side:
            add(layout.y(a, b), 1.0)
        canonical = (j, k, a, side, subset)
        sense, rhs = Sense.LE, 0.0

    elif family is CutFamily.TWO_MATCH:
        handle, teeth = witness
        handle = tuple(sorted(handle))
        teeth = tuple(sorted((min(e), max(e)) for e in teeth))
        if len(teeth) < 3 or len(teeth) % 2 == 0:
            raise ValueError(f'2-matching witness needs an odd number (>= 3) of teeth, got {len(teeth)}')
        for column in _gamma(layout, handle):
            add(column, 1.0)
        for u, v in teeth:
            add(layout.x(u, v), 1.0)
        for i in handle:
            add(layout.y(i, i), -1.0)
        canonical = (handle, teeth)
        sense, rhs = Sense.LE, (len(teeth) - 1) / 2

    elif family is CutFamily.ODD_HOLE:
        i, j, k = witness
        for tail, head in ((i, j), (j, k), (k, i)):
            add(layout.y(tail, head), 1.0)
        canonical = _rotate_min((i, j, k))
        sense, rhs = Sense.LE, 1.0

    elif family is CutFamily.SSP_SEC:
        side, i, j, k = witness
        side = tuple(sorted(side))
        if not {i, j, k} <= set(side):
            raise ValueError(f'SSP-SEC witness: {i}, {j}, {k} must lie in {side}')
        for column in _delta(layout, side):
            add(column, 1.0)
        for tail, head in ((i, j), (j, k), (k, i)):
            add(layout.y(tail, head), -2.0)
        canonical = (side,) + _rotate_min((i, j, k))
        sense, rhs = Sense.GE, 0.0

    else:
        raise ValueError(f'unknown cut family {family!r}')

    return Row.build(coefficients, sense, rhs, f'{family.value}{list(canonical)}'), canonical


def _check_depot_subset(layout: VariableLayout, subset: tuple) -> None:
    if not subset or len(subset) >= layout.n_depots or not all(layout.is_depot(d) for d in subset):
        raise ValueError(f'depot subset must be a proper nonempty subset of D, got {subset}')


def _rotate_min(cycle: tuple) -> tuple:
    start = cycle.index(min(cycle))
    return cycle[start:] + cycle[:start]


def make_cut(point: FractionalPoint, family: CutFamily, witness: tuple) -> Cut:
    """instantiate a witness and measure its violation at ``point``"""
    row, canonical = instantiate(point.layout, family, witness)
    return Cut(family, row.coefficients, row.sense, row.rhs, canonical, row.violation(point.values))


def _violated(cuts: Iterable[Cut], eps_cut: float = EPS_CUT) -> list[Cut]:
    """drop duplicates and non-violated cuts; most violated first"""
    unique: dict[tuple, Cut] = {}
    for cut in cuts:
        if cut.violation > eps_cut and cut.key not in unique:
            unique[cut.key] = cut
    return sorted(unique.values(), key=lambda cut: (-cut.violation, cut.witness))


def format_cut(cut: Cut, layout: VariableLayout) -> str:
    """``sec ((0, 1, 2), 0): x[0,3] + ... >= 0  # violation 0.5``"""
    terms = []
    for column, value in cut.coefficients:
        sign = '-' if value < 0 else '+'
        magnitude = '' if abs(value) == 1 else f'{abs(value):g} '
        terms.append(f'{sign} {magnitude}{layout.describe(column)}')
    body = ' '.join(terms).lstrip('+ ') if terms else '0'
    return f'{cut.family.value} {cut.witness}: {body} {cut.sense.value} {cut.rhs:g}  # violation {cut.violation:.6g}'


# ---------------------------------------------------------------------------
# support graph
# ---------------------------------------------------------------------------

def support_graph(point: FractionalPoint) -> CapGraph:
    """G*: vertices with y*_ii above the threshold, edges with x*_e above it"""
    layout = point.layout
    vertices = point.support_vertices()
    graph = CapGraph(vertices)
    present = set(vertices)
    for column in layout.edge_columns():
        _, i, j = layout.columns[column]
        value = float(point.values[column])
        if value > point.eps_support and i in present and j in present:
            graph.add_edge(i, j, value)
    return graph


def _component_of(components: list[set]) -> dict:
    return {v: index for index, component in enumerate(components) for v in component}


# ---------------------------------------------------------------------------
# separators
# ---------------------------------------------------------------------------

def sep_pairs(point: FractionalPoint, eps_cut: float = EPS_CUT) -> list[Cut]:
    """every violated x_ij <= y_jj - y_ij over ordered customer pairs"""
    customers = point.layout.customers
    cuts = []
    for i, j in permutations(customers, 2):
        if point.x(i, j) - point.y(j, j) + point.y(i, j) > eps_cut:
            cuts.append(make_cut(point, CutFamily.PAIR, (i, j)))
    return _violated(cuts, eps_cut)


def sep_sec(point: FractionalPoint, eps_cut: float = EPS_CUT) -> list[Cut]:
    """
    Subtour elimination cuts.

    Depot-free components of G* give a cut for S = C and every i in C.  Then,
    for every customer i, a minimum cut between the contracted depots and i
    finds the most violated x(delta(S)) + 2 sum_{j not in S} y_ij >= 2 with
    i in S.  All customers take part in the cut graph, so this search is exact.
    """
    layout = point.layout
    cuts = []
    graph = support_graph(point)
    for component in connected_components(graph):
        if any(layout.is_depot(v) for v in component):
            continue
        side = tuple(sorted(component))
        for i in side:
            cuts.append(make_cut(point, CutFamily.SEC, (side, i)))

    customers = list(layout.customers)
    base = CapGraph(customers + [DEPOTS])
    for i, j in combinations(customers, 2):
        if point.x(i, j) > 0:
            base.add_edge(i, j, point.x(i, j))
    to_depots = {t: point.depot_degree(t) for t in customers}

    for i in customers:
        cut_graph = CapGraph(customers + [DEPOTS])
        for u, v, capacity in base.edges():
            cut_graph.add_edge(u, v, capacity)
        for t in customers:
            capacity = to_depots[t]
            if t == i:
                capacity += 2 * sum(point.y(i, r) for r in layout.depots)
            if capacity > 0:
                cut_graph.add_edge(DEPOTS, t, capacity)
        for j in customers:
            if j != i and point.y(i, j) > 0:
                cut_graph.add_edge(i, j, 2 * point.y(i, j))
        result = min_st_cut(cut_graph, DEPOTS, i)
        if result.value < 2 - eps_cut:
            side = tuple(sorted(v for v in customers if v not in result.source_side))
            if len(side) >= 2:
                cuts.append(make_cut(point, CutFamily.SEC, (side, i)))
    return _violated(cuts, eps_cut)


def best_depot_split(point: FractionalPoint, j: int, k: int) -> tuple[int, ...] | None:
    """
    The proper nonempty D' maximising x*(D':j) + x*(k:D-D').

    D' = {d : x*_jd >= x*_kd}; when that is empty or all of D the depot with
    the smallest margin is moved across.  None for a single-depot instance.
    """
    depots = list(point.layout.depots)
    if len(depots) < 2:
        return None
    margins = {d: point.x(j, d) - point.x(k, d) for d in depots}
    subset = [d for d in depots if margins[d] >= 0]
    if not subset:
        subset = [max(depots, key=lambda d: (margins[d], -d))]
    elif len(subset) == len(depots):
        weakest = min(depots, key=lambda d: (margins[d], d))
        subset.remove(weakest)
    return tuple(sorted(subset))


def _split_weight(point: FractionalPoint, j: int, k: int, subset: tuple) -> float:
    return sum(point.x(j, d) for d in subset) + sum(
        point.x(k, d) for d in point.layout.depots if d not in subset)


def sep_pec_2path(point: FractionalPoint, eps_cut: float = EPS_CUT) -> list[Cut]:
    """path elimination cuts on two customers, one per customer pair of V*"""
    layout = point.layout
    if layout.n_depots < 2:
        return []
    customers = [t for t in point.support_vertices() if not layout.is_depot(t)]
    cuts = []
    for j, k in combinations(customers, 2):
        subset = best_depot_split(point, j, k)
        lhs = _split_weight(point, j, k, subset) + 3 * point.x(j, k)
        if lhs > 2 * (point.y(j, j) + point.y(k, k)) + eps_cut:
            cuts.append(make_cut(point, CutFamily.PEC2, (j, k, subset)))
    return _violated(cuts, eps_cut)


def _pec_graph(point: FractionalPoint, j: int, k: int, a: int) -> CapGraph:
    layout = point.layout
    customers = list(layout.customers)
    graph = CapGraph(customers + [SOURCE, DEPOTS])
    for u, v in combinations(customers, 2):
        capacity = point.x(u, v)
        if a in (u, v):
            capacity += point.y(a, v if u == a else u)
        if capacity > 0:
            graph.add_edge(u, v, capacity)
    for t in customers:
        capacity = point.depot_degree(t)
        if t == a:
            capacity += sum(point.y(a, r) for r in layout.depots)
        if capacity > 0:
            graph.add_edge(t, DEPOTS, capacity)
    for v in (j, k, a):
        graph.add_large_edge(SOURCE, v)
    return graph


def sep_pec_long(point: FractionalPoint, eps_cut: float = EPS_CUT) -> list[Cut]:
    """
    Path elimination cuts on three or more customers.

    For j, k in one component of G* and every other customer a of that
    component, a minimum cut between {j, k, a} and the contracted depots
    finds the most violated cut for the best depot split.  Pairs whose depot
    split weight is already below the cut tolerance are skipped: for them a
    violation would imply a violated subtour cut.
    """
    layout = point.layout
    if layout.n_depots < 2:
        return []
    components = connected_components(support_graph(point))
    where = _component_of(components)
    customers = [t for t in point.support_vertices() if not layout.is_depot(t)]
    cuts = []
    for j, k in combinations(customers, 2):
        if where[j] != where[k]:
            continue
        subset = best_depot_split(point, j, k)
        weight = _split_weight(point, j, k, subset)
        if weight <= eps_cut:
            continue
        for a in sorted(components[where[j]]):
            if layout.is_depot(a) or a in (j, k):
                continue
            bound = weight + 1 - point.y(a, j) - point.y(a, k)
            result = min_st_cut(_pec_graph(point, j, k, a), SOURCE, DEPOTS)
            if result.value < bound - eps_cut:
                closed = set(result.source_side) - {SOURCE}
                side = tuple(sorted(closed - {j, k}))
                cuts.append(make_cut(point, CutFamily.PEC, (j, k, a, side, subset)))
    return _violated(cuts, eps_cut)


def sep_two_matching(point: FractionalPoint, eps_cut: float = EPS_CUT) -> list[Cut]:
    """
    Heuristic 2-matching separation: each component of the fractional
    customer–customer edges is a handle, its x* = 1 customer edges leaving it
    are the teeth (no shared endpoints).  Even tooth counts are rejected.
    """
    layout = point.layout
    customers = list(layout.customers)
    fractional = CapGraph(customers)
    for i, j in combinations(customers, 2):
        value = point.x(i, j)
        if point.eps_support < value < 1 - TOOTH_TOLERANCE:
            fractional.add_edge(i, j, value)
    cuts = []
    for handle in connected_components(fractional):
        if len(handle) < 2:
            continue
        used: set[int] = set()
        teeth = []
        for u in sorted(handle):
            for v in customers:
                if v in handle or abs(point.x(u, v) - 1) > TOOTH_TOLERANCE:
                    continue
                if u in used or v in used:
                    continue
                teeth.append((min(u, v), max(u, v)))
                used.update((u, v))
        if len(teeth) < 3 or len(teeth) % 2 == 0:
            continue
        cuts.append(make_cut(point, CutFamily.TWO_MATCH, (tuple(sorted(handle)), tuple(teeth))))
    return _violated(cuts, eps_cut)


def _positive_arc_triangles(point: FractionalPoint):
    for i, j, k in permutations(point.layout.customers, 3):
        if i != min(i, j, k):
            continue
        if min(point.y(i, j), point.y(j, k), point.y(k, i)) > point.eps_support:
            yield i, j, k


def sep_odd_hole(point: FractionalPoint, eps_cut: float = EPS_CUT) -> list[Cut]:
    """y_ij + y_jk + y_ki <= 1 by full enumeration of arc triangles"""
    cuts = []
    for i, j, k in _positive_arc_triangles(point):
        if point.y(i, j) + point.y(j, k) + point.y(k, i) > 1 + eps_cut:
            cuts.append(make_cut(point, CutFamily.ODD_HOLE, (i, j, k)))
    return _violated(cuts, eps_cut)


def sep_ssp_sec(point: FractionalPoint, eps_cut: float = EPS_CUT) -> list[Cut]:
    """x(delta(S)) >= 2 (y_ij + y_jk + y_ki) via a depot / {i, j, k} minimum cut"""
    layout = point.layout
    customers = list(layout.customers)
    base = CapGraph(customers + [DEPOTS, SINK])
    for i, j in combinations(customers, 2):
        if point.x(i, j) > 0:
            base.add_edge(i, j, point.x(i, j))
    for t in customers:
        if point.depot_degree(t) > 0:
            base.add_edge(t, DEPOTS, point.depot_degree(t))
    cuts = []
    for i, j, k in _positive_arc_triangles(point):
        graph = CapGraph(customers + [DEPOTS, SINK])
        for u, v, capacity in base.edges():
            graph.add_edge(u, v, capacity)
        for v in (i, j, k):
            graph.add_large_edge(v, SINK)
        result = min_st_cut(graph, DEPOTS, SINK)
        if result.value < 2 * (point.y(i, j) + point.y(j, k) + point.y(k, i)) - eps_cut:
            side = tuple(sorted(v for v in customers if v not in result.source_side))
            cuts.append(make_cut(point, CutFamily.SSP_SEC, (side, i, j, k)))
    return _violated(cuts, eps_cut)


SEPARATORS = {
    CutFamily.PAIR: sep_pairs,
    CutFamily.SEC: sep_sec,
    CutFamily.PEC2: sep_pec_2path,
    CutFamily.PEC: sep_pec_long,
    CutFamily.TWO_MATCH: sep_two_matching,
    CutFamily.ODD_HOLE: sep_odd_hole,
    CutFamily.SSP_SEC: sep_ssp_sec,
}
