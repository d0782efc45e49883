"""
Instances, solutions and their incidence vectors.

Vertex ids are canonical: customers are ``0 .. u-1`` and depots are
``u .. u+n-1``.  Every column index used by the LP, the separators and the
polyhedral lab comes from ``VariableLayout``, so indices are stable across
runs and across modules.
"""

import json
import math
import re
from dataclasses import dataclass, field
from functools import lru_cache
from logging import getLogger
from typing import Iterable, Mapping

import numpy as np

logger = getLogger('mdrsp.instance')

CLASS_I = 'I'
CLASS_II = 'II'
ALPHAS = (3, 5, 7, 9)


class InstanceFormatError(ValueError):
    """raised for malformed TSPLIB or instance/solution JSON input"""


class InfeasibleSolutionError(ValueError):
    """raised when a feasible solution is required but the input is not one"""


def round_significant(value: float, digits: int = 10) -> float:
    """round to ``digits`` significant digits, the precision of every file we write"""
    return float(f'{value:.{digits}g}')


def _frozen_array(values, dtype=float) -> np.ndarray:
    array = np.array(values, dtype=dtype)
    array.setflags(write=False)
    return array


def euclidean_matrix(points: np.ndarray) -> np.ndarray:
    """real-valued Euclidean distances between all rows of ``points``"""
    diff = points[:, None, :] - points[None, :, :]
    return np.sqrt((diff ** 2).sum(axis=2))


# ---------------------------------------------------------------------------
# base cost model and TSPLIB parsing
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class CostModel:
    """
    Base distances l_ij of a TSPLIB file.

    Exactly one of ``coords`` and ``explicit_matrix`` is set.  ``display_coords``
    is the optional DISPLAY_DATA_SECTION of an explicit file (bays29 ships one).
    """
    name: str
    coords: np.ndarray | None = None
    explicit_matrix: np.ndarray | None = None
    display_coords: np.ndarray | None = None

    def __post_init__(self):
        if (self.coords is None) == (self.explicit_matrix is None):
            raise InstanceFormatError('exactly one of coords / explicit matrix must be given')
        if self.explicit_matrix is not None:
            matrix = self.explicit_matrix
            if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
                raise InstanceFormatError(f'explicit matrix must be square, got shape {matrix.shape}')
            if not np.array_equal(matrix, matrix.T):
                raise InstanceFormatError('explicit matrix is not symmetric')
            if (matrix < 0).any() or (np.diag(matrix) != 0).any():
                raise InstanceFormatError('explicit matrix must be nonnegative with a zero diagonal')

    @property
    def size(self) -> int:
        """number of vertices in the file"""
        if self.coords is not None:
            return len(self.coords)
        return len(self.explicit_matrix)

    @property
    def placement_coords(self) -> np.ndarray | None:
        """coordinates usable for Euclidean generation: real ones, else display ones"""
        return self.coords if self.coords is not None else self.display_coords

    def distance_matrix(self) -> np.ndarray:
        """the full l matrix"""
        if self.coords is not None:
            return euclidean_matrix(self.coords)
        return np.array(self.explicit_matrix, dtype=float)

    def base_distance(self, i: int, j: int) -> float:
        """l_ij; real-valued Euclidean for coordinate files (no TSPLIB rounding)"""
        if self.coords is not None:
            return float(math.dist(self.coords[i], self.coords[j]))
        return float(self.explicit_matrix[i, j])


_SUPPORTED_FORMATS = ('FULL_MATRIX', 'LOWER_DIAG_ROW')
_SECTIONS = ('NODE_COORD_SECTION', 'EDGE_WEIGHT_SECTION', 'DISPLAY_DATA_SECTION')
_HEADER_LINE = re.compile(r'^[A-Za-z_]+\s*:')


def _number(token: str) -> float:
    try:
        return float(token)
    except ValueError:
        raise InstanceFormatError(f'malformed numeric token {token!r}') from None


def parse_tsplib(text: str) -> CostModel:
    """
    Parse the supported TSPLIB subset.

    Supported: EDGE_WEIGHT_TYPE EUC_2D with NODE_COORD_SECTION, and EXPLICIT
    with EDGE_WEIGHT_FORMAT FULL_MATRIX or LOWER_DIAG_ROW (an optional
    DISPLAY_DATA_SECTION is kept as display coordinates).

    :param text: the raw file content
    :type text: str
    :return: the base cost model
    :rtype: CostModel
    :raises InstanceFormatError: unsupported weight type, dimension mismatch or malformed number
    """
    header: dict[str, str] = {}
    sections: dict[str, list[str]] = {}
    current = None
    for raw_line in text.splitlines():
        line = raw_line.strip()
        if not line or line == 'EOF':
            continue
        keyword = re.split(r'[\s:]+', line, maxsplit=1)[0].upper()
        if keyword in _SECTIONS:
            current = keyword
            sections[current] = []
            continue
        if _HEADER_LINE.match(line):
            key, _, value = line.partition(':')
            header[key.strip().upper()] = value.strip()
            current = None
            continue
        if current is None:
            raise InstanceFormatError(f'unexpected line outside of a section: {line!r}')
        sections[current].extend(line.split())

    name = header.get('NAME', 'unnamed')
    weight_type = header.get('EDGE_WEIGHT_TYPE', '').upper()
    try:
        dimension = int(header['DIMENSION'])
    except KeyError:
        raise InstanceFormatError('missing DIMENSION') from None
    except ValueError:
        raise InstanceFormatError(f'malformed DIMENSION {header["DIMENSION"]!r}') from None

    if weight_type == 'EUC_2D':
        coords = _read_coordinates(sections.get('NODE_COORD_SECTION'), dimension, 'NODE_COORD_SECTION')
        logger.debug(f'parsed EUC_2D file {name} with {dimension} nodes')
        return CostModel(name=name, coords=_frozen_array(coords))

    if weight_type == 'EXPLICIT':
        weight_format = header.get('EDGE_WEIGHT_FORMAT', '').upper()
        if weight_format not in _SUPPORTED_FORMATS:
            raise InstanceFormatError(f'unsupported weight format {weight_format or "<missing>"}')
        tokens = sections.get('EDGE_WEIGHT_SECTION')
        if tokens is None:
            raise InstanceFormatError('missing EDGE_WEIGHT_SECTION')
        values = [_number(token) for token in tokens]
        matrix = np.zeros((dimension, dimension))
        if weight_format == 'FULL_MATRIX':
            if len(values) != dimension * dimension:
                raise InstanceFormatError(
                    f'dimension mismatch: FULL_MATRIX of {dimension} needs {dimension ** 2} values, got {len(values)}')
            matrix[:, :] = np.array(values).reshape(dimension, dimension)
        else:
            expected = dimension * (dimension + 1) // 2
            if len(values) != expected:
                raise InstanceFormatError(
                    f'dimension mismatch: LOWER_DIAG_ROW of {dimension} needs {expected} values, got {len(values)}')
            rows, cols = np.tril_indices(dimension)
            matrix[rows, cols] = values
            matrix[cols, rows] = values
        display = None
        if 'DISPLAY_DATA_SECTION' in sections:
            display = _frozen_array(_read_coordinates(sections['DISPLAY_DATA_SECTION'], dimension,
                                                      'DISPLAY_DATA_SECTION'))
        logger.debug(f'parsed EXPLICIT {weight_format} file {name} with {dimension} nodes')
        return CostModel(name=name, explicit_matrix=_frozen_array(matrix), display_coords=display)

    raise InstanceFormatError(f'unsupported weight type {weight_type or "<missing>"}')


def _read_coordinates(tokens: list[str] | None, dimension: int, section: str) -> list[list[float]]:
    if tokens is None:
        raise InstanceFormatError(f'missing {section}')
    if len(tokens) != 3 * dimension:
        raise InstanceFormatError(
            f'dimension mismatch: {section} needs {dimension} nodes, got {len(tokens) / 3:g}')
    values = [_number(token) for token in tokens]
    return [[values[3 * k + 1], values[3 * k + 2]] for k in range(dimension)]


# ---------------------------------------------------------------------------
# instance
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Instance:
    """
    An MDRSP instance over V = T ∪ D, customers first.

    ``routing_cost`` and ``assignment_cost`` are full |V|x|V| arrays; only the
    entries with a matching variable (customer–customer, depot–customer, the
    arcs of the formulation) are ever read.
    """
    name: str
    n_customers: int
    n_depots: int
    routing_cost: np.ndarray
    assignment_cost: np.ndarray
    class_tag: str = CLASS_I
    alpha: int | None = None
    seed: int | None = None
    customer_coords: np.ndarray | None = None
    depot_coords: np.ndarray | None = None
    base_matrix: np.ndarray | None = None
    distance_source: str = 'coords'

    def __post_init__(self):
        size = self.n_customers + self.n_depots
        if self.n_customers < 1 or self.n_depots < 1:
            raise InstanceFormatError('an instance needs at least one customer and one depot')
        for label, matrix in (('routing', self.routing_cost), ('assignment', self.assignment_cost)):
            if matrix.shape != (size, size):
                raise InstanceFormatError(f'{label} cost must be {size}x{size}, got {matrix.shape}')
            if (matrix < 0).any():
                raise InstanceFormatError(f'{label} cost must be nonnegative')
        if not np.array_equal(self.routing_cost, self.routing_cost.T):
            raise InstanceFormatError('routing cost must be symmetric')
        if self.class_tag not in (CLASS_I, CLASS_II):
            raise InstanceFormatError(f'unknown class {self.class_tag!r}')
        if self.class_tag == CLASS_II and self.alpha not in ALPHAS:
            raise InstanceFormatError(f'class II needs alpha in {ALPHAS}, got {self.alpha!r}')

    def __repr__(self) -> str:
        return f'Instance({self.name!r}, u={self.n_customers}, n={self.n_depots}, class={self.class_tag})'

    @property
    def customers(self) -> range:
        """customer ids"""
        return range(self.n_customers)

    @property
    def depots(self) -> range:
        """depot ids"""
        return range(self.n_customers, self.n_customers + self.n_depots)

    @property
    def n_vertices(self) -> int:
        """|V|"""
        return self.n_customers + self.n_depots

    @property
    def layout(self) -> 'VariableLayout':
        """the canonical variable layout for this instance's (u, n)"""
        return variable_layout(self.n_customers, self.n_depots)

    def is_depot(self, vertex: int) -> bool:
        """True for depot ids"""
        return self.n_customers <= vertex < self.n_vertices

    def c(self, i: int, j: int) -> float:
        """routing cost of edge (i, j)"""
        return float(self.routing_cost[i, j])

    def d(self, i: int, j: int) -> float:
        """assignment cost of arc [i, j]"""
        return float(self.assignment_cost[i, j])

    @classmethod
    def from_costs(cls, routing_cost, assignment_cost, n_depots: int, name: str = 'custom') -> 'Instance':
        """build an instance from explicit cost matrices (customers first, then depots)"""
        routing = _frozen_array(routing_cost)
        size = routing.shape[0]
        return cls(name=name, n_customers=size - n_depots, n_depots=n_depots,
                   routing_cost=routing, assignment_cost=_frozen_array(assignment_cost),
                   distance_source='explicit')

    @classmethod
    def from_base_distances(cls, base, n_depots: int, class_tag: str = CLASS_I, alpha: int | None = None,
                            name: str = 'custom', seed: int | None = None, customer_coords=None,
                            depot_coords=None, distance_source: str = 'matrix') -> 'Instance':
        """apply the class cost formulas to a base distance matrix over V"""
        base = np.array(base, dtype=float)
        routing, assignment = class_costs(base, class_tag, alpha)
        return cls(name=name, n_customers=base.shape[0] - n_depots, n_depots=n_depots,
                   routing_cost=_frozen_array(routing), assignment_cost=_frozen_array(assignment),
                   class_tag=class_tag, alpha=alpha if class_tag == CLASS_II else None, seed=seed,
                   customer_coords=None if customer_coords is None else _frozen_array(customer_coords),
                   depot_coords=None if depot_coords is None else _frozen_array(depot_coords),
                   base_matrix=_frozen_array(base) if distance_source == 'matrix' else None,
                   distance_source=distance_source)

    @classmethod
    def from_coordinates(cls, customers, depots, class_tag: str = CLASS_I, alpha: int | None = None,
                         name: str = 'custom', seed: int | None = None,
                         distance_source: str = 'coords') -> 'Instance':
        """Euclidean instance from customer and depot points"""
        customers = np.array(customers, dtype=float).reshape(-1, 2)
        depots = np.array(depots, dtype=float).reshape(-1, 2)
        base = euclidean_matrix(np.vstack([customers, depots]))
        return cls.from_base_distances(base, len(depots), class_tag, alpha, name=name, seed=seed,
                                       customer_coords=customers, depot_coords=depots,
                                       distance_source=distance_source)


def class_costs(base: np.ndarray, class_tag: str, alpha: int | None) -> tuple[np.ndarray, np.ndarray]:
    """
    Class I: c = d = l.  Class II: c = alpha*l and d = (10 - alpha)*l.
    """
    if class_tag == CLASS_I:
        return base.copy(), base.copy()
    if class_tag == CLASS_II:
        if alpha not in ALPHAS:
            raise ValueError(f'class II needs alpha in {ALPHAS}, got {alpha!r}')
        return alpha * base, (10 - alpha) * base
    raise ValueError(f'unknown class {class_tag!r}')


def generate_instance(base: CostModel, n_depots: int, class_tag: str = CLASS_I,
                      alpha: int | None = None, seed: int = 0) -> Instance:
    """
    Place ``n_depots`` depots uniformly in the bounding box of the customer
    coordinates and apply the class cost formulas.

    Depot coordinates are rounded to the instance file precision before costs
    are computed, so a written and re-read instance is identical.

    :raises ValueError: bad depot count or alpha, or a base without any coordinates
    """
    if n_depots < 1:
        raise ValueError(f'n_depots must be at least 1, got {n_depots}')
    if class_tag == CLASS_II and alpha not in ALPHAS:
        raise ValueError(f'class II needs alpha in {ALPHAS}, got {alpha!r}')
    points = base.placement_coords
    if points is None:
        raise ValueError(f'{base.name} has no coordinates; depots cannot be placed')
    source = 'coords' if base.coords is not None else 'display'

    rng = np.random.default_rng(seed)
    low = points.min(axis=0)
    high = points.max(axis=0)
    depots = rng.uniform(low, high, size=(n_depots, 2))
    depots = np.vectorize(round_significant)(depots)
    logger.debug(f'generated {n_depots} depots for {base.name} (seed={seed}, source={source})')
    return Instance.from_coordinates(points, depots, class_tag, alpha, name=base.name, seed=seed,
                                     distance_source=source)


# ---------------------------------------------------------------------------
# variable layout and incidence vectors
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class VariableLayout:
    """
    Canonical column ordering: customer–customer edges, then depot–customer
    edges, then arcs, each lexicographic on (min id, max id) / (tail, head).

    m = C(u,2) + u^2 + n + 3nu.
    """
    n_customers: int
    n_depots: int
    columns: tuple = field(repr=False)
    index: dict = field(repr=False)

    @property
    def n_columns(self) -> int:
        """m"""
        return len(self.columns)

    @property
    def customers(self) -> range:
        """customer ids"""
        return range(self.n_customers)

    @property
    def depots(self) -> range:
        """depot ids"""
        return range(self.n_customers, self.n_customers + self.n_depots)

    def is_depot(self, vertex: int) -> bool:
        """True for depot ids"""
        return vertex >= self.n_customers

    def x(self, i: int, j: int) -> int:
        """column of the undirected edge (i, j)"""
        key = ('x', min(i, j), max(i, j))
        try:
            return self.index[key]
        except KeyError:
            raise KeyError(f'no edge variable for ({i}, {j})') from None

    def y(self, i: int, j: int) -> int:
        """column of the arc [i, j]"""
        try:
            return self.index[('y', i, j)]
        except KeyError:
            raise KeyError(f'no arc variable for [{i}, {j}]') from None

    def has_x(self, i: int, j: int) -> bool:
        """True when (i, j) is an edge of the formulation"""
        return ('x', min(i, j), max(i, j)) in self.index

    def has_y(self, i: int, j: int) -> bool:
        """True when [i, j] is an arc of the formulation"""
        return ('y', i, j) in self.index

    def edge_columns(self) -> list[int]:
        """all x columns"""
        return [k for k, column in enumerate(self.columns) if column[0] == 'x']

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        """
        Root bounds: x customer–customer [0,1], x depot–customer [0,2], y [0,1],
        y_dd fixed to 1 and y_dt fixed to 0.
        """
        lower = np.zeros(self.n_columns)
        upper = np.ones(self.n_columns)
        for k, (kind, i, j) in enumerate(self.columns):
            if kind == 'x' and self.is_depot(j):
                upper[k] = 2.0
            elif kind == 'y' and self.is_depot(i):
                if i == j:
                    lower[k] = 1.0
                else:
                    upper[k] = 0.0
        return lower, upper

    def objective(self, inst: Instance) -> np.ndarray:
        """the cost vector of the objective"""
        costs = np.empty(self.n_columns)
        for k, (kind, i, j) in enumerate(self.columns):
            costs[k] = inst.c(i, j) if kind == 'x' else inst.d(i, j)
        return costs

    def describe(self, column: int) -> str:
        """``x[i,j]`` / ``y[i,j]`` label of a column"""
        kind, i, j = self.columns[column]
        return f'{kind}[{i},{j}]'


@lru_cache(maxsize=None)
def variable_layout(n_customers: int, n_depots: int) -> VariableLayout:
    """the shared layout for (u, n)"""
    customers = range(n_customers)
    depots = range(n_customers, n_customers + n_depots)
    columns = [('x', i, j) for i in customers for j in customers if i < j]
    columns += [('x', t, r) for t in customers for r in depots]
    arcs = [(i, j) for i in customers for j in customers]
    arcs += [(r, r) for r in depots]
    arcs += [(r, t) for r in depots for t in customers]
    arcs += [(t, r) for t in customers for r in depots]
    columns += [('y', i, j) for i, j in sorted(arcs)]
    index = {column: k for k, column in enumerate(columns)}
    return VariableLayout(n_customers, n_depots, tuple(columns), index)


@dataclass(frozen=True, eq=False)
class IncidenceVector:
    """an integral (x, y) point in canonical column order"""
    layout: VariableLayout
    values: np.ndarray

    def x(self, i: int, j: int) -> int:
        """x_ij"""
        return int(self.values[self.layout.x(i, j)])

    def y(self, i: int, j: int) -> int:
        """y_ij"""
        return int(self.values[self.layout.y(i, j)])

    def key(self) -> bytes:
        """hashable identity used for deduplication"""
        return self.values.tobytes()

    def __eq__(self, other):
        return (isinstance(other, IncidenceVector) and self.layout is other.layout
                and np.array_equal(self.values, other.values))

    def __hash__(self):
        return hash(self.key())


# ---------------------------------------------------------------------------
# solutions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Ring:
    """a depot and the cyclic order of its customers; one customer means the degenerate ring"""
    depot: int
    customers: tuple[int, ...]

    def edges(self) -> list[tuple[int, int]]:
        """ring edges with multiplicity (the degenerate ring lists its edge twice)"""
        tour = (self.depot,) + tuple(self.customers)
        if len(self.customers) == 1:
            return [(self.depot, self.customers[0])] * 2
        return [(tour[k], tour[(k + 1) % len(tour)]) for k in range(len(tour))]

    def canonical(self) -> 'Ring':
        """same ring with a deterministic orientation (first customer < last customer)"""
        if len(self.customers) > 1 and self.customers[0] > self.customers[-1]:
            return Ring(self.depot, tuple(reversed(self.customers)))
        return self


@dataclass(frozen=True)
class Solution:
    """
    Rings plus the star assignment of the off-ring customers.

    ``assignment`` maps customers to their target; an entry ``i -> i`` means
    "on a ring" and carries no cost beyond d_ii.
    """
    rings: tuple[Ring, ...]
    assignment: Mapping[int, int] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, 'rings', tuple(self.rings))
        object.__setattr__(self, 'assignment', dict(sorted(self.assignment.items())))

    def ring_customers(self) -> list[int]:
        """customers on rings, with repetitions if the solution is malformed"""
        return [t for ring in self.rings for t in ring.customers]

    def stars(self) -> dict[int, int]:
        """off-ring assignments only"""
        return {i: j for i, j in self.assignment.items() if i != j}

    def sigma(self) -> dict[int, int]:
        """full assignment map, ring customers mapped to themselves"""
        mapping = {t: t for t in self.ring_customers()}
        mapping.update(self.stars())
        return dict(sorted(mapping.items()))


def solution_cost(inst: Instance, sol: Solution) -> float:
    """
    The objective: ring edges (degenerate rings count their edge twice),
    d_ii for ring customers and depots, and the star arcs.
    """
    total = 0.0
    for ring in sol.rings:
        for i, j in ring.edges():
            total += inst.c(i, j)
    for t in sol.ring_customers():
        total += inst.d(t, t)
    for i, j in sol.stars().items():
        total += inst.d(i, j)
    for r in inst.depots:
        total += inst.d(r, r)
    return total


def structural_violations(n_customers: int, n_depots: int, sol: Solution) -> list[str]:
    """
    Rule identifiers violated by ``sol`` under the MIP semantics.

    ``degree``, ``unique-assignment``, ``connectivity``
    (every ring hangs on a depot), ``path-elimination`` (no
    ring touches two depots), ``assignment-target`` and ``vertex-range``.
    Several rings on the same depot and stars pointing at ring-less depots are
    allowed, as in the MIP.
    """
    n_vertices = n_customers + n_depots
    violations: list[str] = []

    def flag(rule: str):
        if rule not in violations:
            violations.append(rule)

    on_ring: dict[int, int] = {}
    for ring in sol.rings:
        if not n_customers <= ring.depot < n_vertices:
            flag('connectivity' if 0 <= ring.depot < n_customers else 'vertex-range')
        if not ring.customers:
            flag('degree')
        for t in ring.customers:
            if n_customers <= t < n_vertices:
                flag('path-elimination')
            elif not 0 <= t < n_customers:
                flag('vertex-range')
            else:
                on_ring[t] = on_ring.get(t, 0) + 1
    if any(count > 1 for count in on_ring.values()):
        flag('degree')

    for i, j in sol.assignment.items():
        if not 0 <= i < n_customers:
            flag('vertex-range')
            continue
        if i == j:
            if i not in on_ring:
                flag('unique-assignment')
            continue
        if i in on_ring:
            flag('unique-assignment')
        if not 0 <= j < n_vertices:
            flag('vertex-range')
        elif j < n_customers and j not in on_ring:
            flag('assignment-target')

    stars = sol.stars()
    for t in range(n_customers):
        if t not in on_ring and t not in stars:
            flag('unique-assignment')
    return violations


def check_feasible(inst: Instance, sol: Solution) -> list[str]:
    """
    Feasibility verdict: the list of violated rule identifiers, empty when
    ``sol`` is feasible.
    """
    return structural_violations(inst.n_customers, inst.n_depots, sol)


def to_incidence(layout: VariableLayout, sol: Solution) -> IncidenceVector:
    """
    The incidence vector of a feasible solution.

    :raises InfeasibleSolutionError: if ``sol`` violates any rule
    """
    violations = structural_violations(layout.n_customers, layout.n_depots, sol)
    if violations:
        raise InfeasibleSolutionError(f'solution is infeasible: {", ".join(violations)}')
    values = np.zeros(layout.n_columns, dtype=np.int64)
    for ring in sol.rings:
        for i, j in ring.edges():
            values[layout.x(i, j)] += 1
        for t in ring.customers:
            values[layout.y(t, t)] = 1
    for i, j in sol.stars().items():
        values[layout.y(i, j)] = 1
    for r in layout.depots:
        values[layout.y(r, r)] = 1
    values.setflags(write=False)
    return IncidenceVector(layout, values)


def from_incidence(layout: VariableLayout, values: Iterable[float], inst: Instance | None = None) -> Solution:
    """
    Rebuild a solution from an integral point.

    A 2-path d1–t–d2, which the MIP allows, becomes the degenerate ring on the
    cheaper of the two depots (ties and cost-free calls pick the lower id), so
    the rebuilt cost never exceeds the point's objective.

    :raises InfeasibleSolutionError: if the point is not integral or not feasible
    """
    raw = np.asarray(list(values) if not isinstance(values, np.ndarray) else values, dtype=float)
    point = np.rint(raw).astype(np.int64)
    if raw.shape != (layout.n_columns,) or np.abs(raw - point).max(initial=0.0) > 1e-6:
        raise InfeasibleSolutionError('point is not integral or has the wrong length')

    u = layout.n_customers
    adjacency: dict[int, list[int]] = {t: [] for t in layout.customers}
    depot_links: dict[int, list[int]] = {t: [] for t in layout.customers}
    for k, (kind, i, j) in enumerate(layout.columns):
        if kind != 'x' or point[k] == 0:
            continue
        if j >= u:
            depot_links[i].extend([j] * int(point[k]))
        else:
            adjacency[i].append(j)
            adjacency[j].append(i)

    on_ring = set()
    stars: dict[int, int] = {}
    for t in layout.customers:
        targets = [j for j in list(layout.customers) + list(layout.depots)
                   if layout.has_y(t, j) and point[layout.y(t, j)] == 1]
        if len(targets) != 1:
            raise InfeasibleSolutionError(f'customer {t} has {len(targets)} assignments')
        degree = len(adjacency[t]) + len(depot_links[t])
        if targets[0] == t:
            on_ring.add(t)
            if degree != 2:
                raise InfeasibleSolutionError(f'ring customer {t} has degree {degree}')
        else:
            stars[t] = targets[0]
            if degree != 0:
                raise InfeasibleSolutionError(f'assigned customer {t} has degree {degree}')

    rings: list[Ring] = []
    visited: set[int] = set()
    for start in sorted(on_ring):
        if start in visited or not depot_links[start]:
            continue
        first_depot = depot_links[start][0]
        path = [start]
        visited.add(start)
        previous, current = None, start
        while True:
            nxt = [v for v in adjacency[current] if v != previous and v not in visited]
            if not nxt:
                break
            previous, current = current, nxt[0]
            path.append(current)
            visited.add(current)
        if len(path) == 1:
            last_depot = depot_links[start][1]
        elif depot_links[current]:
            last_depot = depot_links[current][0]
        else:
            raise InfeasibleSolutionError(f'path {path} does not end at a depot')
        if first_depot == last_depot:
            rings.append(Ring(first_depot, tuple(path)).canonical())
        elif len(path) == 1:
            pair = sorted((first_depot, last_depot))
            if inst is not None and inst.c(start, pair[1]) < inst.c(start, pair[0]):
                pair.reverse()
            rings.append(Ring(pair[0], (start,)))
        else:
            raise InfeasibleSolutionError(f'path {path} joins depots {first_depot} and {last_depot}')

    leftover = on_ring - visited
    if leftover:
        raise InfeasibleSolutionError(f'customers {sorted(leftover)} form a subtour without a depot')

    for i, j in stars.items():
        if j < u and j not in on_ring:
            raise InfeasibleSolutionError(f'customer {i} is assigned to off-ring customer {j}')

    rings.sort(key=lambda ring: (ring.depot, ring.customers))
    return Solution(tuple(rings), stars)


def nearest_depot_solution(inst: Instance) -> Solution:
    """every customer assigned to its cheapest depot; always feasible"""
    depots = list(inst.depots)
    stars = {t: min(depots, key=lambda r: (inst.d(t, r), r)) for t in inst.customers}
    return Solution((), stars)


# ---------------------------------------------------------------------------
# JSON files
# ---------------------------------------------------------------------------

def _rounded(values) -> list:
    array = np.asarray(values, dtype=float)
    if array.ndim == 1:
        return [round_significant(v) for v in array]
    return [_rounded(row) for row in array]


def instance_to_dict(inst: Instance) -> dict:
    """the instance file document"""
    document = {'name': inst.name, 'class': inst.class_tag, 'alpha': inst.alpha, 'seed': inst.seed,
                'distance_source': inst.distance_source}
    if inst.customer_coords is not None and inst.depot_coords is not None:
        document['customers'] = _rounded(inst.customer_coords)
        document['depots'] = _rounded(inst.depot_coords)
    elif inst.base_matrix is not None:
        document['n_depots'] = inst.n_depots
        document['matrix'] = _rounded(inst.base_matrix)
    else:
        document['n_depots'] = inst.n_depots
        document['routing_cost'] = _rounded(inst.routing_cost)
        document['assignment_cost'] = _rounded(inst.assignment_cost)
    return document


def instance_from_dict(document: Mapping) -> Instance:
    """
    Build an instance from its file document.

    :raises InstanceFormatError: missing or inconsistent fields
    """
    try:
        name = document.get('name', 'unnamed')
        class_tag = document.get('class', CLASS_I)
        alpha = document.get('alpha')
        seed = document.get('seed')
        source = document.get('distance_source', 'coords')
        if 'customers' in document:
            return Instance.from_coordinates(document['customers'], document['depots'], class_tag, alpha,
                                             name=name, seed=seed, distance_source=source)
        n_depots = int(document['n_depots'])
        if 'matrix' in document:
            return Instance.from_base_distances(document['matrix'], n_depots, class_tag, alpha,
                                                name=name, seed=seed, distance_source='matrix')
        return Instance.from_costs(document['routing_cost'], document['assignment_cost'], n_depots, name=name)
    except InstanceFormatError:
        raise
    except KeyError as err:
        raise InstanceFormatError(f'instance document is missing field {err}') from None
    except (TypeError, ValueError) as err:
        raise InstanceFormatError(f'invalid instance document: {err}') from None


def write_instance(inst: Instance, path: str) -> None:
    """write the instance file (byte-identical for identical instances)"""
    with open(path, 'w', encoding='utf-8') as handle:
        json.dump(instance_to_dict(inst), handle, indent=2)
        handle.write('\n')


def read_instance(path: str) -> Instance:
    """read an instance file"""
    try:
        with open(path, 'r', encoding='utf-8') as handle:
            document = json.load(handle)
    except json.JSONDecodeError as err:
        raise InstanceFormatError(f'{path} is not valid JSON: {err}') from None
    return instance_from_dict(document)


def solution_to_dict(inst: Instance, sol: Solution) -> dict:
    """the solution file document"""
    return {'cost': round_significant(solution_cost(inst, sol)),
            'rings': [{'depot': ring.depot, 'customers': list(ring.customers)} for ring in sol.rings],
            'assignments': {str(i): j for i, j in sol.stars().items()}}


def solution_from_dict(document: Mapping) -> Solution:
    """rebuild a solution from its file document"""
    try:
        rings = tuple(Ring(int(ring['depot']), tuple(int(t) for t in ring['customers']))
                      for ring in document['rings'])
        stars = {int(i): int(j) for i, j in document.get('assignments', {}).items()}
    except (KeyError, TypeError, ValueError) as err:
        raise InstanceFormatError(f'invalid solution document: {err}') from None
    return Solution(rings, stars)


def write_solution(inst: Instance, sol: Solution, path: str) -> None:
    """write the solution file"""
    with open(path, 'w', encoding='utf-8') as handle:
        json.dump(solution_to_dict(inst, sol), handle, indent=2)
        handle.write('\n')


def read_solution(path: str) -> Solution:
    """read a solution file"""
    try:
        with open(path, 'r', encoding='utf-8') as handle:
            return solution_from_dict(json.load(handle))
    except json.JSONDecodeError as err:
        raise InstanceFormatError(f'{path} is not valid JSON: {err}') from None
