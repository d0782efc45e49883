"""
Linear programming for the MDRSP relaxation.

``solve`` runs a bounded-variable revised primal simplex with an explicit
basis inverse.  Rows are turned into equalities with one slack per row
(``<=`` rows get a slack in [0, inf), ``>=`` rows one in (-inf, 0], ``=``
rows a fixed zero slack), so every column is a bounded variable and the slack
basis is always available.  Phase 1 minimises the sum of bound violations of
the basic variables starting from whatever basis it is given; this is what
makes a basis hint useful after rows are added or bounds are tightened.

``engine="highs"`` hands the same model to ``scipy.optimize.linprog``.  It
has no warm start and is used to cross-check the in-house engine.
"""

import re
from dataclasses import dataclass, field
from enum import Enum
from logging import getLogger
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

from .instance import Instance, VariableLayout

logger = getLogger('mdrsp.lp')


class LpModelError(ValueError):
    """raised for rows or bound changes referring to unknown columns"""


class LpStatus(Enum):
    """outcome of a solve"""
    OPTIMAL = 'optimal'
    INFEASIBLE = 'infeasible'
    UNBOUNDED = 'unbounded'
    ITERATION_LIMIT = 'iteration-limit'


class Sense(Enum):
    """row sense"""
    EQ = '='
    LE = '<='
    GE = '>='


@dataclass(frozen=True)
class LpTolerances:
    """numerical tolerances of the simplex engine"""
    feasibility: float = 1e-6
    optimality: float = 1e-7
    pivot: float = 1e-9
    bland_after: int = 5000
    refactor_every: int = 100


@dataclass(frozen=True)
class Row:
    """a sparse linear row ``sum coef * x  sense  rhs``"""
    coefficients: tuple[tuple[int, float], ...]
    sense: Sense
    rhs: float
    name: str = ''

    @classmethod
    def build(cls, coefficients: dict[int, float] | Iterable[tuple[int, float]], sense: Sense, rhs: float,
              name: str = '') -> 'Row':
        """merge duplicate columns, drop zeros and sort by column"""
        merged: dict[int, float] = {}
        items = coefficients.items() if isinstance(coefficients, dict) else coefficients
        for column, value in items:
            merged[column] = merged.get(column, 0.0) + float(value)
        terms = tuple(sorted((column, value) for column, value in merged.items() if value != 0.0))
        return cls(terms, sense, float(rhs), name)

    def activity(self, values: np.ndarray) -> float:
        """left-hand side at ``values``"""
        return float(sum(value * values[column] for column, value in self.coefficients))

    def violation(self, values: np.ndarray) -> float:
        """amount by which ``values`` violates the row (<= 0 when satisfied)"""
        lhs = self.activity(values)
        if self.sense is Sense.LE:
            return lhs - self.rhs
        if self.sense is Sense.GE:
            return self.rhs - lhs
        return abs(lhs - self.rhs)


@dataclass(frozen=True)
class Basis:
    """
    A simplex basis over structural columns ``0..n-1`` and slack columns
    ``n+r`` for row ``r``.

    ``inverse`` is an optional cached inverse of the basis matrix; it is only
    trusted when its shape matches ``n_rows``.
    """
    basic: tuple[int, ...]
    at_upper: frozenset
    n_structural: int
    n_rows: int
    inverse: np.ndarray | None = field(default=None, compare=False, repr=False)

    def without_inverse(self) -> 'Basis':
        """the same basis without the cached factor (cheap to keep on many tree nodes)"""
        return Basis(self.basic, self.at_upper, self.n_structural, self.n_rows)


@dataclass
class LpSolution:
    """result of a solve"""
    status: LpStatus
    objective: float
    values: np.ndarray
    basis: Basis | None
    iterations: int = 0

    @property
    def optimal(self) -> bool:
        """True when status is OPTIMAL"""
        return self.status is LpStatus.OPTIMAL


class LpModel:
    """
    Columns (cost, lower, upper) plus sparse rows.

    Single writer: ``add_rows`` and ``set_bound`` mutate the model in place and
    return it; concurrent solves need independent copies.
    """

    def __init__(self, objective: Sequence[float], lower: Sequence[float], upper: Sequence[float],
                 column_names: Sequence[str] | None = None):
        self.objective = np.array(objective, dtype=float)
        self.lower = np.array(lower, dtype=float)
        self.upper = np.array(upper, dtype=float)
        if not (len(self.objective) == len(self.lower) == len(self.upper)):
            raise LpModelError('objective and bounds must have the same length')
        self.column_names = list(column_names) if column_names is not None else [
            f'c{k}' for k in range(len(self.objective))]
        self.rows: list[Row] = []
        self.hint: Basis | None = None
        self._matrix: sp.csc_matrix | None = None

    @property
    def n_columns(self) -> int:
        """number of structural columns"""
        return len(self.objective)

    @property
    def n_rows(self) -> int:
        """number of rows"""
        return len(self.rows)

    def copy(self) -> 'LpModel':
        """independent copy (rows are immutable and shared)"""
        clone = LpModel(self.objective, self.lower, self.upper, self.column_names)
        clone.rows = list(self.rows)
        clone.hint = self.hint
        clone._matrix = self._matrix
        return clone

    def add_rows(self, rows: Iterable[Row]) -> 'LpModel':
        """append rows; the basis hint stays valid (new slacks join the basis)"""
        rows = list(rows)
        for row in rows:
            for column, _ in row.coefficients:
                if not 0 <= column < self.n_columns:
                    raise LpModelError(f'row {row.name or "<unnamed>"} references unknown column {column}')
        self.rows.extend(rows)
        if rows:
            self._matrix = None
        return self

    def set_bound(self, column: int, side: str, value: float) -> 'LpModel':
        """set the 'lower' or 'upper' bound of a column"""
        if not 0 <= column < self.n_columns:
            raise LpModelError(f'unknown column {column}')
        if side == 'lower':
            self.lower[column] = value
        elif side == 'upper':
            self.upper[column] = value
        else:
            raise LpModelError(f'bound side must be "lower" or "upper", got {side!r}')
        return self

    def set_bounds(self, lower: np.ndarray, upper: np.ndarray) -> 'LpModel':
        """replace all column bounds at once"""
        self.lower = np.array(lower, dtype=float)
        self.upper = np.array(upper, dtype=float)
        return self

    def matrix(self) -> sp.csc_matrix:
        """the row matrix in CSC form (cached until rows change)"""
        if self._matrix is None or self._matrix.shape[0] != self.n_rows:
            data, row_ids, col_ids = [], [], []
            for r, row in enumerate(self.rows):
                for column, value in row.coefficients:
                    row_ids.append(r)
                    col_ids.append(column)
                    data.append(value)
            self._matrix = sp.csc_matrix((data, (row_ids, col_ids)), shape=(self.n_rows, self.n_columns))
        return self._matrix

    def rhs(self) -> np.ndarray:
        """right-hand sides"""
        return np.array([row.rhs for row in self.rows], dtype=float)

    def max_violation(self, values: np.ndarray) -> float:
        """largest row or bound violation at ``values``"""
        worst = max((row.violation(values) for row in self.rows), default=0.0)
        worst = max(worst, float(np.max(self.lower - values, initial=0.0)),
                    float(np.max(values - self.upper, initial=0.0)))
        return max(worst, 0.0)


def add_rows(model: LpModel, rows: Iterable[Row]) -> LpModel:
    """append rows to ``model``"""
    return model.add_rows(rows)


def set_bound(model: LpModel, column: int, side: str, value: float) -> LpModel:
    """change one bound of ``model``"""
    return model.set_bound(column, side, value)


def build_root_lp(inst: Instance) -> LpModel:
    """
    The root relaxation: the ring-star objective; degree and assignment rows per
    customer and a link row per depot-customer pair; the depot arcs as fixed
    bounds; integrality dropped.
    """
    layout = inst.layout
    lower, upper = layout.bounds()
    names = [layout.describe(k) for k in range(layout.n_columns)]
    model = LpModel(layout.objective(inst), lower, upper, names)
    model.add_rows(root_rows(layout))
    return model


def root_rows(layout: VariableLayout) -> list[Row]:
    """degree, assignment and depot link rows in that order"""
    rows = []
    vertices = list(layout.customers) + list(layout.depots)
    for i in layout.customers:
        degree = {layout.x(i, j): 1.0 for j in vertices if j != i}
        degree[layout.y(i, i)] = -2.0
        rows.append(Row.build(degree, Sense.EQ, 0.0, f'degree_{i}'))
    for i in layout.customers:
        rows.append(Row.build({layout.y(i, j): 1.0 for j in vertices}, Sense.EQ, 1.0, f'assign_{i}'))
    for r in layout.depots:
        for t in layout.customers:
            rows.append(Row.build({layout.x(r, t): 1.0, layout.y(t, t): -2.0}, Sense.LE, 0.0, f'link_{r}_{t}'))
    return rows


def solve(model: LpModel, hint: Basis | None = None, max_iterations: int | None = None,
          engine: str = 'simplex', tolerances: LpTolerances = LpTolerances()) -> LpSolution:
    """
    Solve ``model``.

    :param hint: starting basis; falls back to ``model.hint``, then to the slack basis
    :param max_iterations: simplex iteration cap (ITERATION_LIMIT when reached)
    :param engine: 'simplex' (in-house, warm-startable) or 'highs'
    """
    if np.any(model.lower > model.upper + tolerances.feasibility):
        return LpSolution(LpStatus.INFEASIBLE, np.inf, np.clip(model.lower, None, model.upper), None)
    if engine == 'highs':
        return _solve_highs(model, tolerances)
    if engine != 'simplex':
        raise LpModelError(f'unknown LP engine {engine!r}')
    simplex = _BoundedSimplex(model, tolerances)
    result = simplex.run(hint if hint is not None else model.hint, max_iterations)
    if result.optimal:
        model.hint = result.basis
    return result


def _solve_highs(model: LpModel, tolerances: LpTolerances) -> LpSolution:
    matrix = model.matrix().tocsr()
    senses = [row.sense for row in model.rows]
    rhs = model.rhs()
    le = [r for r, sense in enumerate(senses) if sense is Sense.LE]
    ge = [r for r, sense in enumerate(senses) if sense is Sense.GE]
    eq = [r for r, sense in enumerate(senses) if sense is Sense.EQ]
    a_ub = sp.vstack([matrix[le], -matrix[ge]]) if le or ge else None
    b_ub = np.concatenate([rhs[le], -rhs[ge]]) if le or ge else None
    result = linprog(model.objective, A_ub=a_ub, b_ub=b_ub,
                     A_eq=matrix[eq] if eq else None, b_eq=rhs[eq] if eq else None,
                     bounds=list(zip(model.lower, model.upper)), method='highs')
    status = {0: LpStatus.OPTIMAL, 2: LpStatus.INFEASIBLE, 3: LpStatus.UNBOUNDED}.get(
        result.status, LpStatus.ITERATION_LIMIT)
    if status is not LpStatus.OPTIMAL:
        return LpSolution(status, np.inf, np.zeros(model.n_columns), None, int(getattr(result, 'nit', 0)))
    values = np.asarray(result.x, dtype=float)
    if model.max_violation(values) > tolerances.feasibility:
        return LpSolution(LpStatus.ITERATION_LIMIT, np.inf, values, None, int(result.nit))
    return LpSolution(status, float(model.objective @ values), values, None, int(result.nit))


class _BoundedSimplex:
    """one solve of the bounded revised simplex; not reused across solves"""

    def __init__(self, model: LpModel, tolerances: LpTolerances):
        self.tol = tolerances
        self.n = model.n_columns
        self.m = model.n_rows
        self.matrix = model.matrix()
        self.b = model.rhs()
        self.cost = np.concatenate([model.objective, np.zeros(self.m)])
        slack_lower = np.zeros(self.m)
        slack_upper = np.zeros(self.m)
        for r, row in enumerate(model.rows):
            if row.sense is Sense.LE:
                slack_upper[r] = np.inf
            elif row.sense is Sense.GE:
                slack_lower[r] = -np.inf
        self.lower = np.concatenate([model.lower, slack_lower])
        self.upper = np.concatenate([model.upper, slack_upper])
        self.x = np.zeros(self.n + self.m)
        self.basic = np.arange(self.n, self.n + self.m)
        self.is_basic = np.zeros(self.n + self.m, dtype=bool)
        self.inverse = np.eye(self.m)
        self.bland = False

    # -- basis handling -----------------------------------------------------

    def _column(self, j: int) -> np.ndarray:
        if j < self.n:
            return self.matrix[:, j].toarray().ravel()
        column = np.zeros(self.m)
        column[j - self.n] = 1.0
        return column

    def _basis_matrix(self) -> np.ndarray:
        structural = [j for j in self.basic if j < self.n]
        dense = np.zeros((self.m, self.m))
        if structural:
            positions = [p for p, j in enumerate(self.basic) if j < self.n]
            dense[:, positions] = self.matrix[:, structural].toarray()
        for p, j in enumerate(self.basic):
            if j >= self.n:
                dense[j - self.n, p] = 1.0
        return dense

    def _nonbasic_value(self, j: int, at_upper: bool) -> float:
        low, high = self.lower[j], self.upper[j]
        if at_upper and np.isfinite(high):
            return high
        if np.isfinite(low):
            return low
        if np.isfinite(high):
            return high
        return 0.0

    def _install(self, hint: Basis | None) -> None:
        at_upper: frozenset = frozenset()
        basic = None
        inverse = None
        if hint is not None and hint.n_structural == self.n and hint.n_rows <= self.m:
            extended = list(hint.basic) + [self.n + r for r in range(hint.n_rows, self.m)]
            if len(extended) == self.m and len(set(extended)) == self.m and all(
                    0 <= j < self.n + self.m for j in extended):
                basic = np.array(extended, dtype=int)
                at_upper = hint.at_upper
                inverse = self._extend_inverse(hint, basic)
        if basic is None:
            basic = np.arange(self.n, self.n + self.m)
        self.basic = basic
        self.is_basic[:] = False
        self.is_basic[self.basic] = True
        for j in range(self.n + self.m):
            if not self.is_basic[j]:
                self.x[j] = self._nonbasic_value(j, j in at_upper)
        if inverse is not None:
            self.inverse = inverse
        elif not self._refactor():
            logger.debug('basis hint is singular, starting from the slack basis')
            self._install(None)
            return
        self._recompute_basics()

    def _extend_inverse(self, hint: Basis, basic: np.ndarray) -> np.ndarray | None:
        """[[B, 0], [R, I]]^-1 = [[B^-1, 0], [-R B^-1, I]] for rows added after the hint"""
        old = hint.inverse
        if old is None or old.shape != (hint.n_rows, hint.n_rows):
            return None
        if hint.n_rows == self.m:
            return old.copy()
        k = hint.n_rows
        new_rows = self.matrix[k:, :].toarray() if self.m > k else np.zeros((0, self.n))
        coupling = np.zeros((self.m - k, k))
        for p, j in enumerate(basic[:k]):
            if j < self.n:
                coupling[:, p] = new_rows[:, j]
            elif j - self.n >= k:
                return None
        inverse = np.zeros((self.m, self.m))
        inverse[:k, :k] = old
        inverse[k:, :k] = -coupling @ old
        inverse[k:, k:] = np.eye(self.m - k)
        return inverse

    def _refactor(self) -> bool:
        if self.m == 0:
            self.inverse = np.zeros((0, 0))
            return True
        try:
            inverse = np.linalg.inv(self._basis_matrix())
        except np.linalg.LinAlgError:
            return False
        if not np.all(np.isfinite(inverse)):
            return False
        self.inverse = inverse
        return True

    def _recompute_basics(self) -> None:
        self.x[self.basic] = 0.0
        activity = self.matrix @ self.x[:self.n] + self.x[self.n:]
        self.x[self.basic] = self.inverse @ (self.b - activity)

    def _basis(self, with_inverse: bool = True) -> Basis:
        nonbasic_upper = frozenset(
            int(j) for j in np.flatnonzero(~self.is_basic)
            if np.isfinite(self.upper[j]) and self.x[j] == self.upper[j] and self.lower[j] != self.upper[j])
        return Basis(tuple(int(j) for j in self.basic), nonbasic_upper, self.n, self.m,
                     self.inverse.copy() if with_inverse else None)

    # -- iteration ----------------------------------------------------------

    def _infeasibility_costs(self) -> np.ndarray:
        values = self.x[self.basic]
        costs = np.zeros(self.m)
        costs[values < self.lower[self.basic] - self.tol.feasibility] = -1.0
        costs[values > self.upper[self.basic] + self.tol.feasibility] = 1.0
        return costs

    def _price(self, basic_costs: np.ndarray, phase_one: bool) -> tuple[int, int] | None:
        """entering column and direction (+1 increase, -1 decrease), None when optimal"""
        duals = basic_costs @ self.inverse if self.m else np.zeros(0)
        structural = (np.zeros(self.n) if phase_one else self.cost[:self.n]) - self.matrix.T @ duals
        reduced = np.concatenate([structural, -duals])
        reduced[self.is_basic] = 0.0
        fixed = self.lower == self.upper
        at_upper = (self.x >= self.upper) & np.isfinite(self.upper)
        at_lower = (self.x <= self.lower) & np.isfinite(self.lower)
        free = ~at_upper & ~at_lower
        tol = self.tol.optimality
        can_increase = ~self.is_basic & ~fixed & (reduced < -tol) & (at_lower | free)
        can_decrease = ~self.is_basic & ~fixed & (reduced > tol) & (at_upper | free)
        candidates = np.flatnonzero(can_increase | can_decrease)
        if candidates.size == 0:
            return None
        if self.bland:
            j = int(candidates[0])
        else:
            j = int(candidates[np.argmax(np.abs(reduced[candidates]))])
        return j, (1 if can_increase[j] else -1)

    def _ratio_test(self, rates: np.ndarray, phase_one: bool) -> tuple[float, int, bool]:
        """
        Step length, leaving position (-1 for none) and whether the leaving
        variable stops at its upper bound.  ``rates`` is d x_B / d theta.
        """
        values = self.x[self.basic]
        low = self.lower[self.basic]
        high = self.upper[self.basic]
        feas = self.tol.feasibility
        below = values < low - feas if phase_one else np.zeros(self.m, dtype=bool)
        above = values > high + feas if phase_one else np.zeros(self.m, dtype=bool)
        significant = np.abs(rates) > self.tol.pivot

        limits = np.full(self.m, np.inf)
        relaxed = np.full(self.m, np.inf)
        to_upper = np.zeros(self.m, dtype=bool)

        feasible = ~below & ~above
        down = significant & feasible & (rates < 0) & np.isfinite(low)
        limits[down] = (values[down] - low[down]) / -rates[down]
        relaxed[down] = (values[down] - low[down] + feas) / -rates[down]

        up = significant & feasible & (rates > 0) & np.isfinite(high)
        limits[up] = (high[up] - values[up]) / rates[up]
        relaxed[up] = (high[up] - values[up] + feas) / rates[up]
        to_upper[up] = True

        # infeasible basics block where they reach the violated bound
        rising = significant & below & (rates > 0)
        limits[rising] = (low[rising] - values[rising]) / rates[rising]
        relaxed[rising] = limits[rising]
        falling = significant & above & (rates < 0)
        limits[falling] = (values[falling] - high[falling]) / -rates[falling]
        relaxed[falling] = limits[falling]
        to_upper[falling] = True

        limits = np.maximum(limits, 0.0)
        if not np.isfinite(limits).any():
            return np.inf, -1, False
        if self.bland:
            theta = limits.min()
            ties = np.flatnonzero(limits <= theta + 1e-12)
            position = int(min(ties, key=lambda p: self.basic[p]))
        else:
            bound = relaxed.min()
            eligible = np.flatnonzero(limits <= bound)
            position = int(eligible[np.argmax(np.abs(rates[eligible]))])
            theta = limits[position]
        return float(theta), position, bool(to_upper[position])

    def run(self, hint: Basis | None, max_iterations: int | None) -> LpSolution:
        self._install(hint)
        if max_iterations is None:
            max_iterations = 50 * (self.n + self.m) + 1000
        iterations = 0
        degenerate = 0
        fresh = True

        while True:
            basic_costs = self._infeasibility_costs()
            phase_one = bool(np.any(basic_costs))
            if not phase_one:
                basic_costs = self.cost[self.basic]
            entering = self._price(basic_costs, phase_one)

            if entering is None:
                if not fresh:
                    self._refactor()
                    self._recompute_basics()
                    fresh = True
                    continue
                if phase_one:
                    return self._finish(LpStatus.INFEASIBLE, iterations)
                return self._finish(LpStatus.OPTIMAL, iterations)

            if iterations >= max_iterations:
                return self._finish(LpStatus.ITERATION_LIMIT, iterations)
            iterations += 1

            j, direction = entering
            alpha = self.inverse @ self._column(j)
            rates = -direction * alpha
            theta, position, leaves_upper = self._ratio_test(rates, phase_one)
            span = self.upper[j] - self.lower[j]

            if np.isfinite(span) and span <= theta:
                # bound flip: the entering column crosses to its other bound
                self.x[j] = self.upper[j] if direction > 0 else self.lower[j]
                self.x[self.basic] += span * rates
                fresh = False
                continue

            if position < 0:
                if phase_one:
                    if not self._refactor():
                        return self._finish(LpStatus.ITERATION_LIMIT, iterations)
                    self._recompute_basics()
                    fresh = True
                    continue
                return self._finish(LpStatus.UNBOUNDED, iterations)

            if theta <= 1e-12:
                degenerate += 1
                if degenerate >= self.tol.bland_after and not self.bland:
                    logger.debug(f'switching to Bland\'s rule after {degenerate} degenerate pivots')
                    self.bland = True
            leaving = int(self.basic[position])
            self.x[self.basic] += theta * rates
            self.x[j] += direction * theta
            self.x[leaving] = self.upper[leaving] if leaves_upper else self.lower[leaving]
            if not np.isfinite(self.x[leaving]):
                self.x[leaving] = self.lower[leaving] if np.isfinite(self.lower[leaving]) else self.upper[leaving]

            pivot_row = self.inverse[position] / alpha[position]
            self.inverse -= np.outer(alpha, pivot_row)
            self.inverse[position] = pivot_row
            self.basic[position] = j
            self.is_basic[leaving] = False
            self.is_basic[j] = True
            fresh = False

            if iterations % self.tol.refactor_every == 0:
                if not self._refactor():
                    return self._finish(LpStatus.ITERATION_LIMIT, iterations)
                self._recompute_basics()
                fresh = True

    def _finish(self, status: LpStatus, iterations: int) -> LpSolution:
        values = self.x[:self.n].copy()
        if status is LpStatus.OPTIMAL:
            activity = self.matrix @ values
            slack = self.b - activity
            slack_ok = np.all(slack >= self.lower[self.n:] - self.tol.feasibility) and np.all(
                slack <= self.upper[self.n:] + self.tol.feasibility)
            bounds_ok = np.all(values >= self.lower[:self.n] - self.tol.feasibility) and np.all(
                values <= self.upper[:self.n] + self.tol.feasibility)
            if not (slack_ok and bounds_ok):
                logger.warning('simplex finished with a basis that fails the feasibility re-check')
                status = LpStatus.ITERATION_LIMIT
        objective = float(self.cost[:self.n] @ values) if status is LpStatus.OPTIMAL else np.inf
        basis = self._basis(with_inverse=status is LpStatus.OPTIMAL)
        return LpSolution(status, objective, values, basis, iterations)


def _lp_number(value: float) -> str:
    if np.isinf(value):
        return '+inf' if value > 0 else '-inf'
    return f'{value:.10g}'


def lp_name(name: str) -> str:
    """``name`` with every run of characters LP readers reject turned into one underscore: x[0,3] -> x_0_3"""
    cleaned = re.sub(r'[^A-Za-z0-9_.]+', '_', name).strip('_')
    if not cleaned or cleaned[0].isdigit() or cleaned[0] == '.':
        cleaned = f'n_{cleaned}'
    return cleaned


def _unique_lp_names(names: Iterable[str]) -> list[str]:
    seen: dict[str, int] = {}
    unique = []
    for name in names:
        cleaned = lp_name(name)
        count = seen.get(cleaned, 0)
        seen[cleaned] = count + 1
        unique.append(cleaned if count == 0 else f'{cleaned}_{count}')
    return unique


def to_lp_format(model: LpModel) -> str:
    """
    CPLEX LP text of ``model`` for cross-checking with an external solver.
    Column and row names are rewritten with :func:`lp_name`.
    """
    columns = _unique_lp_names(model.column_names)
    row_names = _unique_lp_names(row.name or f'r{r}' for r, row in enumerate(model.rows))

    def term(value: float, column: int, first: bool) -> str:
        sign = '-' if value < 0 else ('' if first else '+')
        return f'{sign} {abs(value):.10g} {columns[column]}'.strip()

    lines = ['Minimize', ' obj: ' + ' '.join(
        term(value, k, not idx) for idx, (k, value) in enumerate(
            (k, v) for k, v in enumerate(model.objective) if v != 0.0)), 'Subject To']
    operator = {Sense.EQ: '=', Sense.LE: '<=', Sense.GE: '>='}
    for r, row in enumerate(model.rows):
        body = ' '.join(term(value, column, not idx) for idx, (column, value) in enumerate(row.coefficients))
        lines.append(f' {row_names[r]}: {body or "0 " + columns[0]} '
                     f'{operator[row.sense]} {row.rhs:.10g}')
    lines.append('Bounds')
    for k in range(model.n_columns):
        name = columns[k]
        if model.lower[k] == model.upper[k]:
            lines.append(f' {name} = {model.lower[k]:.10g}')
        else:
            lines.append(f' {_lp_number(model.lower[k])} <= {name} <= {_lp_number(model.upper[k])}')
    lines.append('End')
    return '\n'.join(lines) + '\n'
