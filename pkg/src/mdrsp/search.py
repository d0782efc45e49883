"""
Best-first branch-and-cut for the MDRSP.

Each node solves the LP relaxation under its bound box, runs separation
rounds (first cut family with violated cuts ends the round) until the point
is clean or the bound reaches the incumbent, and then either records an
integral solution or branches by strong branching on y_ii, then x_e.
Cuts are global and stay in the shared model.
"""

import heapq
import math
import time
from dataclasses import asdict, dataclass, field, fields
from enum import Enum
from logging import DEBUG, getLogger
from typing import Mapping

import numpy as np

from .cuts import EPS_CUT, EPS_SUPPORT, ROUND_LIMITS, Cut, CutFamily, FractionalPoint, SEPARATORS
from .heuristic import lp_heuristic
from .instance import (Instance, InfeasibleSolutionError, Solution, check_feasible, from_incidence,
                       nearest_depot_solution, solution_cost, solution_from_dict, solution_to_dict)
from .logger import enter_exit_logger, format_progress
from .lp import Basis, LpModel, LpSolution, LpStatus, build_root_lp, solve

logger = getLogger('mdrsp.search')

DEFAULT_TIME_LIMIT = 7200.0
COUNT_KEYS = ('pair', 'sec', 'pec', '2mat')
STRONG_BRANCHING_FLOOR = 1e-6


class SearchDefectError(RuntimeError):
    """raised when the search reaches a state a well-formed instance cannot produce"""


class NodeStatus(Enum):
    """life cycle of a tree node"""
    OPEN = 'open'
    FATHOMED_BOUND = 'fathomed-bound'
    FATHOMED_INFEASIBLE = 'fathomed-infeasible'
    BRANCHED = 'branched'
    INTEGRAL = 'integral'


class Termination(Enum):
    """how a search ended"""
    OPTIMAL = 'optimal'
    TIME_LIMIT = 'time-limit'


class CutLoopOutcome(Enum):
    """result of one separation round"""
    CUTS_ADDED = 'cuts-added'
    CLEAN = 'clean'
    BOUND_FATHOMED = 'bound-fathomed'


@dataclass
class SolverParams:
    """solver configuration; ``from_mapping`` rejects unknown keys"""
    time_limit: float = DEFAULT_TIME_LIMIT
    eps_support: float = EPS_SUPPORT
    eps_cut: float = EPS_CUT
    integrality: float = 1e-6
    heuristic: bool = True
    seed: int = 0
    pair: bool = True
    sec: bool = True
    pec: bool = True
    two_matching: bool = True
    odd_hole: bool = False
    ssp_sec: bool = False
    sec_limit: int = ROUND_LIMITS[CutFamily.SEC]
    pec_limit: int = ROUND_LIMITS[CutFamily.PEC]
    two_matching_limit: int = ROUND_LIMITS[CutFamily.TWO_MATCH]
    max_rounds: int = 200
    strong_branching_iterations: int = 100
    strong_branching_candidates: int = 10
    lp_engine: str = 'simplex'
    log_every: int = 10
    node_limit: int | None = None

    @classmethod
    def from_mapping(cls, mapping: Mapping | None) -> 'SolverParams':
        """
        Build parameters from a plain dictionary.

        :raises ValueError: unknown keys
        """
        mapping = dict(mapping or {})
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(mapping) - known)
        if unknown:
            raise ValueError(f'unknown solver parameters: {", ".join(unknown)}')
        return cls(**mapping)

    def to_dict(self) -> dict:
        """plain dictionary of all parameters"""
        return asdict(self)

    def separation_order(self) -> list[tuple[CutFamily, ...]]:
        """enabled families, grouped per round slot, in separation order"""
        order = []
        if self.pair:
            order.append((CutFamily.PAIR,))
        if self.sec:
            order.append((CutFamily.SEC,))
        if self.pec:
            order.append((CutFamily.PEC2, CutFamily.PEC))
        if self.two_matching:
            order.append((CutFamily.TWO_MATCH,))
        if self.odd_hole:
            order.append((CutFamily.ODD_HOLE,))
        if self.ssp_sec:
            order.append((CutFamily.SSP_SEC,))
        return order

    def round_limit(self, family: CutFamily) -> int | None:
        """per-round cap of a family (None when uncapped)"""
        return {CutFamily.SEC: self.sec_limit, CutFamily.PEC2: self.pec_limit, CutFamily.PEC: self.pec_limit,
                CutFamily.TWO_MATCH: self.two_matching_limit}.get(family)


@dataclass
class Node:
    """a subproblem: the root bounds tightened by ``lower`` / ``upper``"""
    id: int
    parent: int | None
    bound: float
    lower: dict[int, float] = field(default_factory=dict)
    upper: dict[int, float] = field(default_factory=dict)
    basis: Basis | None = None
    status: NodeStatus = NodeStatus.OPEN
    depth: int = 0

    def __lt__(self, other: 'Node') -> bool:
        return (self.bound, self.id) < (other.bound, other.id)


def _bound_to_json(value: float) -> float | None:
    """a bound for a JSON document; no bound yet (-inf) becomes null"""
    return value if math.isfinite(value) else None


def _bound_from_json(value) -> float:
    return -math.inf if value is None else float(value)


@dataclass
class Report:
    """outcome and statistics of a search"""
    name: str
    n_customers: int
    n_depots: int
    alpha: int | None
    incumbent: Solution | None
    ub: float
    lb: float
    root_lb: float
    counts: dict[str, int]
    extra: dict[str, int]
    nodes: int
    time_seconds: float
    termination: Termination
    time_limit: float

    @property
    def gap(self) -> float:
        """relative gap (UB - LB) / max(1, |UB|)"""
        return (self.ub - self.lb) / max(1.0, abs(self.ub))

    @property
    def pct_lb(self) -> float:
        """100 * root LB / UB"""
        return 100.0 * self.root_lb / self.ub if self.ub else 100.0

    def to_dict(self, inst: Instance | None = None) -> dict:
        """JSON form; the incumbent is included when ``inst`` is given"""
        document = {
            'name': self.name,
            'n_customers': self.n_customers,
            'n_depots': self.n_depots,
            'alpha': self.alpha,
            'ub': self.ub,
            'lb': _bound_to_json(self.lb),
            'root_lb': _bound_to_json(self.root_lb),
            'pct_lb': _bound_to_json(self.pct_lb),
            'counts': dict(self.counts),
            'extra': dict(self.extra),
            'nodes': self.nodes,
            'time_seconds': round(self.time_seconds, 2),
            'termination': self.termination.value,
            'time_limit': self.time_limit,
        }
        if inst is not None and self.incumbent is not None:
            document['solution'] = solution_to_dict(inst, self.incumbent)
        return document


def report_to_dict(report: Report, inst: Instance | None = None) -> dict:
    """JSON form of ``report``"""
    return report.to_dict(inst)


def report_from_dict(document: Mapping) -> Report:
    """inverse of ``report_to_dict``"""
    solution = solution_from_dict(document['solution']) if document.get('solution') else None
    return Report(name=document['name'], n_customers=int(document['n_customers']),
                  n_depots=int(document['n_depots']), alpha=document.get('alpha'), incumbent=solution,
                  ub=float(document['ub']), lb=_bound_from_json(document['lb']),
                  root_lb=_bound_from_json(document['root_lb']),
                  counts={key: int(value) for key, value in document['counts'].items()},
                  extra={key: int(value) for key, value in document.get('extra', {}).items()},
                  nodes=int(document['nodes']), time_seconds=float(document['time_seconds']),
                  termination=Termination(document['termination']), time_limit=float(document['time_limit']))


def next_node(open_nodes: list[Node]) -> Node:
    """pop the open node with the smallest bound, ties by smallest id"""
    return heapq.heappop(open_nodes)


def branch_candidates(point: FractionalPoint, integrality: float = 1e-6) -> list[int]:
    """fractional y_ii columns, or the fractional x columns when every y_ii is integral"""
    layout = point.layout

    def fractional(column: int) -> bool:
        value = point.values[column]
        return abs(value - round(value)) > integrality

    candidates = [layout.y(t, t) for t in layout.customers if fractional(layout.y(t, t))]
    if not candidates:
        candidates = [column for column in layout.edge_columns() if fractional(column)]
    return candidates


def separation_round(point: FractionalPoint, params: SolverParams, known: set | None = None) -> list[Cut]:
    """
    Cuts of the first family slot that yields any new violated cut, capped
    per family.  Within the path slot the long paths are only searched when
    no two-customer path cut is violated.
    """
    known = known if known is not None else set()
    for slot in params.separation_order():
        found: list[Cut] = []
        for family in slot:
            cuts = [cut for cut in SEPARATORS[family](point, params.eps_cut) if cut.key not in known]
            limit = params.round_limit(family)
            if limit is not None:
                cuts = cuts[:max(0, limit - len(found))]
            found.extend(cuts)
            if found:
                break
        if found:
            return found
    return []


def _required_cuts(point: FractionalPoint, params: SolverParams, known: set) -> list[Cut]:
    """pair, subtour and path cuts regardless of the enable flags (an integral point must be a solution)"""
    for family in (CutFamily.PAIR, CutFamily.SEC, CutFamily.PEC2, CutFamily.PEC):
        cuts = [cut for cut in SEPARATORS[family](point, params.eps_cut) if cut.key not in known]
        if cuts:
            return cuts
    return []


class BranchAndCut:
    """state of one search; use :func:`branch_and_cut`"""

    def __init__(self, inst: Instance, params: SolverParams):
        self.inst = inst
        self.params = params
        self.layout = inst.layout
        self.model: LpModel = build_root_lp(inst)
        self.root_lower = self.model.lower.copy()
        self.root_upper = self.model.upper.copy()
        self.rng = np.random.default_rng(params.seed)
        self.known: set = set()
        self.counts = {key: 0 for key in COUNT_KEYS}
        self.extra = {CutFamily.ODD_HOLE.value: 0, CutFamily.SSP_SEC.value: 0}
        self.incumbent: Solution = nearest_depot_solution(inst)
        self.ub = solution_cost(inst, self.incumbent)
        self.root_lb = -math.inf
        self.open: list[Node] = []
        self.nodes = 0
        self.next_id = 0
        self.started = time.perf_counter()

    # -- helpers -------------------------------------------------------------

    def elapsed(self) -> float:
        """seconds since the search started"""
        return time.perf_counter() - self.started

    def out_of_time(self) -> bool:
        """True once the time limit is spent"""
        return self.elapsed() >= self.params.time_limit

    def fathom_threshold(self) -> float:
        """bounds at or above this value cannot improve the incumbent"""
        return self.ub - 1e-6 * max(1.0, abs(self.ub))

    def new_node(self, parent: Node | None, bound: float, lower: dict, upper: dict, basis: Basis | None) -> Node:
        node = Node(self.next_id, parent.id if parent else None, bound, lower, upper,
                    basis.without_inverse() if basis is not None else None,
                    depth=parent.depth + 1 if parent else 0)
        self.next_id += 1
        return node

    def apply_bounds(self, lower: Mapping[int, float], upper: Mapping[int, float]) -> None:
        """reset the model box to the root box tightened by ``lower`` / ``upper``"""
        box_lower = self.root_lower.copy()
        box_upper = self.root_upper.copy()
        for column, value in lower.items():
            box_lower[column] = max(box_lower[column], value)
        for column, value in upper.items():
            box_upper[column] = min(box_upper[column], value)
        self.model.set_bounds(box_lower, box_upper)

    def solve_lp(self, hint: Basis | None, max_iterations: int | None = None) -> LpSolution:
        result = solve(self.model, hint=hint, max_iterations=max_iterations, engine=self.params.lp_engine)
        if result.status is LpStatus.ITERATION_LIMIT and max_iterations is None:
            logger.warning('simplex hit its iteration limit, re-solving with highs')
            result = solve(self.model, engine='highs')
        return result

    def offer(self, solution: Solution, source: str) -> bool:
        """record ``solution`` when it is feasible and cheaper than the incumbent"""
        if check_feasible(self.inst, solution):
            logger.warning(f'{source} produced an infeasible solution, ignored')
            return False
        cost = solution_cost(self.inst, solution)
        if cost < self.ub - 1e-9:
            logger.info(f'new incumbent from {source}: {cost:.10g} (was {self.ub:.10g})')
            self.incumbent, self.ub = solution, cost
            return True
        return False

    def add_cuts(self, cuts: list[Cut]) -> None:
        for cut in cuts:
            self.known.add(cut.key)
            key = cut.count_key
            if key in self.counts:
                self.counts[key] += 1
            else:
                self.extra[key] = self.extra.get(key, 0) + 1
        self.model.add_rows(cut.row() for cut in cuts)
        if logger.isEnabledFor(DEBUG):
            logger.debug(f'added {len(cuts)} {cuts[0].family.value} cuts, best violation {cuts[0].violation:.4g}')

    def global_lb(self) -> float:
        return min(min((node.bound for node in self.open), default=self.ub), self.ub)

    def log_progress(self, node_id: int, lb: float) -> None:
        gap = (self.ub - lb) / max(1.0, abs(self.ub))
        logger.info(format_progress(node_id, lb, self.ub, gap, {key: self.counts[key] for key in COUNT_KEYS}))

    # -- node processing -----------------------------------------------------

    def cut_loop(self, node: Node, lp: LpSolution, round_index: int) -> CutLoopOutcome:
        """
        One separation round at ``node`` for the LP solution ``lp``: fathom on
        the bound, run the root heuristic every third round, then add the cuts
        of the first family that yields any.
        """
        if lp.objective >= self.fathom_threshold():
            return CutLoopOutcome.BOUND_FATHOMED
        point = FractionalPoint(self.layout, lp.values, self.params.eps_support)
        if node.parent is None and self.params.heuristic and round_index % 3 == 0:
            self.offer(lp_heuristic(self.inst, point, self.rng), 'lp heuristic')
            if lp.objective >= self.fathom_threshold():
                return CutLoopOutcome.BOUND_FATHOMED
        integral = point.is_integral(self.params.integrality)
        if round_index >= self.params.max_rounds and not integral:
            return CutLoopOutcome.CLEAN
        cuts = separation_round(point, self.params, self.known)
        if not cuts and integral:
            cuts = self._integral_point_cuts(point)
        if cuts:
            self.add_cuts(cuts)
            return CutLoopOutcome.CUTS_ADDED
        return CutLoopOutcome.CLEAN

    def _integral_point_cuts(self, point: FractionalPoint) -> list[Cut]:
        try:
            from_incidence(self.layout, point.values, self.inst)
            return []
        except InfeasibleSolutionError as error:
            cuts = _required_cuts(point, self.params, self.known)
            if not cuts:
                raise SearchDefectError(f'integral LP point is not a solution and no cut separates it: {error}')
            logger.debug(f'integral point is not a solution ({error}); adding {len(cuts)} required cuts')
            return cuts

    def process(self, node: Node) -> list[Node]:
        """solve ``node`` with its cut loop; return the children to open"""
        self.apply_bounds(node.lower, node.upper)
        hint = node.basis
        round_index = 0
        while True:
            lp = self.solve_lp(hint)
            if lp.status is LpStatus.INFEASIBLE:
                if node.parent is None:
                    raise SearchDefectError('root LP relaxation is infeasible')
                node.status = NodeStatus.FATHOMED_INFEASIBLE
                return []
            if not lp.optimal:
                raise SearchDefectError(f'LP at node {node.id} ended with status {lp.status.value}')
            hint = lp.basis
            node.bound = max(node.bound, lp.objective)
            if node.parent is None:
                self.root_lb = max(self.root_lb, lp.objective)

            outcome = self.cut_loop(node, lp, round_index)
            round_index += 1
            if outcome is CutLoopOutcome.BOUND_FATHOMED:
                node.status = NodeStatus.FATHOMED_BOUND
                return []
            if outcome is CutLoopOutcome.CUTS_ADDED and not self.out_of_time():
                continue
            if outcome is CutLoopOutcome.CUTS_ADDED:
                # out of time with fresh cuts: the bound of this LP still holds
                node.basis = lp.basis
                return [node]
            break

        point = FractionalPoint(self.layout, lp.values, self.params.eps_support)
        if point.is_integral(self.params.integrality):
            node.status = NodeStatus.INTEGRAL
            self.offer(from_incidence(self.layout, lp.values, self.inst), f'integral LP at node {node.id}')
            return []
        node.status = NodeStatus.BRANCHED
        return self.branch(node, lp, point)

    def select_branch_var(self, node: Node, lp: LpSolution, point: FractionalPoint) -> tuple[int, dict]:
        """
        Strong branching over the branch candidates: each child LP runs under
        an iteration cap and the column with the best product of bound gains
        wins (lowest column on ties).  Returns the column and the child LP
        results that finished.

        :raises ValueError: the point is integral
        """
        candidates = branch_candidates(point, self.params.integrality)
        if not candidates:
            raise ValueError('no fractional column to branch on')
        values = lp.values
        if len(candidates) > self.params.strong_branching_candidates:
            ranked = sorted(candidates, key=lambda c: (-min(values[c] - math.floor(values[c]),
                                                            math.ceil(values[c]) - values[c]), c))
            candidates = sorted(ranked[:self.params.strong_branching_candidates])

        best_column, best_score, best_children = None, -math.inf, {}
        for column in candidates:
            children = {}
            gains = []
            for side, lower, upper in self._child_boxes(node, column, values[column]):
                self.apply_bounds(lower, upper)
                child = solve(self.model, hint=lp.basis, max_iterations=self.params.strong_branching_iterations,
                              engine=self.params.lp_engine)
                if child.status is LpStatus.INFEASIBLE:
                    gains.append(max(self.ub - lp.objective, 1.0))
                elif child.optimal:
                    gains.append(max(child.objective - lp.objective, 0.0))
                else:
                    gains.append(0.0)
                children[side] = child
            score = max(gains[0], STRONG_BRANCHING_FLOOR) * max(gains[1], STRONG_BRANCHING_FLOOR)
            if score > best_score:
                best_column, best_score, best_children = column, score, children
        self.apply_bounds(node.lower, node.upper)
        logger.debug(f'node {node.id}: branching on {self.layout.describe(best_column)} '
                     f'= {values[best_column]:.4f} (score {best_score:.4g})')
        return best_column, best_children

    def _child_boxes(self, node: Node, column: int, value: float):
        down_upper = dict(node.upper)
        down_upper[column] = math.floor(value)
        up_lower = dict(node.lower)
        up_lower[column] = math.ceil(value)
        yield 'down', node.lower, down_upper
        yield 'up', up_lower, node.upper

    def branch(self, node: Node, lp: LpSolution, point: FractionalPoint) -> list[Node]:
        column, trials = self.select_branch_var(node, lp, point)
        children = []
        for side, lower, upper in self._child_boxes(node, column, lp.values[column]):
            trial = trials.get(side)
            bound, basis = node.bound, lp.basis
            if trial is not None and trial.status is LpStatus.INFEASIBLE:
                continue
            if trial is not None and trial.optimal:
                bound, basis = max(node.bound, trial.objective), trial.basis
            children.append(self.new_node(node, bound, dict(lower), dict(upper), basis))
        return children

    # -- driver --------------------------------------------------------------

    def run(self) -> Report:
        heapq.heappush(self.open, self.new_node(None, -math.inf, {}, {}, None))
        termination = Termination.OPTIMAL
        last_id = 0

        while self.open:
            if self.out_of_time() or (self.params.node_limit is not None and self.nodes >= self.params.node_limit):
                termination = Termination.TIME_LIMIT
                break
            node = next_node(self.open)
            if node.bound >= self.fathom_threshold():
                # every other open node has a bound at least as large
                node.status = NodeStatus.FATHOMED_BOUND
                self.open.clear()
                break
            self.nodes += 1
            last_id = node.id
            for child in self.process(node):
                heapq.heappush(self.open, child)
            if self.nodes % self.params.log_every == 0:
                self.log_progress(node.id, self.global_lb())

        lb = self.ub if termination is Termination.OPTIMAL else self.global_lb()
        if self.root_lb == -math.inf:
            self.root_lb = lb
        if lb > self.ub + 1e-6 * max(1.0, abs(self.ub)):
            raise SearchDefectError(f'lower bound {lb} exceeds upper bound {self.ub}')
        report = Report(self.inst.name, self.inst.n_customers, self.inst.n_depots, self.inst.alpha, self.incumbent,
                        self.ub, min(lb, self.ub), min(self.root_lb, self.ub), dict(self.counts), dict(self.extra),
                        self.nodes, self.elapsed(), termination, self.params.time_limit)
        self.log_progress(last_id, report.lb)
        logger.info(f'{self.inst.name}: {termination.value} after {self.nodes} nodes, '
                    f'ub={report.ub:.10g} lb={report.lb:.10g} root %-LB={report.pct_lb:.2f}')
        return report


@enter_exit_logger('mdrsp.search')
def branch_and_cut(inst: Instance, params: SolverParams | None = None) -> Report:
    """
    Solve ``inst`` to optimality or until the time (or node) limit.

    :raises SearchDefectError: the root LP is infeasible or the bounds cross
    """
    return BranchAndCut(inst, params or SolverParams()).run()
