"""
LP heuristic: turns a fractional point into a feasible solution.

Customers are assigned greedily from the fractional assignment values, the
self-assigned customers are routed through the depots (nearest-depot
clusters, nearest-neighbour tours, 2-opt and Or-opt), and every remaining
customer is attached to the cheapest vertex left on a ring or to a depot.
"""

from dataclasses import dataclass
from logging import getLogger
from typing import Iterable

import numpy as np

from .cuts import FractionalPoint
from .instance import (Instance, InfeasibleSolutionError, Ring, Solution, check_feasible, from_incidence,
                       solution_cost)

logger = getLogger('mdrsp.heuristic')

IMPROVEMENT = 1e-9
OR_OPT_SEGMENTS = (1, 2, 3)


@dataclass
class AssignmentDraft:
    """greedy assignment map and the vertices left as targets (depots and self-assigned customers)"""
    sigma: dict[int, int]
    targets: set[int]


def greedy_assignment(point: FractionalPoint, rng: np.random.Generator) -> AssignmentDraft:
    """
    Visit customers in random order and assign each to the target k still
    in P with the largest y*_ik; a customer assigned elsewhere leaves P.
    Customers whose target later left P are then re-assigned over the final P.
    """
    layout = point.layout
    vertices = list(layout.customers) + list(layout.depots)
    targets = set(vertices)
    sigma: dict[int, int] = {}

    def best(i: int) -> int:
        candidates = [k for k in vertices if k in targets and layout.has_y(i, k)]
        return max(candidates, key=lambda k: (point.y(i, k), -k))

    pending = list(layout.customers)
    while pending:
        i = pending.pop(int(rng.integers(len(pending))))
        sigma[i] = best(i)
        if sigma[i] != i:
            targets.discard(i)

    for i in layout.customers:
        if sigma[i] != i and sigma[i] not in targets:
            repaired = best(i)
            logger.debug(f'customer {i}: target {sigma[i]} left the ring set, re-assigned to {repaired}')
            sigma[i] = repaired
    return AssignmentDraft(sigma, targets)


def tour_cost(inst: Instance, tour: list[int]) -> float:
    """routing cost of the closed tour (a depot and one customer counts the edge twice)"""
    if len(tour) < 2:
        return 0.0
    return sum(inst.c(tour[k], tour[(k + 1) % len(tour)]) for k in range(len(tour)))


def nearest_neighbour_tour(inst: Instance, depot: int, customers: Iterable[int]) -> list[int]:
    """tour starting at ``depot`` that always moves to the closest unvisited customer"""
    remaining = sorted(customers)
    tour = [depot]
    while remaining:
        here = tour[-1]
        closest = min(remaining, key=lambda t: (inst.c(here, t), t))
        remaining.remove(closest)
        tour.append(closest)
    return tour


def two_opt(inst: Instance, tour: list[int]) -> list[int]:
    """reverse segments while that shortens the tour; position 0 stays put"""
    tour = list(tour)
    size = len(tour)
    improved = True
    while improved:
        improved = False
        for i in range(size - 2):
            for j in range(i + 2, size if i > 0 else size - 1):
                a, b = tour[i], tour[i + 1]
                c, d = tour[j], tour[(j + 1) % size]
                gain = inst.c(a, b) + inst.c(c, d) - inst.c(a, c) - inst.c(b, d)
                if gain > IMPROVEMENT:
                    tour[i + 1:j + 1] = reversed(tour[i + 1:j + 1])
                    improved = True
    return tour


def or_opt(inst: Instance, tour: list[int]) -> list[int]:
    """move chains of up to three customers to a better place, either orientation"""
    tour = list(tour)
    improved = True
    while improved:
        improved = False
        for length in OR_OPT_SEGMENTS:
            if improved:
                break
            for start in range(1, len(tour) - length + 1):
                segment = tour[start:start + length]
                rest = tour[:start] + tour[start + length:]
                if len(rest) < 2:
                    continue
                before, after = tour[start - 1], tour[(start + length) % len(tour)]
                gain = inst.c(before, segment[0]) + inst.c(segment[-1], after) - inst.c(before, after)
                move = _best_insertion(inst, rest, segment, (before, after), gain)
                if move is not None:
                    position, oriented = move
                    tour = rest[:position + 1] + oriented + rest[position + 1:]
                    improved = True
                    break
    return tour


def _best_insertion(inst: Instance, rest: list[int], segment: list[int], origin: tuple, gain: float):
    best, best_delta = None, IMPROVEMENT
    for position in range(len(rest)):
        a, b = rest[position], rest[(position + 1) % len(rest)]
        if (a, b) == origin:
            continue
        for oriented in (segment, segment[::-1]):
            delta = gain - (inst.c(a, oriented[0]) + inst.c(oriented[-1], b) - inst.c(a, b))
            if delta > best_delta:
                best, best_delta = (position, list(oriented)), delta
    return best


def improve_tour(inst: Instance, tour: list[int]) -> list[int]:
    """2-opt and Or-opt until neither finds an improving move"""
    current = list(tour)
    while True:
        cost = tour_cost(inst, current)
        current = or_opt(inst, two_opt(inst, current))
        if tour_cost(inst, current) >= cost - IMPROVEMENT:
            return current


def build_rings(inst: Instance, ring_vertices: Iterable[int]) -> list[Ring]:
    """
    Rings through the customers of ``ring_vertices``: each joins its nearest
    depot, each depot's cluster is toured and improved.  Lone customers get
    the degenerate ring.
    """
    customers = sorted(v for v in ring_vertices if not inst.is_depot(v))
    clusters: dict[int, list[int]] = {}
    for t in customers:
        depot = min(inst.depots, key=lambda r: (inst.c(t, r), r))
        clusters.setdefault(depot, []).append(t)

    rings = []
    for depot in sorted(clusters):
        members = clusters[depot]
        if len(members) == 1:
            rings.append(Ring(depot, (members[0],)))
            continue
        tour = improve_tour(inst, nearest_neighbour_tour(inst, depot, members))
        rings.append(Ring(depot, tuple(tour[1:])).canonical())
    return rings


def assemble(inst: Instance, rings: list[Ring]) -> Solution:
    """attach every off-ring customer to its cheapest ring customer or depot"""
    on_ring = sorted(t for ring in rings for t in ring.customers)
    targets = on_ring + list(inst.depots)
    stars = {}
    for i in inst.customers:
        if i in on_ring:
            continue
        stars[i] = min(targets, key=lambda k: (inst.d(i, k), k))
    return Solution(tuple(rings), stars)


def lp_heuristic(inst: Instance, point: FractionalPoint, rng: np.random.Generator) -> Solution:
    """
    A feasible solution built from ``point``.  An integral feasible point is
    read off directly.
    """
    if point.is_integral():
        try:
            solution = from_incidence(inst.layout, point.values, inst)
            if not check_feasible(inst, solution):
                return solution
        except InfeasibleSolutionError as error:
            logger.debug(f'integral point is not a solution ({error}), falling back to the greedy build')
    draft = greedy_assignment(point, rng)
    rings = build_rings(inst, draft.targets)
    solution = assemble(inst, rings)
    logger.debug(f'lp heuristic: {len(rings)} rings, cost {solution_cost(inst, solution):.6g}')
    return solution
