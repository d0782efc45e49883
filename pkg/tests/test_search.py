"""
Tests for mdrsp.search: solver parameters, the separation round, the search
against the brute-force oracle, limits and the report documents.
"""

import heapq
import json
import logging
import math

import numpy as np
import pytest

from mdrsp.cuts import CutFamily, FractionalPoint
from mdrsp.instance import Ring, Solution, check_feasible, solution_cost, variable_layout
from mdrsp.polylab import brute_force_opt, oracle_instance
from mdrsp.search import (
    BranchAndCut,
    Node,
    SolverParams,
    Termination,
    branch_and_cut,
    branch_candidates,
    next_node,
    report_from_dict,
    report_to_dict,
    separation_round,
)


def subtour_point() -> FractionalPoint:
    """integral point with a customer triangle away from the only depot"""
    layout = variable_layout(4, 1)
    values = np.zeros(layout.n_columns)
    for column in (layout.x(0, 1), layout.x(1, 2), layout.x(0, 2), layout.y(0, 0), layout.y(1, 1),
                   layout.y(2, 2), layout.y(3, 4), layout.y(4, 4)):
        values[column] = 1.0
    return FractionalPoint(layout, values)


def assert_optimal(inst, report):
    optimum = solution_cost(inst, brute_force_opt(inst))
    assert report.termination is Termination.OPTIMAL
    assert report.ub == pytest.approx(optimum, rel=1e-6)
    assert report.lb == pytest.approx(report.ub)
    assert check_feasible(inst, report.incumbent) == []
    assert solution_cost(inst, report.incumbent) == pytest.approx(report.ub)
    assert report.root_lb <= report.ub + 1e-6


class TestSolverParams:
    """solver configuration"""

    def test_from_mapping(self):
        params = SolverParams.from_mapping({'time_limit': 30, 'odd_hole': True})
        assert params.time_limit == 30 and params.odd_hole
        assert SolverParams.from_mapping(None) == SolverParams()

    def test_unknown_keys(self):
        with pytest.raises(ValueError, match='unknown solver parameters: bogus, extra'):
            SolverParams.from_mapping({'extra': 1, 'bogus': 2})

    def test_round_trip(self):
        params = SolverParams(seed=4, pec=False)
        assert SolverParams.from_mapping(params.to_dict()) == params

    def test_separation_order(self):
        assert SolverParams().separation_order() == [
            (CutFamily.PAIR,), (CutFamily.SEC,), (CutFamily.PEC2, CutFamily.PEC), (CutFamily.TWO_MATCH,)]
        extended = SolverParams(pair=False, odd_hole=True, ssp_sec=True).separation_order()
        assert extended[0] == (CutFamily.SEC,)
        assert extended[-2:] == [(CutFamily.ODD_HOLE,), (CutFamily.SSP_SEC,)]

    def test_round_limits(self):
        params = SolverParams(pec_limit=7)
        assert params.round_limit(CutFamily.SEC) == 50
        assert params.round_limit(CutFamily.PEC2) == params.round_limit(CutFamily.PEC) == 7
        assert params.round_limit(CutFamily.TWO_MATCH) == 30
        assert params.round_limit(CutFamily.PAIR) is None


class TestTreeHelpers:
    """node order and branching candidates"""

    def test_best_bound_first_then_lowest_id(self):
        heap = []
        for node in (Node(0, None, 3.0), Node(1, 0, 2.0), Node(2, 0, 2.0), Node(3, 0, 5.0)):
            heapq.heappush(heap, node)
        assert [next_node(heap).id for _ in range(4)] == [1, 2, 0, 3]

    def test_candidates_prefer_self_assignments(self):
        layout = variable_layout(3, 2)
        values = np.zeros(layout.n_columns)
        values[layout.y(0, 0)] = 0.5
        values[layout.x(0, 1)] = 0.5
        values[layout.y(1, 1)] = 1.0
        assert branch_candidates(FractionalPoint(layout, values)) == [layout.y(0, 0)]

        values[layout.y(0, 0)] = 1.0
        assert branch_candidates(FractionalPoint(layout, values)) == [layout.x(0, 1)]

        values[layout.x(0, 1)] = 1.0 - 1e-9
        assert branch_candidates(FractionalPoint(layout, values)) == []


class TestSeparationRound:
    """one round of separation"""

    def test_first_family_with_cuts_wins(self):
        cuts = separation_round(subtour_point(), SolverParams())
        assert cuts
        assert {cut.family for cut in cuts} == {CutFamily.SEC}

    def test_known_cuts_are_skipped(self):
        point = subtour_point()
        first = separation_round(point, SolverParams())
        assert separation_round(point, SolverParams(), {cut.key for cut in first}) == []

    def test_round_limit(self):
        assert len(separation_round(subtour_point(), SolverParams(sec_limit=1))) == 1

    def test_disabled_families(self):
        assert separation_round(subtour_point(), SolverParams(sec=False)) == []


class TestBranchAndCut:
    """the search against brute force"""

    def test_line_instance(self, line_instance):
        report = branch_and_cut(line_instance)
        assert_optimal(line_instance, report)
        assert report.ub == pytest.approx(5.0)

    @pytest.mark.parametrize('seed', range(4))
    def test_oracle_instances(self, seed):
        inst = oracle_instance(seed)
        assert_optimal(inst, branch_and_cut(inst, SolverParams(time_limit=600)))

    def test_highs_engine(self, random_instance):
        inst = random_instance(6, 2, seed=11, class_tag='II', alpha=7)
        assert_optimal(inst, branch_and_cut(inst, SolverParams(lp_engine='highs')))

    def test_without_heuristic(self, square_instance):
        assert_optimal(square_instance, branch_and_cut(square_instance, SolverParams(heuristic=False)))

    def test_every_family_disabled(self, random_instance):
        # integral LP points are still cut off when they are not solutions
        inst = random_instance(5, 2, seed=3)
        params = SolverParams(pair=False, sec=False, pec=False, two_matching=False)
        report = branch_and_cut(inst, params)
        assert_optimal(inst, report)

    def test_optional_families(self, random_instance):
        inst = random_instance(6, 3, seed=8, class_tag='II', alpha=3)
        report = branch_and_cut(inst, SolverParams(odd_hole=True, ssp_sec=True))
        assert_optimal(inst, report)
        assert set(report.extra) == {'odd-hole', 'ssp-sec'}

    def test_node_limit(self, random_instance):
        inst = random_instance(6, 2, seed=2)
        report = branch_and_cut(inst, SolverParams(node_limit=0))

        assert report.termination is Termination.TIME_LIMIT
        assert report.nodes == 0
        assert check_feasible(inst, report.incumbent) == []
        assert report.lb <= report.ub

    def test_zero_time_limit(self, line_instance):
        report = branch_and_cut(line_instance, SolverParams(time_limit=0.0))
        assert report.termination is Termination.TIME_LIMIT
        assert report.ub == pytest.approx(6.0)

    def test_progress_log(self, line_instance, caplog):
        with caplog.at_level(logging.INFO, logger='mdrsp.search'):
            branch_and_cut(line_instance, SolverParams(log_every=1))
        assert 'node=0 lb=' in caplog.text
        assert 'cuts=' in caplog.text and 'gap=' in caplog.text


class TestIncumbent:
    """incumbent bookkeeping"""

    def test_offer(self, line_instance):
        search = BranchAndCut(line_instance, SolverParams())
        assert search.ub == pytest.approx(6.0)

        assert not search.offer(Solution((Ring(3, (0, 1)),), {}), 'test')
        assert search.offer(Solution((Ring(3, (0, 1)),), {2: 1}), 'test')
        assert search.ub == pytest.approx(5.0)
        assert not search.offer(Solution((Ring(3, (0, 1)),), {2: 1}), 'test')

    def test_fathom_threshold(self, line_instance):
        search = BranchAndCut(line_instance, SolverParams())
        assert search.fathom_threshold() == pytest.approx(6.0 - 6e-6)


class TestReport:
    """report documents"""

    def test_round_trip(self, line_instance):
        report = branch_and_cut(line_instance)
        document = json.loads(json.dumps(report_to_dict(report, line_instance)))
        restored = report_from_dict(document)

        assert restored.ub == report.ub and restored.lb == report.lb
        assert restored.counts == report.counts
        assert restored.termination is Termination.OPTIMAL
        assert restored.incumbent == report.incumbent
        assert set(document['counts']) == {'pair', 'sec', 'pec', '2mat'}

    def test_stopped_before_the_root_is_strict_json(self, random_instance):
        inst = random_instance(8, 2, seed=5)
        report = branch_and_cut(inst, SolverParams(time_limit=0.0))
        assert report.lb == report.root_lb == -math.inf

        document = report_to_dict(report, inst)
        text = json.dumps(document, allow_nan=False)
        assert document['lb'] is None and document['root_lb'] is None and document['pct_lb'] is None

        restored = report_from_dict(json.loads(text))
        assert restored.lb == restored.root_lb == -math.inf
        assert restored.ub == pytest.approx(report.ub)
        assert check_feasible(inst, restored.incumbent) == []

    def test_finite_bounds_are_kept(self, line_instance):
        document = branch_and_cut(line_instance).to_dict(line_instance)
        json.dumps(document, allow_nan=False)
        assert document['lb'] == pytest.approx(5.0)

    def test_without_instance_no_solution(self, line_instance):
        document = branch_and_cut(line_instance).to_dict()
        assert 'solution' not in document
        assert report_from_dict(document).incumbent is None

    def test_gap_and_pct_lb(self, line_instance):
        report = branch_and_cut(line_instance)
        assert report.gap == pytest.approx(0.0)
        assert 0.0 < report.pct_lb <= 100.0 + 1e-6
        assert math.isclose(report.pct_lb, 100.0 * report.root_lb / report.ub)


class TestDeterminism:
    """equal seeds give equal searches"""

    def test_same_seed_same_search(self, random_instance):
        inst = random_instance(7, 2, seed=21, class_tag='II', alpha=5)
        first = branch_and_cut(inst, SolverParams(seed=3))
        second = branch_and_cut(inst, SolverParams(seed=3))

        assert first.incumbent == second.incumbent
        assert (first.ub, first.lb, first.root_lb) == (second.ub, second.lb, second.root_lb)
        assert first.counts == second.counts and first.nodes == second.nodes


@pytest.mark.slow
class TestAtScale:
    """oracle agreement on many seeds and the value of the cut families"""

    @pytest.mark.parametrize('seed', range(50))
    def test_oracle_seeds(self, seed):
        inst = oracle_instance(seed)
        assert_optimal(inst, branch_and_cut(inst, SolverParams(time_limit=600)))

    def test_cut_families_raise_the_root_bound(self, random_instance):
        with_all, without = [], []
        for seed in range(10):
            inst = random_instance(29, 3, seed=seed)
            full = branch_and_cut(inst, SolverParams(node_limit=1, time_limit=3600))
            reduced = branch_and_cut(inst, SolverParams(node_limit=1, time_limit=3600, sec=False, pec=False,
                                                        two_matching=False))
            assert full.root_lb >= reduced.root_lb - 1e-6 * max(1.0, abs(reduced.root_lb))
            best = min(full.ub, reduced.ub)
            with_all.append(100.0 * full.root_lb / best)
            without.append(100.0 * reduced.root_lb / best)
        assert sum(with_all) > sum(without)
