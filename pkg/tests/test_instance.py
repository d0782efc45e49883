"""
Tests for mdrsp.instance: TSPLIB parsing, instance generation, the variable
layout, incidence vectors, feasibility rules and the JSON files.
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mdrsp.instance import (
    CLASS_I,
    CLASS_II,
    Instance,
    InstanceFormatError,
    InfeasibleSolutionError,
    Ring,
    Solution,
    check_feasible,
    from_incidence,
    generate_instance,
    nearest_depot_solution,
    parse_tsplib,
    read_instance,
    read_solution,
    solution_cost,
    to_incidence,
    variable_layout,
    write_instance,
    write_solution,
)

LOWER_DIAG_TEXT = """NAME : tri3
TYPE : TSP
DIMENSION : 3
EDGE_WEIGHT_TYPE : EXPLICIT
EDGE_WEIGHT_FORMAT : LOWER_DIAG_ROW
EDGE_WEIGHT_SECTION
0
1 0
2 3 0
EOF
"""

FULL_MATRIX_TEXT = """NAME : full3
DIMENSION : 3
EDGE_WEIGHT_TYPE : EXPLICIT
EDGE_WEIGHT_FORMAT : FULL_MATRIX
EDGE_WEIGHT_SECTION
0 1 2
1 0 3
2 3 0
DISPLAY_DATA_SECTION
1 0 0
2 1 0
3 0 2
EOF
"""


class TestParseTsplib:
    """TSPLIB subset parsing"""

    def test_euc_2d(self, tsplib_text):
        base = parse_tsplib(tsplib_text)
        assert base.name == 'tiny6'
        assert base.size == 6
        assert base.base_distance(0, 1) == pytest.approx(10.0)
        assert base.base_distance(0, 4) == pytest.approx(np.sqrt(200.0))

    def test_lower_diag_row(self):
        base = parse_tsplib(LOWER_DIAG_TEXT)
        np.testing.assert_array_equal(base.distance_matrix(), [[0, 1, 2], [1, 0, 3], [2, 3, 0]])
        assert base.placement_coords is None

    def test_full_matrix_with_display_data(self):
        base = parse_tsplib(FULL_MATRIX_TEXT)
        assert base.base_distance(1, 2) == 3.0
        np.testing.assert_array_equal(base.placement_coords, [[0, 0], [1, 0], [0, 2]])

    @pytest.mark.parametrize('text, message', [
        ('NAME : x\nDIMENSION : 2\nEDGE_WEIGHT_TYPE : GEO\nNODE_COORD_SECTION\n1 0 0\n2 1 1\n', 'unsupported weight type'),
        ('NAME : x\nDIMENSION : 3\nEDGE_WEIGHT_TYPE : EUC_2D\nNODE_COORD_SECTION\n1 0 0\n2 1 1\n', 'dimension mismatch'),
        ('NAME : x\nDIMENSION : 2\nEDGE_WEIGHT_TYPE : EUC_2D\nNODE_COORD_SECTION\n1 0 0\n2 1 zz\n', 'malformed'),
        ('NAME : x\nEDGE_WEIGHT_TYPE : EUC_2D\nNODE_COORD_SECTION\n1 0 0\n', 'DIMENSION'),
    ])
    def test_errors(self, text, message):
        with pytest.raises(InstanceFormatError, match=message):
            parse_tsplib(text)

    def test_explicit_file_cannot_place_depots(self):
        with pytest.raises(ValueError, match='no coordinates'):
            generate_instance(parse_tsplib(LOWER_DIAG_TEXT), 2)


class TestInstance:
    """instance construction and the class cost formulas"""

    def test_generate_is_deterministic(self, tsplib_text):
        base = parse_tsplib(tsplib_text)
        first = generate_instance(base, 3, CLASS_I, seed=7)
        second = generate_instance(base, 3, CLASS_I, seed=7)

        assert first.n_customers == 6 and first.n_depots == 3
        np.testing.assert_array_equal(first.depot_coords, second.depot_coords)
        assert (first.depot_coords >= [0, 0]).all() and (first.depot_coords <= [20, 10]).all()

    def test_class_costs(self, tsplib_text):
        base = parse_tsplib(tsplib_text)
        class_one = generate_instance(base, 2, CLASS_I, seed=1)
        class_two = generate_instance(base, 2, CLASS_II, alpha=7, seed=1)

        assert class_one.c(0, 1) == class_one.d(0, 1) == pytest.approx(10.0)
        assert class_two.c(0, 1) == pytest.approx(70.0)
        assert class_two.d(0, 1) == pytest.approx(30.0)

    def test_class_two_needs_alpha(self, tsplib_text):
        with pytest.raises(ValueError, match='alpha'):
            generate_instance(parse_tsplib(tsplib_text), 2, CLASS_II)

    def test_asymmetric_routing_rejected(self):
        routing = np.array([[0, 1, 2], [1, 0, 1], [3, 1, 0]])
        with pytest.raises(InstanceFormatError, match='symmetric'):
            Instance.from_costs(routing, routing.T, n_depots=1)

    def test_ids(self, line_instance):
        assert list(line_instance.customers) == [0, 1, 2]
        assert list(line_instance.depots) == [3, 4]
        assert line_instance.is_depot(3) and not line_instance.is_depot(2)
        assert repr(line_instance) == "Instance('line', u=3, n=2, class=I)"


class TestVariableLayout:
    """column layout"""

    @pytest.mark.parametrize('u, n', [(3, 2), (4, 3), (5, 1)])
    def test_column_count(self, u, n):
        assert variable_layout(u, n).n_columns == u * (u - 1) // 2 + u * u + n + 3 * n * u

    def test_order_and_lookup(self):
        layout = variable_layout(3, 2)
        assert layout.describe(0) == 'x[0,1]'
        assert layout.x(1, 0) == layout.x(0, 1)
        assert layout.describe(layout.x(2, 4)) == 'x[2,4]'
        assert not layout.has_y(3, 4)
        with pytest.raises(KeyError):
            layout.y(3, 4)

    def test_root_bounds(self):
        layout = variable_layout(3, 2)
        lower, upper = layout.bounds()
        assert upper[layout.x(0, 1)] == 1 and upper[layout.x(0, 3)] == 2
        assert lower[layout.y(3, 3)] == upper[layout.y(3, 3)] == 1
        assert upper[layout.y(3, 0)] == 0


class TestSolutions:
    """feasibility, cost and incidence vectors on the line instance"""

    @pytest.fixture
    def ring_solution(self):
        return Solution((Ring(3, (0, 1)),), {2: 1})

    def test_cost(self, line_instance, ring_solution):
        # ring 3-0-1-3 costs 1 + 1 + 2, star 2 -> 1 costs 1
        assert solution_cost(line_instance, ring_solution) == pytest.approx(5.0)
        assert solution_cost(line_instance, nearest_depot_solution(line_instance)) == pytest.approx(6.0)

    def test_degenerate_ring_counts_edge_twice(self, line_instance):
        sol = Solution((Ring(3, (1,)),), {0: 1, 2: 1})
        assert solution_cost(line_instance, sol) == pytest.approx(2 * 2 + 1 + 1)

    def test_feasible(self, line_instance, ring_solution):
        assert check_feasible(line_instance, ring_solution) == []
        assert check_feasible(line_instance, nearest_depot_solution(line_instance)) == []

    @pytest.mark.parametrize('sol, rule', [
        (Solution((Ring(3, (0, 1)),), {}), 'unique-assignment'),
        (Solution((Ring(0, (1, 2)),), {}), 'connectivity'),
        (Solution((Ring(3, (0, 4)),), {1: 3, 2: 3}), 'path-elimination'),
        (Solution((Ring(3, (1,)),), {0: 2, 2: 3}), 'assignment-target'),
        (Solution((Ring(3, (0, 1)), Ring(4, (1, 2))), {}), 'degree'),
        (Solution((Ring(3, (0, 1)),), {0: 3, 2: 3}), 'unique-assignment'),
    ])
    def test_violations(self, line_instance, sol, rule):
        assert rule in check_feasible(line_instance, sol)

    def test_incidence_round_trip(self, line_instance, ring_solution):
        layout = line_instance.layout
        vector = to_incidence(layout, ring_solution)

        assert vector.x(0, 3) == 1 and vector.x(1, 3) == 1 and vector.x(0, 1) == 1
        assert vector.y(2, 1) == 1 and vector.y(0, 0) == 1 and vector.y(4, 4) == 1
        assert layout.objective(line_instance) @ vector.values == pytest.approx(5.0)
        assert from_incidence(layout, vector.values, line_instance) == ring_solution

    def test_to_incidence_rejects_infeasible(self, line_instance):
        with pytest.raises(InfeasibleSolutionError, match='unique-assignment'):
            to_incidence(line_instance.layout, Solution((Ring(3, (0, 1)),), {}))

    def test_two_path_becomes_degenerate_ring(self, line_instance):
        layout = line_instance.layout
        values = np.zeros(layout.n_columns)
        for column in (layout.x(0, 3), layout.x(0, 4), layout.y(0, 0), layout.y(1, 0), layout.y(2, 0),
                       layout.y(3, 3), layout.y(4, 4)):
            values[column] = 1

        sol = from_incidence(layout, values, line_instance)

        assert sol == Solution((Ring(3, (0,)),), {1: 0, 2: 0})
        assert solution_cost(line_instance, sol) <= layout.objective(line_instance) @ values

    def test_from_incidence_rejects_subtour(self):
        inst = Instance.from_coordinates([[0, 0], [1, 0], [0, 1], [5, 5]], [[9, 9]], name='subtour')
        layout = inst.layout
        values = np.zeros(layout.n_columns)
        for column in (layout.x(0, 1), layout.x(1, 2), layout.x(0, 2), layout.y(0, 0), layout.y(1, 1),
                       layout.y(2, 2), layout.y(3, 4), layout.y(4, 4)):
            values[column] = 1

        with pytest.raises(InfeasibleSolutionError, match='subtour'):
            from_incidence(layout, values, inst)

    def test_from_incidence_rejects_fractional(self, line_instance):
        values = np.full(line_instance.layout.n_columns, 0.5)
        with pytest.raises(InfeasibleSolutionError, match='integral'):
            from_incidence(line_instance.layout, values)


class TestTwoPathReplacement:
    """integral points whose ring customers sit on depot-customer-depot paths"""

    @settings(max_examples=60, deadline=None)
    @given(seed=st.integers(min_value=0, max_value=10_000), n_customers=st.integers(min_value=2, max_value=7),
           n_depots=st.integers(min_value=2, max_value=3), class_ii=st.booleans())
    def test_cheaper_depot_and_no_cost_increase(self, seed, n_customers, n_depots, class_ii):
        rng = np.random.default_rng(seed)
        inst = Instance.from_coordinates(rng.uniform(0, 100, size=(n_customers, 2)),
                                         rng.uniform(0, 100, size=(n_depots, 2)),
                                         CLASS_II if class_ii else CLASS_I, 5 if class_ii else None, name='paths')
        layout = inst.layout
        values = np.zeros(layout.n_columns)
        for r in inst.depots:
            values[layout.y(r, r)] = 1

        on_path = [t for t in inst.customers if rng.random() < 0.6] or [0]
        paths = {}
        for t in on_path:
            first, second = (int(r) for r in rng.choice(list(inst.depots), size=2, replace=False))
            values[layout.x(t, first)] += 1
            values[layout.x(t, second)] += 1
            values[layout.y(t, t)] = 1
            paths[t] = (first, second)
        for t in inst.customers:
            if t not in paths:
                values[layout.y(t, on_path[int(rng.integers(len(on_path)))])] = 1

        sol = from_incidence(layout, values, inst)

        assert check_feasible(inst, sol) == []
        assert solution_cost(inst, sol) <= layout.objective(inst) @ values + 1e-9
        depot_of = {ring.customers: ring.depot for ring in sol.rings}
        for t, (first, second) in paths.items():
            assert depot_of[(t,)] == min((first, second), key=lambda r, t=t: (inst.c(t, r), r))


class TestFiles:
    """instance and solution files"""

    def test_instance_file_round_trip(self, tmp_path, tsplib_text):
        inst = generate_instance(parse_tsplib(tsplib_text), 2, CLASS_II, alpha=5, seed=3)
        first, second = tmp_path / 'a.json', tmp_path / 'b.json'
        write_instance(inst, str(first))
        loaded = read_instance(str(first))
        write_instance(loaded, str(second))

        assert first.read_bytes() == second.read_bytes()
        assert loaded.class_tag == CLASS_II and loaded.alpha == 5
        np.testing.assert_allclose(loaded.routing_cost, inst.routing_cost, rtol=1e-9)

    def test_explicit_cost_instance_round_trip(self, tmp_path):
        routing = [[0, 2, 3], [2, 0, 4], [3, 4, 0]]
        assignment = [[0, 1, 1], [1, 0, 1], [1, 1, 0]]
        inst = Instance.from_costs(routing, assignment, n_depots=1, name='explicit')
        path = tmp_path / 'explicit.json'
        write_instance(inst, str(path))

        loaded = read_instance(str(path))
        np.testing.assert_array_equal(loaded.routing_cost, routing)
        np.testing.assert_array_equal(loaded.assignment_cost, assignment)

    def test_solution_file_round_trip(self, tmp_path, line_instance):
        sol = Solution((Ring(3, (0, 1)),), {2: 1})
        path = tmp_path / 'sol.json'
        write_solution(line_instance, sol, str(path))
        assert read_solution(str(path)) == sol

    def test_bad_documents(self, tmp_path):
        path = tmp_path / 'bad.json'
        path.write_text('{"name": "x", "n_depots": 1}', encoding='utf-8')
        with pytest.raises(InstanceFormatError, match='missing field'):
            read_instance(str(path))

        path.write_text('not json', encoding='utf-8')
        with pytest.raises(InstanceFormatError, match='not valid JSON'):
            read_instance(str(path))
