"""Tests for the mdrsp command line."""

import csv
import json

import numpy as np
import pytest

from mdrsp import cli
from mdrsp.instance import check_feasible, read_instance, read_solution, solution_cost, write_instance


@pytest.fixture()
def line_file(tmp_path, line_instance):
    """The line instance on disk."""
    path = tmp_path / 'line.json'
    write_instance(line_instance, str(path))
    return str(path)


class TestGenerate:
    """mdrsp generate"""

    def test_deterministic(self, tmp_path, tsplib_file):
        """Verify the same seed writes the same file."""
        first, second = tmp_path / 'a.json', tmp_path / 'b.json'
        for out in (first, second):
            assert cli.main(['generate', tsplib_file, '--depots', '2', '--seed', '3', '--out', str(out)]) == 0

        assert first.read_bytes() == second.read_bytes()
        inst = read_instance(str(first))
        assert (inst.name, inst.n_customers, inst.n_depots, inst.class_tag) == ('tiny6', 6, 2, 'I')

    def test_default_file_name(self, tmp_path, tsplib_file, monkeypatch):
        """Verify the default output name carries the depot count and alpha."""
        monkeypatch.chdir(tmp_path)
        assert cli.main(['generate', tsplib_file, '--depots', '3', '--class', 'II', '--alpha', '5']) == 0
        assert read_instance('tiny6-3-a5.json').alpha == 5

    @pytest.mark.parametrize('flags', [['--class', 'II'], ['--alpha', '3']])
    def test_alpha_mismatch(self, tsplib_file, flags, capsys):
        """Verify alpha must be given exactly for class II."""
        assert cli.main(['generate', tsplib_file, '--depots', '2'] + flags) == 1
        assert 'alpha' in capsys.readouterr().err

    def test_missing_file(self, tmp_path):
        """Verify an unreadable TSPLIB file is an input error."""
        assert cli.main(['generate', str(tmp_path / 'none.tsp'), '--depots', '2']) == 1


class TestSolve:
    """mdrsp solve"""

    def test_optimal(self, line_file, line_instance, tmp_path, capsys):
        """Verify an optimal solve exits 0 and writes the solution and the report next to the instance."""
        assert cli.main(['solve', line_file]) == 0
        assert 'line: optimal ub=5.0000' in capsys.readouterr().out

        solution = read_solution(str(tmp_path / 'line.sol.json'))
        assert check_feasible(line_instance, solution) == []
        report = json.loads((tmp_path / 'line.report.json').read_text(encoding='utf-8'))
        assert report['termination'] == 'optimal'
        assert report['ub'] == pytest.approx(5.0)

    def test_time_limit(self, line_file, tmp_path):
        """Verify the time limit exit code and the explicit output paths."""
        out, report = tmp_path / 'out.sol.json', tmp_path / 'out.report.json'
        code = cli.main(['solve', line_file, '--time-limit', '0', '--out', str(out), '--report', str(report)])

        assert code == 2
        assert out.exists()
        assert json.loads(report.read_text(encoding='utf-8'))['termination'] == 'time-limit'

    def test_solver_flags(self):
        """Verify the flags map onto the solver parameters."""
        args = cli.build_parser().parse_args(['solve', 'x.json', '--disable', 'pec', '--disable', '2mat',
                                              '--enable-oddhole', '--engine', 'highs', '--no-heuristic'])
        params = cli.solver_params(args)
        assert not params.pec and not params.two_matching
        assert params.pair and params.sec
        assert params.odd_hole and not params.ssp_sec
        assert params.lp_engine == 'highs' and not params.heuristic

    def test_usage_errors(self, capsys):
        """Verify bad command lines exit 1."""
        assert cli.main([]) == 1
        assert cli.main(['solve', 'x.json', '--disable', 'everything']) == 1
        assert 'mdrsp:' in capsys.readouterr().err

    def test_run_log_is_named_after_the_instance(self, line_file, tmp_path):
        """Verify the run writes its log under the command and the instance name."""
        log_dir = tmp_path / 'logs'
        assert cli.main(['--log-dir', str(log_dir), 'solve', line_file]) == 0

        names = [path.name for path in log_dir.iterdir()]
        assert len(names) == 1 and names[0].startswith('mdrsp_solve-line_')
        assert 'node=' in (log_dir / names[0]).read_text(encoding='utf-8')

    def test_run_label(self):
        """Verify commands without an instance are labelled by the command alone."""
        assert cli.run_label(cli.build_parser().parse_args(['solve', 'data/bays29-3.json'])) == 'solve-bays29-3'
        assert cli.run_label(cli.build_parser().parse_args(['verify', '--dim', '2', '1'])) == 'verify'


class TestBench:
    """mdrsp bench"""

    def test_table(self, tmp_path, line_file, random_instance, monkeypatch):
        """Verify the header, one row per instance and the averages row."""
        monkeypatch.setenv('MDRSP_THREADS', '2')
        write_instance(random_instance(5, 2, seed=1, class_tag='II', alpha=3), str(tmp_path / 'rand.json'))
        manifest = tmp_path / 'manifest.txt'
        manifest.write_text('# small set\nline.json\n\nrand.json  # class II\n', encoding='utf-8')
        out = tmp_path / 'table.csv'

        assert cli.main(['bench', str(manifest), '--out', str(out)]) == 0

        with open(out, 'r', encoding='utf-8', newline='') as handle:
            rows = list(csv.reader(handle))
        assert tuple(rows[0]) == cli.BENCH_HEADER
        assert rows[1][:4] == ['line', '2', '', '5.0000']
        assert rows[2][:3] == ['rand-1', '2', '3']
        assert rows[3][0] == 'Averages'
        assert len(rows) == 4

    def test_bad_thread_count(self, monkeypatch):
        """Verify a non-integer MDRSP_THREADS is a usage error."""
        monkeypatch.setenv('MDRSP_THREADS', 'many')
        with pytest.raises(cli.UsageError):
            cli.bench_threads()

    def test_manifest_paths(self, tmp_path):
        """Verify manifest lines resolve against the manifest directory."""
        manifest = tmp_path / 'm.txt'
        manifest.write_text('a.json\n/abs/b.json\n', encoding='utf-8')
        assert cli.read_manifest(str(manifest)) == [str(tmp_path / 'a.json'), '/abs/b.json']


class TestVerify:
    """mdrsp verify"""

    def test_dimension(self, tmp_path):
        """Verify the dimension check passes and writes its report."""
        out = tmp_path / 'dim.json'
        assert cli.main(['verify', '--dim', '4', '2', '--out', str(out)]) == 0
        report = json.loads(out.read_text(encoding='utf-8'))
        assert report['dim_measured'] == report['dim_formula'] == 30

    def test_facet_below_minimum_size(self, capsys):
        """Verify a facet check below its minimum size exits 1."""
        assert cli.main(['verify', '--facets', 'prop2', '--u', '3', '--n', '2']) == 1
        assert 'requires |T| >= 4' in capsys.readouterr().out

    def test_unknown_facet(self):
        """Verify an unknown facet check is an input error."""
        assert cli.main(['verify', '--facets', 'prop9']) == 1


class TestRemoteSolve:
    """mdrsp remote-solve"""

    def test_answers(self, monkeypatch, line_file, tmp_path):
        """Verify the exit code follows the remote termination."""
        answers = iter([{'report': {'termination': 'optimal'}, 'solution': {}},
                        {'report': {'termination': 'time-limit'}, 'solution': {}},
                        None])
        seen = []

        def fake_solve_remote(url, path, params):
            seen.append(params)
            return next(answers)

        monkeypatch.setattr(cli, 'solve_remote', fake_solve_remote)
        out = str(tmp_path / 'remote.json')
        assert cli.main(['remote-solve', 'http://localhost:5001', line_file, '--out', out]) == 0
        assert cli.main(['remote-solve', 'http://localhost:5001', line_file, '--time-limit', '5', '--out', out]) == 2
        assert cli.main(['remote-solve', 'http://localhost:5001', line_file]) == 1
        assert seen == [None, {'time_limit': 5.0}, None]


def explicit_tsplib(name: str, n_cities: int, seed: int) -> str:
    """an EXPLICIT FULL_MATRIX file with display coordinates, laid out like bays29"""
    rng = np.random.default_rng(seed)
    coords = np.round(rng.uniform(0, 2000, size=(n_cities, 2)))
    matrix = np.rint(np.linalg.norm(coords[:, None, :] - coords[None, :, :], axis=2)).astype(int)
    lines = [f'NAME : {name}', 'TYPE : TSP', f'DIMENSION : {n_cities}', 'EDGE_WEIGHT_TYPE : EXPLICIT',
             'EDGE_WEIGHT_FORMAT : FULL_MATRIX', 'DISPLAY_DATA_TYPE : TWOD_DISPLAY', 'EDGE_WEIGHT_SECTION']
    lines += [' '.join(str(value) for value in row) for row in matrix]
    lines.append('DISPLAY_DATA_SECTION')
    lines += [f'{k + 1} {x:g} {y:g}' for k, (x, y) in enumerate(coords)]
    lines.append('EOF')
    return '\n'.join(lines) + '\n'


@pytest.mark.slow
class TestEndToEnd:
    """generate, solve and check a 29-customer, 3-depot class I instance"""

    def test_twenty_nine_customers(self, tmp_path):
        """Verify the solve proves optimality within two hours and the files agree."""
        tsplib = tmp_path / 'grid29.tsp'
        tsplib.write_text(explicit_tsplib('grid29', 29, seed=29), encoding='utf-8')
        instance_path = tmp_path / 'grid29-3.json'

        assert cli.main(['generate', str(tsplib), '--depots', '3', '--seed', '0', '--out', str(instance_path)]) == 0
        assert cli.main(['solve', str(instance_path), '--time-limit', '7200']) == 0

        inst = read_instance(str(instance_path))
        assert (inst.n_customers, inst.n_depots, inst.class_tag) == (29, 3, 'I')
        report = json.loads((tmp_path / 'grid29-3.report.json').read_text(encoding='utf-8'))
        assert report['termination'] == 'optimal'
        assert report['lb'] == pytest.approx(report['ub'], rel=1e-6)
        solution = read_solution(str(tmp_path / 'grid29-3.sol.json'))
        assert check_feasible(inst, solution) == []
        assert solution_cost(inst, solution) == pytest.approx(report['ub'], rel=1e-9)
