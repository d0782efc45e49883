"""
Command line front end.

    mdrsp generate eil51.tsp --depots 3 --class I --seed 7 --out eil51-3.json
    mdrsp solve eil51-3.json --time-limit 600
    mdrsp bench manifest.txt --out table.csv
    mdrsp verify --dim 4 2
    mdrsp serve --port 5001
    mdrsp remote-solve http://localhost:5001 eil51-3.json

Exit codes: 0 success (optimal), 1 usage or input error, 2 time limit.
"""

import argparse
import csv
import json
import os
import sys
import traceback
from concurrent.futures import ThreadPoolExecutor
from enum import Enum
from logging import getLogger

from .client import solve_remote
from .instance import CLASS_I, CLASS_II, generate_instance, parse_tsplib, read_instance, write_instance, \
    write_solution
from .logger import ROOT_LOGGER_NAME, enter_exit_logger, set_verbosity, setup_logger
from .polylab import lab_report
from .search import Report, SearchDefectError, SolverParams, Termination, branch_and_cut
from .service import SolverServer

logger = getLogger('mdrsp.cli')

BENCH_HEADER = ('Name', '|D|', 'α', 'opt', '%-LB', 'Pair', 'SEC', '2mat', 'PEC', 'Nodes', 'Time')
TIMEOUT = 'TIMEOUT'
DISABLE_CHOICES = {'pair': 'pair', 'sec': 'sec', 'pec': 'pec', '2mat': 'two_matching'}


class ExitCodes(Enum):
    """process exit codes"""
    OK = 0
    USAGE_ERROR = 1
    TIME_LIMIT = 2


class UsageError(ValueError):
    """bad command line"""


class CliParser(argparse.ArgumentParser):
    """argument parser whose errors exit with ``ExitCodes.USAGE_ERROR`` instead of argparse's 2"""

    def error(self, message):
        raise UsageError(message)


def bench_threads() -> int:
    """concurrent solves for ``bench``: ``MDRSP_THREADS`` if set, otherwise the CPU count"""
    value = os.environ.get('MDRSP_THREADS')
    if value is None:
        return os.cpu_count() or 1
    try:
        return max(1, int(value))
    except ValueError:
        raise UsageError(f'MDRSP_THREADS must be an integer, got {value!r}') from None


def solver_params(args) -> SolverParams:
    """``SolverParams`` from the solve flags"""
    mapping = {'time_limit': args.time_limit, 'seed': args.seed, 'heuristic': not args.no_heuristic,
               'odd_hole': args.enable_oddhole, 'ssp_sec': args.enable_ssp_sec, 'lp_engine': args.engine}
    for family in args.disable or ():
        mapping[DISABLE_CHOICES[family]] = False
    return SolverParams.from_mapping(mapping)


def _write_json(document: dict, path: str | None) -> None:
    text = json.dumps(document, indent=2)
    if path:
        with open(path, 'w', encoding='utf-8') as handle:
            handle.write(text + '\n')
    else:
        print(text)


def _stem(path: str) -> str:
    base = os.path.basename(path)
    return os.path.join(os.path.dirname(path), base[:-5] if base.endswith('.json') else base)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

@enter_exit_logger('mdrsp.cli')
def cmd_generate(args) -> ExitCodes:
    """write an instance built from a TSPLIB file"""
    if args.class_tag == CLASS_II and args.alpha is None:
        raise UsageError('--class II requires --alpha')
    if args.class_tag == CLASS_I and args.alpha is not None:
        raise UsageError('--alpha only applies to --class II')
    with open(args.tsplib, 'r', encoding='utf-8') as handle:
        base = parse_tsplib(handle.read())
    inst = generate_instance(base, args.depots, args.class_tag, args.alpha, args.seed)
    out = args.out or f'{base.name}-{args.depots}{"" if args.alpha is None else f"-a{args.alpha}"}.json'
    write_instance(inst, out)
    logger.info(f'wrote {inst!r} to {out}')
    return ExitCodes.OK


@enter_exit_logger('mdrsp.cli')
def cmd_solve(args) -> ExitCodes:
    """solve one instance file; write the solution and the report next to it unless told otherwise"""
    inst = read_instance(args.instance)
    report = branch_and_cut(inst, solver_params(args))
    stem = _stem(args.instance)
    write_solution(inst, report.incumbent, args.out or f'{stem}.sol.json')
    _write_json(report.to_dict(inst), args.report or f'{stem}.report.json')
    print(f'{inst.name}: {report.termination.value} ub={report.ub:.4f} lb={report.lb:.4f} '
          f'nodes={report.nodes} time={report.time_seconds:.2f}s')
    return ExitCodes.OK if report.termination is Termination.OPTIMAL else ExitCodes.TIME_LIMIT


def bench_row(report: Report) -> list[str]:
    """one CSV row; the opt column reads TIMEOUT when optimality was not proven"""
    optimal = report.termination is Termination.OPTIMAL
    return [report.name, str(report.n_depots), '' if report.alpha is None else str(report.alpha),
            f'{report.ub:.4f}' if optimal else TIMEOUT, f'{report.pct_lb:.2f}',
            str(report.counts['pair']), str(report.counts['sec']), str(report.counts['2mat']),
            str(report.counts['pec']), str(report.nodes), f'{report.time_seconds:.2f}']


def averages_row(reports: list[Report]) -> list[str]:
    """averages of %-LB, nodes and time over the instances solved to optimality"""
    solved = [report for report in reports if report.termination is Termination.OPTIMAL]
    if not solved:
        return ['Averages'] + [''] * (len(BENCH_HEADER) - 1)

    def mean(values) -> float:
        return sum(values) / len(solved)

    row = ['Averages', '', '', '', f'{mean(r.pct_lb for r in solved):.2f}', '', '', '', '',
           f'{mean(r.nodes for r in solved):.2f}', f'{mean(r.time_seconds for r in solved):.2f}']
    return row


def read_manifest(path: str) -> list[str]:
    """instance paths listed one per line (relative to the manifest); blank lines and # comments skipped"""
    root = os.path.dirname(os.path.abspath(path))
    with open(path, 'r', encoding='utf-8') as handle:
        lines = [line.split('#', 1)[0].strip() for line in handle]
    return [line if os.path.isabs(line) else os.path.join(root, line) for line in lines if line]


@enter_exit_logger('mdrsp.cli')
def cmd_bench(args) -> ExitCodes:
    """solve every manifest instance and write the table CSV"""
    instances = [read_instance(path) for path in read_manifest(args.manifest)]
    params = solver_params(args)
    workers = max(1, min(len(instances), bench_threads()))
    logger.info(f'bench: {len(instances)} instances on {workers} threads')
    with ThreadPoolExecutor(max_workers=workers) as executor:
        reports = list(executor.map(lambda inst: branch_and_cut(inst, params), instances))

    handle = open(args.out, 'w', encoding='utf-8', newline='') if args.out else sys.stdout
    try:
        writer = csv.writer(handle, lineterminator='\n')
        writer.writerow(BENCH_HEADER)
        for report in reports:
            writer.writerow(bench_row(report))
        writer.writerow(averages_row(reports))
    finally:
        if args.out:
            handle.close()
    return ExitCodes.OK


@enter_exit_logger('mdrsp.cli')
def cmd_verify(args) -> ExitCodes:
    """run one polyhedral lab check and print its JSON report"""
    if args.dim:
        report = lab_report('dim', u=args.dim[0], n=args.dim[1])
    elif args.validity:
        report = lab_report('validity', u=args.validity[0], n=args.validity[1])
    elif args.facets:
        report = lab_report('facets', name=args.facets, u=args.u, n=args.n)
    else:
        report = lab_report('oracle', seeds=args.oracle_suite)
    _write_json(report, args.out)
    return ExitCodes.OK if report['pass'] else ExitCodes.USAGE_ERROR


@enter_exit_logger('mdrsp.cli')
def cmd_serve(args) -> ExitCodes:
    """run the solver server until interrupted"""
    server = SolverServer(verbose=args.verbose)
    server.run(host=args.host, port=args.port)
    return ExitCodes.OK


@enter_exit_logger('mdrsp.cli')
def cmd_remote_solve(args) -> ExitCodes:
    """solve an instance file on a running server"""
    params = {'time_limit': args.time_limit} if args.time_limit is not None else None
    data = solve_remote(args.url, args.instance, params)
    if data is None:
        return ExitCodes.USAGE_ERROR
    _write_json(data, args.out)
    optimal = data['report']['termination'] == Termination.OPTIMAL.value
    return ExitCodes.OK if optimal else ExitCodes.TIME_LIMIT


# ---------------------------------------------------------------------------
# parser and entry point
# ---------------------------------------------------------------------------

def _add_solver_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('--time-limit', type=float, default=SolverParams.time_limit,
                        help='seconds before the search stops (default: %(default)s)')
    parser.add_argument('--seed', type=int, default=0, help='seed of the LP heuristic')
    parser.add_argument('--no-heuristic', action='store_true', help='skip the LP heuristic')
    parser.add_argument('--enable-oddhole', action='store_true', help='separate odd-hole cuts')
    parser.add_argument('--enable-ssp-sec', action='store_true', help='separate the three-customer subtour cuts')
    parser.add_argument('--disable', action='append', choices=sorted(DISABLE_CHOICES),
                        help='turn a default cut family off (repeatable)')
    parser.add_argument('--engine', choices=('simplex', 'highs'), default='simplex', help='LP engine')


def build_parser() -> CliParser:
    """the ``mdrsp`` argument parser"""
    parser = CliParser(prog='mdrsp', description='branch-and-cut for the multi-depot ring star problem')
    parser.add_argument('-v', '--verbose', action='store_true', help='log at DEBUG')
    parser.add_argument('--log-dir', default=None, help='log directory (default: $MDRSP_LOG_DIR or ./log)')
    commands = parser.add_subparsers(dest='command', required=True, parser_class=CliParser)

    generate = commands.add_parser('generate', help='build an instance from a TSPLIB file')
    generate.add_argument('tsplib')
    generate.add_argument('--depots', type=int, required=True)
    generate.add_argument('--class', dest='class_tag', choices=(CLASS_I, CLASS_II), default=CLASS_I)
    generate.add_argument('--alpha', type=int)
    generate.add_argument('--seed', type=int, default=0)
    generate.add_argument('--out')
    generate.set_defaults(handler=cmd_generate)

    solve = commands.add_parser('solve', help='solve an instance file')
    solve.add_argument('instance')
    _add_solver_flags(solve)
    solve.add_argument('--out', help='solution file (default: <instance>.sol.json)')
    solve.add_argument('--report', help='report file (default: <instance>.report.json)')
    solve.set_defaults(handler=cmd_solve)

    bench = commands.add_parser('bench', help='solve a manifest of instances into a CSV table')
    bench.add_argument('manifest')
    _add_solver_flags(bench)
    bench.add_argument('--out', help='CSV file (default: stdout)')
    bench.set_defaults(handler=cmd_bench)

    verify = commands.add_parser('verify', help='polyhedral checks on tiny instances')
    mode = verify.add_mutually_exclusive_group(required=True)
    mode.add_argument('--dim', nargs=2, type=int, metavar=('U', 'N'))
    mode.add_argument('--validity', nargs=2, type=int, metavar=('U', 'N'))
    mode.add_argument('--facets', metavar='CHECK')
    mode.add_argument('--oracle-suite', type=int, metavar='SEEDS')
    verify.add_argument('--u', type=int, help='customers for --facets (default: the smallest size of the check)')
    verify.add_argument('--n', type=int, help='depots for --facets')
    verify.add_argument('--out')
    verify.set_defaults(handler=cmd_verify)

    serve = commands.add_parser('serve', help='run the solver server')
    serve.add_argument('--host', default='127.0.0.1')
    serve.add_argument('--port', type=int, default=5001)
    serve.set_defaults(handler=cmd_serve)

    remote = commands.add_parser('remote-solve', help='solve an instance file on a running server')
    remote.add_argument('url')
    remote.add_argument('instance')
    remote.add_argument('--time-limit', type=float)
    remote.add_argument('--out')
    remote.set_defaults(handler=cmd_remote_solve)
    return parser


def run_label(args: argparse.Namespace) -> str:
    """the command, plus the instance file stem when there is one: ``solve-bays29``"""
    instance = getattr(args, 'instance', None)
    if instance:
        return f'{args.command}-{os.path.splitext(os.path.basename(instance))[0]}'
    return args.command


def main(argv: list[str] | None = None) -> int:
    """entry point of the ``mdrsp`` command; returns the exit code"""
    try:
        args = build_parser().parse_args(argv)
    except UsageError as e:
        print(f'mdrsp: {e}', file=sys.stderr)
        return ExitCodes.USAGE_ERROR.value

    root_logger = setup_logger(ROOT_LOGGER_NAME, directory_path=args.log_dir, run_label=run_label(args))
    set_verbosity(root_logger, args.verbose)
    try:
        return args.handler(args).value
    except (ValueError, OSError, SearchDefectError) as e:
        logger.debug(traceback.format_exc())
        logger.error(f'{args.command} failed: {e}')
        print(f'mdrsp {args.command}: {e}', file=sys.stderr)
        return ExitCodes.USAGE_ERROR.value


if __name__ == '__main__':
    sys.exit(main())
