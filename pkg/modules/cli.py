"""
Command Line Interface
solve, oracle and export-graph subcommands over a JSON problem spec.
Exit codes: 0 ok, 1 bad spec or input, 2 not converged, 3 sampler capacity.
"""

import argparse
import csv
import logging
import os
import sys
from typing import List, Optional, Sequence

import numpy as np

from modules.box_solver import BoxResult, BoxState, build_box_graph, run_box
from modules.errors import AnnealFemError, CapacityError
from modules.fem_core import classical_fem_solve, functional_value
from modules.ising_model import export_edge_list, export_qubo
from modules.problem_spec import ProblemSpec, load_spec
from modules.sampler import SAMPLER_NAMES

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_NOT_CONVERGED = 2
EXIT_CAPACITY = 3

GRAPH_FORMATS = {
    'ising': (export_edge_list, 'graph.txt'),
    'qubo': (export_qubo, 'qubo.txt'),
}


def _number(value: float) -> str:
    return f'{value:.17g}'


def _float_list(text: str) -> List[float]:
    try:
        return [float(part) for part in text.split(',')]
    except ValueError:
        raise argparse.ArgumentTypeError(f'expected comma-separated numbers, got {text!r}')


class CliParser(argparse.ArgumentParser):
    """Usage errors exit with EXIT_INPUT instead of argparse's 2"""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f'{self.prog}: error: {message}\n')


def build_parser() -> argparse.ArgumentParser:
    parser = CliParser(
        prog='annealfem',
        description='Solve 1D boundary-value problems with the Ising box algorithm')
    parser.add_argument('-v', '--verbose', action='store_true', help='debug logging')
    commands = parser.add_subparsers(dest='command', required=True, parser_class=CliParser)

    def add_common(sub):
        sub.add_argument('spec', help='problem spec (JSON)')
        sub.add_argument('--out', help='output directory')
        sub.add_argument('--seed', type=int, help='sampler seed (unsigned 64-bit)')
        sub.add_argument('--sampler', choices=SAMPLER_NAMES, help='ground-state sampler')
        sub.add_argument('--r-init', dest='r_init', type=float, help='initial slack')
        sub.add_argument('--r-min', dest='r_min', type=float, help='stopping slack')
        sub.add_argument('--gap-factor', dest='gap_factor', type=float, help='nodal penalty factor')
        sub.add_argument('--max-iterations', dest='max_iterations', type=int, help='iteration cap')

    add_common(commands.add_parser('solve', help='run the box algorithm'))
    oracle = commands.add_parser('oracle', help='print the classical FE solution')
    oracle.add_argument('spec', help='problem spec (JSON)')
    export = commands.add_parser('export-graph', help='write the Ising graph of one box')
    add_common(export)
    export.add_argument('--center', type=_float_list, help='box center, one value per node')
    export.add_argument('--slack', type=float, help='box slack (default: r_init)')
    export.add_argument('--format', choices=sorted(GRAPH_FORMATS), default='ising',
                        help='ising edge list or 0/1 QUBO coefficients')
    return parser


def _overrides(args) -> dict:
    keys = ('seed', 'sampler', 'r_init', 'r_min', 'gap_factor', 'max_iterations')
    return {key: getattr(args, key) for key in keys}


# =============================================================================
# Output files
# =============================================================================

def write_history(path: str, result: BoxResult, S: np.ndarray) -> None:
    n_nodes = result.initial_center.size
    with open(path, 'w', newline='', encoding='utf-8') as handle:
        writer = csv.writer(handle, lineterminator='\n')
        writer.writerow(['iter', 'move', 'r', 'energy', 'feasible_fraction']
                        + [f'c{i}' for i in range(n_nodes)])
        r_start = result.history[0].slack_before if result.history else result.slack
        writer.writerow([0, 'init', _number(r_start),
                         _number(functional_value(S, result.initial_center)), '']
                        + [_number(v) for v in result.initial_center])
        for record in result.history:
            writer.writerow([record.iteration, record.move, _number(record.slack_after),
                             _number(record.energy_after), _number(record.feasible_fraction)]
                            + [_number(v) for v in record.center])


def write_solution(path: str, result: BoxResult, nodes: Sequence[float],
                   exact: Optional[Sequence[float]] = None) -> None:
    """Per-node comparison; an `exact` column is added when the continuous solution is known"""
    header = ['x', 'box', 'oracle', 'difference', 'bound']
    if exact is not None:
        header.append('exact')
    with open(path, 'w', newline='', encoding='utf-8') as handle:
        writer = csv.writer(handle, lineterminator='\n')
        writer.writerow(header)
        for i, (x, box, oracle) in enumerate(zip(nodes, result.center, result.oracle)):
            row = [_number(x), _number(box), _number(oracle),
                   _number(abs(box - oracle)), _number(result.bound)]
            if exact is not None:
                row.append(_number(exact[i]))
            writer.writerow(row)


# =============================================================================
# Commands
# =============================================================================

def cmd_solve(spec: ProblemSpec, args) -> int:
    S = spec.element_vectors()
    config = spec.box_config(_overrides(args))
    nodes = spec.mesh().nodes
    result = run_box(S, spec.u_l, spec.u_r, config, nodes)

    out = args.out or '.'
    os.makedirs(out, exist_ok=True)
    write_history(os.path.join(out, 'history.csv'), result, S)
    write_solution(os.path.join(out, 'solution.csv'), result, nodes, spec.exact_solution())
    summary = result.summary()
    with open(os.path.join(out, 'summary.txt'), 'w', encoding='utf-8') as handle:
        handle.write(summary)
    print(summary, end='')
    logger.info(f'Wrote history.csv, solution.csv and summary.txt to {out}')
    return EXIT_OK if result.converged else EXIT_NOT_CONVERGED


def cmd_oracle(spec: ProblemSpec, args) -> int:
    S = spec.element_vectors()
    a = classical_fem_solve(S, spec.u_l, spec.u_r)
    print('a = ' + ' '.join(_number(v) for v in a))
    print(f'Pi_N = {_number(functional_value(S, a))}')
    return EXIT_OK


def cmd_export_graph(spec: ProblemSpec, args) -> int:
    S = spec.element_vectors()
    config = spec.box_config(_overrides(args))
    center = args.center if args.center is not None else spec.start_center(config)
    slack = args.slack if args.slack is not None else config.r_init
    graph, _ = build_box_graph(BoxState(center, slack), S, config, apply_ceiling=False)
    export, filename = GRAPH_FORMATS[args.format]
    text = export(graph)

    if args.out:
        os.makedirs(args.out, exist_ok=True)
        path = os.path.join(args.out, filename)
        with open(path, 'w', encoding='utf-8') as handle:
            handle.write(text)
        logger.info(f'Wrote {graph.n_qubits}-qubit graph to {path}')
    else:
        sys.stdout.write(text)
    return EXIT_OK


COMMANDS = {
    'solve': cmd_solve,
    'oracle': cmd_oracle,
    'export-graph': cmd_export_graph,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:
        return int(e.code or EXIT_OK)
    if args.verbose:
        logging.getLogger().setLevel(logging.DEBUG)

    try:
        spec = load_spec(args.spec)
        return COMMANDS[args.command](spec, args)
    except CapacityError as e:
        print(f'error: {e}', file=sys.stderr)
        return EXIT_CAPACITY
    except AnnealFemError as e:
        print(f'error: {e}', file=sys.stderr)
        return EXIT_INPUT
    except OSError as e:
        print(f'error: {e}', file=sys.stderr)
        return EXIT_INPUT
