#!/usr/bin/env python3
"""
annealfem - HTTP API
JSON endpoints over the classical oracle, the box solver and the graph export
"""

import logging

from flask import Flask, jsonify, request

from config import (ANNEAL_SETTINGS, API_SETTINGS, BOX_SETTINGS, EXACT_MAX_QUBITS,
                    LOG_FORMAT, LOG_LEVEL)
from modules import __version__
from modules.box_solver import BoxState, build_box_graph, run_box
from modules.errors import AnnealFemError, CapacityError, SpecError
from modules.fem_core import classical_fem_solve, functional_value
from modules.ising_model import export_edge_list, export_qubo
from modules.problem_spec import spec_from_dict
from modules.sampler import SAMPLER_NAMES

logger = logging.getLogger(__name__)

app = Flask(__name__)


# =============================================================================
# Error handling
# =============================================================================

@app.errorhandler(AnnealFemError)
def handle_solver_error(error):
    """Map solver exceptions onto status codes"""
    if isinstance(error, SpecError):
        status = 400
    elif isinstance(error, CapacityError):
        status = 413
    else:
        status = 422
    logger.warning(f'{request.path}: {error}')
    return jsonify({'ok': False, 'error': str(error)}), status


def _read_body(*extra_keys):
    """Spec from the request body plus the non-spec keys named in extra_keys"""
    data = request.get_json(silent=True)
    if not isinstance(data, dict):
        raise SpecError('request body must be a JSON object')
    extras = {key: data.pop(key, None) for key in extra_keys}
    spec = spec_from_dict(data, request.get_data(as_text=True))
    return spec, extras


# =============================================================================
# Routes
# =============================================================================

@app.route('/api/status')
def get_status():
    """Version, defaults and available samplers"""
    return jsonify({
        'ok': True,
        'version': __version__,
        'samplers': list(SAMPLER_NAMES),
        'box': BOX_SETTINGS,
        'anneal': ANNEAL_SETTINGS,
        'exact_max_qubits': EXACT_MAX_QUBITS,
    })


@app.route('/api/oracle', methods=['POST'])
def oracle():
    """Classical FE solution of the posted spec"""
    spec, _ = _read_body()
    S = spec.element_vectors()
    a = classical_fem_solve(S, spec.u_l, spec.u_r)
    return jsonify({'ok': True, 'a': a.tolist(), 'energy': functional_value(S, a)})


@app.route('/api/solve', methods=['POST'])
def solve():
    """Run the box algorithm; optional "overrides" use the CLI flag names"""
    spec, extras = _read_body('overrides')
    overrides = extras['overrides'] or {}
    if not isinstance(overrides, dict):
        raise SpecError('"overrides" must be an object', field='overrides')

    S = spec.element_vectors()
    config = spec.box_config(overrides)
    result = run_box(S, spec.u_l, spec.u_r, config, spec.mesh().nodes)
    exact = spec.exact_solution()
    return jsonify({
        'ok': True,
        'converged': result.converged,
        'center': result.center.tolist(),
        'slack': result.slack,
        'oracle': result.oracle.tolist(),
        'exact': exact.tolist() if exact is not None else None,
        'bound': result.bound,
        'history': [{
            'iter': record.iteration,
            'move': record.move,
            'r': record.slack_after,
            'energy': record.energy_after,
            'feasible_fraction': record.feasible_fraction,
        } for record in result.history],
    })


@app.route('/api/graph', methods=['POST'])
def graph():
    """Edge-list or QUBO export of one box; defaults to the initial box"""
    spec, extras = _read_body('center', 'slack', 'format')
    fmt = extras['format'] or 'ising'
    if fmt not in ('ising', 'qubo'):
        raise SpecError(f'"format" must be "ising" or "qubo", got {fmt!r}', field='format')
    S = spec.element_vectors()
    config = spec.box_config()
    center = extras['center'] if extras['center'] is not None else spec.start_center(config)
    slack = extras['slack'] if extras['slack'] is not None else config.r_init
    ising, _ = build_box_graph(BoxState(center, slack), S, config, apply_ceiling=False)
    text = export_qubo(ising) if fmt == 'qubo' else export_edge_list(ising)
    return jsonify({'ok': True, 'n_qubits': ising.n_qubits, 'format': fmt, 'text': text})


if __name__ == '__main__':
    logging.basicConfig(level=LOG_LEVEL, format=LOG_FORMAT)
    app.run(host=API_SETTINGS['host'], port=API_SETTINGS['port'])
