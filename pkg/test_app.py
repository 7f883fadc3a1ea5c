"""Tests for the HTTP API"""

import json
import os

import pytest

from app import app
from modules.ising_model import parse_edge_list


@pytest.fixture
def client():
    app.config['TESTING'] = True
    return app.test_client()


@pytest.fixture
def laplace_body(problems_dir):
    with open(os.path.join(problems_dir, 'laplace2.json'), encoding='utf-8') as handle:
        return json.load(handle)


def test_status(client):
    response = client.get('/api/status')
    assert response.status_code == 200
    data = response.get_json()
    assert data['ok'] is True
    assert data['samplers'] == ['exact', 'sa']
    assert data['exact_max_qubits'] == 24


def test_oracle(client, laplace_body):
    data = client.post('/api/oracle', json=laplace_body).get_json()
    assert data['ok'] is True
    assert data['a'] == [0.0, 0.5, 1.0]
    assert data['energy'] == pytest.approx(0.5)


def test_solve(client, laplace_body):
    laplace_body['overrides'] = {'r_min': 0.01}
    response = client.post('/api/solve', json=laplace_body)
    assert response.status_code == 200
    data = response.get_json()
    assert data['converged'] is True
    assert data['center'][1] == pytest.approx(0.5, abs=0.01)
    assert data['oracle'] == [0.0, 0.5, 1.0]
    assert data['slack'] <= 0.01
    assert all(row['move'] == 'contract' for row in data['history'])


def test_graph(client, laplace_body):
    laplace_body.update(center=[0.5, 0.5, 0.5], slack=0.5)
    data = client.post('/api/graph', json=laplace_body).get_json()
    assert data['n_qubits'] == 9
    graph = parse_edge_list(data['text'])
    assert graph.J[(1, 4)] == pytest.approx(0.5)


def test_spec_error_is_400(client, laplace_body):
    laplace_body['domain'] = [1.0, 0.0]
    response = client.post('/api/oracle', json=laplace_body)
    assert response.status_code == 400
    data = response.get_json()
    assert data['ok'] is False
    assert "'domain'" in data['error']


def test_non_object_body_is_400(client):
    response = client.post('/api/oracle', data='[1, 2]', content_type='application/json')
    assert response.status_code == 400


def test_capacity_error_is_413(client):
    body = {
        'kind': 'truss', 'mesh': {'elements': 10}, 'EA': 1.0, 'f': 0.0,
        'boundary': {'u_l': 0.0, 'u_r': 1.0}, 'sampler': {'name': 'exact'},
    }
    response = client.post('/api/solve', json=body)
    assert response.status_code == 413
    assert response.get_json()['ok'] is False


def test_bad_center_is_422(client, laplace_body):
    laplace_body['center'] = [0.0, 1.0]
    response = client.post('/api/graph', json=laplace_body)
    assert response.status_code == 422


def test_solve_reports_exact_solution(client, laplace_body):
    data = client.post('/api/solve', json=laplace_body).get_json()
    assert data['exact'] == pytest.approx([0.0, 0.5, 1.0], abs=1e-12)
    laplace_body['q'] = 1.0
    assert client.post('/api/solve', json=laplace_body).get_json()['exact'] is None


def test_graph_qubo_format(client, laplace_body):
    laplace_body.update(center=[0.5, 0.5, 0.5], slack=0.5, format='qubo')
    data = client.post('/api/graph', json=laplace_body).get_json()
    assert data['format'] == 'qubo'
    lines = data['text'].splitlines()
    assert lines[0] == '9'
    assert lines[1].startswith('offset ')


def test_unknown_graph_format_is_400(client, laplace_body):
    laplace_body['format'] = 'gexf'
    response = client.post('/api/graph', json=laplace_body)
    assert response.status_code == 400
    assert "'format'" in response.get_json()['error']
