"""Shared fixtures for the annealfem test suite"""

import json
import os
import sys

import numpy as np
import pytest

# Add project root to path
ROOT = os.path.dirname(os.path.abspath(__file__))
sys.path.insert(0, ROOT)

from modules.fem_core import Mesh1D, Problem1D, truss_functional_vectors  # noqa: E402

PROBLEMS_DIR = os.path.join(ROOT, 'problems')


@pytest.fixture
def problems_dir():
    return PROBLEMS_DIR


@pytest.fixture
def laplace_problem():
    return Problem1D(0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 1.0)


@pytest.fixture
def laplace_mesh():
    return Mesh1D.uniform(0.0, 1.0, 2)


@pytest.fixture
def laplace_S():
    return np.array([[1.0, 1.0, -2.0, 0.0, 0.0],
                     [1.0, 1.0, -2.0, 0.0, 0.0]])


@pytest.fixture
def truss_a_S():
    """Four-element bar, EA 1.0 then 0.5, no body force"""
    return truss_functional_vectors([1.0, 1.0, 0.5, 0.5], [0.0] * 4, 4)


@pytest.fixture
def write_spec(tmp_path):
    """Write a spec dict (or raw text) to a temp file and return the path"""
    def write(content, name='spec.json'):
        path = tmp_path / name
        text = content if isinstance(content, str) else json.dumps(content, indent=2)
        path.write_text(text, encoding='utf-8')
        return str(path)
    return write


def random_convex_problem(rng: np.random.Generator, n_elements: int):
    """Random p > 0, q >= 0, f and boundary values, as linear tables"""
    x = [0.0, 1.0]
    p = {'x': x, 'y': rng.uniform(0.5, 2.0, 2).tolist()}
    q = {'x': x, 'y': rng.uniform(0.0, 2.0, 2).tolist()}
    f = {'x': x, 'y': rng.uniform(-2.0, 2.0, 2).tolist()}
    u_l, u_r = rng.uniform(-1.0, 1.0, 2)
    return {
        'kind': 'general',
        'mesh': {'elements': n_elements},
        'p': p, 'q': q, 'f': f,
        'boundary': {'u_l': float(u_l), 'u_r': float(u_r)},
    }
