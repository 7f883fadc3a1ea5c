"""Tests for the box algorithm and its error bound"""

import itertools
import logging

import numpy as np
import pytest

from conftest import random_convex_problem
from modules.box_solver import (CONTRACT, TRANSLATE, BoxConfig, BoxState, box_step,
                                candidates_from_box, error_bound, error_bound_2d,
                                initial_center, reduced_spectrum, run_box)
from modules.errors import ArgumentError
from modules.fem_core import classical_fem_solve, functional_value, truss_functional_vectors
from modules.problem_spec import spec_from_dict
from modules.sampler import AnnealSchedule, SampleResult

TRUSS_A_START = (0.0, 0.25, 0.5, 0.75, 1.0)


def test_candidates_from_box():
    box = BoxState([0.0, 0.5, 1.0], 0.5)
    np.testing.assert_allclose(candidates_from_box(box), [[-0.5, 0.0, 0.5],
                                                          [0.0, 0.5, 1.0],
                                                          [0.5, 1.0, 1.5]])


def test_candidates_with_dirichlet_on_first_slot():
    box = BoxState([0.0, 0.5, 1.0], 0.25)
    candidates = candidates_from_box(box, dirichlet_slot=1)
    np.testing.assert_allclose(candidates[0], [0.0, 0.25, 0.5])
    np.testing.assert_allclose(candidates[1], [0.25, 0.5, 0.75])
    np.testing.assert_allclose(candidates[2], [1.0, 1.25, 1.5])


def test_box_state_validation():
    with pytest.raises(ArgumentError):
        BoxState([0.0, 1.0], 0.0)
    with pytest.raises(ArgumentError):
        BoxState([0.0], 0.1)


@pytest.mark.parametrize('kwargs', [
    {'r_init': 0.1, 'r_min': 0.1},
    {'max_iterations': 0},
    {'gap_factor': 0.0},
    {'sampler': 'qpu'},
    {'dirichlet_slot': 4},
    {'energy_ceiling': -1.0},
])
def test_box_config_validation(kwargs):
    with pytest.raises(ArgumentError):
        BoxConfig(**kwargs)


# =============================================================================
# Single steps
# =============================================================================

def test_step_contracts_at_minimum(laplace_S):
    box, record = box_step(BoxState([0.0, 0.5, 1.0], 0.5), laplace_S, BoxConfig())
    assert record.move == CONTRACT
    assert box.slack == 0.25
    np.testing.assert_array_equal(box.center, [0.0, 0.5, 1.0])
    assert record.a_min == (0.0, 0.5, 1.0)
    assert record.feasible_fraction == 1.0


def test_step_translates_toward_minimum(laplace_S):
    box, record = box_step(BoxState([0.0, 0.2, 1.0], 0.3), laplace_S, BoxConfig())
    assert record.move == TRANSLATE
    assert box.slack == 0.3
    np.testing.assert_allclose(box.center, [0.0, 0.5, 1.0])
    assert record.energy_after < record.energy_before


def brute_force_step(S, center, slack):
    interior = [center[i] + slack * np.array([-1.0, 0.0, 1.0]) for i in range(1, center.size - 1)]
    best = None
    for choice in itertools.product(*interior):
        a = np.concatenate([[center[0]], choice, [center[-1]]])
        value = functional_value(S, a)
        if best is None or value < best[1]:
            best = (a, value)
    return best


@pytest.mark.parametrize('N', [2, 3])
def test_step_matches_brute_force(N):
    rng = np.random.default_rng(300 + N)
    for _ in range(50):
        S = truss_functional_vectors(rng.uniform(0.5, 2.0, N), rng.uniform(-2.0, 2.0, N), N)
        center = rng.uniform(-1.0, 1.0, N + 1)
        slack = rng.uniform(0.01, 0.5)
        _, record = box_step(BoxState(center, slack), S, BoxConfig())
        expected, value = brute_force_step(S, center, slack)
        np.testing.assert_allclose(record.a_min, expected, atol=1e-12)
        assert record.move == (TRANSLATE if value < functional_value(S, center) else CONTRACT)


def test_step_without_feasible_reads_contracts(laplace_S, monkeypatch, caplog):
    class AllDown:
        def sample(self, graph):
            return [SampleResult((-1,) * graph.n_qubits, 0.0)]

    monkeypatch.setattr('modules.box_solver.make_sampler', lambda name, schedule: AllDown())
    with caplog.at_level(logging.WARNING):
        box, record = box_step(BoxState([0.0, 0.2, 1.0], 0.3), laplace_S, BoxConfig(), iteration=4)
    assert record.move == CONTRACT
    assert record.a_min is None
    assert record.feasible_fraction == 0.0
    assert box.slack == 0.15
    assert 'no feasible read' in caplog.text


# =============================================================================
# Full runs
# =============================================================================

def test_truss_case_a_converges_to_oracle(truss_a_S):
    config = BoxConfig(r_init=0.2, r_min=1e-4, sampler='exact', init_center=TRUSS_A_START)
    result = run_box(truss_a_S, 0.0, 1.0, config)

    assert result.converged
    assert result.slack <= 1e-4
    oracle = classical_fem_solve(truss_a_S, 0.0, 1.0)
    assert np.max(np.abs(result.center - oracle)) <= 2e-4
    np.testing.assert_array_equal(result.oracle, oracle)

    energies = [record.energy_before for record in result.history] + [result.energy]
    assert all(later <= earlier for earlier, later in zip(energies, energies[1:]))
    moves = {record.move for record in result.history}
    assert moves == {TRANSLATE, CONTRACT}
    assert np.linalg.norm(result.center - oracle) <= result.bound


def test_error_bound_holds_on_random_problems():
    rng = np.random.default_rng(6)
    for _ in range(20):
        N = int(rng.integers(2, 6))
        spec = spec_from_dict(random_convex_problem(rng, N))
        S = spec.element_vectors()
        result = run_box(S, spec.u_l, spec.u_r, BoxConfig(r_init=0.5, r_min=1e-3, sampler='exact'))
        assert result.converged
        lambda_min, lambda_max = reduced_spectrum(S)
        bound = error_bound(result.slack, N - 1, lambda_max, lambda_min)
        assert bound == pytest.approx(result.bound)
        assert np.linalg.norm(result.center - classical_fem_solve(S, spec.u_l, spec.u_r)) <= bound


def test_run_with_annealing_is_reproducible(laplace_S):
    config = BoxConfig(r_init=0.5, r_min=0.01, sampler='sa',
                       schedule=AnnealSchedule(sweeps=200, reads=10, seed=7))
    first = run_box(laplace_S, 0.0, 1.0, config)
    second = run_box(laplace_S, 0.0, 1.0, config)
    assert first.history == second.history
    np.testing.assert_array_equal(first.center, second.center)


def test_run_stops_at_iteration_cap(truss_a_S):
    config = BoxConfig(r_init=0.2, r_min=1e-4, max_iterations=2, init_center=TRUSS_A_START)
    result = run_box(truss_a_S, 0.0, 1.0, config)
    assert not result.converged
    assert len(result.history) == 2
    assert 'NOT converged' in result.summary()


def test_single_element_run_has_zero_bound():
    S = truss_functional_vectors([1.0], [0.0], 1)
    result = run_box(S, 0.0, 2.0, BoxConfig(r_init=0.5, r_min=0.1))
    assert result.converged
    np.testing.assert_array_equal(result.center, [0.0, 2.0])
    assert result.bound == 0.0
    assert result.lambda_min is None


def test_initial_center():
    config = BoxConfig(init_center=(5.0, 0.3, 5.0))
    np.testing.assert_allclose(initial_center(0.0, 1.0, 3, config), [0.0, 0.3, 1.0])
    np.testing.assert_allclose(initial_center(0.0, 1.0, 3, BoxConfig(), nodes=[0.0, 0.25, 1.0]),
                               [0.0, 0.25, 1.0])
    with pytest.raises(ArgumentError):
        initial_center(0.0, 1.0, 4, config)


def test_init_center_endpoint_warning(caplog):
    with caplog.at_level(logging.WARNING):
        initial_center(0.0, 1.0, 3, BoxConfig(init_center=(0.5, 0.5, 0.5)))
    assert 'boundary values' in caplog.text


def test_summary_lists_moves(truss_a_S):
    config = BoxConfig(r_init=0.2, r_min=1e-4, init_center=TRUSS_A_START)
    summary = run_box(truss_a_S, 0.0, 1.0, config).summary()
    assert summary.splitlines()[0].split() == ['status:', 'converged']
    assert 'translations' in summary and 'spectrum:' in summary


# =============================================================================
# Error bound
# =============================================================================

def test_reduced_spectrum(truss_a_S, laplace_S):
    M = np.array([[8.0, -4.0, 0.0], [-4.0, 6.0, -2.0], [0.0, -2.0, 4.0]])
    expected = np.linalg.eigvalsh(M)
    assert reduced_spectrum(truss_a_S) == pytest.approx((expected[0], expected[-1]))
    assert reduced_spectrum(laplace_S) == (4.0, 4.0)
    with pytest.raises(ArgumentError):
        reduced_spectrum(truss_functional_vectors([1.0], [0.0], 1))


def test_error_bound_formulas():
    assert error_bound(0.1, 1, 4.0, 4.0) == pytest.approx(0.2)
    assert error_bound(0.1, 4, 3.0, 1.0) == pytest.approx(2 * (1 + 3 * 3.0) * 0.1 / 2)
    assert error_bound_2d(0.1, 3.0, 1.0) == pytest.approx(np.sqrt(2) * 0.4)
    with pytest.raises(ArgumentError):
        error_bound(0.1, 0, 1.0, 1.0)
    with pytest.raises(ArgumentError):
        error_bound(0.1, 2, 1.0, 0.0)


def test_zero_load_converges_by_contraction_alone():
    S = truss_functional_vectors([1.0] * 3, [0.0] * 3, 3)
    result = run_box(S, 0.0, 0.0, BoxConfig(r_init=0.5, r_min=1e-3, sampler='exact'))
    assert result.converged
    assert [record.move for record in result.history] == [CONTRACT] * 9
    slacks = [record.slack_after for record in result.history]
    assert slacks == [0.5 / 2 ** k for k in range(1, 10)]
    np.testing.assert_array_equal(result.center, np.zeros(4))


@pytest.mark.parametrize('slot', [1, 2, 3])
def test_run_with_each_dirichlet_slot(truss_a_S, slot):
    config = BoxConfig(r_init=0.2, r_min=1e-4, sampler='exact', init_center=TRUSS_A_START,
                       dirichlet_slot=slot)
    result = run_box(truss_a_S, 0.0, 1.0, config)
    assert result.converged
    assert result.center[0] == 0.0 and result.center[-1] == 1.0
    assert np.max(np.abs(result.center - result.oracle)) <= 2e-4
    assert all(record.feasible_fraction == 1.0 for record in result.history)


def test_energy_ceiling_leaves_history_unchanged(truss_a_S):
    runs = [run_box(truss_a_S, 0.0, 1.0, BoxConfig(r_init=0.2, r_min=1e-4, sampler='exact',
                                                   init_center=TRUSS_A_START, energy_ceiling=ceiling))
            for ceiling in (None, 1.0)]
    raw, scaled = (run.history for run in runs)
    assert [r.move for r in raw] == [r.move for r in scaled]
    for a, b in zip(raw, scaled):
        np.testing.assert_allclose(a.center, b.center, atol=1e-12)
        assert a.energy_after == pytest.approx(b.energy_after, abs=1e-12)
