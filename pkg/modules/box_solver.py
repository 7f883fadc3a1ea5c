"""
Box Solver
Iterative box search: candidates u^c + r(j - 2) at every node, one Ising
assembly and sampling per step, then either move the center to the sampled
minimiser (translation) or halve r (contraction) until r <= r_min.
"""

import logging
import math
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg

from config import BOX_SETTINGS, default_seed
from modules.errors import ArgumentError
from modules.fem_core import classical_fem_solve, functional_value, stiffness_system
from modules.ising_model import (IsingGraph, SLOTS, assemble, estimate_element_coupling,
                                 penalty_for, rescale)
from modules.sampler import (SAMPLER_NAMES, AnnealSchedule, best_feasible, make_sampler,
                             summarize)

logger = logging.getLogger(__name__)

TRANSLATE = 'translate'
CONTRACT = 'contract'


@dataclass(frozen=True, eq=False)
class BoxState:
    center: np.ndarray
    slack: float

    def __post_init__(self):
        center = np.array(self.center, dtype=float)
        if center.ndim != 1 or center.size < 2:
            raise ArgumentError('box center needs one value per node (at least two)')
        if not self.slack > 0:
            raise ArgumentError(f'slack must be positive, got {self.slack}')
        center.flags.writeable = False
        object.__setattr__(self, 'center', center)


@dataclass(frozen=True)
class BoxConfig:
    r_init: float = BOX_SETTINGS['r_init']
    r_min: float = BOX_SETTINGS['r_min']
    gap_factor: float = BOX_SETTINGS['gap_factor']
    sampler: str = BOX_SETTINGS['sampler']
    schedule: AnnealSchedule = field(default_factory=lambda: AnnealSchedule(seed=default_seed()))
    max_iterations: int = BOX_SETTINGS['max_iterations']
    tie_tolerance: float = BOX_SETTINGS['tie_tolerance']
    energy_ceiling: Optional[float] = BOX_SETTINGS['energy_ceiling']
    dirichlet_slot: int = BOX_SETTINGS['dirichlet_slot']
    init_center: Optional[Tuple[float, ...]] = None

    def __post_init__(self):
        if not 0 < self.r_min < self.r_init:
            raise ArgumentError(f'need 0 < r_min < r_init, got r_min={self.r_min}, r_init={self.r_init}')
        if self.max_iterations < 1:
            raise ArgumentError(f'max_iterations must be at least 1, got {self.max_iterations}')
        if not self.gap_factor > 0:
            raise ArgumentError(f'gap_factor must be positive, got {self.gap_factor}')
        if self.sampler not in SAMPLER_NAMES:
            raise ArgumentError(f'Unknown sampler: {self.sampler}. Available samplers: {", ".join(SAMPLER_NAMES)}')
        if self.dirichlet_slot not in SLOTS:
            raise ArgumentError(f'dirichlet_slot must be one of {SLOTS}, got {self.dirichlet_slot}')
        if self.energy_ceiling is not None and not self.energy_ceiling > 0:
            raise ArgumentError(f'energy_ceiling must be positive, got {self.energy_ceiling}')


@dataclass(frozen=True)
class IterationRecord:
    iteration: int
    move: str
    slack_before: float
    slack_after: float
    energy_before: float
    energy_after: float
    a_min: Optional[Tuple[float, ...]]
    feasible_fraction: float
    center: Tuple[float, ...]


@dataclass
class BoxResult:
    center: np.ndarray
    slack: float
    converged: bool
    history: List[IterationRecord]
    initial_center: np.ndarray
    oracle: np.ndarray
    lambda_min: Optional[float]
    lambda_max: Optional[float]
    bound: float

    @property
    def energy(self) -> float:
        return self.history[-1].energy_after if self.history else float('nan')

    def summary(self) -> str:
        moves = [record.move for record in self.history]
        error = float(np.linalg.norm(self.center - self.oracle))
        lines = [
            f'status:        {"converged" if self.converged else "NOT converged"}',
            f'iterations:    {len(self.history)} '
            f'({moves.count(TRANSLATE)} translations, {moves.count(CONTRACT)} contractions)',
            f'final slack:   {self.slack:.6g}',
            f'Pi_N(center):  {self.energy:.17g}' if self.history else 'Pi_N(center):  n/a',
            f'|center - reference|_2: {error:.6g}',
            f'error bound:   {self.bound:.6g}',
        ]
        if self.lambda_min is not None:
            lines.append(f'spectrum:      lambda_min={self.lambda_min:.6g} lambda_max={self.lambda_max:.6g}')
            if self.oracle.size - 2 == 2:
                lines.append(f'2-unknown bound: {error_bound_2d(self.slack, self.lambda_max, self.lambda_min):.6g}')
        return '\n'.join(lines) + '\n'


# =============================================================================
# Box geometry
# =============================================================================

def candidates_from_box(box: BoxState, dirichlet_slot: int = 2) -> np.ndarray:
    """
    v_ij = u^c_i + r (j - 2) for every node. At the two Dirichlet nodes the
    triple is shifted so the center (the boundary value) sits on
    `dirichlet_slot`; with the default slot 2 they match the interior rule.
    """
    offsets = box.slack * (np.array(SLOTS, dtype=float) - 2.0)
    candidates = box.center[:, None] + offsets
    boundary_offsets = box.slack * (np.array(SLOTS, dtype=float) - dirichlet_slot)
    candidates[0] = box.center[0] + boundary_offsets
    candidates[-1] = box.center[-1] + boundary_offsets
    return candidates


def build_box_graph(box: BoxState, S: np.ndarray, config: BoxConfig,
                    apply_ceiling: bool = True) -> Tuple[IsingGraph, np.ndarray]:
    """Candidates, element couplings and assembly for the current box"""
    S = np.asarray(S, dtype=float)
    N = S.shape[0]
    if box.center.size != N + 1:
        raise ArgumentError(f'box center has {box.center.size} values for {N} elements')

    candidates = candidates_from_box(box, config.dirichlet_slot)
    couplings = [estimate_element_coupling(S[e], candidates[e], candidates[e + 1]) for e in range(N)]
    penalty = penalty_for(couplings, config.gap_factor)
    dirichlet = {0: config.dirichlet_slot, N: config.dirichlet_slot}
    graph = assemble(candidates, couplings, dirichlet, penalty, 1.0)
    if apply_ceiling:
        graph = rescale(graph, config.energy_ceiling)
    return graph, candidates


def _step_schedule(config: BoxConfig, iteration: int) -> AnnealSchedule:
    """Per-iteration seed derived from (seed, iteration)"""
    seed = np.random.SeedSequence([config.schedule.seed, iteration]).generate_state(1, np.uint64)[0]
    return replace(config.schedule, seed=int(seed))


def box_step(box: BoxState, S: np.ndarray, config: BoxConfig,
             iteration: int = 0) -> Tuple[BoxState, IterationRecord]:
    graph, candidates = build_box_graph(box, S, config)
    sampler = make_sampler(config.sampler, _step_schedule(config, iteration))
    results = sampler.sample(graph)
    summary = summarize(results, candidates, graph)
    best = best_feasible(results, candidates, graph, S)

    energy_center = functional_value(S, box.center)
    if best is None:
        logger.warning(f'Iteration {iteration}: no feasible read out of {summary.num_reads}, contracting')
        a_min = None
        translate = False
    else:
        a_min, energy_min = best
        translate = energy_min < energy_center - config.tie_tolerance * abs(energy_center)

    if translate:
        new_box = BoxState(a_min, box.slack)
        move = TRANSLATE
        energy_after = energy_min
    else:
        new_box = BoxState(box.center, box.slack / 2.0)
        move = CONTRACT
        energy_after = energy_center

    record = IterationRecord(
        iteration=iteration,
        move=move,
        slack_before=box.slack,
        slack_after=new_box.slack,
        energy_before=energy_center,
        energy_after=energy_after,
        a_min=tuple(float(v) for v in a_min) if a_min is not None else None,
        feasible_fraction=summary.feasible_fraction,
        center=tuple(float(v) for v in new_box.center),
    )
    logger.info(f'Iteration {iteration}: {move}, r {box.slack:.6g} -> {new_box.slack:.6g}, '
                f'Pi_N {energy_center:.12g} -> {energy_after:.12g}')
    return new_box, record


# =============================================================================
# Full run
# =============================================================================

def initial_center(u_l: float, u_r: float, n_nodes: int, config: BoxConfig,
                   nodes: Optional[Sequence[float]] = None) -> np.ndarray:
    """User guess if configured, otherwise linear between the boundary values"""
    if config.init_center is not None:
        center = np.array(config.init_center, dtype=float)
        if center.size != n_nodes:
            raise ArgumentError(f'init_center has {center.size} values for {n_nodes} nodes')
        if center[0] != u_l or center[-1] != u_r:
            logger.warning('init_center end values replaced by the boundary values')
        center[0], center[-1] = u_l, u_r
        return center

    if nodes is None:
        return np.linspace(u_l, u_r, n_nodes)
    nodes = np.asarray(nodes, dtype=float)
    return u_l + (u_r - u_l) * (nodes - nodes[0]) / (nodes[-1] - nodes[0])


def run_box(S: np.ndarray, u_l: float, u_r: float, config: BoxConfig,
            nodes: Optional[Sequence[float]] = None) -> BoxResult:
    """Iterate box_step from the initial box until slack <= r_min or max_iterations"""
    S = np.asarray(S, dtype=float)
    N = S.shape[0]
    start = initial_center(u_l, u_r, N + 1, config, nodes)
    box = BoxState(start, config.r_init)
    logger.info(f'Box run: {N} elements, {3 * (N + 1)} qubits, sampler {config.sampler}, '
                f'r {config.r_init:g} -> {config.r_min:g}')

    history: List[IterationRecord] = []
    iteration = 0
    while box.slack > config.r_min and iteration < config.max_iterations:
        iteration += 1
        box, record = box_step(box, S, config, iteration)
        history.append(record)

    converged = box.slack <= config.r_min
    if converged:
        logger.info(f'Converged after {iteration} iterations, r = {box.slack:.6g}')
    else:
        logger.warning(f'Not converged: {config.max_iterations} iterations, r = {box.slack:.6g}')

    oracle = classical_fem_solve(S, u_l, u_r)
    n_free = N - 1
    if n_free >= 1:
        lambda_min, lambda_max = reduced_spectrum(S)
        bound = error_bound(box.slack, n_free, lambda_max, lambda_min)
    else:
        lambda_min = lambda_max = None
        bound = 0.0

    return BoxResult(
        center=np.array(box.center),
        slack=box.slack,
        converged=converged,
        history=history,
        initial_center=start,
        oracle=oracle,
        lambda_min=lambda_min,
        lambda_max=lambda_max,
        bound=bound,
    )


# =============================================================================
# Error bound
# =============================================================================

def reduced_spectrum(S: np.ndarray) -> Tuple[float, float]:
    """Extreme eigenvalues of the reduced stiffness matrix (LAPACK bisection)"""
    diagonal, off_diagonal, _ = stiffness_system(S, 0.0, 0.0)
    if diagonal.size == 0:
        raise ArgumentError('no free unknowns: the mesh has a single element')
    if diagonal.size == 1:
        return float(diagonal[0]), float(diagonal[0])
    eigenvalues = scipy.linalg.eigvalsh_tridiagonal(diagonal, off_diagonal, lapack_driver='stebz')
    return float(eigenvalues[0]), float(eigenvalues[-1])


def error_bound(r: float, n: int, lambda_max: float, lambda_min: float) -> float:
    """2 (1 + (n - 1) lambda_max / lambda_min) r / sqrt(n)"""
    if n < 1:
        raise ArgumentError(f'need at least one free unknown, got n={n}')
    if not lambda_min > 0:
        raise ArgumentError(f'lambda_min must be positive, got {lambda_min}')
    if r < 0:
        raise ArgumentError(f'slack must be non-negative, got {r}')
    return 2.0 * (1.0 + (n - 1) * lambda_max / lambda_min) * r / math.sqrt(n)


def error_bound_2d(r: float, lambda_max: float, lambda_min: float) -> float:
    """sqrt(2) r (1 + lambda_max / lambda_min), the two-unknown geometric bound"""
    if not lambda_min > 0:
        raise ArgumentError(f'lambda_min must be positive, got {lambda_min}')
    return math.sqrt(2.0) * r * (1.0 + lambda_max / lambda_min)
