"""
Sampler Module
Low-energy labelings of an IsingGraph: an exhaustive ground-state search for
small graphs and seeded simulated annealing in place of annealer hardware.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from dwave.samplers import SimulatedAnnealingSampler

from config import ANNEAL_SETTINGS, EXACT_MAX_QUBITS
from modules.errors import ArgumentError, CapacityError
from modules.fem_core import functional_value
from modules.ising_model import (IsingGraph, QUBITS_PER_NODE, decode_state,
                                 feasible_functional, ising_energy)

logger = logging.getLogger(__name__)

SAMPLER_NAMES = ('exact', 'sa')

# Labelings enumerated per vectorised batch
_EXACT_BATCH_BITS = 16


@dataclass(frozen=True)
class SampleResult:
    labeling: Tuple[int, ...]
    energy: float
    num_occurrences: int = 1


@dataclass(frozen=True)
class AnnealSchedule:
    sweeps: int = ANNEAL_SETTINGS['sweeps']
    beta_start: float = ANNEAL_SETTINGS['beta_start']
    beta_end: float = ANNEAL_SETTINGS['beta_end']
    reads: int = ANNEAL_SETTINGS['reads']
    seed: int = 0

    def __post_init__(self):
        if self.sweeps < 1:
            raise ArgumentError(f'sweeps must be at least 1, got {self.sweeps}')
        if self.reads < 1:
            raise ArgumentError(f'reads must be at least 1, got {self.reads}')
        if not 0 < self.beta_start <= self.beta_end:
            raise ArgumentError(
                f'need 0 < beta_start <= beta_end, got {self.beta_start} and {self.beta_end}')
        if not 0 <= self.seed < 2 ** 64:
            raise ArgumentError(f'seed must be an unsigned 64-bit integer, got {self.seed}')

    def betas(self) -> np.ndarray:
        return np.geomspace(self.beta_start, self.beta_end, self.sweeps)


@dataclass(frozen=True)
class SampleSummary:
    num_reads: int
    num_feasible: int

    @property
    def feasible_fraction(self) -> float:
        return self.num_feasible / self.num_reads if self.num_reads else 0.0


def _result(graph: IsingGraph, labeling, occurrences: int = 1) -> SampleResult:
    labeling = tuple(int(s) for s in labeling)
    return SampleResult(labeling, ising_energy(graph, labeling), occurrences)


# =============================================================================
# Exhaustive search
# =============================================================================

def solve_exact(graph: IsingGraph, max_qubits: int = EXACT_MAX_QUBITS) -> SampleResult:
    """
    Global minimum over all 2**n labelings. Labelings are enumerated in
    lexicographic order with -1 < +1 (qubit 0 most significant), and the
    first minimum found wins.
    """
    n = graph.n_qubits
    if n > max_qubits:
        raise CapacityError(
            f'{n} qubits exceeds the exact solver limit of {max_qubits}; use the "sa" sampler')
    if n == 0:
        return SampleResult((), 0.0)

    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
    batch = 1 << min(n, _EXACT_BATCH_BITS)
    best_energy = np.inf
    best_index = 0

    for start in range(0, 1 << n, batch):
        index = np.arange(start, start + batch, dtype=np.int64)
        spins = ((index[:, None] >> shifts) & 1) * 2 - 1
        energies = graph.energies(spins)
        k = int(np.argmin(energies))
        if energies[k] < best_energy:
            best_energy = energies[k]
            best_index = start + k

    labeling = ((best_index >> shifts) & 1) * 2 - 1
    return _result(graph, labeling)


# =============================================================================
# Simulated annealing
# =============================================================================

def read_seed(seed: int, read: int) -> int:
    """32-bit annealer seed for one read, fixed by (seed, read index)"""
    return int(np.random.SeedSequence([seed, read]).generate_state(1, np.uint32)[0])


def solve_sa(graph: IsingGraph, schedule: AnnealSchedule) -> List[SampleResult]:
    """
    `reads` independent single-spin-flip Metropolis anneals with a geometric
    beta schedule. Each read is its own annealer call seeded from
    (seed, read index), so a read does not depend on how many others run.
    Sorted by energy, then labeling.
    """
    n = graph.n_qubits
    if n == 0:
        return [SampleResult((), 0.0) for _ in range(schedule.reads)]

    sampler = SimulatedAnnealingSampler()
    results = []
    for read in range(schedule.reads):
        sampleset = sampler.sample(
            graph.bqm,
            num_reads=1,
            num_sweeps=schedule.sweeps,
            beta_range=(schedule.beta_start, schedule.beta_end),
            beta_schedule_type='geometric',
            seed=read_seed(schedule.seed, read),
        )
        sample = sampleset.first.sample
        results.append(_result(graph, [sample[i] for i in range(n)]))

    results.sort(key=lambda result: (result.energy, result.labeling))
    logger.debug(f'SA: {schedule.reads} reads x {schedule.sweeps} sweeps on {n} qubits, '
                 f'best energy {results[0].energy:.6g}')
    return results


def aggregate(results: Sequence[SampleResult]) -> List[SampleResult]:
    """Merge reads with identical labelings, keeping sorted order"""
    merged = {}
    for result in results:
        if result.labeling in merged:
            seen = merged[result.labeling]
            merged[result.labeling] = SampleResult(
                seen.labeling, seen.energy, seen.num_occurrences + result.num_occurrences)
        else:
            merged[result.labeling] = result
    return sorted(merged.values(), key=lambda result: (result.energy, result.labeling))


# =============================================================================
# Readout
# =============================================================================

def admissible(graph: IsingGraph, labeling: Sequence[int], candidates: np.ndarray):
    """Decode a labeling; admissible means one-hot everywhere and on the Dirichlet slots"""
    a, feasible = decode_state(labeling, candidates)
    if feasible:
        for node, slot in graph.dirichlet.items():
            if labeling[QUBITS_PER_NODE * node + slot - 1] != 1:
                feasible = False
                break
    return a, feasible


def summarize(results: Sequence[SampleResult], candidates: np.ndarray,
              graph: IsingGraph) -> SampleSummary:
    total = sum(r.num_occurrences for r in results)
    feasible = sum(r.num_occurrences for r in results
                   if admissible(graph, r.labeling, candidates)[1])
    return SampleSummary(total, feasible)


def best_feasible(results: Sequence[SampleResult], candidates: np.ndarray, graph: IsingGraph,
                  S: Optional[np.ndarray] = None) -> Optional[Tuple[np.ndarray, float]]:
    """
    Lowest Pi_N among admissible reads, or None when every read is infeasible.
    Reads are ranked by the Pi_N their graph energy encodes; the returned value
    is recomputed from the element vectors when given. Ties keep the earlier read.
    """
    best = None
    for result in results:
        a, feasible = admissible(graph, result.labeling, candidates)
        if not feasible:
            continue
        value = feasible_functional(graph, result.labeling)
        if best is None or value < best[1]:
            best = (a, value)
    if best is not None and S is not None:
        best = (best[0], functional_value(S, best[0]))
    return best


# =============================================================================
# Sampler selection
# =============================================================================

class ExactSampler:
    name = 'exact'

    def __init__(self, max_qubits: int = EXACT_MAX_QUBITS):
        self.max_qubits = max_qubits

    def sample(self, graph: IsingGraph) -> List[SampleResult]:
        return [solve_exact(graph, self.max_qubits)]


class AnnealingSampler:
    name = 'sa'

    def __init__(self, schedule: AnnealSchedule):
        self.schedule = schedule

    def sample(self, graph: IsingGraph) -> List[SampleResult]:
        """Distinct labelings, num_occurrences counting the reads that returned each"""
        return aggregate(solve_sa(graph, self.schedule))


def make_sampler(name: str, schedule: Optional[AnnealSchedule] = None):
    """
    Build a sampler by name.

    Raises:
        ArgumentError: unknown sampler name
    """
    if name == 'exact':
        return ExactSampler()
    if name == 'sa':
        return AnnealingSampler(schedule or AnnealSchedule())
    raise ArgumentError(f'Unknown sampler: {name}. Available samplers: {", ".join(SAMPLER_NAMES)}')
