"""
Ising Model
Three qubits per FE node, one-hot over the node's candidate values.
Nodal graphs penalise non one-hot labelings, element graphs reproduce
A_n . S_n on the nine one-hot pairs. Assembly sums both into the logical
graph E(q) = sum H_i q_i + sum J_ij q_i q_j.
"""

import logging
from dataclasses import dataclass, field, replace
from functools import cached_property
from types import MappingProxyType
from typing import Dict, Mapping, Optional, Sequence, Tuple

import dimod
import numpy as np

from modules.errors import ArgumentError, ProblemError
from modules.fem_core import build_A_vector

logger = logging.getLogger(__name__)

SLOTS = (1, 2, 3)
QUBITS_PER_NODE = 3

# Q_1, Q_2, Q_3: the feasible labelings of a node triple
ONE_HOT = np.array([
    [1, -1, -1],
    [-1, 1, -1],
    [-1, -1, 1],
])

# Row (b, a) with a fastest: left node in choice a, right node in choice b.
# Column (k, l) row-major: coupling between slot k (left) and slot l (right).
# Entry = Q_a[k] * Q_b[l].
COUPLING_SYSTEM = np.array([
    [+1, -1, -1, -1, +1, +1, -1, +1, +1],
    [-1, +1, +1, +1, -1, -1, -1, +1, +1],
    [-1, +1, +1, -1, +1, +1, +1, -1, -1],
    [-1, +1, -1, +1, -1, +1, +1, -1, +1],
    [+1, -1, +1, -1, +1, -1, +1, -1, +1],
    [+1, -1, +1, +1, -1, +1, -1, +1, -1],
    [-1, -1, +1, +1, +1, -1, +1, +1, -1],
    [+1, +1, -1, -1, -1, +1, +1, +1, -1],
    [+1, +1, -1, +1, +1, -1, -1, -1, +1],
], dtype=float)


def qubit_index(node: int, slot: int) -> int:
    return QUBITS_PER_NODE * node + slot - 1


# =============================================================================
# Graph container
# =============================================================================

@dataclass(frozen=True, eq=False)
class IsingGraph:
    """
    Logical graph. J holds each coupling once, keyed (i, j) with i < j.
    penalty_scale / coupling_scale record how the nodal and element parts
    were weighted, energy_scale the uniform rescaling applied afterwards.
    """
    n_qubits: int
    h: np.ndarray
    J: Mapping[Tuple[int, int], float]
    qubit_map: Mapping[Tuple[int, int], int] = field(default_factory=dict)
    dirichlet: Mapping[int, int] = field(default_factory=dict)
    penalty_scale: float = 1.0
    coupling_scale: float = 1.0
    energy_scale: float = 1.0

    def __post_init__(self):
        h = np.array(self.h, dtype=float)
        if h.shape != (self.n_qubits,):
            raise ArgumentError(f'{h.size} field terms for {self.n_qubits} qubits')
        h.flags.writeable = False
        couplings = {}
        for (i, j), value in self.J.items():
            if i == j or not (0 <= i < self.n_qubits and 0 <= j < self.n_qubits):
                raise ArgumentError(f'invalid coupling ({i}, {j})')
            key = (min(i, j), max(i, j))
            couplings[key] = couplings.get(key, 0.0) + float(value)
        object.__setattr__(self, 'h', h)
        object.__setattr__(self, 'J', MappingProxyType(couplings))
        object.__setattr__(self, 'qubit_map', MappingProxyType(dict(self.qubit_map)))
        object.__setattr__(self, 'dirichlet', MappingProxyType(dict(self.dirichlet)))

    @property
    def n_nodes(self) -> int:
        return self.n_qubits // QUBITS_PER_NODE

    @cached_property
    def bqm(self) -> dimod.BinaryQuadraticModel:
        """SPIN-valued model over qubits 0..n-1, in index order"""
        linear = {i: float(value) for i, value in enumerate(self.h)}
        return dimod.BinaryQuadraticModel(linear, dict(self.J), 0.0, dimod.SPIN)

    def energies(self, labelings: np.ndarray) -> np.ndarray:
        """E(q) for every row of a (reads, n_qubits) spin array"""
        spins = np.asarray(labelings, dtype=np.int8).reshape(-1, self.n_qubits)
        return self.bqm.energies((spins, list(range(self.n_qubits))))

    def ground_baseline(self) -> float:
        """
        Nodal energy of any labeling that is one-hot everywhere and sits on
        the Dirichlet slot at every Dirichlet node.
        """
        per_node = -2.0 * self.penalty_scale * self.energy_scale
        return per_node * (self.n_nodes + len(self.dirichlet))

    def unscaled(self, energy: float) -> float:
        return energy / self.energy_scale


def _as_labeling(labeling, n_qubits: int) -> np.ndarray:
    q = np.asarray(labeling, dtype=float)
    if q.shape != (n_qubits,):
        raise ArgumentError(f'labeling has {q.size} spins, graph has {n_qubits} qubits')
    return q


# =============================================================================
# State representation
# =============================================================================

def decode_state(labeling: Sequence[int], candidates: np.ndarray) -> Tuple[np.ndarray, bool]:
    """
    a_i = sum_j v_ij (q_ij + 1) / 2 for every node.
    The flag is True when every node triple is one-hot.
    """
    candidates = np.asarray(candidates, dtype=float)
    q = _as_labeling(labeling, candidates.size).reshape(-1, QUBITS_PER_NODE)
    a = np.sum(candidates * (q + 1.0) / 2.0, axis=1)
    feasible = bool(np.all(np.sum(q > 0, axis=1) == 1))
    return a, feasible


def encode_state(choices: Sequence[int]) -> np.ndarray:
    """Labeling that puts node i on slot choices[i]"""
    return np.concatenate([ONE_HOT[slot - 1] for slot in choices])


# =============================================================================
# Subgraphs
# =============================================================================

def nodal_graph(scale: float, dirichlet_slot: Optional[int] = None):
    """
    Field triple and in-triple couplings of one node. Every term equals
    `scale`; a Dirichlet slot gets its field flipped to -scale so the
    labeling on that slot becomes the unique ground state.
    """
    h = np.full(QUBITS_PER_NODE, float(scale))
    if dirichlet_slot is not None:
        if dirichlet_slot not in SLOTS:
            raise ArgumentError(f'Dirichlet slot must be one of {SLOTS}, got {dirichlet_slot}')
        h[dirichlet_slot - 1] = -scale
    J = {(0, 1): float(scale), (0, 2): float(scale), (1, 2): float(scale)}
    return h, J


def estimate_element_coupling(S_n: Sequence[float], left: Sequence[float],
                              right: Sequence[float]) -> np.ndarray:
    """
    Solve the 9x9 system so that q_left^T Jt q_right = A_n(a_left, a_right) . S_n
    on all nine one-hot pairs. Returns Jt, shape (3, 3).
    """
    left = np.asarray(left, dtype=float)
    right = np.asarray(right, dtype=float)
    for name, values in (('left', left), ('right', right)):
        if values.shape != (QUBITS_PER_NODE,):
            raise ArgumentError(f'{name} node needs 3 candidate values, got {values.size}')
        if np.unique(values).size != QUBITS_PER_NODE:
            raise ProblemError(f'{name} node candidates must be pairwise distinct: {values.tolist()}')

    S_n = np.asarray(S_n, dtype=float)
    rhs = np.array([build_A_vector(left[a], right[b]) @ S_n
                    for b in range(QUBITS_PER_NODE)
                    for a in range(QUBITS_PER_NODE)])
    try:
        solution = np.linalg.solve(COUPLING_SYSTEM, rhs)
    except np.linalg.LinAlgError as e:
        raise ProblemError(f'element coupling system is singular: {e}') from e
    return solution.reshape(QUBITS_PER_NODE, QUBITS_PER_NODE)


def penalty_for(couplings: Sequence[np.ndarray], gap_factor: float) -> float:
    """gap_factor times the largest |Jt| entry; falls back to gap_factor for all-zero couplings"""
    largest = max((float(np.max(np.abs(Jt))) for Jt in couplings), default=0.0)
    return gap_factor * largest if largest > 0 else gap_factor


# =============================================================================
# Assembly
# =============================================================================

def assemble(candidates: np.ndarray, couplings: Sequence[np.ndarray],
             dirichlet: Optional[Dict[int, int]] = None,
             penalty_scale: float = 1.0, coupling_scale: float = 1.0) -> IsingGraph:
    """
    Logical graph of N element graphs and N+1 nodal graphs.
    Qubit 3*i + (slot - 1) belongs to node i.
    """
    candidates = np.asarray(candidates, dtype=float)
    dirichlet = dict(dirichlet or {})
    n_nodes = candidates.shape[0]
    if candidates.shape != (n_nodes, QUBITS_PER_NODE) or n_nodes < 2:
        raise ArgumentError(f'candidates must have shape (N+1, 3), got {candidates.shape}')
    if len(couplings) != n_nodes - 1:
        raise ArgumentError(f'{len(couplings)} element couplings for {n_nodes} nodes')
    for node, slot in dirichlet.items():
        if not 0 <= node < n_nodes or slot not in SLOTS:
            raise ArgumentError(f'invalid Dirichlet assignment node {node} slot {slot}')
    if penalty_scale < 0 or coupling_scale <= 0:
        raise ArgumentError('penalty_scale must be >= 0 and coupling_scale > 0')

    n_qubits = QUBITS_PER_NODE * n_nodes
    h = np.zeros(n_qubits)
    J: Dict[Tuple[int, int], float] = {}
    qubit_map = {}

    for node in range(n_nodes):
        node_h, node_J = nodal_graph(penalty_scale, dirichlet.get(node))
        base = qubit_index(node, 1)
        h[base:base + QUBITS_PER_NODE] = node_h
        for (k, l), value in node_J.items():
            J[(base + k, base + l)] = value
        for slot in SLOTS:
            qubit_map[(node, slot)] = qubit_index(node, slot)

    for element, Jt in enumerate(couplings):
        Jt = np.asarray(Jt, dtype=float)
        if Jt.shape != (QUBITS_PER_NODE, QUBITS_PER_NODE):
            raise ArgumentError(f'element {element + 1} coupling must be 3x3')
        for k in SLOTS:
            for l in SLOTS:
                J[(qubit_index(element, k), qubit_index(element + 1, l))] = coupling_scale * Jt[k - 1, l - 1]

    logger.debug(f'Assembled {n_qubits} qubits, {len(J)} couplings '
                 f'(penalty {penalty_scale:g}, coupling scale {coupling_scale:g})')
    return IsingGraph(n_qubits, h, J, qubit_map, dirichlet, penalty_scale, coupling_scale)


def rescale(graph: IsingGraph, ceiling: Optional[float]) -> IsingGraph:
    """Uniformly scale H and J so the largest |J| equals `ceiling`"""
    if ceiling is None:
        return graph
    if ceiling <= 0:
        raise ArgumentError(f'energy ceiling must be positive, got {ceiling}')
    largest = max((abs(v) for v in graph.J.values()), default=0.0)
    if largest == 0:
        return graph
    factor = ceiling / largest
    return replace(
        graph,
        h=graph.h * factor,
        J={key: value * factor for key, value in graph.J.items()},
        energy_scale=graph.energy_scale * factor,
    )


def ising_energy(graph: IsingGraph, labeling: Sequence[int]) -> float:
    """E(q) = sum H_i q_i + sum J_ij q_i q_j"""
    q = _as_labeling(labeling, graph.n_qubits)
    if graph.n_qubits == 0:
        return 0.0
    return float(graph.energies(q)[0])


def feasible_functional(graph: IsingGraph, labeling: Sequence[int]) -> float:
    """Pi_N of an admissible labeling: its energy above the nodal baseline, unscaled"""
    coupling_part = ising_energy(graph, labeling) - graph.ground_baseline()
    return graph.unscaled(coupling_part) / graph.coupling_scale


# =============================================================================
# Export
# =============================================================================

def export_edge_list(graph: IsingGraph) -> str:
    """`n_qubits` header, then `h <i> <val>` and `j <i> <k> <val>` lines"""
    lines = [str(graph.n_qubits)]
    lines.extend(f'h {i} {value:.17g}' for i, value in enumerate(graph.h))
    lines.extend(f'j {i} {j} {graph.J[(i, j)]:.17g}' for i, j in sorted(graph.J))
    return '\n'.join(lines) + '\n'


def parse_edge_list(text: str) -> IsingGraph:
    lines = [line.split() for line in text.splitlines() if line.strip()]
    if not lines:
        raise ArgumentError('empty edge list')
    n_qubits = int(lines[0][0])
    h = np.zeros(n_qubits)
    J = {}
    for number, parts in enumerate(lines[1:], start=2):
        if parts[0] == 'h' and len(parts) == 3:
            h[int(parts[1])] = float(parts[2])
        elif parts[0] == 'j' and len(parts) == 4:
            J[(int(parts[1]), int(parts[2]))] = float(parts[3])
        else:
            raise ArgumentError(f'line {number}: cannot parse {" ".join(parts)!r}')
    return IsingGraph(n_qubits, h, J)


def to_qubo(graph: IsingGraph) -> Tuple[Dict[Tuple[int, int], float], float]:
    """
    QUBO coefficients keyed (i, j) with i <= j, and the offset, with
    E(q) = sum Q_ij x_i x_j + offset for x = (q + 1) / 2.
    """
    qubo, offset = graph.bqm.to_qubo()
    Q: Dict[Tuple[int, int], float] = {}
    for (i, j), value in qubo.items():
        key = (min(i, j), max(i, j))
        Q[key] = Q.get(key, 0.0) + float(value)
    return Q, float(offset)


def export_qubo(graph: IsingGraph) -> str:
    """`n_qubits` header, `offset <val>`, then `q <i> <j> <val>` lines"""
    Q, offset = to_qubo(graph)
    lines = [str(graph.n_qubits), f'offset {offset:.17g}']
    lines.extend(f'q {i} {j} {Q[(i, j)]:.17g}' for i, j in sorted(Q))
    return '\n'.join(lines) + '\n'
